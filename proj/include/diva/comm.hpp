#pragma once

#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "diva/error.hpp"

namespace diva {

enum class ReduceOp { Sum, Min, Max, Or, And };

const char* to_string(ReduceOp op);

// One completed collective call, as observed by the rendezvous.
struct CollectiveRecord {
  std::uint64_t epoch = 0;
  std::string op;
  std::uint64_t payload_fingerprint = 0;
  std::vector<int> participants;
};

// Shared rendezvous state for one simulated job of `size` ranks. Ranks block
// inside a collective until every rank arrives with a matching call; any
// mismatch, missing participant or explicit abort wakes everyone with a
// DesyncError.
class CommGroup {
 public:
  explicit CommGroup(int size);

  int size() const { return size_; }

  std::vector<double> rendezvous(int rank, std::uint64_t epoch, const std::string& op,
                                 std::uint64_t fingerprint, std::span<const double> payload,
                                 ReduceOp reduce);

  // Marks `rank` as having left the job; peers still waiting on it fail.
  void finish(int rank);

  // Wakes every waiting rank with `error` (or the first abort reason).
  void abort(const Error& error);

  bool aborted() const;
  std::optional<Error> abort_reason() const;
  std::vector<CollectiveRecord> records() const;

 private:
  struct Slot {
    std::string op;
    std::uint64_t fingerprint = 0;
    std::size_t length = 0;
    std::vector<std::vector<double>> payloads;
    std::vector<bool> present;
    int arrived = 0;
    int readers_left = 0;
    bool done = false;
    std::vector<double> result;
  };

  void check_stranded_locked();
  [[noreturn]] void fail_locked(Error error);

  const int size_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::uint64_t, Slot> slots_;
  std::vector<bool> finished_;
  std::optional<Error> abort_;
  std::vector<CollectiveRecord> records_;
};

// Per-rank handle. A communicator of size 1 performs collectives as
// identities without touching any shared state.
class Communicator {
 public:
  Communicator(std::shared_ptr<CommGroup> group, int rank, std::uint64_t context_fingerprint);

  static Communicator solo(std::uint64_t context_fingerprint = 0);

  int rank() const { return rank_; }
  int size() const { return group_ ? group_->size() : 1; }
  std::uint64_t epoch() const { return epoch_; }
  std::uint64_t context_fingerprint() const { return context_fp_; }
  const std::shared_ptr<CommGroup>& group() const { return group_; }

  std::vector<double> allreduce(ReduceOp op, std::span<const double> payload);
  std::vector<bool> allreduce(ReduceOp op, const std::vector<bool>& payload);
  void barrier();
  void finish();

 private:
  std::uint64_t fingerprint(const std::string& op, std::size_t length) const;

  std::shared_ptr<CommGroup> group_;
  int rank_ = 0;
  std::uint64_t context_fp_ = 0;
  std::uint64_t epoch_ = 0;
};

}  // namespace diva
