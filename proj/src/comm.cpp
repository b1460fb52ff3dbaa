#include "diva/comm.hpp"

#include <algorithm>
#include <cmath>

namespace diva {

const char* to_string(ReduceOp op) {
  switch (op) {
    case ReduceOp::Sum: return "sum";
    case ReduceOp::Min: return "min";
    case ReduceOp::Max: return "max";
    case ReduceOp::Or: return "or";
    case ReduceOp::And: return "and";
  }
  return "?";
}

CommGroup::CommGroup(int size) : size_(size), finished_(static_cast<std::size_t>(size), false) {
  if (size < 1) throw Error(ErrorKind::Config, "communicator size must be positive");
}

void CommGroup::fail_locked(Error error) {
  if (!abort_) abort_ = std::move(error);
  cv_.notify_all();
  throw *abort_;
}

void CommGroup::check_stranded_locked() {
  for (const auto& [epoch, slot] : slots_) {
    if (slot.done) continue;
    std::string waiting;
    std::string gone;
    for (int r = 0; r < size_; ++r) {
      if (slot.present[r]) {
        waiting += (waiting.empty() ? "" : ",") + std::to_string(r);
      } else if (finished_[r]) {
        gone += (gone.empty() ? "" : ",") + std::to_string(r);
      }
    }
    if (!gone.empty() && !waiting.empty()) {
      fail_locked(Error(ErrorKind::Desync, "rank(s) " + gone + " completed while rank(s) " +
                                               waiting + " blocked in " + slot.op +
                                               " at epoch " + std::to_string(epoch)));
    }
  }
}

std::vector<double> CommGroup::rendezvous(int rank, std::uint64_t epoch, const std::string& op,
                                          std::uint64_t fingerprint,
                                          std::span<const double> payload, ReduceOp reduce) {
  std::unique_lock lock(mu_);
  if (abort_) throw *abort_;
  auto [it, fresh] = slots_.try_emplace(epoch);
  Slot& slot = it->second;
  if (fresh) {
    slot.op = op;
    slot.fingerprint = fingerprint;
    slot.length = payload.size();
    slot.payloads.assign(static_cast<std::size_t>(size_), {});
    slot.present.assign(static_cast<std::size_t>(size_), false);
    slot.readers_left = size_;
  } else if (slot.op != op || slot.length != payload.size() || slot.fingerprint != fingerprint) {
    int other = 0;
    while (other < size_ && !slot.present[other]) ++other;
    fail_locked(Error(ErrorKind::Desync,
                      "collective mismatch at epoch " + std::to_string(epoch) + ": rank " +
                          std::to_string(rank) + " called " + op + "[" +
                          std::to_string(payload.size()) + "] but rank " + std::to_string(other) +
                          " called " + slot.op + "[" + std::to_string(slot.length) + "]" +
                          (slot.op == op && slot.length == payload.size()
                               ? " with a different workflow fingerprint"
                               : "")));
  }
  if (slot.present[rank]) {
    fail_locked(Error(ErrorKind::Desync, "rank " + std::to_string(rank) +
                                             " entered epoch " + std::to_string(epoch) + " twice"));
  }
  slot.payloads[rank].assign(payload.begin(), payload.end());
  slot.present[rank] = true;
  ++slot.arrived;

  if (slot.arrived == size_) {
    std::vector<double> acc = slot.payloads[0];
    for (int r = 1; r < size_; ++r) {
      const auto& p = slot.payloads[r];
      for (std::size_t i = 0; i < acc.size(); ++i) {
        switch (reduce) {
          case ReduceOp::Sum: acc[i] += p[i]; break;
          case ReduceOp::Min: acc[i] = std::min(acc[i], p[i]); break;
          case ReduceOp::Max: acc[i] = std::max(acc[i], p[i]); break;
          case ReduceOp::Or: acc[i] = (acc[i] != 0.0 || p[i] != 0.0) ? 1.0 : 0.0; break;
          case ReduceOp::And: acc[i] = (acc[i] != 0.0 && p[i] != 0.0) ? 1.0 : 0.0; break;
        }
      }
    }
    if (size_ == 1 && (reduce == ReduceOp::Or || reduce == ReduceOp::And)) {
      for (double& x : acc) x = x != 0.0 ? 1.0 : 0.0;
    }
    slot.result = std::move(acc);
    slot.done = true;
    CollectiveRecord rec{epoch, op, fingerprint, {}};
    for (int r = 0; r < size_; ++r) rec.participants.push_back(r);
    records_.push_back(std::move(rec));
    cv_.notify_all();
  } else {
    check_stranded_locked();
    cv_.wait(lock, [&] { return slot.done || abort_.has_value(); });
    if (abort_) throw *abort_;
  }

  std::vector<double> result = slot.result;
  if (--slot.readers_left == 0) slots_.erase(it);
  return result;
}

void CommGroup::finish(int rank) {
  std::lock_guard lock(mu_);
  finished_[rank] = true;
  if (abort_) return;
  try {
    check_stranded_locked();
  } catch (const Error&) {
    // Waiters are woken with the stored reason; the finishing rank itself
    // completed normally.
  }
}

void CommGroup::abort(const Error& error) {
  std::lock_guard lock(mu_);
  if (!abort_) abort_ = error;
  cv_.notify_all();
}

bool CommGroup::aborted() const {
  std::lock_guard lock(mu_);
  return abort_.has_value();
}

std::optional<Error> CommGroup::abort_reason() const {
  std::lock_guard lock(mu_);
  return abort_;
}

std::vector<CollectiveRecord> CommGroup::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

Communicator::Communicator(std::shared_ptr<CommGroup> group, int rank,
                           std::uint64_t context_fingerprint)
    : group_(std::move(group)), rank_(rank), context_fp_(context_fingerprint) {
  if (group_ && (rank < 0 || rank >= group_->size())) {
    throw Error(ErrorKind::Config, "rank " + std::to_string(rank) + " out of range");
  }
}

Communicator Communicator::solo(std::uint64_t context_fingerprint) {
  return Communicator(nullptr, 0, context_fingerprint);
}

std::uint64_t Communicator::fingerprint(const std::string& op, std::size_t length) const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](std::uint64_t x) {
    for (int i = 0; i < 8; ++i) {
      h ^= (x >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  for (char c : op) mix(static_cast<unsigned char>(c));
  mix(length);
  mix(context_fp_);
  return h;
}

std::vector<double> Communicator::allreduce(ReduceOp op, std::span<const double> payload) {
  const std::string name = std::string("allreduce.") + to_string(op);
  if (!group_ || group_->size() == 1) {
    ++epoch_;
    std::vector<double> out(payload.begin(), payload.end());
    if (op == ReduceOp::Or || op == ReduceOp::And) {
      for (double& x : out) x = x != 0.0 ? 1.0 : 0.0;
    }
    return out;
  }
  auto result =
      group_->rendezvous(rank_, epoch_, name, fingerprint(name, payload.size()), payload, op);
  ++epoch_;
  return result;
}

std::vector<bool> Communicator::allreduce(ReduceOp op, const std::vector<bool>& payload) {
  std::vector<double> p(payload.size());
  for (std::size_t i = 0; i < payload.size(); ++i) p[i] = payload[i] ? 1.0 : 0.0;
  const auto r = allreduce(op, std::span<const double>(p));
  std::vector<bool> out(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = r[i] != 0.0;
  return out;
}

void Communicator::barrier() {
  if (!group_ || group_->size() == 1) {
    ++epoch_;
    return;
  }
  group_->rendezvous(rank_, epoch_, "barrier", fingerprint("barrier", 0), {}, ReduceOp::Sum);
  ++epoch_;
}

void Communicator::finish() {
  if (group_) group_->finish(rank_);
}

}  // namespace diva
