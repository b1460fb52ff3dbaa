#include "diva/registry.hpp"

namespace diva {

const char* to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Source: return "source";
    case NodeKind::PureFn: return "pure";
    case NodeKind::ImpureFn: return "impure";
    case NodeKind::Action: return "action";
    case NodeKind::Trigger: return "trigger";
  }
  return "?";
}

std::filesystem::path ActionEnv::resolve(const std::string& path) const {
  std::filesystem::path p(path);
  if (p.is_absolute()) return p;
  std::filesystem::path base = outdir;
  if (size > 1) base /= "rank" + std::to_string(rank);
  return base / p;
}

const Value& OpContext::const_arg(std::string_view name) const {
  auto it = const_args.find(name);
  if (it == const_args.end()) {
    throw Error(ErrorKind::Config, "missing constant argument '" + std::string(name) + "'");
  }
  return it->second;
}

Communicator& OpContext::communicator() const {
  if (!comm) throw Error(ErrorKind::Runtime, "operator is not global; no communicator access");
  return *comm;
}

ActionEnv& OpContext::action_env() const {
  if (!env) throw Error(ErrorKind::Runtime, "operator is not an action");
  return *env;
}

TypeRule returns(Type t) {
  return [t](std::span<const Type>) { return t; };
}

void OpRegistry::validate(const OpSpec& spec) {
  auto bad = [&](const std::string& why) {
    throw Error(ErrorKind::InconsistentFlags, "operator '" + spec.name + "': " + why);
  };
  if (spec.name.empty()) bad("empty name");
  if (!spec.eval) bad("missing eval");
  if (spec.kind == NodeKind::Source || spec.kind == NodeKind::Trigger) {
    bad("sources and triggers are not registrable operators");
  }
  if (spec.is_global != spec.needs_communicator) {
    bad("global operators (and only they) must request the communicator");
  }
  if (spec.is_impure != (spec.kind == NodeKind::ImpureFn)) {
    bad("is_impure must match kind ImpureFn");
  }
  if (spec.is_impure && !spec.state_factory) bad("impure operator without state_factory");
  if (spec.kind == NodeKind::Action && spec.is_global) bad("actions cannot be intrinsic global");
  int variadic = 0;
  for (const auto& p : spec.params) {
    if (p.variadic) {
      ++variadic;
      if (p.is_const) bad("variadic parameter '" + p.name + "' cannot be constant");
    }
    if (p.default_value && !p.is_const) {
      bad("only constant parameters may have defaults ('" + p.name + "')");
    }
  }
  if (variadic > 1) bad("at most one variadic parameter");
}

void OpRegistry::register_op(OpSpec spec) {
  validate(spec);
  if (ops_.count(spec.name)) {
    throw Error(ErrorKind::DuplicateOp, "operator '" + spec.name + "' is already registered");
  }
  const std::string name = spec.name;
  ops_.emplace(name, std::make_shared<const OpSpec>(std::move(spec)));
  ++generation_;
}

void OpRegistry::override_op(OpSpec spec) {
  validate(spec);
  const std::string name = spec.name;
  if (!ops_.count(name)) {
    throw Error(ErrorKind::UnknownOperator, "cannot override unregistered operator '" + name + "'");
  }
  ops_[name] = std::make_shared<const OpSpec>(std::move(spec));
  ++generation_;
}

std::shared_ptr<const OpSpec> OpRegistry::find(std::string_view name) const {
  auto it = ops_.find(name);
  return it == ops_.end() ? nullptr : it->second;
}

std::vector<std::string> OpRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : ops_) out.push_back(name);
  return out;
}

}  // namespace diva
