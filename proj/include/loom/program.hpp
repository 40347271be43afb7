#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "loom/term.hpp"

namespace loom {

enum class TrKind { Begin, Step, End, SyncCall, TailCall, AsyncCall, Return };

inline const char* tr_kind_name(TrKind k) {
  switch (k) {
    case TrKind::Begin: return "begin";
    case TrKind::Step: return "step";
    case TrKind::End: return "end";
    case TrKind::SyncCall: return "sync-call";
    case TrKind::TailCall: return "tail-call";
    case TrKind::AsyncCall: return "async-call";
    case TrKind::Return: return "return";
  }
  return "?";
}

inline std::optional<TrKind> tr_kind_from_name(const std::string& s) {
  for (TrKind k : {TrKind::Begin, TrKind::Step, TrKind::End, TrKind::SyncCall,
                   TrKind::TailCall, TrKind::AsyncCall, TrKind::Return}) {
    if (s == tr_kind_name(k)) return k;
  }
  return std::nullopt;
}

// One enabled rewrite, ground with respect to the state it was enumerated
// against. Only a step carries a state read/write, and only at the running
// actor's own key.
struct BaseTransition {
  TrKind kind;
  Term lhs;
  std::optional<Value> lhs_state;  // step: value the guard matched against
  Term rhs;
  std::optional<Value> rhs_state;  // step: value written back
  int decl_index = 0;              // canonical ordering / trace tag

  std::string str() const {
    std::string out = std::string(tr_kind_name(kind)) + " " + lhs.str();
    if (lhs_state) out += " /" + value_dump(*lhs_state);
    out += " -> " + rhs.str();
    if (rhs_state) out += " /" + value_dump(*rhs_state);
    return out;
  }
  friend bool operator==(const BaseTransition& a, const BaseTransition& b) {
    return a.kind == b.kind && a.lhs == b.lhs && a.lhs_state == b.lhs_state &&
           a.rhs == b.rhs && a.rhs_state == b.rhs_state;
  }
};

struct ActorTypeInfo {
  std::string type;
  std::optional<Value> initial;  // substituted when a step reads an absent entry
};

// Read-only view of as much persistent state as a (possibly ill-formed)
// transition function cares to look at. Well-formed programs consult only
// the running actor's entry; closure_check probes exactly that.
using StateView = std::map<ActorRef, Value>;

// A program: actor type declarations, a main invocation, and a transition
// function from execution fragments to enabled base transitions. Supplied
// either as code (callback) or compiled from a declarative table; both meet
// this interface.
class Program {
 public:
  using RawFn = std::function<std::vector<BaseTransition>(const Term&,
                                                          const StateView&)>;

  Program(std::string name, std::map<std::string, ActorTypeInfo> types,
          Invocation main, RawFn raw, bool deterministic = false)
      : name_(std::move(name)),
        types_(std::move(types)),
        main_(std::move(main)),
        raw_(std::move(raw)),
        deterministic_(deterministic) {}

  const std::string& name() const { return name_; }
  const Invocation& main() const { return main_; }
  bool deterministic() const { return deterministic_; }
  const std::map<std::string, ActorTypeInfo>& actor_types() const {
    return types_;
  }
  bool knows_type(const std::string& t) const { return types_.count(t) > 0; }

  std::optional<Value> initial_entry(const ActorRef& a) const {
    auto it = types_.find(a.type);
    if (it == types_.end()) return std::nullopt;
    return it->second.initial;
  }

  // Raw access used by closure_check; everyday callers go through
  // enabled_transitions below.
  std::vector<BaseTransition> raw_enabled(const Term& fragment,
                                          const StateView& view) const {
    return raw_(fragment, view);
  }

 private:
  std::string name_;
  std::map<std::string, ActorTypeInfo> types_;
  Invocation main_;
  RawFn raw_;
  bool deterministic_;
};

using ProgramRef = std::shared_ptr<const Program>;

namespace detail {
inline const ActorRef& fragment_actor(const Term& fragment) {
  if (fragment.is_invocation()) return fragment.invocation().actor;
  if (fragment.is_seq()) return fragment.seq().actor;
  if (fragment.is_sync_nest()) {
    const SyncNest& n = fragment.sync_nest();
    if (n.callee.is_result() && n.caller.is_seq()) return n.caller.seq().actor;
  }
  throw ShapeError("fragment has no transition form: " + fragment.str());
}
}  // namespace detail

// Every transition whose left-hand side matches the fragment, in canonical
// (declaration) order. The fragment must be an invocation, a sequence point,
// or a value nested under a waiting sequence; anything else is malformed.
inline std::vector<BaseTransition> enabled_transitions(
    const Program& program, const Term& fragment,
    const std::optional<Value>& state_entry) {
  const ActorRef& actor = detail::fragment_actor(fragment);
  StateView view;
  if (state_entry) {
    view.emplace(actor, *state_entry);
  } else if (fragment.is_seq()) {
    if (auto init = program.initial_entry(actor)) view.emplace(actor, *init);
  }
  std::vector<BaseTransition> out = program.raw_enabled(fragment, view);
  if (program.deterministic() && out.size() > 1) {
    throw InvariantError("program '" + program.name() +
                         "' declared deterministic but " +
                         std::to_string(out.size()) +
                         " transitions enabled at " + fragment.str());
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const BaseTransition& a, const BaseTransition& b) {
                     return a.decl_index < b.decl_index;
                   });
  return out;
}

struct ClosureViolation {
  Term fragment;
  std::string detail;
};

struct ClosureReport {
  int probes = 0;
  std::vector<ClosureViolation> violations;
  bool ok() const { return violations.empty(); }
};

// Checks that enabling is unaffected by entries of unrelated actors: for each
// probe fragment, the enabled set against {self -> e} must equal the enabled
// set against {self -> e, stranger -> junk}.
inline ClosureReport closure_check(
    const Program& program,
    const std::vector<std::pair<Term, std::optional<Value>>>& probes) {
  ClosureReport report;
  const ActorRef stranger = ActorRef::make("closure-probe", "stranger");
  const Value junk[] = {Value(12345), Value("unrelated"), Value(nullptr)};
  for (const auto& [fragment, entry] : probes) {
    ++report.probes;
    const ActorRef& actor = detail::fragment_actor(fragment);
    StateView base;
    if (entry) {
      base.emplace(actor, *entry);
    } else if (fragment.is_seq()) {
      if (auto init = program.initial_entry(actor)) base.emplace(actor, *init);
    }
    std::vector<BaseTransition> expect = program.raw_enabled(fragment, base);
    for (const Value& j : junk) {
      StateView extended = base;
      extended[stranger] = j;
      std::vector<BaseTransition> got = program.raw_enabled(fragment, extended);
      if (got != expect) {
        report.violations.push_back(
            {fragment, "enabled set changed when adding entry " +
                           stranger.str() + " -> " + value_dump(j)});
        break;
      }
    }
  }
  return report;
}

}  // namespace loom
