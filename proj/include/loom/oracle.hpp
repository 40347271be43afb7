#pragma once

#include <algorithm>
#include <deque>
#include <set>
#include <vector>

#include "loom/runtime_state.hpp"

namespace loom {

// Reference transition system over (Flow, Bag, PersistentState). States are
// immutable values; every rule returns a fresh state. This is the oracle the
// fabric-backed runtime is checked against.
namespace oracle {

enum class Rule {
  Begin,
  Step,
  End,
  SyncCall,
  TailCall,
  AsyncCall,
  Return,
  Failure
};

inline const char* rule_name(Rule r) {
  switch (r) {
    case Rule::Begin: return "begin";
    case Rule::Step: return "step";
    case Rule::End: return "end";
    case Rule::SyncCall: return "sync-call";
    case Rule::TailCall: return "tail-call";
    case Rule::AsyncCall: return "async-call";
    case Rule::Return: return "return";
    case Rule::Failure: return "failure";
  }
  return "?";
}

inline std::optional<Rule> rule_from_name(const std::string& s) {
  for (Rule r : {Rule::Begin, Rule::Step, Rule::End, Rule::SyncCall,
                 Rule::TailCall, Rule::AsyncCall, Rule::Return, Rule::Failure}) {
    if (s == rule_name(r)) return r;
  }
  return std::nullopt;
}

inline Rule rule_for_kind(TrKind k) {
  switch (k) {
    case TrKind::Begin: return Rule::Begin;
    case TrKind::Step: return Rule::Step;
    case TrKind::End: return Rule::End;
    case TrKind::SyncCall: return Rule::SyncCall;
    case TrKind::TailCall: return Rule::TailCall;
    case TrKind::AsyncCall: return Rule::AsyncCall;
    case TrKind::Return: return Rule::Return;
  }
  throw InvariantError("no rule for kind");
}

// The initial runtime state: a single asynchronous request carrying the main
// invocation; bag and persistent state empty.
inline RuntimeState initial_state(const Program& program,
                                  std::uint64_t first_num = 1) {
  RuntimeState s;
  s.next_num = first_num;
  RequestId id{s.next_num++, ReqMode::Async, std::nullopt};
  const Invocation& m = program.main();
  s.flow.entries.emplace(
      id.num, FlowEntry{id, Message::make_request({m.actor, m.method, m.arg})});
  return s;
}

// Async requests are always valid; a sync request is valid iff some process
// in the bag is guarded by it (quantified definition).
inline bool valid(const RequestId& id, const Bag& bag) {
  if (!id.sync()) return true;
  for (const auto& [a, e] : bag.entries) {
    if (e.proc.guard && *e.proc.guard == id.num) return true;
  }
  return false;
}

// Same decision via the cached caller back-reference. Tests assert agreement
// with the quantified definition on random states.
inline bool valid_cached(const RequestId& id, const Bag& bag) {
  if (!id.sync()) return true;
  if (!id.caller) return false;
  const BagEntry* e = bag.find(id.caller->actor);
  return e && e->proc.guard && *e->proc.guard == id.num;
}

namespace detail {

// Re-derives the enabled set for the fragment the chosen transition claims to
// rewrite and insists the choice is in it. Replays stay honest this way.
inline Status confirm_choice(const Program& program, const Term& fragment,
                             const std::optional<Value>& entry,
                             const BaseTransition& chosen) {
  std::vector<BaseTransition> enabled =
      enabled_transitions(program, fragment, entry);
  for (const BaseTransition& t : enabled) {
    if (t == chosen) return status_ok();
  }
  return Status::err("no-matching-transition",
                     "transition not enabled at " + fragment.str() + ": " +
                         chosen.str());
}

inline void audit_flow_rewrite(const FlowEntry& before, const FlowEntry& after) {
  // Request persistence: an id holds a Request until exactly one end or
  // tail-call rewrites it; a response is final.
  LOOM_CHECK(before.id.num == after.id.num, "flow rewrite changed id");
  LOOM_CHECK(!before.msg.is_response,
             "flow rewrite of a completed request (id " +
                 std::to_string(before.id.num) + ")");
}

}  // namespace detail

// (begin): start executing a pending invocation request. The request remains
// in the flow so it can be retried after a failure.
inline Result<RuntimeState> apply_begin(const RuntimeState& s,
                                        const Program& program,
                                        std::uint64_t id_num,
                                        const BaseTransition& chosen,
                                        bool check_validity = true) {
  const FlowEntry* fe = s.flow.find(id_num);
  if (!fe) return Result<RuntimeState>::err("no-request", "flow has no id " + std::to_string(id_num));
  if (fe->msg.is_response) {
    return Result<RuntimeState>::err(
        "completed", "id " + std::to_string(id_num) + " already has a response");
  }
  const ActorRef& actor = fe->msg.request.actor;
  if (s.bag.busy(actor)) {
    return Result<RuntimeState>::err("busy", actor.str() + " already has a process");
  }
  if (check_validity && !valid(fe->id, s.bag)) {
    return Result<RuntimeState>::err(
        "invalid", "request " + fe->id.str() + " has no live caller; cancelled");
  }
  if (chosen.kind != TrKind::Begin) {
    return Result<RuntimeState>::err("no-matching-transition", "not a begin");
  }
  Term fragment(fe->msg.request.invocation());
  if (Status st = detail::confirm_choice(program, fragment, std::nullopt, chosen);
      !st) {
    return Result<RuntimeState>::err(st.error().code, st.error().detail);
  }
  RuntimeState next = s;
  next.bag.entries.emplace(actor,
                           BagEntry{fe->id, Process{std::nullopt, chosen.rhs.seq()}});
  return Result<RuntimeState>::ok(std::move(next));
}

// (step): rewrite the running sequence; reads/writes only the running actor's
// persistent entry. The flow is untouched.
inline Result<RuntimeState> apply_step(const RuntimeState& s,
                                       const Program& program,
                                       const ActorRef& actor,
                                       const BaseTransition& chosen) {
  const BagEntry* be = s.bag.find(actor);
  if (!be || !be->proc.running()) {
    return Result<RuntimeState>::err("no-process", actor.str() + " not running");
  }
  if (chosen.kind != TrKind::Step) {
    return Result<RuntimeState>::err("no-matching-transition", "not a step");
  }
  std::optional<Value> entry = s.state.get(actor);
  if (Status st = detail::confirm_choice(program, Term(be->proc.seq), entry, chosen);
      !st) {
    return Result<RuntimeState>::err("guard-mismatch", st.error().detail);
  }
  RuntimeState next = s;
  next.bag.entries[actor].proc.seq = chosen.rhs.seq();
  LOOM_CHECK(chosen.rhs_state.has_value(), "step without a written value");
  next.state.entries[actor] = *chosen.rhs_state;
  return Result<RuntimeState>::ok(std::move(next));
}

// (end): atomically remove the actor process and substitute the request with
// a response carrying the return value.
inline Result<RuntimeState> apply_end(const RuntimeState& s,
                                      const Program& program,
                                      const ActorRef& actor,
                                      const BaseTransition& chosen) {
  const BagEntry* be = s.bag.find(actor);
  if (!be || !be->proc.running()) {
    return Result<RuntimeState>::err("no-process", actor.str() + " not running");
  }
  if (chosen.kind != TrKind::End) {
    return Result<RuntimeState>::err("no-matching-transition", "not an end");
  }
  std::optional<Value> entry = s.state.get(actor);
  if (Status st = detail::confirm_choice(program, Term(be->proc.seq), entry, chosen);
      !st) {
    return Result<RuntimeState>::err(st.error().code, st.error().detail);
  }
  RuntimeState next = s;
  auto it = next.flow.entries.find(be->id.num);
  LOOM_CHECK(it != next.flow.entries.end(), "end: request vanished from flow");
  detail::audit_flow_rewrite(it->second, it->second);
  it->second.msg = Message::make_response(chosen.rhs.result().value);
  next.bag.entries.erase(actor);
  return Result<RuntimeState>::ok(std::move(next));
}

// (sync-call): allocate a fresh sync id, add the nested request to the flow,
// and suspend the caller behind a guard.
inline Result<RuntimeState> apply_sync_call(
    const RuntimeState& s, const Program& program, const ActorRef& actor,
    const BaseTransition& chosen,
    std::optional<std::uint64_t> forced_num = std::nullopt) {
  const BagEntry* be = s.bag.find(actor);
  if (!be || !be->proc.running()) {
    return Result<RuntimeState>::err("no-process", actor.str() + " not running");
  }
  if (chosen.kind != TrKind::SyncCall) {
    return Result<RuntimeState>::err("no-matching-transition", "not a sync-call");
  }
  std::optional<Value> entry = s.state.get(actor);
  if (Status st = detail::confirm_choice(program, Term(be->proc.seq), entry, chosen);
      !st) {
    return Result<RuntimeState>::err(st.error().code, st.error().detail);
  }
  RuntimeState next = s;
  std::uint64_t num = forced_num.value_or(next.next_num);
  LOOM_CHECK(!next.flow.contains(num),
             "fresh id " + std::to_string(num) + " already in flow");
  next.next_num = std::max(next.next_num, num + 1);
  const SyncNest& nest = chosen.rhs.sync_nest();
  const Invocation& callee = nest.callee.invocation();
  RequestId rid{num, ReqMode::Sync, CallerRef{actor, be->id.num}};
  next.flow.entries.emplace(
      num, FlowEntry{rid, Message::make_request(
                              {callee.actor, callee.method, callee.arg})});
  BagEntry& mine = next.bag.entries[actor];
  mine.proc.guard = num;
  mine.proc.seq = nest.caller.seq();
  return Result<RuntimeState>::ok(std::move(next));
}

// (tail-call): atomically replace the initial request with the tail call
// (same id, same mode, same caller) and retire the process.
inline Result<RuntimeState> apply_tail_call(const RuntimeState& s,
                                            const Program& program,
                                            const ActorRef& actor,
                                            const BaseTransition& chosen) {
  const BagEntry* be = s.bag.find(actor);
  if (!be || !be->proc.running()) {
    return Result<RuntimeState>::err("no-process", actor.str() + " not running");
  }
  if (chosen.kind != TrKind::TailCall) {
    return Result<RuntimeState>::err("no-matching-transition", "not a tail-call");
  }
  std::optional<Value> entry = s.state.get(actor);
  if (Status st = detail::confirm_choice(program, Term(be->proc.seq), entry, chosen);
      !st) {
    return Result<RuntimeState>::err(st.error().code, st.error().detail);
  }
  RuntimeState next = s;
  auto it = next.flow.entries.find(be->id.num);
  LOOM_CHECK(it != next.flow.entries.end(), "tail-call: request vanished from flow");
  detail::audit_flow_rewrite(it->second, it->second);
  const Invocation& target = chosen.rhs.invocation();
  it->second.msg =
      Message::make_request({target.actor, target.method, target.arg});
  next.bag.entries.erase(actor);
  return Result<RuntimeState>::ok(std::move(next));
}

// (async-call): as sync-call, but the fresh id is asynchronous and the caller
// keeps running.
inline Result<RuntimeState> apply_async_call(
    const RuntimeState& s, const Program& program, const ActorRef& actor,
    const BaseTransition& chosen,
    std::optional<std::uint64_t> forced_num = std::nullopt) {
  const BagEntry* be = s.bag.find(actor);
  if (!be || !be->proc.running()) {
    return Result<RuntimeState>::err("no-process", actor.str() + " not running");
  }
  if (chosen.kind != TrKind::AsyncCall) {
    return Result<RuntimeState>::err("no-matching-transition", "not an async-call");
  }
  std::optional<Value> entry = s.state.get(actor);
  if (Status st = detail::confirm_choice(program, Term(be->proc.seq), entry, chosen);
      !st) {
    return Result<RuntimeState>::err(st.error().code, st.error().detail);
  }
  RuntimeState next = s;
  std::uint64_t num = forced_num.value_or(next.next_num);
  LOOM_CHECK(!next.flow.contains(num),
             "fresh id " + std::to_string(num) + " already in flow");
  next.next_num = std::max(next.next_num, num + 1);
  const AsyncPar& par = chosen.rhs.async_par();
  const Invocation& spawned = par.background.invocation();
  RequestId rid{num, ReqMode::Async, CallerRef{actor, be->id.num}};
  next.flow.entries.emplace(
      num, FlowEntry{rid, Message::make_request(
                              {spawned.actor, spawned.method, spawned.arg})});
  next.bag.entries[actor].proc.seq = par.foreground.seq();
  return Result<RuntimeState>::ok(std::move(next));
}

// (return): resume a guarded sequence by consuming the response to its
// request; the flow entry is removed. Touches no persistent state.
inline Result<RuntimeState> apply_return(const RuntimeState& s,
                                         const Program& program,
                                         const ActorRef& actor,
                                         const BaseTransition& chosen) {
  const BagEntry* be = s.bag.find(actor);
  if (!be || be->proc.running()) {
    return Result<RuntimeState>::err("no-process", actor.str() + " not guarded");
  }
  const FlowEntry* fe = s.flow.find(*be->proc.guard);
  if (!fe || !fe->msg.is_response) {
    return Result<RuntimeState>::err("not-enabled",
                                     "response not present for guard " +
                                         std::to_string(*be->proc.guard));
  }
  if (chosen.kind != TrKind::Return) {
    return Result<RuntimeState>::err("no-matching-transition", "not a return");
  }
  Term fragment(SyncNest{Term(ResultTerm{fe->msg.response}), Term(be->proc.seq)});
  if (Status st = detail::confirm_choice(program, fragment, std::nullopt, chosen);
      !st) {
    return Result<RuntimeState>::err(st.error().code, st.error().detail);
  }
  RuntimeState next = s;
  next.flow.entries.erase(fe->id.num);
  BagEntry& mine = next.bag.entries[actor];
  mine.proc.guard.reset();
  mine.proc.seq = chosen.rhs.seq();
  return Result<RuntimeState>::ok(std::move(next));
}

// (failure): lose an actor process. No preconditions; messages and persistent
// state are untouched; failing an absent actor is the identity.
inline RuntimeState apply_failure(const RuntimeState& s, const ActorRef& actor) {
  RuntimeState next = s;
  next.bag.entries.erase(actor);
  return next;
}

struct Move {
  Rule rule = Rule::Begin;
  ActorRef actor;
  std::uint64_t id = 0;                 // request id driving the move
  int tr_index = 0;                     // index into the fragment's enabled set
  std::optional<std::uint64_t> new_id;  // sync/async-call allocation (replay)

  friend bool operator==(const Move&, const Move&) = default;

  std::string str() const {
    std::string out = std::string(rule_name(rule)) + " actor=" + actor.str() +
                      " id=" + std::to_string(id) +
                      " tr=" + std::to_string(tr_index);
    if (new_id) out += " new=" + std::to_string(*new_id);
    return out;
  }
};

struct MoveOptions {
  bool check_validity = true;   // begin's side condition (mutation hook)
  bool include_failures = false;
};

// Every applicable rule instance, canonically ordered; one failure move per
// actor in the bag when failure injection is on.
inline std::vector<Move> enabled_runtime_moves(const RuntimeState& s,
                                               const Program& program,
                                               const MoveOptions& opt = {}) {
  std::vector<Move> moves;
  for (const auto& [num, fe] : s.flow.entries) {
    if (fe.msg.is_response) continue;
    const ActorRef& actor = fe.msg.request.actor;
    if (s.bag.busy(actor)) continue;
    if (opt.check_validity && !valid(fe.id, s.bag)) continue;
    std::vector<BaseTransition> enabled = enabled_transitions(
        program, Term(fe.msg.request.invocation()), std::nullopt);
    for (size_t i = 0; i < enabled.size(); ++i) {
      moves.push_back(Move{Rule::Begin, actor, num, static_cast<int>(i), {}});
    }
  }
  for (const auto& [actor, be] : s.bag.entries) {
    if (be.proc.running()) {
      std::vector<BaseTransition> enabled = enabled_transitions(
          program, Term(be.proc.seq), s.state.get(actor));
      for (size_t i = 0; i < enabled.size(); ++i) {
        moves.push_back(Move{rule_for_kind(enabled[i].kind), actor, be.id.num,
                             static_cast<int>(i), {}});
      }
    } else {
      const FlowEntry* fe = s.flow.find(*be.proc.guard);
      LOOM_CHECK(fe != nullptr, "guard id missing from flow");
      if (!fe->msg.is_response) continue;  // rule simply not enabled yet
      Term fragment(
          SyncNest{Term(ResultTerm{fe->msg.response}), Term(be.proc.seq)});
      std::vector<BaseTransition> enabled =
          enabled_transitions(program, fragment, std::nullopt);
      for (size_t i = 0; i < enabled.size(); ++i) {
        moves.push_back(
            Move{Rule::Return, actor, be.id.num, static_cast<int>(i), {}});
      }
    }
  }
  if (opt.include_failures) {
    for (const auto& [actor, be] : s.bag.entries) {
      moves.push_back(Move{Rule::Failure, actor, be.id.num, 0, {}});
    }
  }
  std::stable_sort(moves.begin(), moves.end(), [](const Move& a, const Move& b) {
    auto key = [](const Move& m) {
      return std::tuple<int, std::uint64_t, std::string, int>(
          static_cast<int>(m.rule), m.id, m.actor.str(), m.tr_index);
    };
    return key(a) < key(b);
  });
  return moves;
}

// Applies a move by re-deriving the fragment's enabled set and indexing into
// it; refuses anything not currently enabled.
inline Result<RuntimeState> apply_move(const RuntimeState& s,
                                       const Program& program, const Move& move,
                                       const MoveOptions& opt = {}) {
  auto pick = [&](const Term& fragment,
                  const std::optional<Value>& entry) -> Result<BaseTransition> {
    std::vector<BaseTransition> enabled =
        enabled_transitions(program, fragment, entry);
    if (move.tr_index < 0 ||
        static_cast<size_t>(move.tr_index) >= enabled.size()) {
      return Result<BaseTransition>::err(
          "no-matching-transition",
          "tr index " + std::to_string(move.tr_index) + " out of range at " +
              fragment.str());
    }
    return Result<BaseTransition>::ok(enabled[static_cast<size_t>(move.tr_index)]);
  };

  switch (move.rule) {
    case Rule::Failure:
      return Result<RuntimeState>::ok(apply_failure(s, move.actor));
    case Rule::Begin: {
      const FlowEntry* fe = s.flow.find(move.id);
      if (!fe) return Result<RuntimeState>::err("no-request", "no flow id");
      if (fe->msg.is_response) {
        return Result<RuntimeState>::err("completed", "request already completed");
      }
      auto tr = pick(Term(fe->msg.request.invocation()), std::nullopt);
      if (!tr) return Result<RuntimeState>::err(tr.error().code, tr.error().detail);
      return apply_begin(s, program, move.id, tr.value(), opt.check_validity);
    }
    case Rule::Return: {
      const BagEntry* be = s.bag.find(move.actor);
      if (!be || be->proc.running()) {
        return Result<RuntimeState>::err("no-process", "not guarded");
      }
      const FlowEntry* fe = s.flow.find(*be->proc.guard);
      if (!fe || !fe->msg.is_response) {
        return Result<RuntimeState>::err("not-enabled", "no response yet");
      }
      Term fragment(
          SyncNest{Term(ResultTerm{fe->msg.response}), Term(be->proc.seq)});
      auto tr = pick(fragment, std::nullopt);
      if (!tr) return Result<RuntimeState>::err(tr.error().code, tr.error().detail);
      return apply_return(s, program, move.actor, tr.value());
    }
    default: {
      const BagEntry* be = s.bag.find(move.actor);
      if (!be || !be->proc.running()) {
        return Result<RuntimeState>::err("no-process", "not running");
      }
      auto tr = pick(Term(be->proc.seq), s.state.get(move.actor));
      if (!tr) return Result<RuntimeState>::err(tr.error().code, tr.error().detail);
      switch (move.rule) {
        case Rule::Step:
          return apply_step(s, program, move.actor, tr.value());
        case Rule::End:
          return apply_end(s, program, move.actor, tr.value());
        case Rule::SyncCall:
          return apply_sync_call(s, program, move.actor, tr.value(), move.new_id);
        case Rule::TailCall:
          return apply_tail_call(s, program, move.actor, tr.value());
        case Rule::AsyncCall:
          return apply_async_call(s, program, move.actor, tr.value(), move.new_id);
        default:
          return Result<RuntimeState>::err("bad-rule", "unhandled rule");
      }
    }
  }
}

// Structural well-formedness of a runtime state. Checked on every explored
// state and after every applied move in tests.
inline Status check_state_invariants(const RuntimeState& s) {
  std::set<std::uint64_t> seen_ids;
  for (const auto& [actor, be] : s.bag.entries) {
    if (!seen_ids.insert(be.id.num).second) {
      return Status::err("overlap", "two processes share request id " +
                                        std::to_string(be.id.num));
    }
    const FlowEntry* fe = s.flow.find(be.id.num);
    if (!fe) {
      return Status::err("dangling-process",
                         "bag id " + std::to_string(be.id.num) + " not in flow");
    }
    if (fe->msg.is_response) {
      return Status::err("completed-but-running",
                         "bag id " + std::to_string(be.id.num) +
                             " already has a response");
    }
    if (be.proc.guard) {
      const FlowEntry* g = s.flow.find(*be.proc.guard);
      if (!g) {
        return Status::err("dangling-guard", "guard " +
                                                 std::to_string(*be.proc.guard) +
                                                 " not in flow");
      }
      if (!g->id.sync()) {
        return Status::err("async-guard", "guarded by an async id");
      }
    }
  }
  return status_ok();
}

// Collects (fragment, entry) probes for closure checking by walking the
// distributed semantics breadth-first from the initial state.
inline std::vector<std::pair<Term, std::optional<Value>>> collect_closure_probes(
    const Program& program, size_t max_probes) {
  std::vector<std::pair<Term, std::optional<Value>>> probes;
  std::set<std::string> seen_probe;
  std::set<std::string> seen_state;
  std::deque<RuntimeState> frontier;
  frontier.push_back(initial_state(program));
  auto add_probe = [&](const Term& t, const std::optional<Value>& e) {
    std::string key = t.str() + "//" + (e ? value_dump(*e) : "absent");
    if (probes.size() < max_probes && seen_probe.insert(key).second) {
      probes.emplace_back(t, e);
    }
  };
  while (!frontier.empty() && probes.size() < max_probes) {
    RuntimeState s = std::move(frontier.front());
    frontier.pop_front();
    if (!seen_state.insert(runtime_state_dump(s)).second) continue;
    for (const auto& [num, fe] : s.flow.entries) {
      if (!fe.msg.is_response && !s.bag.busy(fe.msg.request.actor)) {
        add_probe(Term(fe.msg.request.invocation()), std::nullopt);
      }
    }
    for (const auto& [actor, be] : s.bag.entries) {
      if (be.proc.running()) {
        add_probe(Term(be.proc.seq), s.state.get(actor));
      } else if (const FlowEntry* fe = s.flow.find(*be.proc.guard);
                 fe && fe->msg.is_response) {
        add_probe(Term(SyncNest{Term(ResultTerm{fe->msg.response}),
                                Term(be.proc.seq)}),
                  std::nullopt);
      }
    }
    for (const Move& m : enabled_runtime_moves(s, program)) {
      Result<RuntimeState> next = apply_move(s, program, m);
      if (next) frontier.push_back(next.value());
    }
  }
  return probes;
}

}  // namespace oracle

// Convenience overload: sample reachable fragments and run the closure check.
inline ClosureReport closure_check(const Program& program,
                                   size_t sample_size = 100) {
  return closure_check(program,
                       oracle::collect_closure_probes(program, sample_size));
}

}  // namespace loom
