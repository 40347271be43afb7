#pragma once

#include <string>
#include <vector>

#include "loom/table.hpp"

namespace loom {
namespace dining {

// The one-philosopher/one-fork program as a declarative transition table.
// A fork holds the id of the philosopher holding it (0 for none); take and
// drop are idempotent; eat retries take until it succeeds, then drops.
inline std::string table_text() {
  return "# loom-table v1\n"
         "table dining-table\n"
         "deterministic\n"
         "actor fork default 0\n"
         "actor phil\n"
         "instance f fork\n"
         "instance p phil\n"
         "main p.eat(null)\n"
         "begin f.take(42) -> f.take_42\n"
         "step f.take_42 / in {0,42} -> f.take_42_true / 42\n"
         "step f.take_42 / not-in {0,42} -> f.take_42_false / keep\n"
         "end f.take_42_true -> true\n"
         "end f.take_42_false -> false\n"
         "begin f.drop(42) -> f.drop_42\n"
         "step f.drop_42 / == 42 -> f.drop_42_null / 0\n"
         "step f.drop_42 / != 42 -> f.drop_42_null / keep\n"
         "end f.drop_42_null -> null\n"
         "begin p.eat(null) -> p.eat_1\n"
         "sync-call p.eat_1 -> f.take(42) > p.eat_2\n"
         "return false > p.eat_2 -> p.eat_1\n"
         "return true > p.eat_2 -> p.eat_3\n"
         "sync-call p.eat_3 -> f.drop(42) > p.eat_4\n"
         "return null > p.eat_4 -> p.eat_5\n"
         "end p.eat_5 -> null\n";
}

inline TransitionTable table() { return TransitionTable::parse(table_text()); }

inline ProgramRef table_program() { return table().compile(); }

namespace detail {

inline BaseTransition begin_tr(const Invocation& lhs, SeqPoint rhs, int idx = 0) {
  return BaseTransition{TrKind::Begin, Term(lhs), std::nullopt, Term(std::move(rhs)),
                        std::nullopt, idx};
}
inline BaseTransition step_tr(const SeqPoint& lhs, const Value& read, SeqPoint rhs,
                              Value write, int idx = 0) {
  return BaseTransition{TrKind::Step, Term(lhs), read, Term(std::move(rhs)),
                        std::move(write), idx};
}
inline BaseTransition end_tr(const SeqPoint& lhs, Value ret, int idx = 0) {
  return BaseTransition{TrKind::End, Term(lhs), std::nullopt,
                        Term(ResultTerm{std::move(ret)}), std::nullopt, idx};
}
inline BaseTransition sync_tr(const SeqPoint& lhs, Invocation callee,
                              SeqPoint cont, int idx = 0) {
  return BaseTransition{
      TrKind::SyncCall, Term(lhs), std::nullopt,
      Term(SyncNest{Term(std::move(callee)), Term(std::move(cont))}),
      std::nullopt, idx};
}
inline BaseTransition tail_tr(const SeqPoint& lhs, Invocation target, int idx = 0) {
  return BaseTransition{TrKind::TailCall, Term(lhs), std::nullopt,
                        Term(std::move(target)), std::nullopt, idx};
}
inline BaseTransition async_tr(const SeqPoint& lhs, Invocation bg, SeqPoint cont,
                               int idx = 0) {
  return BaseTransition{
      TrKind::AsyncCall, Term(lhs), std::nullopt,
      Term(AsyncPar{Term(std::move(bg)), Term(std::move(cont))}),
      std::nullopt, idx};
}
inline BaseTransition return_tr(const Value& v, const SeqPoint& lhs, SeqPoint rhs,
                                int idx = 0) {
  return BaseTransition{TrKind::Return,
                        Term(SyncNest{Term(ResultTerm{v}), Term(lhs)}),
                        std::nullopt, Term(std::move(rhs)), std::nullopt, idx};
}

// Shared fork behavior, parameterized by the philosopher id in the argument.
// take(p) succeeds iff nobody (0) or p already holds the fork; drop(p) always
// returns null but only releases a fork held by p.
inline void fork_transitions(const Term& fragment, const StateView& view,
                             std::vector<BaseTransition>& out) {
  if (fragment.is_invocation()) {
    const Invocation& inv = fragment.invocation();
    if (inv.actor.type != "fork" || !inv.arg.is_number_integer()) return;
    if (inv.method == "take") {
      out.push_back(begin_tr(inv, SeqPoint{inv.actor, "take_pending", inv.arg}));
    } else if (inv.method == "drop") {
      out.push_back(begin_tr(inv, SeqPoint{inv.actor, "drop_pending", inv.arg}));
    }
    return;
  }
  if (!fragment.is_seq()) return;
  const SeqPoint& sp = fragment.seq();
  if (sp.actor.type != "fork") return;
  auto it = view.find(sp.actor);
  if (sp.seq == "take_pending" && it != view.end()) {
    const Value& holder = it->second;
    const Value& pid = sp.locals;
    if (holder == Value(0) || holder == pid) {
      out.push_back(step_tr(sp, holder, SeqPoint{sp.actor, "take_yes", pid}, pid));
    } else {
      out.push_back(step_tr(sp, holder, SeqPoint{sp.actor, "take_no", pid}, holder));
    }
  } else if (sp.seq == "drop_pending" && it != view.end()) {
    const Value& holder = it->second;
    if (holder == sp.locals) {
      out.push_back(
          step_tr(sp, holder, SeqPoint{sp.actor, "drop_done", nullptr}, Value(0)));
    } else {
      out.push_back(
          step_tr(sp, holder, SeqPoint{sp.actor, "drop_done", nullptr}, holder));
    }
  } else if (sp.seq == "take_yes") {
    out.push_back(end_tr(sp, Value(true)));
  } else if (sp.seq == "take_no") {
    out.push_back(end_tr(sp, Value(false)));
  } else if (sp.seq == "drop_done") {
    out.push_back(end_tr(sp, Value(nullptr)));
  }
}

struct Seats {
  int n;
  ActorRef phil(int k) const {
    return ActorRef{"phil", n == 1 ? "p" : "p" + std::to_string(k)};
  }
  ActorRef fork(int k) const {
    return ActorRef{"fork", n == 1 ? "f" : "f" + std::to_string(k)};
  }
  int pid(int k) const { return 41 + k; }
  // Forks are acquired in increasing index order to avoid deadlock; a seat at
  // a one-fork table uses its single fork once.
  int lo(int k) const { return std::min(k, k % n + 1); }
  int hi(int k) const { return std::max(k, k % n + 1); }
  bool two_forks(int k) const { return lo(k) != hi(k); }
  int seat_of(const ActorRef& a) const {
    if (a.type != "phil") return 0;
    if (n == 1 && a.name == "p") return 1;
    if (a.name.size() > 1 && a.name[0] == 'p') {
      int k = std::atoi(a.name.c_str() + 1);
      if (k >= 1 && k <= n) return k;
    }
    return 0;
  }
};

}  // namespace detail

// N philosophers, N forks; each eat takes its forks in fork-id order, then
// drops them in reverse. n == 1 degenerates to the single-fork table behavior
// (same actors p and f, same philosopher id 42).
inline ProgramRef general_program(int n) {
  if (n < 1) throw ShapeError("need at least one philosopher");
  detail::Seats seats{n};
  auto raw = [seats](const Term& fragment,
                     const StateView& view) -> std::vector<BaseTransition> {
    std::vector<BaseTransition> out;
    detail::fork_transitions(fragment, view, out);
    const int n = seats.n;
    auto take = [&](int k, int f) {
      return Invocation{seats.fork(f), "take", Value(seats.pid(k))};
    };
    auto drop = [&](int k, int f) {
      return Invocation{seats.fork(f), "drop", Value(seats.pid(k))};
    };
    if (fragment.is_invocation()) {
      const Invocation& inv = fragment.invocation();
      if (inv.actor.type == "host" && inv.method == "start" && n > 1) {
        out.push_back(
            detail::begin_tr(inv, SeqPoint{inv.actor, "spawn", Value(1)}));
      } else if (int k = seats.seat_of(inv.actor);
                 k > 0 && inv.method == "eat" && inv.arg.is_null()) {
        out.push_back(detail::begin_tr(inv, SeqPoint{inv.actor, "take_lo"}));
      }
      return out;
    }
    if (fragment.is_seq()) {
      const SeqPoint& sp = fragment.seq();
      if (sp.actor.type == "host" && sp.seq == "spawn") {
        int k = sp.locals.get<int>();
        SeqPoint cont = k < n ? SeqPoint{sp.actor, "spawn", Value(k + 1)}
                              : SeqPoint{sp.actor, "spawned"};
        out.push_back(detail::async_tr(
            sp, Invocation{seats.phil(k), "eat", nullptr}, cont));
      } else if (sp.actor.type == "host" && sp.seq == "spawned") {
        out.push_back(detail::end_tr(sp, Value(nullptr)));
      } else if (int k = seats.seat_of(sp.actor); k > 0) {
        if (sp.seq == "take_lo") {
          out.push_back(detail::sync_tr(sp, take(k, seats.lo(k)),
                                        SeqPoint{sp.actor, "took_lo"}));
        } else if (sp.seq == "take_hi") {
          out.push_back(detail::sync_tr(sp, take(k, seats.hi(k)),
                                        SeqPoint{sp.actor, "took_hi"}));
        } else if (sp.seq == "drop_hi") {
          out.push_back(detail::sync_tr(sp, drop(k, seats.hi(k)),
                                        SeqPoint{sp.actor, "dropped_hi"}));
        } else if (sp.seq == "drop_lo") {
          out.push_back(detail::sync_tr(sp, drop(k, seats.lo(k)),
                                        SeqPoint{sp.actor, "dropped_lo"}));
        } else if (sp.seq == "finish") {
          out.push_back(detail::end_tr(sp, Value(nullptr)));
        }
      }
      return out;
    }
    if (fragment.is_sync_nest()) {
      const SyncNest& nest = fragment.sync_nest();
      if (!nest.callee.is_result() || !nest.caller.is_seq()) {
        throw ShapeError("fragment has no transition form: " + fragment.str());
      }
      const Value& v = nest.callee.result().value;
      const SeqPoint& sp = nest.caller.seq();
      int k = seats.seat_of(sp.actor);
      if (k == 0) return out;
      if (sp.seq == "took_lo") {
        if (v == Value(false)) {
          out.push_back(detail::return_tr(v, sp, SeqPoint{sp.actor, "take_lo"}));
        } else if (v == Value(true)) {
          out.push_back(detail::return_tr(
              v, sp,
              SeqPoint{sp.actor, seats.two_forks(k) ? "take_hi" : "drop_lo"}));
        }
      } else if (sp.seq == "took_hi") {
        if (v == Value(false)) {
          out.push_back(detail::return_tr(v, sp, SeqPoint{sp.actor, "take_hi"}));
        } else if (v == Value(true)) {
          out.push_back(detail::return_tr(v, sp, SeqPoint{sp.actor, "drop_hi"}));
        }
      } else if (sp.seq == "dropped_hi" && v.is_null()) {
        out.push_back(detail::return_tr(v, sp, SeqPoint{sp.actor, "drop_lo"}));
      } else if (sp.seq == "dropped_lo" && v.is_null()) {
        out.push_back(detail::return_tr(v, sp, SeqPoint{sp.actor, "finish"}));
      }
      return out;
    }
    throw ShapeError("fragment has no transition form: " + fragment.str());
  };

  std::map<std::string, ActorTypeInfo> types;
  types["fork"] = ActorTypeInfo{"fork", Value(0)};
  types["phil"] = ActorTypeInfo{"phil", std::nullopt};
  Invocation main = n == 1 ? Invocation{seats.phil(1), "eat", nullptr}
                           : Invocation{ActorRef{"host", "h"}, "start", nullptr};
  if (n > 1) types["host"] = ActorTypeInfo{"host", std::nullopt};
  return std::make_shared<Program>("dining-general-" + std::to_string(n),
                                   std::move(types), main, std::move(raw),
                                   /*deterministic=*/true);
}

// Tail-call variant: a philosopher commits progress by replacing its own
// request after each successful acquisition, so a retry resumes at the
// committed phase instead of re-running earlier ones.
inline ProgramRef tailcall_program(int n) {
  if (n < 1) throw ShapeError("need at least one philosopher");
  detail::Seats seats{n};
  auto raw = [seats](const Term& fragment,
                     const StateView& view) -> std::vector<BaseTransition> {
    std::vector<BaseTransition> out;
    detail::fork_transitions(fragment, view, out);
    const int n = seats.n;
    auto take = [&](int k, int f) {
      return Invocation{seats.fork(f), "take", Value(seats.pid(k))};
    };
    auto drop = [&](int k, int f) {
      return Invocation{seats.fork(f), "drop", Value(seats.pid(k))};
    };
    if (fragment.is_invocation()) {
      const Invocation& inv = fragment.invocation();
      if (inv.actor.type == "host" && inv.method == "start" && n > 1) {
        out.push_back(
            detail::begin_tr(inv, SeqPoint{inv.actor, "spawn", Value(1)}));
        return out;
      }
      int k = seats.seat_of(inv.actor);
      if (k == 0 || !inv.arg.is_null()) return out;
      if (inv.method == "eat") {
        out.push_back(detail::begin_tr(inv, SeqPoint{inv.actor, "take_lo"}));
      } else if (inv.method == "holding_lo" && seats.two_forks(k)) {
        out.push_back(detail::begin_tr(inv, SeqPoint{inv.actor, "take_hi"}));
      } else if (inv.method == "dine") {
        out.push_back(detail::begin_tr(
            inv, SeqPoint{inv.actor, seats.two_forks(k) ? "drop_hi" : "drop_lo"}));
      }
      return out;
    }
    if (fragment.is_seq()) {
      const SeqPoint& sp = fragment.seq();
      if (sp.actor.type == "host" && sp.seq == "spawn") {
        int k = sp.locals.get<int>();
        SeqPoint cont = k < n ? SeqPoint{sp.actor, "spawn", Value(k + 1)}
                              : SeqPoint{sp.actor, "spawned"};
        out.push_back(detail::async_tr(
            sp, Invocation{seats.phil(k), "eat", nullptr}, cont));
        return out;
      }
      if (sp.actor.type == "host" && sp.seq == "spawned") {
        out.push_back(detail::end_tr(sp, Value(nullptr)));
        return out;
      }
      int k = seats.seat_of(sp.actor);
      if (k == 0) return out;
      if (sp.seq == "take_lo") {
        out.push_back(detail::sync_tr(sp, take(k, seats.lo(k)),
                                      SeqPoint{sp.actor, "took_lo"}));
      } else if (sp.seq == "commit_lo") {
        // Progress committed: the pending request becomes the next phase.
        out.push_back(detail::tail_tr(
            sp, Invocation{sp.actor,
                           seats.two_forks(k) ? "holding_lo" : "dine", nullptr}));
      } else if (sp.seq == "take_hi") {
        out.push_back(detail::sync_tr(sp, take(k, seats.hi(k)),
                                      SeqPoint{sp.actor, "took_hi"}));
      } else if (sp.seq == "commit_hi") {
        out.push_back(
            detail::tail_tr(sp, Invocation{sp.actor, "dine", nullptr}));
      } else if (sp.seq == "drop_hi") {
        out.push_back(detail::sync_tr(sp, drop(k, seats.hi(k)),
                                      SeqPoint{sp.actor, "dropped_hi"}));
      } else if (sp.seq == "drop_lo") {
        out.push_back(detail::sync_tr(sp, drop(k, seats.lo(k)),
                                      SeqPoint{sp.actor, "dropped_lo"}));
      } else if (sp.seq == "finish") {
        out.push_back(detail::end_tr(sp, Value(nullptr)));
      }
      return out;
    }
    if (fragment.is_sync_nest()) {
      const SyncNest& nest = fragment.sync_nest();
      if (!nest.callee.is_result() || !nest.caller.is_seq()) {
        throw ShapeError("fragment has no transition form: " + fragment.str());
      }
      const Value& v = nest.callee.result().value;
      const SeqPoint& sp = nest.caller.seq();
      int k = seats.seat_of(sp.actor);
      if (k == 0) return out;
      if (sp.seq == "took_lo") {
        if (v == Value(false)) {
          out.push_back(detail::return_tr(v, sp, SeqPoint{sp.actor, "take_lo"}));
        } else if (v == Value(true)) {
          out.push_back(detail::return_tr(v, sp, SeqPoint{sp.actor, "commit_lo"}));
        }
      } else if (sp.seq == "took_hi") {
        if (v == Value(false)) {
          out.push_back(detail::return_tr(v, sp, SeqPoint{sp.actor, "take_hi"}));
        } else if (v == Value(true)) {
          out.push_back(detail::return_tr(v, sp, SeqPoint{sp.actor, "commit_hi"}));
        }
      } else if (sp.seq == "dropped_hi" && v.is_null()) {
        out.push_back(detail::return_tr(v, sp, SeqPoint{sp.actor, "drop_lo"}));
      } else if (sp.seq == "dropped_lo" && v.is_null()) {
        out.push_back(detail::return_tr(v, sp, SeqPoint{sp.actor, "finish"}));
      }
      return out;
    }
    throw ShapeError("fragment has no transition form: " + fragment.str());
  };

  std::map<std::string, ActorTypeInfo> types;
  types["fork"] = ActorTypeInfo{"fork", Value(0)};
  types["phil"] = ActorTypeInfo{"phil", std::nullopt};
  Invocation main = n == 1 ? Invocation{seats.phil(1), "eat", nullptr}
                           : Invocation{ActorRef{"host", "h"}, "start", nullptr};
  if (n > 1) types["host"] = ActorTypeInfo{"host", std::nullopt};
  return std::make_shared<Program>("dining-tailcall-" + std::to_string(n),
                                   std::move(types), main, std::move(raw),
                                   /*deterministic=*/true);
}

}  // namespace dining

// Program specs accepted by tools and trace headers:
//   dining-table | dining-general:<n> | dining-tailcall:<n> | table:<path text>
inline ProgramRef program_from_spec(const std::string& spec,
                                    const std::string& table_text = "") {
  if (spec == "dining-table") return dining::table_program();
  auto starts = [&](const std::string& p) {
    return spec.rfind(p, 0) == 0;
  };
  if (starts("dining-general:")) {
    return dining::general_program(std::atoi(spec.c_str() + 15));
  }
  if (starts("dining-tailcall:")) {
    return dining::tailcall_program(std::atoi(spec.c_str() + 16));
  }
  if (starts("table:")) {
    if (table_text.empty()) {
      throw ParseError("program spec '" + spec + "' needs table text");
    }
    return TransitionTable::parse(table_text).compile();
  }
  throw ParseError("unknown program spec '" + spec + "'");
}

}  // namespace loom
