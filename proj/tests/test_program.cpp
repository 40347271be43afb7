#include <gtest/gtest.h>

#include "loom/dining.hpp"
#include "loom/oracle.hpp"

namespace loom {
namespace {

ActorRef fork_f() { return ActorRef::make("fork", "f"); }
ActorRef phil_p() { return ActorRef::make("phil", "p"); }

class DiningTableProgram : public ::testing::Test {
 protected:
  ProgramRef prog = dining::table_program();
};

TEST_F(DiningTableProgram, BeginTakeFromAnyState) {
  Term frag(Invocation{fork_f(), "take", Value(42)});
  auto enabled = enabled_transitions(*prog, frag, std::nullopt);
  ASSERT_EQ(enabled.size(), 1u);
  EXPECT_EQ(enabled[0].kind, TrKind::Begin);
  EXPECT_EQ(enabled[0].rhs, Term(SeqPoint{fork_f(), "take_42"}));
  EXPECT_FALSE(enabled[0].rhs_state.has_value());
}

TEST_F(DiningTableProgram, TakeStepOnFreeForkAcquires) {
  Term frag(SeqPoint{fork_f(), "take_42"});
  auto enabled = enabled_transitions(*prog, frag, Value(0));
  ASSERT_EQ(enabled.size(), 1u);
  EXPECT_EQ(enabled[0].kind, TrKind::Step);
  EXPECT_EQ(enabled[0].rhs, Term(SeqPoint{fork_f(), "take_42_true"}));
  EXPECT_EQ(*enabled[0].rhs_state, Value(42));
}

TEST_F(DiningTableProgram, TakeStepIsIdempotentForHolder) {
  auto enabled =
      enabled_transitions(*prog, Term(SeqPoint{fork_f(), "take_42"}), Value(42));
  ASSERT_EQ(enabled.size(), 1u);
  EXPECT_EQ(enabled[0].rhs, Term(SeqPoint{fork_f(), "take_42_true"}));
  EXPECT_EQ(*enabled[0].rhs_state, Value(42));
}

TEST_F(DiningTableProgram, TakeStepOnHeldForkFails) {
  auto enabled =
      enabled_transitions(*prog, Term(SeqPoint{fork_f(), "take_42"}), Value(7));
  ASSERT_EQ(enabled.size(), 1u);
  EXPECT_EQ(enabled[0].rhs, Term(SeqPoint{fork_f(), "take_42_false"}));
  EXPECT_EQ(*enabled[0].rhs_state, Value(7));
}

TEST_F(DiningTableProgram, AbsentEntryUsesDeclaredInitialValue) {
  // The fork type declares initial value 0; a step against an absent entry
  // reads it and writes through.
  auto enabled =
      enabled_transitions(*prog, Term(SeqPoint{fork_f(), "take_42"}), std::nullopt);
  ASSERT_EQ(enabled.size(), 1u);
  EXPECT_EQ(*enabled[0].lhs_state, Value(0));
  EXPECT_EQ(*enabled[0].rhs_state, Value(42));
}

TEST_F(DiningTableProgram, DropReleasesOnlyWhenHeldBy42) {
  auto held =
      enabled_transitions(*prog, Term(SeqPoint{fork_f(), "drop_42"}), Value(42));
  ASSERT_EQ(held.size(), 1u);
  EXPECT_EQ(*held[0].rhs_state, Value(0));

  auto other =
      enabled_transitions(*prog, Term(SeqPoint{fork_f(), "drop_42"}), Value(5));
  ASSERT_EQ(other.size(), 1u);
  EXPECT_EQ(other[0].rhs, Term(SeqPoint{fork_f(), "drop_42_null"}));
  EXPECT_EQ(*other[0].rhs_state, Value(5));  // state unchanged
}

TEST_F(DiningTableProgram, BareResultHasNoTransitionForm) {
  EXPECT_THROW(
      enabled_transitions(*prog, Term(ResultTerm{Value(nullptr)}), std::nullopt),
      ShapeError);
}

TEST_F(DiningTableProgram, MalformedNestHasNoTransitionForm) {
  Term bad(SyncNest{Term(SeqPoint{phil_p(), "eat_2"}),
                    Term(SeqPoint{phil_p(), "eat_2"})});
  EXPECT_THROW(enabled_transitions(*prog, bad, std::nullopt), ShapeError);
}

TEST_F(DiningTableProgram, CanonicalOrderingIsStable) {
  Term frag(Invocation{phil_p(), "eat", Value(nullptr)});
  auto a = enabled_transitions(*prog, frag, std::nullopt);
  auto b = enabled_transitions(*prog, frag, std::nullopt);
  EXPECT_EQ(a, b);
  auto c = enabled_transitions(*prog, Term(SeqPoint{fork_f(), "take_42"}), Value(0));
  auto d = enabled_transitions(*prog, Term(SeqPoint{fork_f(), "take_42"}), Value(0));
  EXPECT_EQ(c, d);
}

// Every lhs in the figure rewrites to exactly the figure's rhs. The full
// 16-line table is frozen here, independent of the file round-trip test.
TEST_F(DiningTableProgram, WholeTransitionTableMatchesExpectedRewrites) {
  struct Case {
    Term lhs;
    std::optional<Value> entry;
    TrKind kind;
    std::string rhs;
    std::optional<Value> write;
  };
  Term take_inv(Invocation{fork_f(), "take", Value(42)});
  Term drop_inv(Invocation{fork_f(), "drop", Value(42)});
  Term eat_inv(Invocation{phil_p(), "eat", Value(nullptr)});
  auto seq = [](ActorRef a, const char* s) { return Term(SeqPoint{a, s}); };
  auto ret = [](Value v, Term caller) {
    return Term(SyncNest{Term(ResultTerm{std::move(v)}), std::move(caller)});
  };
  std::vector<Case> cases = {
      {take_inv, std::nullopt, TrKind::Begin, "fork/f.take_42", std::nullopt},
      {seq(fork_f(), "take_42"), Value(0), TrKind::Step, "fork/f.take_42_true",
       Value(42)},
      {seq(fork_f(), "take_42"), Value(42), TrKind::Step, "fork/f.take_42_true",
       Value(42)},
      {seq(fork_f(), "take_42"), Value(9), TrKind::Step, "fork/f.take_42_false",
       Value(9)},
      {seq(fork_f(), "take_42_true"), std::nullopt, TrKind::End, "val true",
       std::nullopt},
      {seq(fork_f(), "take_42_false"), std::nullopt, TrKind::End, "val false",
       std::nullopt},
      {drop_inv, std::nullopt, TrKind::Begin, "fork/f.drop_42", std::nullopt},
      {seq(fork_f(), "drop_42"), Value(42), TrKind::Step, "fork/f.drop_42_null",
       Value(0)},
      {seq(fork_f(), "drop_42"), Value(3), TrKind::Step, "fork/f.drop_42_null",
       Value(3)},
      {seq(fork_f(), "drop_42_null"), std::nullopt, TrKind::End, "val null",
       std::nullopt},
      {eat_inv, std::nullopt, TrKind::Begin, "phil/p.eat_1", std::nullopt},
      {seq(phil_p(), "eat_1"), std::nullopt, TrKind::SyncCall,
       "[fork/f.take(42) |> phil/p.eat_2]", std::nullopt},
      {ret(Value(false), seq(phil_p(), "eat_2")), std::nullopt, TrKind::Return,
       "phil/p.eat_1", std::nullopt},
      {ret(Value(true), seq(phil_p(), "eat_2")), std::nullopt, TrKind::Return,
       "phil/p.eat_3", std::nullopt},
      {seq(phil_p(), "eat_3"), std::nullopt, TrKind::SyncCall,
       "[fork/f.drop(42) |> phil/p.eat_4]", std::nullopt},
      {ret(Value(nullptr), seq(phil_p(), "eat_4")), std::nullopt, TrKind::Return,
       "phil/p.eat_5", std::nullopt},
      {seq(phil_p(), "eat_5"), std::nullopt, TrKind::End, "val null",
       std::nullopt},
  };
  for (const Case& c : cases) {
    auto enabled = enabled_transitions(*prog, c.lhs, c.entry);
    ASSERT_EQ(enabled.size(), 1u) << c.lhs.str();
    EXPECT_EQ(enabled[0].kind, c.kind) << c.lhs.str();
    EXPECT_EQ(enabled[0].rhs.str(), c.rhs) << c.lhs.str();
    if (c.write) {
      ASSERT_TRUE(enabled[0].rhs_state.has_value());
      EXPECT_EQ(*enabled[0].rhs_state, *c.write) << c.lhs.str();
    }
  }
}

// Only steps carry a state effect, and only at the running actor's own key.
TEST_F(DiningTableProgram, OnlyStepsTouchPersistentState) {
  auto probes = oracle::collect_closure_probes(*prog, 200);
  int steps = 0;
  for (const auto& [fragment, entry] : probes) {
    for (const auto& t : enabled_transitions(*prog, fragment, entry)) {
      if (t.kind == TrKind::Step) {
        ++steps;
        EXPECT_TRUE(t.rhs_state.has_value());
        EXPECT_EQ(t.rhs.seq().actor, fragment.seq().actor);
      } else {
        EXPECT_FALSE(t.lhs_state.has_value());
        EXPECT_FALSE(t.rhs_state.has_value());
      }
    }
  }
  EXPECT_GT(steps, 0);
}

TEST(ClosureCheckTest, DiningProgramIsClosed) {
  auto prog = dining::table_program();
  ClosureReport report = closure_check(*prog, 100);
  EXPECT_GT(report.probes, 10);
  EXPECT_TRUE(report.ok()) << report.violations.size() << " violations";
}

TEST(ClosureCheckTest, EmptyProgramIsClosed) {
  std::map<std::string, ActorTypeInfo> types;
  types["nil"] = ActorTypeInfo{"nil", std::nullopt};
  auto prog = std::make_shared<Program>(
      "empty", types, Invocation{ActorRef::make("nil", "n"), "go", Value(nullptr)},
      [](const Term&, const StateView&) { return std::vector<BaseTransition>{}; });
  ClosureReport report = closure_check(*prog, 100);
  EXPECT_TRUE(report.ok());
}

TEST(ClosureCheckTest, ProgramPeekingAtOtherActorsIsFlagged) {
  // Ill-formed on purpose: the fork's step consults the philosopher's entry.
  ActorRef f = ActorRef::make("fork", "f");
  ActorRef p = ActorRef::make("phil", "p");
  auto raw = [f, p](const Term& fragment,
                    const StateView& view) -> std::vector<BaseTransition> {
    std::vector<BaseTransition> out;
    if (fragment.is_invocation() && fragment.invocation().method == "peek") {
      out.push_back(BaseTransition{TrKind::Begin, fragment, std::nullopt,
                                   Term(SeqPoint{f, "peeking"}), std::nullopt});
    } else if (fragment.is_seq() && fragment.seq().seq == "peeking") {
      // Enabledness depends on a stranger's entry: a closure violation.
      if (view.size() <= 1) {
        out.push_back(BaseTransition{TrKind::End, fragment, std::nullopt,
                                     Term(ResultTerm{Value(true)}), std::nullopt});
      }
    }
    return out;
  };
  std::map<std::string, ActorTypeInfo> types;
  types["fork"] = ActorTypeInfo{"fork", Value(0)};
  types["phil"] = ActorTypeInfo{"phil", std::nullopt};
  auto prog = std::make_shared<Program>("peeker", types,
                                        Invocation{f, "peek", Value(nullptr)},
                                        raw);
  ClosureReport report = closure_check(*prog, 100);
  EXPECT_FALSE(report.ok());
  EXPECT_GE(report.violations.size(), 1u);
}

TEST(ProgramTest, DeterministicDeclarationIsEnforced) {
  ActorRef a = ActorRef::make("t", "a");
  auto raw = [a](const Term& fragment,
                 const StateView&) -> std::vector<BaseTransition> {
    std::vector<BaseTransition> out;
    if (fragment.is_invocation()) {
      out.push_back(BaseTransition{TrKind::Begin, fragment, std::nullopt,
                                   Term(SeqPoint{a, "s1"}), std::nullopt, 0});
      out.push_back(BaseTransition{TrKind::Begin, fragment, std::nullopt,
                                   Term(SeqPoint{a, "s2"}), std::nullopt, 1});
    }
    return out;
  };
  std::map<std::string, ActorTypeInfo> types;
  types["t"] = ActorTypeInfo{"t", std::nullopt};
  auto nondet = std::make_shared<Program>("nd", types,
                                          Invocation{a, "go", Value(nullptr)},
                                          raw, /*deterministic=*/false);
  EXPECT_EQ(
      enabled_transitions(*nondet, Term(Invocation{a, "go", Value(nullptr)}),
                          std::nullopt)
          .size(),
      2u);
  auto det = std::make_shared<Program>("d", types,
                                       Invocation{a, "go", Value(nullptr)}, raw,
                                       /*deterministic=*/true);
  EXPECT_THROW(enabled_transitions(*det, Term(Invocation{a, "go", Value(nullptr)}),
                                   std::nullopt),
               InvariantError);
}

}  // namespace
}  // namespace loom
