#include <gtest/gtest.h>

#include <random>

#include "loom/placement.hpp"

namespace loom {
namespace {

class PlacementTest : public ::testing::Test {
 protected:
  Fabric fab;
  PlacementStore store;
  ActorRef f = ActorRef::make("fork", "f");

  void SetUp() override {
    fab.join("c1", {"fork", "phil"}).value();
    fab.join("c2", {"fork"}, {"lookup"}).value();
    fab.join("c3", {"phil"}, {"lookup"}).value();
  }
  const Membership& m() { return fab.membership(); }
};

TEST_F(PlacementTest, TwoConcurrentPlacersSeeOneWinnerEitherOrder) {
  // Both interleavings of two racing placers: exactly one wins, both then
  // observe the same owner.
  for (bool c1_first : {true, false}) {
    PlacementStore s;
    ComponentName a = c1_first ? "c1" : "c2";
    ComponentName b = c1_first ? "c2" : "c1";
    auto first = s.place(f, a, std::nullopt, m());
    auto second = s.place(f, b, std::nullopt, m());
    ASSERT_TRUE(first.has_value());
    ASSERT_TRUE(second.has_value());
    EXPECT_TRUE(first.value().won);
    EXPECT_FALSE(second.value().won);
    EXPECT_EQ(*first.value().owner, a);
    EXPECT_EQ(*second.value().owner, a);  // loser learns the incumbent
    EXPECT_EQ(*s.read(f), a);
  }
}

TEST_F(PlacementTest, StaleExpectedLeavesStoreUnchanged) {
  store.place(f, "c1", std::nullopt, m()).value();
  auto r = store.place(f, "c2", "c3", m());  // expected is stale
  ASSERT_TRUE(r.has_value());
  EXPECT_FALSE(r.value().won);
  EXPECT_EQ(*r.value().owner, "c1");
  EXPECT_EQ(*store.read(f), "c1");
}

TEST_F(PlacementTest, IncapableCandidateIsRejected) {
  auto r = store.place(f, "c3", std::nullopt, m());  // c3 hosts phil only
  ASSERT_FALSE(r.has_value());
  EXPECT_EQ(r.error().code, "incapable");
  EXPECT_FALSE(store.entry(f).has_value());
}

TEST_F(PlacementTest, FailoverCasExpectsOldOwner) {
  store.place(f, "c1", std::nullopt, m()).value();
  auto r = store.place(f, "c2", "c1", m());
  ASSERT_TRUE(r.has_value());
  EXPECT_TRUE(r.value().won);
  EXPECT_EQ(*store.read(f), "c2");
}

TEST_F(PlacementTest, SuccessfulCasesFormAChain) {
  // Every successful CAS's expected equals the prior success's installed
  // value, for any interleaving of racing updates.
  std::mt19937_64 rng(17);
  std::vector<ComponentName> caps = {"c1", "c2"};
  std::optional<ComponentName> last_installed;
  int successes = 0;
  for (int i = 0; i < 500; ++i) {
    ComponentName cand = caps[rng() % caps.size()];
    std::optional<ComponentName> expected;
    switch (rng() % 3) {
      case 0: expected = std::nullopt; break;
      case 1: expected = caps[rng() % caps.size()]; break;
      case 2: expected = store.entry(f) ? std::optional(store.entry(f)->owner)
                                        : std::nullopt;
    }
    auto r = store.place(f, cand, expected, m());
    ASSERT_TRUE(r.has_value());
    if (r.value().won) {
      EXPECT_EQ(expected, last_installed);
      last_installed = cand;
      ++successes;
    }
  }
  EXPECT_GT(successes, 0);
  EXPECT_EQ(store.entry(f)->owner, *last_installed);
}

TEST_F(PlacementTest, LookupCachesAndCountsStoreReads) {
  PlacementCache cache(16);
  store.place(f, "c1", std::nullopt, m()).value();
  EXPECT_EQ(lookup(f, cache, store), "c1");
  EXPECT_EQ(store.reads(), 1u);
  EXPECT_EQ(lookup(f, cache, store), "c1");
  EXPECT_EQ(store.reads(), 1u);  // second hit served from cache
}

TEST_F(PlacementTest, UnplacedLookupIsNotCached) {
  PlacementCache cache(16);
  EXPECT_FALSE(lookup(f, cache, store).has_value());
  EXPECT_FALSE(lookup(f, cache, store).has_value());
  EXPECT_EQ(store.reads(), 2u);  // absence is never cached
  EXPECT_EQ(cache.size(), 0u);
}

TEST_F(PlacementTest, RouteServicePicksCapableLiveComponent) {
  auto r = route_service("lookup", m(), 7, 0);
  ASSERT_TRUE(r.has_value());
  EXPECT_TRUE(r.value() == "c2" || r.value() == "c3");

  // Only one capable once c3 leaves.
  fab.leave("c3").value();
  auto r2 = route_service("lookup", m(), 7, 1);
  ASSERT_TRUE(r2.has_value());
  EXPECT_EQ(r2.value(), "c2");
}

TEST_F(PlacementTest, RouteServiceIsDeterministicUnderFixedSeed) {
  std::vector<ComponentName> a, b;
  for (std::uint64_t nonce = 0; nonce < 20; ++nonce) {
    a.push_back(route_service("lookup", m(), 7, nonce).value());
    b.push_back(route_service("lookup", m(), 7, nonce).value());
  }
  EXPECT_EQ(a, b);
  // And a different seed may produce a different sequence (not pinned).
}

TEST_F(PlacementTest, RouteServiceWithNoCapableComponentSignalsNoRoute) {
  auto r = route_service("unknown-svc", m(), 7, 0);
  ASSERT_FALSE(r.has_value());
  EXPECT_EQ(r.error().code, "no-route");
}

TEST_F(PlacementTest, PickCandidateIsSeededAndCapable) {
  auto r = pick_candidate(f, m(), 7, 0);
  ASSERT_TRUE(r.has_value());
  EXPECT_TRUE(r.value() == "c1" || r.value() == "c2");
  EXPECT_EQ(pick_candidate(f, m(), 7, 0).value(), r.value());
  ActorRef ghost = ActorRef::make("unknown", "u");
  EXPECT_EQ(pick_candidate(ghost, m(), 7, 0).error().code, "no-capable");
}

}  // namespace
}  // namespace loom
