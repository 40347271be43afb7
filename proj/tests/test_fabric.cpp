#include <gtest/gtest.h>

#include <random>

#include "loom/fabric.hpp"

namespace loom {
namespace {

Envelope req(std::uint64_t num, const ActorRef& target, const std::string& m,
             Value arg, const ComponentName& origin) {
  Envelope e;
  e.kind = EnvKind::Request;
  e.rid = RequestId{num, ReqMode::Async, std::nullopt};
  e.target = target;
  e.method = m;
  e.arg = std::move(arg);
  e.origin = origin;
  e.sender = origin;
  return e;
}

class FabricTest : public ::testing::Test {
 protected:
  Fabric fab;
  ActorRef f = ActorRef::make("fork", "f");

  void join3() {
    ASSERT_TRUE(fab.join("c1", {"phil"}).has_value());
    ASSERT_TRUE(fab.join("c2", {"fork"}).has_value());
    ASSERT_TRUE(fab.join("c3", {"fork"}).has_value());
  }
};

TEST_F(FabricTest, AppendToEmptyPartitionGetsOffsetZero) {
  join3();
  auto r = fab.append(0, req(1, f, "take", Value(42), "c2"), 0);
  ASSERT_TRUE(r.has_value());
  EXPECT_EQ(r.value(), 0u);
}

TEST_F(FabricTest, TwoAppendsPreserveOrderOnRead) {
  join3();
  ASSERT_EQ(fab.append(1, req(1, f, "take", Value(42), "c1"), 0).value(), 0u);
  ASSERT_EQ(fab.append(1, req(2, f, "drop", Value(42), "c1"), 1).value(), 1u);
  auto first = fab.poll("c2");
  ASSERT_TRUE(first.has_value());
  ASSERT_TRUE(first.value().has_value());
  EXPECT_EQ(first.value()->second.method, "take");
  auto second = fab.poll("c2");
  EXPECT_EQ(second.value()->second.method, "drop");
  EXPECT_LT(first.value()->second.seq, second.value()->second.seq);
}

TEST_F(FabricTest, AppendDuringFreezeIsRejected) {
  join3();
  fab.freeze();
  auto r = fab.append(0, req(1, f, "take", Value(42), "c2"), 0);
  ASSERT_FALSE(r.has_value());
  EXPECT_EQ(r.error().code, "frozen");
  // The reconciler's privileged path still writes.
  EXPECT_TRUE(fab.append(0, req(1, f, "take", Value(42), "c2"), 0, true).has_value());
  fab.resume();
  EXPECT_TRUE(fab.append(0, req(2, f, "drop", Value(42), "c2"), 1).has_value());
}

TEST_F(FabricTest, PollDeliversAtMostOncePerOffset) {
  join3();
  fab.append(0, req(1, f, "take", Value(42), "c2"), 0).value();
  auto first = fab.poll("c1");
  ASSERT_TRUE(first.value().has_value());
  EXPECT_EQ(first.value()->first, 0u);
  auto second = fab.poll("c1");
  ASSERT_TRUE(second.has_value());
  EXPECT_FALSE(second.value().has_value());  // caught up
}

TEST_F(FabricTest, PollErrorsWhenUnassignedOrFrozen) {
  auto r = fab.poll("ghost");
  ASSERT_FALSE(r.has_value());
  EXPECT_EQ(r.error().code, "unassigned");
  join3();
  fab.freeze();
  EXPECT_EQ(fab.poll("c1").error().code, "frozen");
}

TEST_F(FabricTest, JoinThreeComponentsAssignsThreePartitionsEpochThree) {
  join3();
  EXPECT_EQ(fab.membership().epoch, 3u);
  EXPECT_EQ(fab.membership().assignment.size(), 3u);
  std::set<std::uint32_t> idx;
  for (const auto& [c, i] : fab.membership().assignment) idx.insert(i);
  EXPECT_EQ(idx.size(), 3u);  // injective
}

TEST_F(FabricTest, CrashIsInvisibleUntilDetected) {
  join3();
  ASSERT_TRUE(fab.crash("c2").has_value());
  EXPECT_EQ(fab.membership().epoch, 3u);  // no membership change yet
  EXPECT_TRUE(fab.membership().live("c2"));
  EXPECT_TRUE(fab.crashed_undetected("c2"));
  auto m = fab.detect("c2");
  ASSERT_TRUE(m.has_value());
  EXPECT_EQ(m.value().epoch, 4u);
  EXPECT_EQ(m.value().dangling.size(), 1u);
  EXPECT_EQ(m.value().find("c2")->status, CompStatus::Failed);
}

TEST_F(FabricTest, LeaveIsImmediateAndDangles) {
  join3();
  auto m = fab.leave("c3");
  ASSERT_TRUE(m.has_value());
  EXPECT_EQ(m.value().epoch, 4u);
  EXPECT_EQ(m.value().find("c3")->status, CompStatus::Removed);
  EXPECT_EQ(m.value().dangling.size(), 1u);
}

TEST_F(FabricTest, MembershipChangesNotifyOtherLiveComponents) {
  ASSERT_TRUE(fab.join("c1", {"phil"}).has_value());
  ASSERT_TRUE(fab.join("c2", {"fork"}).has_value());
  auto n = fab.pop_notification("c1");
  ASSERT_TRUE(n.has_value());
  EXPECT_EQ(n->kind, MembershipEvent::Kind::Join);
  EXPECT_EQ(n->subject, "c2");
  EXPECT_FALSE(fab.pop_notification("c2").has_value());
}

TEST_F(FabricTest, ScanRequiresFreezeAndSeesEverythingInWindow) {
  join3();
  fab.append(0, req(1, f, "take", Value(42), "c2"), 100).value();
  fab.append(1, req(2, f, "drop", Value(42), "c1"), 200).value();
  EXPECT_EQ(fab.scan_recent(ScanWindow{}, 500).error().code, "not-frozen");
  fab.freeze();
  auto scan = fab.scan_recent(ScanWindow{}, 500);
  ASSERT_TRUE(scan.has_value());
  EXPECT_EQ(scan.value().size(), 2u);
  EXPECT_LT(scan.value()[0].env.seq, scan.value()[1].env.seq);
}

TEST_F(FabricTest, WindowExcludesAgedRecordsExactly) {
  join3();
  // Independent full-history oracle: every (time, id) appended.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> history;
  std::mt19937_64 rng(11);
  for (std::uint64_t i = 1; i <= 40; ++i) {
    std::uint64_t t = i * 50;
    fab.append(rng() % 3, req(i, f, "take", Value(42), "c1"), t).value();
    history.emplace_back(t, i);
  }
  fab.freeze();
  const std::uint64_t now = 40 * 50;
  ScanWindow w;
  w.max_age_ms = 700;
  auto scan = fab.scan_recent(w, now);
  ASSERT_TRUE(scan.has_value());
  std::set<std::uint64_t> scanned;
  for (const ScanItem& it : scan.value()) scanned.insert(it.env.rid.num);
  for (const auto& [t, id] : history) {
    bool in_window = now - t <= w.max_age_ms;
    EXPECT_EQ(scanned.count(id) > 0, in_window) << "id " << id;
  }
}

TEST_F(FabricTest, RecordCountBoundKeepsMostRecent) {
  join3();
  for (std::uint64_t i = 1; i <= 10; ++i) {
    fab.append(0, req(i, f, "take", Value(42), "c1"), i).value();
  }
  fab.freeze();
  ScanWindow w;
  w.max_records = 4;
  auto scan = fab.scan_recent(w, 10);
  ASSERT_TRUE(scan.has_value());
  ASSERT_EQ(scan.value().size(), 4u);
  EXPECT_EQ(scan.value().front().env.rid.num, 7u);
  EXPECT_EQ(scan.value().back().env.rid.num, 10u);
}

TEST_F(FabricTest, PurgeReleasesIndexForReuseAndHidesRecords) {
  join3();
  fab.append(0, req(1, f, "take", Value(42), "c2"), 0).value();
  std::uint32_t idx = *fab.partition_of("c1");
  EXPECT_EQ(fab.purge(idx).error().code, "still-assigned");
  fab.crash("c1").value();
  fab.detect("c1").value();
  ASSERT_TRUE(fab.purge(idx).has_value());
  fab.freeze();
  auto scan = fab.scan_recent(ScanWindow{}, 1000);
  for (const ScanItem& it : scan.value()) EXPECT_NE(it.partition, idx);
  fab.resume();
  // A later join may reuse the freed index.
  auto m = fab.join("c4", {"phil"});
  ASSERT_TRUE(m.has_value());
  EXPECT_EQ(*fab.partition_of("c4"), idx);
  // Reused partition starts empty.
  auto polled = fab.poll("c4");
  ASSERT_TRUE(polled.has_value());
  EXPECT_FALSE(polled.value().has_value());
}

TEST_F(FabricTest, AppendToPurgedPartitionFails) {
  join3();
  std::uint32_t idx = *fab.partition_of("c1");
  fab.crash("c1").value();
  fab.detect("c1").value();
  fab.purge(idx).value();
  auto r = fab.append(idx, req(9, f, "take", Value(42), "c2"), 5);
  ASSERT_FALSE(r.has_value());
  EXPECT_EQ(r.error().code, "purged");
}

TEST_F(FabricTest, RecordsSurviveComponentFailure) {
  join3();
  std::uint32_t idx = *fab.partition_of("c2");
  fab.append(idx, req(1, f, "take", Value(42), "c1"), 0).value();
  fab.crash("c2").value();
  fab.detect("c2").value();
  // Unpurged dangling partition still holds the record.
  fab.freeze();
  auto scan = fab.scan_recent(ScanWindow{}, 1000);
  ASSERT_TRUE(scan.has_value());
  bool found = false;
  for (const ScanItem& it : scan.value()) found |= it.env.rid.num == 1;
  EXPECT_TRUE(found);
}

TEST_F(FabricTest, AssignmentStaysBijectiveUnderChurn) {
  std::mt19937_64 rng(3);
  int joined = 0;
  for (int step = 0; step < 200; ++step) {
    double coin = static_cast<double>(rng() % 100) / 100.0;
    if (coin < 0.5 || joined == 0) {
      fab.join("n" + std::to_string(step), {"t"}).value();
      ++joined;
    } else {
      std::vector<ComponentName> live = fab.membership().live_components();
      if (!live.empty()) {
        const ComponentName& victim = live[rng() % live.size()];
        if (rng() % 2 == 0) {
          fab.leave(victim).value();
        } else {
          fab.crash(victim).value();
          fab.detect(victim).value();
        }
        --joined;
      }
    }
    // Bijection between live components and non-dangling assigned partitions.
    std::set<std::uint32_t> used;
    for (const auto& [c, idx] : fab.membership().assignment) {
      EXPECT_TRUE(fab.membership().live(c));
      EXPECT_TRUE(used.insert(idx).second);
      EXPECT_EQ(fab.membership().dangling.count(idx), 0u);
    }
    EXPECT_EQ(fab.membership().assignment.size(),
              fab.membership().live_components().size());
  }
}

}  // namespace
}  // namespace loom
