#pragma once

#include <deque>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "loom/runtime_state.hpp"

namespace loom {

using ComponentName = std::string;

enum class CompStatus { Live, Failed, Removed };

inline const char* comp_status_name(CompStatus s) {
  switch (s) {
    case CompStatus::Live: return "live";
    case CompStatus::Failed: return "failed";
    case CompStatus::Removed: return "removed";
  }
  return "?";
}

struct ComponentInfo {
  ComponentName name;
  std::set<std::string> actor_types;  // types this component can host
  std::set<std::string> services;     // stateless services it offers
  CompStatus status = CompStatus::Live;

  bool hosts_type(const std::string& t) const { return actor_types.count(t) > 0; }
  friend bool operator==(const ComponentInfo&, const ComponentInfo&) = default;
};

enum class EnvKind { Request, Response, Reject };

inline const char* env_kind_name(EnvKind k) {
  switch (k) {
    case EnvKind::Request: return "req";
    case EnvKind::Response: return "resp";
    case EnvKind::Reject: return "reject";
  }
  return "?";
}

// One record on a partition. Requests land on the callee's partition,
// responses on the requester's; reject records tell a sender its cached route
// went stale.
struct Envelope {
  std::uint64_t seq = 0;      // global append sequence (deterministic order)
  std::uint64_t time_ms = 0;  // simulated append time
  std::uint64_t epoch = 0;    // membership epoch at send
  EnvKind kind = EnvKind::Request;
  RequestId rid;
  ActorRef target;                     // request/reject: the invoked actor
  std::string method;                  // request
  Value arg;                           // request
  std::optional<ComponentName> origin; // requester's host; responses route here
  Value value;                         // response payload
  ComponentName sender;                // immediate appender
  bool forwarded = false;              // reconciliation re-sent copy

  friend bool operator==(const Envelope&, const Envelope&) = default;

  std::string str() const {
    std::ostringstream o;
    o << "seq=" << seq << " t=" << time_ms << " e=" << epoch << " "
      << env_kind_name(kind) << " id=" << rid.num
      << (rid.sync() ? "+" : "-");
    if (kind == EnvKind::Request) {
      o << " " << target.str() << "." << method << "(" << value_dump(arg) << ")";
    } else if (kind == EnvKind::Response) {
      o << " val=" << value_dump(value);
    } else {
      o << " " << target.str();
    }
    o << " origin=" << (origin ? *origin : "-") << " from=" << sender;
    if (forwarded) o << " fwd";
    return o.str();
  }
};

struct Partition {
  std::uint32_t index = 0;
  std::vector<Envelope> records;                  // append-only until purge
  std::map<ComponentName, std::size_t> consumed;  // committed offset + 1
  friend bool operator==(const Partition&, const Partition&) = default;
};

struct MembershipEvent {
  std::uint64_t epoch = 0;
  enum class Kind { Join, Leave, Fail } kind = Kind::Join;
  ComponentName subject;
  friend bool operator==(const MembershipEvent&, const MembershipEvent&) = default;
};

struct Membership {
  std::uint64_t epoch = 0;
  std::map<ComponentName, ComponentInfo> components;
  std::map<ComponentName, std::uint32_t> assignment;  // live component -> partition
  std::set<std::uint32_t> dangling;

  const ComponentInfo* find(const ComponentName& c) const {
    auto it = components.find(c);
    return it == components.end() ? nullptr : &it->second;
  }
  bool live(const ComponentName& c) const {
    const ComponentInfo* i = find(c);
    return i && i->status == CompStatus::Live;
  }
  std::vector<ComponentName> live_components() const {
    std::vector<ComponentName> out;
    for (const auto& [n, i] : components) {
      if (i.status == CompStatus::Live) out.push_back(n);
    }
    return out;
  }
  std::vector<ComponentName> capable_live(const std::string& actor_type) const {
    std::vector<ComponentName> out;
    for (const auto& [n, i] : components) {
      if (i.status == CompStatus::Live && i.hosts_type(actor_type)) out.push_back(n);
    }
    return out;
  }
  friend bool operator==(const Membership&, const Membership&) = default;
};

struct ScanWindow {
  std::uint64_t max_age_ms = 600000;  // ten minutes of simulated history
  std::size_t max_records = 100000;
};

struct ScanItem {
  std::uint32_t partition = 0;
  std::uint64_t offset = 0;
  Envelope env;
};

// Simulated partitioned persistent log plus group membership. One partition
// per live component; appends are atomic-durable; consuming never discards.
// The log itself never fails (catastrophic failures are outside the fault
// model) — components do.
class Fabric {
 public:
  const Membership& membership() const { return membership_; }
  bool frozen() const { return frozen_; }
  std::uint64_t next_seq() const { return next_seq_; }
  const std::vector<Partition>& partitions() const { return partitions_; }

  bool partition_exists(std::uint32_t idx) const {
    return idx < partitions_.size() && free_pool_.count(idx) == 0;
  }
  std::optional<std::uint32_t> partition_of(const ComponentName& c) const {
    auto it = membership_.assignment.find(c);
    if (it == membership_.assignment.end()) return std::nullopt;
    return it->second;
  }

  // Membership -------------------------------------------------------------

  Result<Membership> join(const ComponentName& name,
                          std::set<std::string> actor_types,
                          std::set<std::string> services = {}) {
    if (membership_.components.count(name)) {
      return Result<Membership>::err("duplicate-component",
                                     name + " already known");
    }
    std::uint32_t idx;
    if (!free_pool_.empty()) {
      idx = *free_pool_.begin();  // purged partitions are reused
      free_pool_.erase(free_pool_.begin());
      partitions_[idx] = Partition{idx, {}, {}};
    } else {
      idx = static_cast<std::uint32_t>(partitions_.size());
      partitions_.push_back(Partition{idx, {}, {}});
    }
    membership_.components[name] =
        ComponentInfo{name, std::move(actor_types), std::move(services),
                      CompStatus::Live};
    membership_.assignment[name] = idx;
    bump_epoch(MembershipEvent{0, MembershipEvent::Kind::Join, name});
    return Result<Membership>::ok(membership_);
  }

  Result<Membership> leave(const ComponentName& name) {
    ComponentInfo* info = mutable_info(name);
    if (!info || info->status != CompStatus::Live) {
      return Result<Membership>::err("not-live", name);
    }
    info->status = CompStatus::Removed;
    dangle_partition(name);
    bump_epoch(MembershipEvent{0, MembershipEvent::Kind::Leave, name});
    return Result<Membership>::ok(membership_);
  }

  // A crash is invisible to membership until detected (heartbeat grace).
  Status crash(const ComponentName& name) {
    ComponentInfo* info = mutable_info(name);
    if (!info || info->status != CompStatus::Live) {
      return Status::err("not-live", name);
    }
    if (!crashed_.insert(name).second) return Status::err("already-crashed", name);
    return status_ok();
  }

  bool crashed_undetected(const ComponentName& name) const {
    return crashed_.count(name) > 0;
  }
  const std::set<ComponentName>& undetected() const { return crashed_; }

  Result<Membership> detect(const ComponentName& name) {
    if (!crashed_.erase(name)) {
      return Result<Membership>::err("nothing-to-detect", name);
    }
    ComponentInfo* info = mutable_info(name);
    LOOM_CHECK(info != nullptr, "crashed component unknown to membership");
    info->status = CompStatus::Failed;
    dangle_partition(name);
    bump_epoch(MembershipEvent{0, MembershipEvent::Kind::Fail, name});
    return Result<Membership>::ok(membership_);
  }

  std::optional<MembershipEvent> pop_notification(const ComponentName& c) {
    auto it = notifications_.find(c);
    if (it == notifications_.end() || it->second.empty()) return std::nullopt;
    MembershipEvent e = it->second.front();
    it->second.pop_front();
    return e;
  }
  bool has_notification(const ComponentName& c) const {
    auto it = notifications_.find(c);
    return it != notifications_.end() && !it->second.empty();
  }
  void clear_notifications(const ComponentName& c) { notifications_.erase(c); }

  // Log --------------------------------------------------------------------

  Result<std::uint64_t> append(std::uint32_t idx, Envelope env,
                               std::uint64_t now_ms, bool privileged = false) {
    if (frozen_ && !privileged) {
      return Result<std::uint64_t>::err("frozen",
                                        "reconciliation in progress; retry");
    }
    if (idx >= partitions_.size()) {
      return Result<std::uint64_t>::err("no-partition", std::to_string(idx));
    }
    if (free_pool_.count(idx)) {
      return Result<std::uint64_t>::err("purged",
                                        "partition " + std::to_string(idx) +
                                            " was purged");
    }
    env.seq = next_seq_++;
    env.time_ms = now_ms;
    env.epoch = membership_.epoch;
    partitions_[idx].records.push_back(std::move(env));
    return Result<std::uint64_t>::ok(partitions_[idx].records.size() - 1);
  }

  // Next unconsumed envelope without advancing the offset.
  Result<std::optional<std::pair<std::uint64_t, Envelope>>> peek(
      const ComponentName& c) const {
    using R = Result<std::optional<std::pair<std::uint64_t, Envelope>>>;
    if (frozen_) return R::err("frozen", "reconciliation in progress");
    auto it = membership_.assignment.find(c);
    if (it == membership_.assignment.end() || !membership_.live(c)) {
      return R::err("unassigned", c);
    }
    const Partition& p = partitions_[it->second];
    std::size_t off = 0;
    if (auto cit = p.consumed.find(c); cit != p.consumed.end()) off = cit->second;
    if (off >= p.records.size()) return R::ok(std::nullopt);
    return R::ok(std::make_pair(static_cast<std::uint64_t>(off), p.records[off]));
  }

  // Delivers the next unconsumed envelope at most once between failures.
  Result<std::optional<std::pair<std::uint64_t, Envelope>>> poll(
      const ComponentName& c) {
    auto r = peek(c);
    if (!r || !r.value().has_value()) return r;
    partitions_[membership_.assignment[c]].consumed[c] = r.value()->first + 1;
    return r;
  }

  // Catalogs recent request/response traffic across all partitions,
  // dangling ones included, in deterministic (append sequence) order.
  // Only callable during the reconciliation freeze.
  Result<std::vector<ScanItem>> scan_recent(const ScanWindow& w,
                                            std::uint64_t now_ms) const {
    if (!frozen_) {
      return Result<std::vector<ScanItem>>::err("not-frozen",
                                                "scan requires the freeze");
    }
    std::vector<ScanItem> items;
    for (const Partition& p : partitions_) {
      if (free_pool_.count(p.index)) continue;
      for (std::size_t off = 0; off < p.records.size(); ++off) {
        const Envelope& e = p.records[off];
        std::uint64_t age = now_ms >= e.time_ms ? now_ms - e.time_ms : 0;
        if (age > w.max_age_ms) continue;
        items.push_back(ScanItem{p.index, off, e});
      }
    }
    std::sort(items.begin(), items.end(),
              [](const ScanItem& a, const ScanItem& b) {
                return a.env.seq < b.env.seq;
              });
    if (items.size() > w.max_records) {
      items.erase(items.begin(),
                  items.end() - static_cast<std::ptrdiff_t>(w.max_records));
    }
    return Result<std::vector<ScanItem>>::ok(std::move(items));
  }

  // Discards a dangling partition's records and frees its index for reuse.
  Status purge(std::uint32_t idx) {
    if (membership_.dangling.count(idx) == 0) {
      return Status::err("still-assigned",
                         "partition " + std::to_string(idx) + " not dangling");
    }
    partitions_[idx].records.clear();
    partitions_[idx].consumed.clear();
    membership_.dangling.erase(idx);
    free_pool_.insert(idx);
    return status_ok();
  }

  void freeze() { frozen_ = true; }
  void resume() { frozen_ = false; }

  std::string dump() const {
    std::ostringstream o;
    o << "membership epoch=" << membership_.epoch
      << (frozen_ ? " frozen" : "") << "\n";
    for (const auto& [n, i] : membership_.components) {
      o << "  component " << n << " status=" << comp_status_name(i.status);
      if (auto p = partition_of(n)) o << " partition=" << *p;
      o << " types={";
      bool first = true;
      for (const auto& t : i.actor_types) {
        if (!first) o << ",";
        first = false;
        o << t;
      }
      o << "}";
      if (crashed_.count(n)) o << " crashed-undetected";
      o << "\n";
    }
    for (std::uint32_t d : membership_.dangling) o << "  dangling " << d << "\n";
    for (std::uint32_t f : free_pool_) o << "  free " << f << "\n";
    for (const Partition& p : partitions_) {
      if (free_pool_.count(p.index)) continue;
      o << "partition " << p.index << " records=" << p.records.size() << "\n";
      for (const auto& [c, off] : p.consumed) {
        o << "  consumed " << c << "=" << off << "\n";
      }
      for (const Envelope& e : p.records) o << "  " << e.str() << "\n";
    }
    return o.str();
  }

  friend bool operator==(const Fabric&, const Fabric&) = default;

 private:
  ComponentInfo* mutable_info(const ComponentName& c) {
    auto it = membership_.components.find(c);
    return it == membership_.components.end() ? nullptr : &it->second;
  }

  void dangle_partition(const ComponentName& c) {
    auto it = membership_.assignment.find(c);
    if (it == membership_.assignment.end()) return;
    membership_.dangling.insert(it->second);
    membership_.assignment.erase(it);
  }

  void bump_epoch(MembershipEvent ev) {
    membership_.epoch++;
    ev.epoch = membership_.epoch;
    for (const auto& [n, i] : membership_.components) {
      if (i.status == CompStatus::Live && n != ev.subject) {
        notifications_[n].push_back(ev);
      }
    }
  }

  std::vector<Partition> partitions_;
  Membership membership_;
  std::map<ComponentName, std::deque<MembershipEvent>> notifications_;
  std::set<ComponentName> crashed_;  // crashed but not yet detected
  std::set<std::uint32_t> free_pool_;
  bool frozen_ = false;
  std::uint64_t next_seq_ = 0;
};

}  // namespace loom
