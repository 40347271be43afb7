#pragma once

#include <list>
#include <map>
#include <optional>

#include "loom/arc_cache.hpp"
#include "loom/fabric.hpp"

namespace loom {

// Actor -> component map in the durable store tier. Survives every component
// failure; updates go through compare-and-swap only.
class PlacementStore {
 public:
  struct EntryView {
    ComponentName owner;
    std::uint64_t version = 0;
    friend bool operator==(const EntryView&, const EntryView&) = default;
  };

  struct CasOutcome {
    bool won = false;
    std::optional<ComponentName> owner;  // owner after the operation
    std::uint64_t version = 0;
  };

  // Installs candidate iff the current value equals expected (absent expected
  // means "expect unplaced"); otherwise returns the incumbent untouched.
  // Exactly one of any set of concurrent placers wins.
  Result<CasOutcome> place(const ActorRef& actor, const ComponentName& candidate,
                           const std::optional<ComponentName>& expected,
                           const Membership& membership) {
    const ComponentInfo* info = membership.find(candidate);
    if (!info || !info->hosts_type(actor.type)) {
      return Result<CasOutcome>::err(
          "incapable", candidate + " does not declare actor type " + actor.type);
    }
    auto it = entries_.find(actor);
    std::optional<ComponentName> current;
    if (it != entries_.end()) current = it->second.owner;
    if (current != expected) {
      return Result<CasOutcome>::ok(
          CasOutcome{false, current, it == entries_.end() ? 0 : it->second.version});
    }
    EntryView& e = entries_[actor];
    e.owner = candidate;
    e.version++;
    return Result<CasOutcome>::ok(CasOutcome{true, candidate, e.version});
  }

  // Uncached authoritative read; counted for the cache-effectiveness metric.
  std::optional<ComponentName> read(const ActorRef& actor) {
    ++reads_;
    auto it = entries_.find(actor);
    if (it == entries_.end()) return std::nullopt;
    return it->second.owner;
  }

  std::optional<EntryView> entry(const ActorRef& actor) const {
    auto it = entries_.find(actor);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  std::uint64_t reads() const { return reads_; }
  const std::map<ActorRef, EntryView>& entries() const { return entries_; }

  friend bool operator==(const PlacementStore&, const PlacementStore&) = default;

 private:
  std::map<ActorRef, EntryView> entries_;
  std::uint64_t reads_ = 0;
};

enum class CachePolicy { Arc, Lru };

// Per-component route cache in front of the store. ARC by default; a plain
// LRU is available for comparisons.
class PlacementCache {
 public:
  explicit PlacementCache(std::size_t capacity = 1024,
                          CachePolicy policy = CachePolicy::Arc)
      : policy_(policy), capacity_(capacity ? capacity : 1), arc_(capacity) {}

  PlacementCache(const PlacementCache& o)
      : policy_(o.policy_), capacity_(o.capacity_), arc_(o.arc_), lru_(o.lru_) {
    reindex();
  }
  PlacementCache& operator=(const PlacementCache& o) {
    if (this != &o) {
      policy_ = o.policy_;
      capacity_ = o.capacity_;
      arc_ = o.arc_;
      lru_ = o.lru_;
      reindex();
    }
    return *this;
  }
  PlacementCache(PlacementCache&&) noexcept = default;
  PlacementCache& operator=(PlacementCache&&) noexcept = default;

  std::optional<ComponentName> get(const ActorRef& a) {
    if (policy_ == CachePolicy::Arc) return arc_.get(a);
    auto it = lru_index_.find(a);
    if (it == lru_index_.end()) return std::nullopt;
    lru_.splice(lru_.begin(), lru_, it->second);
    return it->second->second;
  }

  void put(const ActorRef& a, const ComponentName& c) {
    if (policy_ == CachePolicy::Arc) {
      arc_.put(a, c);
      return;
    }
    auto it = lru_index_.find(a);
    if (it != lru_index_.end()) {
      it->second->second = c;
      lru_.splice(lru_.begin(), lru_, it->second);
      return;
    }
    if (lru_.size() >= capacity_) {
      lru_index_.erase(lru_.back().first);
      lru_.pop_back();
    }
    lru_.emplace_front(a, c);
    lru_index_[a] = lru_.begin();
  }

  void erase(const ActorRef& a) {
    if (policy_ == CachePolicy::Arc) {
      arc_.erase(a);
      return;
    }
    auto it = lru_index_.find(a);
    if (it == lru_index_.end()) return;
    lru_.erase(it->second);
    lru_index_.erase(it);
  }

  // Invalidate every route pointing at a component (membership change).
  void erase_owner(const ComponentName& c) {
    if (policy_ == CachePolicy::Arc) {
      arc_.erase_if([&](const ActorRef&, const ComponentName& v) { return v == c; });
      return;
    }
    for (auto it = lru_.begin(); it != lru_.end();) {
      if (it->second == c) {
        lru_index_.erase(it->first);
        it = lru_.erase(it);
      } else {
        ++it;
      }
    }
  }

  std::size_t size() const {
    return policy_ == CachePolicy::Arc ? arc_.size() : lru_.size();
  }
  std::size_t capacity() const { return capacity_; }

  std::vector<std::pair<ActorRef, ComponentName>> contents() const {
    if (policy_ == CachePolicy::Arc) return arc_.resident();
    std::vector<std::pair<ActorRef, ComponentName>> out;
    for (const auto& [k, v] : lru_) out.emplace_back(k, v);
    return out;
  }

 private:
  CachePolicy policy_;
  std::size_t capacity_;
  ArcCache<ActorRef, ComponentName> arc_;
  std::list<std::pair<ActorRef, ComponentName>> lru_;
  std::map<ActorRef, std::list<std::pair<ActorRef, ComponentName>>::iterator>
      lru_index_;
};

// Cache-through lookup: hits are served locally, misses read the store and
// populate the cache; unplaced actors are not cached.
inline std::optional<ComponentName> lookup(const ActorRef& actor,
                                           PlacementCache& cache,
                                           PlacementStore& store) {
  if (auto hit = cache.get(actor)) return hit;
  auto owner = store.read(actor);
  if (owner) cache.put(actor, *owner);
  return owner;
}

// Deterministic pseudo-uniform pick among capable live components; seeded so
// runs replay bit-exactly and explorer clones need no shared generator state.
inline std::uint64_t choice_hash(std::uint64_t seed, const std::string& subject,
                                 std::uint64_t nonce) {
  std::uint64_t h = fnv1a64(subject, 0x9e3779b97f4a7c15ull ^ seed);
  h ^= nonce + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdull;
  h ^= h >> 33;
  return h;
}

// Routing for stateless services: some capable live component; the decision
// is never recorded.
inline Result<ComponentName> route_service(const std::string& service,
                                           const Membership& membership,
                                           std::uint64_t seed,
                                           std::uint64_t nonce) {
  std::vector<ComponentName> capable;
  for (const auto& [n, i] : membership.components) {
    if (i.status == CompStatus::Live && i.services.count(service)) {
      capable.push_back(n);
    }
  }
  if (capable.empty()) {
    return Result<ComponentName>::err("no-route",
                                      "no live component offers " + service);
  }
  return Result<ComponentName>::ok(
      capable[choice_hash(seed, "svc:" + service, nonce) % capable.size()]);
}

// Placement candidate for an unplaced actor: deterministic seeded choice
// among capable live components.
inline Result<ComponentName> pick_candidate(const ActorRef& actor,
                                            const Membership& membership,
                                            std::uint64_t seed,
                                            std::uint64_t nonce) {
  std::vector<ComponentName> capable = membership.capable_live(actor.type);
  if (capable.empty()) {
    return Result<ComponentName>::err(
        "no-capable", "no live component hosts type " + actor.type);
  }
  return Result<ComponentName>::ok(
      capable[choice_hash(seed, "act:" + actor.str(), nonce) % capable.size()]);
}

}  // namespace loom
