#pragma once

#include <cstddef>
#include <list>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "loom/common.hpp"

namespace loom {

// Adaptive replacement cache, the classic ARC(c) scheme: two resident lists
// (T1 recency, T2 frequency) plus two ghost lists (B1, B2) that steer the
// adaptation target p. Resident size never exceeds the capacity; ghosts hold
// keys only.
template <typename K, typename V>
class ArcCache {
 public:
  explicit ArcCache(std::size_t capacity) : c_(capacity ? capacity : 1) {}

  // The key index stores list iterators, so copies rebuild it.
  ArcCache(const ArcCache& o)
      : c_(o.c_), p_(o.p_), t1_(o.t1_), t2_(o.t2_), b1_(o.b1_), b2_(o.b2_) {
    reindex();
  }
  ArcCache& operator=(const ArcCache& o) {
    if (this != &o) {
      c_ = o.c_;
      p_ = o.p_;
      t1_ = o.t1_;
      t2_ = o.t2_;
      b1_ = o.b1_;
      b2_ = o.b2_;
      reindex();
    }
    return *this;
  }
  ArcCache(ArcCache&&) noexcept = default;
  ArcCache& operator=(ArcCache&&) noexcept = default;

  std::size_t capacity() const { return c_; }
  std::size_t size() const { return t1_.size() + t2_.size(); }
  std::size_t ghost_size() const { return b1_.size() + b2_.size(); }
  std::size_t target() const { return p_; }

  std::optional<V> get(const K& key) {
    auto it = where_.find(key);
    if (it == where_.end()) return std::nullopt;
    Slot& slot = it->second;
    if (slot.list == List::T1) {
      V v = std::move(slot.it->value);
      t1_.erase(slot.it);
      t2_.push_front(Entry{key, std::move(v)});
      slot = Slot{List::T2, t2_.begin()};
      return t2_.front().value;
    }
    if (slot.list == List::T2) {
      t2_.splice(t2_.begin(), t2_, slot.it);
      slot.it = t2_.begin();
      return slot.it->value;
    }
    return std::nullopt;  // ghost: key remembered, value long gone
  }

  bool contains_ghost(const K& key) const {
    auto it = where_.find(key);
    return it != where_.end() &&
           (it->second.list == List::B1 || it->second.list == List::B2);
  }

  void put(const K& key, const V& value) {
    auto it = where_.find(key);
    if (it != where_.end() &&
        (it->second.list == List::T1 || it->second.list == List::T2)) {
      // Resident refresh counts as a hit.
      it->second.it->value = value;
      get(key);
      return;
    }
    if (it != where_.end() && it->second.list == List::B1) {
      std::size_t d1 = std::max<std::size_t>(b2_.size() / b1_.size(), 1);
      p_ = std::min(c_, p_ + d1);
      replace(false);
      b1_.erase(it->second.it);
      t2_.push_front(Entry{key, value});
      it->second = Slot{List::T2, t2_.begin()};
      return;
    }
    if (it != where_.end() && it->second.list == List::B2) {
      std::size_t d2 = std::max<std::size_t>(b1_.size() / b2_.size(), 1);
      p_ = p_ > d2 ? p_ - d2 : 0;
      replace(true);
      b2_.erase(it->second.it);
      t2_.push_front(Entry{key, value});
      it->second = Slot{List::T2, t2_.begin()};
      return;
    }
    // Plain miss.
    if (t1_.size() + b1_.size() == c_) {
      if (t1_.size() < c_) {
        drop_lru(b1_, List::B1);
        replace(false);
      } else {
        drop_lru(t1_, List::T1);  // B1 empty: evict outright, no ghost
      }
    } else if (t1_.size() + b1_.size() < c_ &&
               t1_.size() + t2_.size() + b1_.size() + b2_.size() >= c_) {
      if (t1_.size() + t2_.size() + b1_.size() + b2_.size() >= 2 * c_) {
        drop_lru(b2_, List::B2);
      }
      replace(false);
    }
    t1_.push_front(Entry{key, value});
    where_[key] = Slot{List::T1, t1_.begin()};
  }

  void erase(const K& key) {
    auto it = where_.find(key);
    if (it == where_.end()) return;
    switch (it->second.list) {
      case List::T1: t1_.erase(it->second.it); break;
      case List::T2: t2_.erase(it->second.it); break;
      case List::B1: b1_.erase(it->second.it); break;
      case List::B2: b2_.erase(it->second.it); break;
    }
    where_.erase(it);
  }

  template <typename Pred>
  void erase_if(Pred pred) {
    std::vector<K> doomed;
    for (const Entry& e : t1_) {
      if (pred(e.key, e.value)) doomed.push_back(e.key);
    }
    for (const Entry& e : t2_) {
      if (pred(e.key, e.value)) doomed.push_back(e.key);
    }
    for (const K& k : doomed) erase(k);
  }

  // Deterministic content listing, MRU first, T1 then T2 (hashing/dumps).
  std::vector<std::pair<K, V>> resident() const {
    std::vector<std::pair<K, V>> out;
    for (const Entry& e : t1_) out.emplace_back(e.key, e.value);
    for (const Entry& e : t2_) out.emplace_back(e.key, e.value);
    return out;
  }

 private:
  struct Entry {
    K key;
    V value;  // ghosts keep a default value
  };
  using ListT = std::list<Entry>;
  enum class List { T1, T2, B1, B2 };
  struct Slot {
    List list;
    typename ListT::iterator it;
  };

  // Demote one resident entry to the appropriate ghost list: from T1 when
  // |T1| > p (or |T1| == p on a B2 ghost hit), otherwise from T2.
  void replace(bool b2_ghost_hit) {
    bool from_t1 =
        !t1_.empty() &&
        (t1_.size() > p_ || (b2_ghost_hit && t1_.size() == p_));
    if (t2_.empty()) from_t1 = !t1_.empty();
    if (from_t1) {
      Entry victim = std::move(t1_.back());
      t1_.pop_back();
      b1_.push_front(Entry{victim.key, V{}});
      where_[victim.key] = Slot{List::B1, b1_.begin()};
    } else {
      Entry victim = std::move(t2_.back());
      t2_.pop_back();
      b2_.push_front(Entry{victim.key, V{}});
      where_[victim.key] = Slot{List::B2, b2_.begin()};
    }
  }

  void drop_lru(ListT& list, List which) {
    (void)which;
    if (list.empty()) return;
    where_.erase(list.back().key);
    list.pop_back();
  }

  void reindex() {
    where_.clear();
    auto index = [this](ListT& list, List which) {
      for (auto it = list.begin(); it != list.end(); ++it) {
        where_[it->key] = Slot{which, it};
      }
    };
    index(t1_, List::T1);
    index(t2_, List::T2);
    index(b1_, List::B1);
    index(b2_, List::B2);
  }

  std::size_t c_;
  std::size_t p_ = 0;
  ListT t1_, t2_, b1_, b2_;
  std::map<K, Slot> where_;
};

}  // namespace loom
