#pragma once

#include <memory>
#include <string>
#include <utility>
#include <variant>

#include "loom/actor.hpp"
#include "loom/value.hpp"

namespace loom {

class Term;

// Copyable box for recursive variant alternatives.
template <typename T>
class Box {
 public:
  Box(T v) : p_(std::make_unique<T>(std::move(v))) {}
  Box(const Box& o) : p_(std::make_unique<T>(*o.p_)) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& o) {
    p_ = std::make_unique<T>(*o.p_);
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;
  const T& operator*() const { return *p_; }
  T& operator*() { return *p_; }
  const T* operator->() const { return p_.get(); }
  T* operator->() { return p_.get(); }

 private:
  std::unique_ptr<T> p_;
};

// a.m(v)
struct Invocation {
  ActorRef actor;
  std::string method;
  Value arg;
  friend bool operator==(const Invocation&, const Invocation&) = default;
};

// v
struct ResultTerm {
  Value value;
  friend bool operator==(const ResultTerm&, const ResultTerm&) = default;
};

// a.s — a point inside a method execution; locals ride along as a value so
// the whole term stays serializable.
struct SeqPoint {
  ActorRef actor;
  std::string seq;
  Value locals = nullptr;
  friend bool operator==(const SeqPoint&, const SeqPoint&) = default;
};

struct SyncNest;   // callee ▷ caller
struct AsyncPar;   // background ≀ foreground

class Term {
 public:
  using Node = std::variant<Invocation, ResultTerm, SeqPoint, Box<SyncNest>,
                            Box<AsyncPar>>;

  Term(Invocation v) : node_(std::move(v)) {}
  Term(ResultTerm v) : node_(std::move(v)) {}
  Term(SeqPoint v) : node_(std::move(v)) {}
  Term(SyncNest v);
  Term(AsyncPar v);

  const Node& node() const { return node_; }

  bool is_invocation() const { return std::holds_alternative<Invocation>(node_); }
  bool is_result() const { return std::holds_alternative<ResultTerm>(node_); }
  bool is_seq() const { return std::holds_alternative<SeqPoint>(node_); }
  bool is_sync_nest() const { return std::holds_alternative<Box<SyncNest>>(node_); }
  bool is_async_par() const { return std::holds_alternative<Box<AsyncPar>>(node_); }

  const Invocation& invocation() const { return std::get<Invocation>(node_); }
  const ResultTerm& result() const { return std::get<ResultTerm>(node_); }
  const SeqPoint& seq() const { return std::get<SeqPoint>(node_); }
  const SyncNest& sync_nest() const;
  const AsyncPar& async_par() const;

  // Injective text form; also the comparison key.
  std::string str() const;

  // Right-nested normal form: async composition is associative (but not
  // commutative), so chains flatten to b1 ≀ (b2 ≀ (... ≀ fg)).
  Term canonical() const;

  friend bool operator==(const Term& a, const Term& b) {
    return a.str() == b.str();
  }
  friend bool operator<(const Term& a, const Term& b) {
    return a.str() < b.str();
  }

 private:
  Node node_;
};

struct SyncNest {
  Term callee;
  Term caller;
};

struct AsyncPar {
  Term background;
  Term foreground;
};

inline Term::Term(SyncNest v) : node_(Box<SyncNest>(std::move(v))) {}
inline Term::Term(AsyncPar v) : node_(Box<AsyncPar>(std::move(v))) {}
inline const SyncNest& Term::sync_nest() const {
  return *std::get<Box<SyncNest>>(node_);
}
inline const AsyncPar& Term::async_par() const {
  return *std::get<Box<AsyncPar>>(node_);
}

inline std::string Term::str() const {
  struct V {
    std::string operator()(const Invocation& i) const {
      return i.actor.str() + "." + i.method + "(" + value_dump(i.arg) + ")";
    }
    std::string operator()(const ResultTerm& r) const {
      return "val " + value_dump(r.value);
    }
    std::string operator()(const SeqPoint& s) const {
      std::string out = s.actor.str() + "." + s.seq;
      if (!s.locals.is_null()) out += "{" + value_dump(s.locals) + "}";
      return out;
    }
    std::string operator()(const Box<SyncNest>& n) const {
      return "[" + n->callee.str() + " |> " + n->caller.str() + "]";
    }
    std::string operator()(const Box<AsyncPar>& n) const {
      return "[" + n->background.str() + " /~ " + n->foreground.str() + "]";
    }
  };
  return std::visit(V{}, node_);
}

inline Term Term::canonical() const {
  struct V {
    Term operator()(const Invocation& i) const { return Term(i); }
    Term operator()(const ResultTerm& r) const { return Term(r); }
    Term operator()(const SeqPoint& s) const { return Term(s); }
    Term operator()(const Box<SyncNest>& n) const {
      return Term(SyncNest{n->callee.canonical(), n->caller.canonical()});
    }
    Term operator()(const Box<AsyncPar>& n) const {
      Term bg = n->background.canonical();
      Term fg = n->foreground.canonical();
      if (bg.is_async_par()) {
        // (x ≀ y) ≀ fg  ->  x ≀ (y ≀ fg)
        const AsyncPar& inner = bg.async_par();
        return Term(AsyncPar{inner.background,
                             Term(AsyncPar{inner.foreground, fg}).canonical()});
      }
      return Term(AsyncPar{bg, fg});
    }
  };
  return std::visit(V{}, node_);
}

}  // namespace loom
