#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "loom/program.hpp"

namespace loom {

enum class ReqMode { Sync, Async };

inline const char* req_mode_name(ReqMode m) {
  return m == ReqMode::Sync ? "sync" : "async";
}

struct CallerRef {
  ActorRef actor;        // the calling actor
  std::uint64_t parent;  // its own request id
  friend bool operator==(const CallerRef&, const CallerRef&) = default;
};

// Request id. Sync requests carry a back-reference to their caller so
// validity is computable locally; tests assert this agrees with the
// quantified definition over the bag.
struct RequestId {
  std::uint64_t num = 0;
  ReqMode mode = ReqMode::Async;
  std::optional<CallerRef> caller;

  bool sync() const { return mode == ReqMode::Sync; }
  friend bool operator==(const RequestId&, const RequestId&) = default;

  std::string str() const {
    std::string s = std::to_string(num) + (sync() ? "+" : "-");
    if (caller) s += "<" + caller->actor.str() + ":" + std::to_string(caller->parent);
    return s;
  }
};

struct RequestMsg {
  ActorRef actor;
  std::string method;
  Value arg;
  friend bool operator==(const RequestMsg&, const RequestMsg&) = default;

  Invocation invocation() const { return Invocation{actor, method, arg}; }
};

// Either a pending method invocation or its response value.
struct Message {
  bool is_response = false;
  RequestMsg request;  // valid when !is_response
  Value response;      // valid when is_response

  static Message make_request(RequestMsg r) {
    return Message{false, std::move(r), nullptr};
  }
  static Message make_response(Value v) {
    return Message{true, RequestMsg{}, std::move(v)};
  }
  friend bool operator==(const Message&, const Message&) = default;

  std::string str() const {
    if (is_response) return "resp " + value_dump(response);
    return "req " + Term(request.invocation()).str();
  }
};

struct FlowEntry {
  RequestId id;
  Message msg;
  friend bool operator==(const FlowEntry&, const FlowEntry&) = default;
};

// The durable map from request ids to pending requests or their responses.
struct Flow {
  std::map<std::uint64_t, FlowEntry> entries;

  bool contains(std::uint64_t num) const { return entries.count(num) > 0; }
  const FlowEntry* find(std::uint64_t num) const {
    auto it = entries.find(num);
    return it == entries.end() ? nullptr : &it->second;
  }
  friend bool operator==(const Flow&, const Flow&) = default;
};

// A running sequence, or a sequence suspended on a synchronous request.
struct Process {
  std::optional<std::uint64_t> guard;  // waiting-on request id (sync)
  SeqPoint seq;

  bool running() const { return !guard.has_value(); }
  friend bool operator==(const Process&, const Process&) = default;
};

struct BagEntry {
  RequestId id;
  Process proc;
  friend bool operator==(const BagEntry&, const BagEntry&) = default;
};

// Executing invocation processes; at most one per actor by construction.
struct Bag {
  std::map<ActorRef, BagEntry> entries;

  bool busy(const ActorRef& a) const { return entries.count(a) > 0; }
  const BagEntry* find(const ActorRef& a) const {
    auto it = entries.find(a);
    return it == entries.end() ? nullptr : &it->second;
  }
  friend bool operator==(const Bag&, const Bag&) = default;
};

// Durable per-actor state. Absent key and present-with-null are distinct.
struct PersistentState {
  std::map<ActorRef, Value> entries;

  std::optional<Value> get(const ActorRef& a) const {
    auto it = entries.find(a);
    if (it == entries.end()) return std::nullopt;
    return it->second;
  }
  friend bool operator==(const PersistentState&, const PersistentState&) = default;
};

struct RuntimeState {
  Flow flow;
  Bag bag;
  PersistentState state;
  std::uint64_t next_num = 1;  // fresh-id counter, scoped to the run

  friend bool operator==(const RuntimeState&, const RuntimeState&) = default;
};

inline std::string runtime_state_dump(const RuntimeState& s) {
  std::ostringstream out;
  out << "flow{";
  bool first = true;
  for (const auto& [num, e] : s.flow.entries) {
    if (!first) out << ", ";
    first = false;
    out << e.id.str() << " -> " << e.msg.str();
  }
  out << "} bag{";
  first = true;
  for (const auto& [a, e] : s.bag.entries) {
    if (!first) out << ", ";
    first = false;
    out << a.str() << " =" << e.id.num << "= ";
    if (e.proc.guard) out << *e.proc.guard << "+ |> ";
    out << Term(e.proc.seq).str();
  }
  out << "} state{";
  first = true;
  for (const auto& [a, v] : s.state.entries) {
    if (!first) out << ", ";
    first = false;
    out << a.str() << " -> " << value_dump(v);
  }
  out << "} next=" << s.next_num;
  return out.str();
}

inline std::uint64_t state_hash(const RuntimeState& s) {
  return fnv1a64(runtime_state_dump(s));
}

}  // namespace loom
