#pragma once

#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "loom/fabric.hpp"

namespace loom {

// Request matching over a scan: a request is matched iff a response with the
// same id exists, or a later request with the same id exists (a tail-call
// successor or a re-routed copy). Only the latest request under an id is
// forwardable. Control records (rejects) are ignored.
struct MatchResult {
  std::set<std::uint64_t> matched_by_response;
  std::set<std::uint64_t> matched_by_tail;
  std::map<std::uint64_t, Envelope> unmatched;  // latest request per open id
  std::size_t scanned = 0;
};

inline MatchResult match_requests(const std::vector<ScanItem>& scan) {
  MatchResult out;
  out.scanned = scan.size();
  std::map<std::uint64_t, Envelope> latest_request;
  std::map<std::uint64_t, std::size_t> request_count;
  std::set<std::uint64_t> responded;
  for (const ScanItem& item : scan) {
    const Envelope& e = item.env;
    if (e.kind == EnvKind::Request) {
      request_count[e.rid.num]++;
      auto it = latest_request.find(e.rid.num);
      if (it == latest_request.end() || it->second.seq < e.seq) {
        latest_request[e.rid.num] = e;
      }
    } else if (e.kind == EnvKind::Response) {
      responded.insert(e.rid.num);
    }
  }
  for (const auto& [num, env] : latest_request) {
    if (responded.count(num)) {
      out.matched_by_response.insert(num);
      continue;
    }
    if (request_count[num] > 1) out.matched_by_tail.insert(num);
    out.unmatched.emplace(num, env);
  }
  return out;
}

struct ForwardRec {
  std::uint64_t id = 0;
  ActorRef actor;
  ComponentName to;
};

struct ReconciliationReport {
  std::uint64_t round = 0;
  std::uint64_t epoch = 0;
  std::vector<std::uint32_t> dangling;
  std::size_t scanned = 0;
  std::vector<std::pair<std::uint64_t, std::string>> matched;  // id, via
  std::vector<ForwardRec> forwarded;
  std::vector<std::uint64_t> parked;
  std::vector<std::uint32_t> purged;

  bool empty() const { return forwarded.empty() && purged.empty(); }

  std::string to_text() const {
    std::ostringstream o;
    o << "# loom-reconciliation-report v1\n";
    o << "round " << round << "\n";
    o << "epoch " << epoch << "\n";
    for (std::uint32_t d : dangling) o << "dangling " << d << "\n";
    o << "scanned " << scanned << "\n";
    for (const auto& [id, via] : matched) {
      o << "matched " << id << " via " << via << "\n";
    }
    for (const ForwardRec& f : forwarded) {
      o << "forwarded " << f.id << " actor=" << f.actor.str() << " to=" << f.to
        << "\n";
    }
    for (std::uint64_t id : parked) o << "parked " << id << "\n";
    for (std::uint32_t p : purged) o << "purged " << p << "\n";
    return o.str();
  }
};

// Freeze -> scan -> match/forward -> purge -> resume, one sub-phase per
// scheduler move so failures can land in between (the protocol then restarts
// from the scan).
struct Reconciler {
  enum class Phase { Idle, Scan, Purge, Resume };
  Phase phase = Phase::Idle;
  ReconciliationReport report;
  std::uint64_t rounds = 0;
  // Unmatched requests of lost actors that had no capable live host; retried
  // on every membership change until a host appears.
  std::map<std::uint64_t, Envelope> parked_forwards;

  friend bool operator==(const Reconciler&, const Reconciler&) = default;
};

inline bool operator==(const ForwardRec& a, const ForwardRec& b) {
  return a.id == b.id && a.actor == b.actor && a.to == b.to;
}
inline bool operator==(const ReconciliationReport& a,
                       const ReconciliationReport& b) {
  return a.round == b.round && a.epoch == b.epoch && a.dangling == b.dangling &&
         a.scanned == b.scanned && a.matched == b.matched &&
         a.forwarded == b.forwarded && a.parked == b.parked &&
         a.purged == b.purged;
}

}  // namespace loom
