#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "loom/program.hpp"

namespace loom {

// Declarative transition tables: structured text, one record per transition
// with kind, lhs pattern, rhs template, and (for steps) a state guard and
// update. Tables compile to the same Program interface as code-backed
// programs. Full grammar in docs/FORMATS.md.

struct TableGuard {
  enum class Kind { Any, Eq, Ne, In, NotIn };
  Kind kind = Kind::Any;
  std::vector<Value> values;

  bool matches(const Value& v) const {
    switch (kind) {
      case Kind::Any: return true;
      case Kind::Eq: return v == values.at(0);
      case Kind::Ne: return v != values.at(0);
      case Kind::In:
        return std::find(values.begin(), values.end(), v) != values.end();
      case Kind::NotIn:
        return std::find(values.begin(), values.end(), v) == values.end();
    }
    return false;
  }

  std::string str() const {
    auto join = [this] {
      std::string out;
      for (size_t i = 0; i < values.size(); ++i) {
        if (i) out += ",";
        out += value_dump(values[i]);
      }
      return out;
    };
    switch (kind) {
      case Kind::Any: return "any";
      case Kind::Eq: return "== " + value_dump(values.at(0));
      case Kind::Ne: return "!= " + value_dump(values.at(0));
      case Kind::In: return "in {" + join() + "}";
      case Kind::NotIn: return "not-in {" + join() + "}";
    }
    return "any";
  }
};

struct TableUpdate {
  bool keep = true;
  Value value;
  std::string str() const { return keep ? "keep" : value_dump(value); }
};

struct TableRecord {
  TrKind kind = TrKind::Begin;
  std::string inst;  // subject instance
  // begin lhs / call rhs pieces
  std::string method;
  Value arg;
  std::string lhs_seq;
  Value ret;         // return lhs value; end rhs value
  TableGuard guard;  // step
  std::string rhs_seq;
  std::string callee_inst, callee_method;
  Value callee_arg;
  TableUpdate update;  // step

  std::string str() const {
    std::ostringstream o;
    switch (kind) {
      case TrKind::Begin:
        o << "begin " << inst << "." << method << "(" << value_dump(arg)
          << ") -> " << inst << "." << rhs_seq;
        break;
      case TrKind::Step:
        o << "step " << inst << "." << lhs_seq << " / " << guard.str() << " -> "
          << inst << "." << rhs_seq << " / " << update.str();
        break;
      case TrKind::End:
        o << "end " << inst << "." << lhs_seq << " -> " << value_dump(ret);
        break;
      case TrKind::SyncCall:
        o << "sync-call " << inst << "." << lhs_seq << " -> " << callee_inst
          << "." << callee_method << "(" << value_dump(callee_arg) << ") > "
          << inst << "." << rhs_seq;
        break;
      case TrKind::TailCall:
        o << "tail-call " << inst << "." << lhs_seq << " -> " << callee_inst
          << "." << callee_method << "(" << value_dump(callee_arg) << ")";
        break;
      case TrKind::AsyncCall:
        o << "async-call " << inst << "." << lhs_seq << " -> " << callee_inst
          << "." << callee_method << "(" << value_dump(callee_arg) << ") ~ "
          << inst << "." << rhs_seq;
        break;
      case TrKind::Return:
        o << "return " << value_dump(ret) << " > " << inst << "." << lhs_seq
          << " -> " << inst << "." << rhs_seq;
        break;
    }
    return o.str();
  }
};

namespace table_detail {

class Cursor {
 public:
  Cursor(const std::string& line, int lineno) : s_(line), lineno_(lineno) {}

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }
  bool eol() {
    skip_ws();
    return pos_ >= s_.size();
  }
  [[noreturn]] void fail(const std::string& why) const {
    throw ParseError("line " + std::to_string(lineno_) + ": " + why + " in '" +
                     s_ + "'");
  }
  std::string ident() {
    skip_ws();
    size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
            s_[pos_] == '_' || s_[pos_] == '-')) {
      ++pos_;
    }
    if (pos_ == start) fail("expected identifier");
    return s_.substr(start, pos_ - start);
  }
  void expect(const std::string& tok) {
    skip_ws();
    if (s_.compare(pos_, tok.size(), tok) != 0) fail("expected '" + tok + "'");
    pos_ += tok.size();
  }
  bool peek(const std::string& tok) {
    skip_ws();
    return s_.compare(pos_, tok.size(), tok) == 0;
  }
  bool consume(const std::string& tok) {
    if (!peek(tok)) return false;
    pos_ += tok.size();
    return true;
  }
  // Scans one JSON value: balanced braces/brackets, quote-aware; stops at
  // top-level delimiters.
  Value json(const std::string& stoppers = "") {
    skip_ws();
    size_t start = pos_;
    int depth = 0;
    bool in_str = false, esc = false;
    while (pos_ < s_.size()) {
      char c = s_[pos_];
      if (in_str) {
        if (esc) esc = false;
        else if (c == '\\') esc = true;
        else if (c == '"') in_str = false;
      } else if (c == '"') {
        in_str = true;
      } else if (c == '{' || c == '[') {
        ++depth;
      } else if (c == '}' || c == ']') {
        if (depth == 0) break;
        --depth;
      } else if (depth == 0 &&
                 (c == ')' || c == ' ' || c == '\t' ||
                  stoppers.find(c) != std::string::npos)) {
        break;
      }
      ++pos_;
    }
    std::string text = s_.substr(start, pos_ - start);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) {
      text.pop_back();
    }
    if (text.empty()) fail("expected a value literal");
    try {
      return value_parse(text);
    } catch (const ParseError& e) {
      fail(e.what());
    }
  }

 private:
  const std::string& s_;
  size_t pos_ = 0;
  int lineno_;
};

}  // namespace table_detail

class TransitionTable {
 public:
  std::string name = "table";
  bool deterministic = false;
  std::vector<ActorTypeInfo> types;                          // declaration order
  std::vector<std::pair<std::string, std::string>> instances;  // name -> type
  std::string main_inst, main_method;
  Value main_arg;
  std::vector<TableRecord> records;

  ActorRef resolve(const std::string& inst) const {
    for (const auto& [n, t] : instances) {
      if (n == inst) return ActorRef{t, n};
    }
    throw ParseError("undeclared instance '" + inst + "'");
  }

  std::string serialize() const {
    std::ostringstream o;
    o << "# loom-table v1\n";
    o << "table " << name << "\n";
    if (deterministic) o << "deterministic\n";
    for (const auto& t : types) {
      o << "actor " << t.type;
      if (t.initial) o << " default " << value_dump(*t.initial);
      o << "\n";
    }
    for (const auto& [n, t] : instances) o << "instance " << n << " " << t << "\n";
    o << "main " << main_inst << "." << main_method << "("
      << value_dump(main_arg) << ")\n";
    for (const auto& r : records) o << r.str() << "\n";
    return o.str();
  }

  static TransitionTable parse(const std::string& text) {
    using table_detail::Cursor;
    TransitionTable t;
    bool saw_main = false;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::string stripped = line;
      size_t ns = stripped.find_first_not_of(" \t");
      if (ns == std::string::npos || stripped[ns] == '#') continue;
      Cursor c(line, lineno);
      std::string head = c.ident();
      if (head == "table") {
        t.name = c.ident();
      } else if (head == "deterministic") {
        t.deterministic = true;
      } else if (head == "actor") {
        ActorTypeInfo info;
        info.type = c.ident();
        if (c.consume("default")) info.initial = c.json();
        t.types.push_back(std::move(info));
      } else if (head == "instance") {
        std::string n = c.ident();
        std::string ty = c.ident();
        bool known = false;
        for (const auto& d : t.types) known = known || d.type == ty;
        if (!known) c.fail("instance of undeclared actor type '" + ty + "'");
        t.instances.emplace_back(std::move(n), std::move(ty));
      } else if (head == "main") {
        t.main_inst = c.ident();
        c.expect(".");
        t.main_method = c.ident();
        c.expect("(");
        t.main_arg = c.json();
        c.expect(")");
        saw_main = true;
      } else if (auto kind = tr_kind_from_name(head)) {
        t.records.push_back(parse_record(*kind, c));
      } else {
        c.fail("unknown directive '" + head + "'");
      }
    }
    if (!saw_main) throw ParseError("table is missing a main invocation");
    for (const auto& r : t.records) t.validate_record(r);
    t.resolve(t.main_inst);
    return t;
  }

  Invocation main() const {
    return Invocation{resolve(main_inst), main_method, main_arg};
  }

  ProgramRef compile() const;

 private:
  void validate_record(const TableRecord& r) const {
    resolve(r.inst);
    if (r.kind == TrKind::SyncCall || r.kind == TrKind::TailCall ||
        r.kind == TrKind::AsyncCall) {
      resolve(r.callee_inst);
    }
  }

  static TableRecord parse_record(TrKind kind, table_detail::Cursor& c) {
    TableRecord r;
    r.kind = kind;
    auto parse_call = [&](std::string& inst, std::string& method, Value& arg) {
      inst = c.ident();
      c.expect(".");
      method = c.ident();
      c.expect("(");
      arg = c.json();
      c.expect(")");
    };
    auto parse_seq_of = [&](const std::string& inst) {
      std::string i = c.ident();
      if (i != inst) c.fail("continuation must stay on instance '" + inst + "'");
      c.expect(".");
      return c.ident();
    };
    switch (kind) {
      case TrKind::Begin: {
        parse_call(r.inst, r.method, r.arg);
        c.expect("->");
        r.rhs_seq = parse_seq_of(r.inst);
        break;
      }
      case TrKind::Step: {
        r.inst = c.ident();
        c.expect(".");
        r.lhs_seq = c.ident();
        c.expect("/");
        r.guard = parse_guard(c);
        c.expect("->");
        r.rhs_seq = parse_seq_of(r.inst);
        c.expect("/");
        if (c.consume("keep")) {
          r.update.keep = true;
        } else {
          r.update.keep = false;
          r.update.value = c.json();
        }
        break;
      }
      case TrKind::End: {
        r.inst = c.ident();
        c.expect(".");
        r.lhs_seq = c.ident();
        c.expect("->");
        r.ret = c.json();
        break;
      }
      case TrKind::SyncCall:
      case TrKind::AsyncCall: {
        r.inst = c.ident();
        c.expect(".");
        r.lhs_seq = c.ident();
        c.expect("->");
        parse_call(r.callee_inst, r.callee_method, r.callee_arg);
        c.expect(kind == TrKind::SyncCall ? ">" : "~");
        r.rhs_seq = parse_seq_of(r.inst);
        break;
      }
      case TrKind::TailCall: {
        r.inst = c.ident();
        c.expect(".");
        r.lhs_seq = c.ident();
        c.expect("->");
        parse_call(r.callee_inst, r.callee_method, r.callee_arg);
        break;
      }
      case TrKind::Return: {
        r.ret = c.json(">");
        c.expect(">");
        r.inst = c.ident();
        c.expect(".");
        r.lhs_seq = c.ident();
        c.expect("->");
        r.rhs_seq = parse_seq_of(r.inst);
        break;
      }
    }
    if (!c.eol()) c.fail("trailing input");
    return r;
  }

  static TableGuard parse_guard(table_detail::Cursor& c) {
    TableGuard g;
    if (c.consume("any")) {
      g.kind = TableGuard::Kind::Any;
    } else if (c.consume("==")) {
      g.kind = TableGuard::Kind::Eq;
      g.values.push_back(c.json());
    } else if (c.consume("!=")) {
      g.kind = TableGuard::Kind::Ne;
      g.values.push_back(c.json());
    } else if (c.consume("not-in")) {
      g.kind = TableGuard::Kind::NotIn;
      c.expect("{");
      g.values = parse_set(c);
    } else if (c.consume("in")) {
      g.kind = TableGuard::Kind::In;
      c.expect("{");
      g.values = parse_set(c);
    } else {
      c.fail("expected a guard (any, ==, !=, in, not-in)");
    }
    return g;
  }

  static std::vector<Value> parse_set(table_detail::Cursor& c) {
    std::vector<Value> vs;
    while (true) {
      vs.push_back(c.json(",}"));
      if (c.consume(",")) continue;
      c.expect("}");
      break;
    }
    return vs;
  }
};

inline ProgramRef TransitionTable::compile() const {
  // Capture by value; the resulting Program is a pure function of the table.
  TransitionTable t = *this;
  auto raw = [t](const Term& fragment,
                 const StateView& view) -> std::vector<BaseTransition> {
    std::vector<BaseTransition> out;
    auto emit = [&](size_t idx, BaseTransition tr) {
      tr.decl_index = static_cast<int>(idx);
      out.push_back(std::move(tr));
    };
    if (fragment.is_invocation()) {
      const Invocation& inv = fragment.invocation();
      for (size_t i = 0; i < t.records.size(); ++i) {
        const TableRecord& r = t.records[i];
        if (r.kind != TrKind::Begin) continue;
        if (t.resolve(r.inst) != inv.actor || r.method != inv.method ||
            r.arg != inv.arg) {
          continue;
        }
        emit(i, BaseTransition{TrKind::Begin, fragment, std::nullopt,
                               Term(SeqPoint{inv.actor, r.rhs_seq}), std::nullopt});
      }
      return out;
    }
    if (fragment.is_seq()) {
      const SeqPoint& sp = fragment.seq();
      if (!sp.locals.is_null()) return out;  // table sequences carry no locals
      auto entry_it = view.find(sp.actor);
      for (size_t i = 0; i < t.records.size(); ++i) {
        const TableRecord& r = t.records[i];
        if (r.kind == TrKind::Begin || r.kind == TrKind::Return) continue;
        if (t.resolve(r.inst) != sp.actor || r.lhs_seq != sp.seq) continue;
        switch (r.kind) {
          case TrKind::Step: {
            if (entry_it == view.end()) break;  // no entry, no step
            const Value& e = entry_it->second;
            if (!r.guard.matches(e)) break;
            emit(i, BaseTransition{TrKind::Step, fragment, e,
                                   Term(SeqPoint{sp.actor, r.rhs_seq}),
                                   r.update.keep ? e : r.update.value});
            break;
          }
          case TrKind::End:
            emit(i, BaseTransition{TrKind::End, fragment, std::nullopt,
                                   Term(ResultTerm{r.ret}), std::nullopt});
            break;
          case TrKind::SyncCall:
            emit(i, BaseTransition{
                        TrKind::SyncCall, fragment, std::nullopt,
                        Term(SyncNest{Term(Invocation{t.resolve(r.callee_inst),
                                                      r.callee_method,
                                                      r.callee_arg}),
                                      Term(SeqPoint{sp.actor, r.rhs_seq})}),
                        std::nullopt});
            break;
          case TrKind::TailCall:
            emit(i, BaseTransition{TrKind::TailCall, fragment, std::nullopt,
                                   Term(Invocation{t.resolve(r.callee_inst),
                                                   r.callee_method,
                                                   r.callee_arg}),
                                   std::nullopt});
            break;
          case TrKind::AsyncCall:
            emit(i, BaseTransition{
                        TrKind::AsyncCall, fragment, std::nullopt,
                        Term(AsyncPar{Term(Invocation{t.resolve(r.callee_inst),
                                                      r.callee_method,
                                                      r.callee_arg}),
                                      Term(SeqPoint{sp.actor, r.rhs_seq})}),
                        std::nullopt});
            break;
          default:
            break;
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
      for (size_t i = 0; i < t.records.size(); ++i) {
        const TableRecord& r = t.records[i];
        if (r.kind != TrKind::Return) continue;
        if (t.resolve(r.inst) != sp.actor || r.lhs_seq != sp.seq || r.ret != v) {
          continue;
        }
        emit(i, BaseTransition{TrKind::Return, fragment, std::nullopt,
                               Term(SeqPoint{sp.actor, r.rhs_seq}), std::nullopt});
      }
      return out;
    }
    throw ShapeError("fragment has no transition form: " + fragment.str());
  };

  std::map<std::string, ActorTypeInfo> type_map;
  for (const auto& ti : types) type_map[ti.type] = ti;
  return std::make_shared<Program>(name, std::move(type_map), main(),
                                   std::move(raw), deterministic);
}

}  // namespace loom
