#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace loom {

// Thrown on structurally malformed inputs (bad fragments, bad files).
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Internal invariant violations ("impossible" states). LOOM_CHECK throws this
// so tests can observe asserted preconditions firing.
class InvariantError : public std::logic_error {
 public:
  explicit InvariantError(const std::string& what) : std::logic_error(what) {}
};

#define LOOM_CHECK(cond, msg)                                 \
  do {                                                        \
    if (!(cond)) {                                            \
      throw ::loom::InvariantError(std::string("invariant: ") + (msg)); \
    }                                                         \
  } while (0)

// Expected protocol outcomes (actor busy, CAS lost, partition frozen, ...)
// are values, not exceptions.
struct Error {
  std::string code;
  std::string detail;
};

template <typename T>
class Result {
 public:
  static Result ok(T value) { return Result(std::move(value)); }
  static Result err(std::string code, std::string detail = "") {
    return Result(Error{std::move(code), std::move(detail)});
  }

  bool has_value() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return has_value(); }

  const T& value() const {
    if (!has_value()) {
      throw InvariantError("Result::value on error: " + error().code);
    }
    return std::get<T>(v_);
  }
  T& value() {
    if (!has_value()) {
      throw InvariantError("Result::value on error: " + error().code);
    }
    return std::get<T>(v_);
  }
  const Error& error() const { return std::get<Error>(v_); }

 private:
  explicit Result(T v) : v_(std::move(v)) {}
  explicit Result(Error e) : v_(std::move(e)) {}
  std::variant<T, Error> v_;
};

struct Unit {};
using Status = Result<Unit>;
inline Status status_ok() { return Status::ok(Unit{}); }

// FNV-1a 64-bit. Used for canonical structural hashes in traces and for
// explorer dedup (always re-confirmed by full structural compare).
inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t seed = 0xcbf29ce484222325ull) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

inline bool valid_identifier(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) {
      return false;
    }
  }
  return true;
}

}  // namespace loom
