#pragma once
// Foundations: exact arithmetic aliases, the library-wide error type, and
// finite binary strings with the canonical (length, lex) order.

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>

namespace qstree {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

inline std::string to_string(const BigInt& v) { return v.str(); }

enum class Err {
  not_large,
  too_small,
  min_too_small,
  density_too_low,
  selection_failed,
  not_superset,
  bad_map,
  not_stack,
  not_quasistrong,
  wrong_count,
  wrong_alpha,
  no_pair,
  bad_density,
  stage_failure,
  bad_input,
  partial_coloring,
  exhausted,
  malformed_certificate,
  internal,
};

inline const char* err_name(Err e) {
  switch (e) {
    case Err::not_large: return "not_large";
    case Err::too_small: return "too_small";
    case Err::min_too_small: return "min_too_small";
    case Err::density_too_low: return "density_too_low";
    case Err::selection_failed: return "selection_failed";
    case Err::not_superset: return "not_superset";
    case Err::bad_map: return "bad_map";
    case Err::not_stack: return "not_stack";
    case Err::not_quasistrong: return "not_quasistrong";
    case Err::wrong_count: return "wrong_count";
    case Err::wrong_alpha: return "wrong_alpha";
    case Err::no_pair: return "no_pair";
    case Err::bad_density: return "bad_density";
    case Err::stage_failure: return "stage_failure";
    case Err::bad_input: return "bad_input";
    case Err::partial_coloring: return "partial_coloring";
    case Err::exhausted: return "exhausted";
    case Err::malformed_certificate: return "malformed_certificate";
    case Err::internal: return "internal";
  }
  return "unknown";
}

// Single exception type; `detail` carries exact quantities as decimal strings
// (or exact symbolic expressions like "2^(2^95*97)" when a value is too big
// to materialize).
class Error : public std::runtime_error {
 public:
  Error(Err code, std::string message, std::map<std::string, std::string> detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  Err code() const { return code_; }
  const std::map<std::string, std::string>& detail() const { return detail_; }

 private:
  Err code_;
  std::map<std::string, std::string> detail_;
};

[[noreturn]] inline void fail(Err code, std::string message,
                              std::map<std::string, std::string> detail = {}) {
  throw Error(code, std::move(message), std::move(detail));
}

inline void expect(bool cond, Err code, const std::string& message,
                   std::map<std::string, std::string> detail = {}) {
  if (!cond) fail(code, message, std::move(detail));
}

// Internal soundness checks: failures indicate a library bug, not bad input.
inline void ensure(bool cond, const std::string& what) {
  if (!cond) fail(Err::internal, "internal invariant violated: " + what);
}

// A finite binary string.  Canonical order everywhere: shorter first, then lex.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::string bits) : s_(std::move(bits)) {
    for (char c : s_)
      expect(c == '0' || c == '1', Err::bad_input,
             "bit string must consist of '0'/'1' characters: \"" + s_ + "\"");
  }

  static BitString unchecked(std::string bits) {
    BitString b;
    b.s_ = std::move(bits);
    return b;
  }

  const std::string& str() const { return s_; }
  std::size_t size() const { return s_.size(); }
  bool empty() const { return s_.empty(); }
  char operator[](std::size_t i) const { return s_[i]; }

  BitString prefix(std::size_t n) const { return unchecked(s_.substr(0, n)); }

  // this extends (or equals) p
  bool has_prefix(const BitString& p) const {
    return p.s_.size() <= s_.size() && s_.compare(0, p.s_.size(), p.s_) == 0;
  }

  bool compatible(const BitString& o) const {
    return has_prefix(o) || o.has_prefix(*this);
  }

  BitString append(const std::string& suffix) const { return BitString(s_ + suffix); }

  std::strong_ordering operator<=>(const BitString& o) const {
    if (s_.size() != o.s_.size()) return s_.size() <=> o.s_.size();
    return s_.compare(o.s_) <=> 0;
  }
  bool operator==(const BitString& o) const { return s_ == o.s_; }

 private:
  std::string s_;
};

// Binary encoding of `rank` as a string of length `width`, most significant
// bit first.  Requires rank < 2^width.
inline BitString encode_rank(std::uint64_t rank, std::size_t width) {
  ensure(width >= 64 || rank < (std::uint64_t{1} << width), "encode_rank overflow");
  std::string s(width, '0');
  for (std::size_t i = 0; i < width && rank; ++i) {
    if (rank & 1) s[width - 1 - i] = '1';
    rank >>= 1;
  }
  return BitString::unchecked(std::move(s));
}

}  // namespace qstree
