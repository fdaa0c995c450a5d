#pragma once
// Largeness arithmetic on finite sets of naturals.
//
//   - X is w-large        iff X is nonempty and |X| > min X.
//   - X is w^d.n-large    iff X is the union of a stack of n w^d-large sets.
//   - X is w^(d+1)-large  iff X = {min X} ∪ X' with min X' > min X and X'
//                         w^d.(min X)-large.  (min X = 0 never qualifies.)
//
// The decision procedure is greedy: the shortest w^d-large prefix of X is a
// valid first stack member whenever any split works (any valid first member
// contains the greedy prefix elementwise, so the greedy remainder is a
// superset of the true remainder, and largeness is superset-monotone).

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "basics.hpp"
#include "levels.hpp"

namespace qstree {

namespace detail {

using Span = std::span<const std::uint64_t>;

std::optional<std::size_t> shortest_power_prefix(Span x, std::uint32_t d);

// Length of the shortest w^d.n-large prefix of X, or nullopt.
// Stack depth is O(d); the multiplier is peeled iteratively.
inline std::optional<std::size_t> shortest_prefix_len(Span x, Alpha a) {
  std::size_t total = 0;
  for (std::uint64_t j = 0; j < a.n; ++j) {
    auto t = shortest_power_prefix(x.subspan(total), a.d);
    if (!t) return std::nullopt;
    total += *t;
  }
  return total;
}

// Shortest w^d-large prefix.
inline std::optional<std::size_t> shortest_power_prefix(Span x, std::uint32_t d) {
  if (x.empty()) return std::nullopt;
  if (d == 1) {
    std::uint64_t need = x[0] + 1;  // |prefix| > min, and min = x[0]
    if (x.size() < need) return std::nullopt;
    return static_cast<std::size_t>(need);
  }
  if (x[0] == 0) return std::nullopt;
  auto t = shortest_prefix_len(x.subspan(1), Alpha(d - 1, x[0]));
  if (!t) return std::nullopt;
  return 1 + *t;
}

inline bool is_large_span(Span x, Alpha a) {
  for (;;) {
    if (x.empty()) return false;
    if (a.n >= 2) {
      // Peel one greedy w^d block; the rest must be w^d.(n-1)-large.
      auto t = shortest_power_prefix(x, a.d);
      if (!t) return false;
      x = x.subspan(*t);
      a = Alpha(a.d, a.n - 1);
      continue;
    }
    if (a.d == 1) return x.size() > x[0];
    if (x[0] == 0) return false;
    a = Alpha(a.d - 1, x[0]);
    x = x.subspan(1);
  }
}

}  // namespace detail

inline bool is_large(const LevelSet& X, Alpha a) {
  return detail::is_large_span(detail::Span(X.values()), a);
}

// The n greedy blocks witnessing that X is w^d.n-large: the first n-1 are
// shortest w^d-large prefixes, the last absorbs the remainder.  Throws
// not_large if X is not w^d.n-large.
inline StackOfSets greedy_blocks(const LevelSet& X, std::uint32_t d, std::uint64_t n) {
  Alpha a(d, n);
  expect(is_large(X, a), Err::not_large, X.str() + " is not " + a.str() + "-large",
         {{"alpha", a.str()}, {"set", X.str()}});
  StackOfSets blocks;
  std::size_t from = 0;
  for (std::uint64_t j = 0; j + 1 < n; ++j) {
    detail::Span rest(X.values().data() + from, X.size() - from);
    auto t = detail::shortest_power_prefix(rest, d);
    ensure(t.has_value(), "greedy block missing in a large set");
    blocks.push_back(X.slice(from, *t));
    from += *t;
  }
  blocks.push_back(X.suffix(from));
  return blocks;
}

// The witness partition of a large set, opened along the defining clauses:
//   w         -> [X]
//   w^d.n     -> the n greedy blocks (n >= 2)
//   w^(d+1)   -> [{min X}] followed by the decomposition of the rest at w^d.(min X)
inline StackOfSets decompose(const LevelSet& X, Alpha a) {
  expect(is_large(X, a), Err::not_large, X.str() + " is not " + a.str() + "-large",
         {{"alpha", a.str()}, {"set", X.str()}});
  if (a.n >= 2) return greedy_blocks(X, a.d, a.n);
  if (a.d == 1) return {X};
  StackOfSets out = {X.slice(0, 1)};
  StackOfSets rest = decompose(X.suffix(1), Alpha(a.d - 1, X.min()));
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

// ---------------------------------------------------------------------------
// Exact size of minimal large sets.  The minimal a-large set with a given
// least element m is the interval [m, end(a, m)]:
//   end(w, m)       = 2m                        (m >= 1)
//   end(w.n, m)     = 2^n (m+1) - 2
//   end(w^(d+1), m) = end(w^d.m, m+1)
// Endpoints grow as exponential towers, so values are carried as a Magnitude:
// either an exact integer or a certified lower bound 2^e.

struct Magnitude {
  bool exact = true;
  BigInt value;   // when exact
  BigInt lb_exp;  // value >= 2^lb_exp when !exact

  static Magnitude of(BigInt v) { return {true, std::move(v), 0}; }
  static Magnitude pow2_lower_bound(BigInt e) { return {false, 0, std::move(e)}; }

  // Certified "this > t"; false means "not certified", never "certainly not".
  bool exceeds(const BigInt& t) const {
    if (exact) return value > t;
    if (t <= 0) return true;
    return lb_exp >= static_cast<long>(boost::multiprecision::msb(t)) + 1;
  }

  std::string str() const {
    if (exact) return value.str();
    return ">=2^" + lb_exp.str();
  }
};

namespace detail {

// Materialization cap: keep exact integers under 2^20 bits.
inline constexpr long kMagCapBits = 1 << 20;

inline Magnitude mag_pow2(const Magnitude& e) {
  if (e.exact) {
    ensure(e.value >= 0, "power of two with negative exponent");
    if (e.value <= kMagCapBits)
      return Magnitude::of(BigInt(1) << static_cast<unsigned>(e.value));
    return Magnitude::pow2_lower_bound(e.value);
  }
  // value >= 2^(2^lb_exp); clamp the inner exponent to keep numbers workable.
  BigInt ex = e.lb_exp > 4096 ? (BigInt(1) << 4096)
                              : (BigInt(1) << static_cast<unsigned>(e.lb_exp));
  return Magnitude::pow2_lower_bound(ex);
}

inline Magnitude mag_mul(const Magnitude& a, const Magnitude& b) {
  if (a.exact && b.exact) {
    if (a.value == 0 || b.value == 0) return Magnitude::of(0);
    ensure(a.value > 0 && b.value > 0, "magnitude product of negative value");
    long bits = static_cast<long>(boost::multiprecision::msb(a.value)) +
                static_cast<long>(boost::multiprecision::msb(b.value));
    if (bits <= kMagCapBits) return Magnitude::of(a.value * b.value);
  }
  auto lower = [](const Magnitude& m) {  // certified exponent lower bound
    if (!m.exact) return m.lb_exp;
    ensure(m.value > 0, "magnitude lower bound of nonpositive value");
    return BigInt(boost::multiprecision::msb(m.value));
  };
  return Magnitude::pow2_lower_bound(lower(a) + lower(b));
}

inline Magnitude mag_add(const Magnitude& a, const BigInt& s) {
  if (a.exact) return Magnitude::of(a.value + s);
  ensure(s >= 0, "magnitude lower bound plus negative");
  return a;  // value + s >= value >= 2^lb_exp
}

inline Magnitude mag_sub(const Magnitude& a, const BigInt& s) {
  if (a.exact) return Magnitude::of(a.value - s);
  ensure(a.lb_exp >= 65 && s >= 0 && s <= (BigInt(1) << 64),
         "magnitude 2^e - s with small e");
  return Magnitude::pow2_lower_bound(a.lb_exp - 1);  // 2^e - s >= 2^(e-1)
}

// end(w^2, m) = end(w.m, m+1) = 2^m (m+2) - 2
inline Magnitude interval_end_omega_sq(const Magnitude& start) {
  return mag_sub(mag_mul(mag_pow2(start), mag_add(start, 2)), 2);
}

template <class Step>
Magnitude iterate_interval(Step step, Magnitude start, std::uint64_t times) {
  Magnitude cur = step(start);
  for (std::uint64_t j = 1; j < times; ++j) cur = step(mag_add(cur, 1));
  return cur;
}

}  // namespace detail

// Greatest element of the minimal a-large interval starting at m (m >= 1).
// Supports d <= 3 with arbitrary small multipliers; the d >= 4 towers are out
// of range for every caller and raise bad_input.
inline Magnitude least_large_interval_end(Alpha a, std::uint64_t m) {
  expect(m >= 1, Err::bad_input, "minimal large intervals need a least element >= 1");
  using namespace detail;
  Magnitude start = Magnitude::of(BigInt(m));
  if (a.d == 1)
    return mag_sub(mag_mul(mag_pow2(Magnitude::of(BigInt(a.n))), mag_add(start, 1)), 2);
  expect(a.n <= 64, Err::bad_input, "interval multiplier cap (64) exceeded");
  if (a.d == 2) return iterate_interval(interval_end_omega_sq, start, a.n);
  if (a.d == 3) {
    auto end_omega_cubed = [](const Magnitude& s) {
      // end(w^3, m) = end(w^2.m, m+1): m applications of the w^2 step from m+1.
      expect(s.exact && s.value <= 64, Err::bad_input,
             "w^3 interval start exceeds the iteration cap");
      return iterate_interval(interval_end_omega_sq, mag_add(s, 1),
                              static_cast<std::uint64_t>(s.value));
    };
    return iterate_interval(end_omega_cubed, start, a.n);
  }
  fail(Err::bad_input, "interval calculator supports w^d with d <= 3 only",
       {{"alpha", a.str()}});
}

// Cardinality of the minimal a-large set with least element m.
inline Magnitude least_large_cardinality(Alpha a, std::uint64_t m) {
  Magnitude end = least_large_interval_end(a, m);
  return detail::mag_sub(detail::mag_add(end, 1), BigInt(m));
}

// exp^h(x): exp^0(x) = x, exp^(h+1)(x) = 2^(exp^h(x)).  Exact; throws
// bad_input when the result would exceed the materialization cap.
inline BigInt exp_tower(std::uint32_t height, BigInt x) {
  for (std::uint32_t j = 0; j < height; ++j) {
    expect(x >= 0 && x <= detail::kMagCapBits, Err::bad_input,
           "exponential tower exceeds the exact-representation cap");
    x = BigInt(1) << static_cast<unsigned>(x);
  }
  return x;
}

}  // namespace qstree
