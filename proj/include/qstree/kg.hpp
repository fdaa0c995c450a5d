#pragma once
// Density selection inside a quasistrong tree: given an X-quasistrong T and a
// dense set A of leaves, pick a sparse sub-level-set Y and a Y-quasistrong
// S ⊆ T all of whose top nodes still reach A.
//
// The level gaps absorb the density loss: with 2^-e < delta, stage p works at
// threshold 2^-(e+p), and the selected levels are x_{e_p} with
// e_p = p*e + p(p+1)/2, so the whole run needs |X| >= g(m, delta) + 1 where
// g(m, delta) = (m-1)e + (m-1)m/2.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "basics.hpp"
#include "certificate.hpp"
#include "levels.hpp"
#include "quasistrong.hpp"
#include "tree.hpp"

namespace qstree {

// An exact rational density in (0, 1] together with the least e >= 1 such
// that 2^-e < delta.
struct Density {
  BigRat value;
  std::uint64_t e = 1;

  static Density of(BigRat v) {
    expect(v > 0 && v <= 1, Err::bad_input, "density must lie in (0, 1]");
    Density d;
    d.value = std::move(v);
    BigInt num = boost::multiprecision::numerator(d.value);
    BigInt den = boost::multiprecision::denominator(d.value);
    d.e = 1;
    while ((BigInt(1) << static_cast<unsigned>(d.e)) * num <= den) ++d.e;
    // invariant: 2^-e < delta <= 2^-(e-1)
    ensure((BigInt(1) << static_cast<unsigned>(d.e)) * num > den, "density exponent too small");
    ensure((BigInt(1) << static_cast<unsigned>(d.e - 1)) * num <= den || d.e == 1,
           "density exponent too large");
    return d;
  }

  static Density one_over(std::uint64_t k) {
    expect(k >= 1, Err::bad_input, "density denominator must be >= 1");
    return of(BigRat(1, k));
  }

  BigInt num() const { return boost::multiprecision::numerator(value); }
  BigInt den() const { return boost::multiprecision::denominator(value); }

  std::string str() const { return num().str() + "/" + den().str(); }
};

// g(m, delta) = (m-1)e + (m-1)m/2.
inline BigInt bound_g(const BigInt& m, const Density& delta) {
  expect(m >= 1, Err::bad_input, "bound_g needs m >= 1");
  BigInt e(delta.e);
  return (m - 1) * e + (m - 1) * m / 2;
}

// The index sequence e_p = p*e + p(p+1)/2 for p < m (e_0 = 0, steps e + p).
inline std::vector<std::uint64_t> kg_indices(std::uint64_t m, const Density& delta) {
  std::vector<std::uint64_t> idx;
  std::uint64_t cur = 0;
  for (std::uint64_t p = 0; p < m; ++p) {
    if (p > 0) cur += delta.e + p;
    idx.push_back(cur);
  }
  return idx;
}

// Y = {x_{e_p} : p < m}; requires |X| >= g(m, delta) + 1.
inline LevelSet kg_levels(const LevelSet& X, std::uint64_t m, const Density& delta) {
  expect(m >= 1, Err::bad_input, "level selection needs m >= 1");
  expect(!X.empty(), Err::bad_input, "level selection needs a nonempty set");
  BigInt need = bound_g(BigInt(m), delta) + 1;
  expect(BigInt(X.size()) >= need, Err::too_small,
         "set too small for density level selection",
         {{"required", need.str()}, {"actual", std::to_string(X.size())}});
  std::vector<std::uint64_t> ys;
  for (std::uint64_t e_p : kg_indices(m, delta)) ys.push_back(X[static_cast<std::size_t>(e_p)]);
  return LevelSet(std::move(ys));
}

struct KgResult {
  LevelSet Y;
  FinTree S;
  Certificate cert;
};

namespace detail {

// ceil(delta * count) as a BigInt — the least admissible dense-set size.
inline BigInt ceil_mul(const Density& d, const BigInt& count) {
  return (d.num() * count + d.den() - 1) / d.den();
}

// Strict threshold test  2^exp2 * |inside| > |total|.
inline bool above_threshold(std::uint64_t exp2, const BigInt& inside, const BigInt& total) {
  return (BigInt(1) << static_cast<unsigned>(exp2)) * inside > total;
}

}  // namespace detail

// Core selection.  A is the dense subset of T ∩ 2^{max X} (sorted ascending).
// When best_effort is set the |X| size precondition is reported only if the
// level indices cannot be formed at all; the density precondition always holds.
inline KgResult kg_extract(const FinTree& T, const LevelSet& X,
                           const std::vector<BitString>& A, std::uint64_t m,
                           const Density& delta, bool best_effort = false) {
  expect(!X.empty(), Err::bad_input, "selection needs a nonempty level set");
  expect(m >= 1, Err::bad_input, "selection needs m >= 1");
  expect(is_quasistrong(T, X), Err::not_quasistrong,
         "tree is not quasistrong for " + X.str());
  std::vector<BitString> dense = A;
  std::sort(dense.begin(), dense.end());
  dense.erase(std::unique(dense.begin(), dense.end()), dense.end());
  auto leaves = T.level(X.max());
  for (const auto& a : dense)
    expect(a.size() == X.max() && T.contains(a), Err::bad_input,
           "dense set member \"" + a.str() + "\" is not a leaf-level node of the tree");
  // Exact density check: |A| >= delta * |T ∩ 2^{max X}|.
  BigInt required = detail::ceil_mul(delta, BigInt(leaves.size()));
  expect(BigInt(dense.size()) >= required, Err::density_too_low,
         "dense set does not meet the density requirement",
         {{"required", required.str()},
          {"actual", std::to_string(dense.size())},
          {"delta", delta.str()},
          {"leaf_count", std::to_string(leaves.size())}});
  // Size precondition; not waivable even in best-effort mode, because the
  // selected levels are literally the indices e_p of X.
  (void)best_effort;
  LevelSet Y = kg_levels(X, m, delta);

  // Count of dense leaves extending sigma.
  auto dense_above = [&](const BitString& sigma) {
    BitString lo = BitString::unchecked(sigma.str() + std::string(X.max() - sigma.size(), '0'));
    BitString hi = BitString::unchecked(sigma.str() + std::string(X.max() - sigma.size(), '1'));
    auto b = std::lower_bound(dense.begin(), dense.end(), lo);
    auto e = std::upper_bound(dense.begin(), dense.end(), hi);
    return static_cast<std::uint64_t>(e - b);
  };

  // Stage 0: least rho at level y_0 with 2^e * |A ∩ T_rho| > |T ∩ 2^{max X} ∩ T_rho|.
  std::vector<BitString> kept;
  {
    bool found = false;
    for (const auto& rho : T.level(Y.min())) {
      if (detail::above_threshold(delta.e, BigInt(dense_above(rho)),
                                  BigInt(T.count_extensions(rho, X.max())))) {
        kept.push_back(rho);
        found = true;
        break;
      }
    }
    expect(found, Err::selection_failed, "no starting node meets the density threshold",
           {{"stage", "0"}, {"threshold_exponent", std::to_string(delta.e)}});
  }
  // Stage p -> p+1: per kept node, the two least extensions at the next
  // Y-level that stay above the tightened threshold 2^-(e+p+1).
  for (std::uint64_t p = 0; p + 1 < m; ++p) {
    std::vector<BitString> next;
    for (const auto& sigma : kept) {
      std::vector<BitString> good;
      for (const auto& tau : T.extensions(sigma, Y[static_cast<std::size_t>(p + 1)])) {
        if (detail::above_threshold(delta.e + p + 1, BigInt(dense_above(tau)),
                                    BigInt(T.count_extensions(tau, X.max())))) {
          good.push_back(tau);
          if (good.size() == 2) break;
        }
      }
      expect(good.size() == 2, Err::selection_failed,
             "fewer than two dense extensions at the next selected level",
             {{"stage", std::to_string(p + 1)},
              {"node", sigma.str()},
              {"found", std::to_string(good.size())}});
      next.insert(next.end(), good.begin(), good.end());
    }
    kept = std::move(next);
  }
  FinTree S = FinTree::closure_of(kept);

  // Soundness: the output is checked before it is returned.
  ensure(is_quasistrong(S, Y), "selected subtree is not quasistrong");
  ensure(S.subset_of(T), "selected subtree leaves the tree");
  for (const auto& top : S.level(Y.max()))
    ensure(dense_above(top) > 0, "selected top node cannot reach the dense set");

  Certificate cert;
  cert.kind = CertKind::kg_extract;
  cert.X = X;
  cert.levels = Y;
  cert.trees[BitString()] = S;
  cert.k = 1;
  cert.context["m"] = std::to_string(m);
  cert.context["delta"] = delta.str();
  KgResult r{std::move(Y), std::move(S), std::move(cert)};
  return r;
}

}  // namespace qstree
