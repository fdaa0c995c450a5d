#pragma once
// Intersection selection, the tower bounds h and hbar, level-antichain
// selection through families of quasistrong trees, and the prehomogeneous
// subtree selector built on top of them.

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "basics.hpp"
#include "certificate.hpp"
#include "kg.hpp"
#include "largeness.hpp"
#include "levels.hpp"
#include "quasistrong.hpp"
#include "tree.hpp"

namespace qstree {

// ---------------------------------------------------------------------------
// Intersection selection: given subsets R_y of an s-element ordered set, find
// the canonically least pair contained together in an eps-fraction of the R_y.

struct IntersectionResult {
  std::size_t a = 0, b = 0;           // indices into the ambient ordered set
  std::vector<std::uint64_t> levels;  // the y where both members occur
};

// R: (y, membership bitmap over the s elements), y strictly ascending.
// enforce_density: check |R_y| >= delta * s exactly and fail with BadDensity.
// Without a pair: NoPair, which is a guarantee violation (internal error)
// when the densities were enforced and (delta - sqrt(eps)) * s > 1.
inline IntersectionResult intersection_select(
    std::size_t s, const std::vector<std::pair<std::uint64_t, std::vector<bool>>>& R,
    const Density& eps, const Density& delta, bool enforce_density = true) {
  expect(!R.empty(), Err::bad_input, "intersection selection needs at least one set");
  for (std::size_t t = 1; t < R.size(); ++t)
    expect(R[t - 1].first < R[t].first, Err::bad_input,
           "intersection indices must be strictly increasing");
  for (const auto& [y, bits] : R) {
    expect(bits.size() == s, Err::bad_input, "membership bitmap has the wrong size");
    if (enforce_density) {
      std::size_t cnt = static_cast<std::size_t>(std::count(bits.begin(), bits.end(), true));
      expect(BigInt(cnt) * delta.den() >= delta.num() * BigInt(s), Err::bad_density,
             "R_y thinner than delta at y = " + std::to_string(y),
             {{"y", std::to_string(y)},
              {"required", detail::ceil_mul(delta, BigInt(s)).str()},
              {"actual", std::to_string(cnt)}});
    }
  }
  // First pair in canonical order whose joint levels reach eps * |R|.
  BigInt total(R.size());
  for (std::size_t a = 0; a < s; ++a)
    for (std::size_t b = a + 1; b < s; ++b) {
      std::vector<std::uint64_t> levels;
      for (const auto& [y, bits] : R)
        if (bits[a] && bits[b]) levels.push_back(y);
      if (BigInt(levels.size()) * eps.den() >= eps.num() * total)
        return IntersectionResult{a, b, std::move(levels)};
    }
  // (delta - sqrt(eps)) * s > 1, checked exactly:
  // delta*s - 1 > 0 and (delta*s - 1)^2 > eps * s^2.
  BigInt lhs = delta.num() * BigInt(s) - delta.den();
  bool guarantee = lhs > 0 && lhs * lhs * eps.den() >
                                 eps.num() * BigInt(s) * BigInt(s) * delta.den() * delta.den();
  if (enforce_density)
    ensure(!guarantee, "no pair found although the counting guarantee held");
  fail(Err::no_pair, "no pair shares enough levels",
       {{"eps", eps.str()},
        {"delta", delta.str()},
        {"size", std::to_string(s)},
        {"guarantee_held", guarantee ? "true" : "false"}});
}

// The lower bound on the number of admissible pairs when densities hold:
// ((delta*s - 1)^2 - eps*s^2) / (2 (1 - eps)).  Requires eps < 1.
inline BigRat intersection_pair_bound(std::size_t s, const Density& delta,
                                      const Density& eps) {
  expect(eps.value < 1, Err::bad_input, "pair bound needs eps < 1");
  BigRat ds = delta.value * BigInt(s) - 1;
  return (ds * ds - eps.value * BigInt(s) * BigInt(s)) / (2 * (1 - eps.value));
}

// ---------------------------------------------------------------------------
// Tower bounds.

// Exponent of h: e * l * 2^(5m).
inline BigInt bound_h_exponent(const BigInt& l, const BigInt& m, const Density& delta) {
  expect(l >= 1 && m >= 0, Err::bad_input, "bound_h needs l >= 1, m >= 0");
  expect(m <= 100000, Err::bad_input, "bound_h iteration count out of range",
         {{"m", m.str()}});
  return BigInt(delta.e) * l * (BigInt(1) << static_cast<unsigned>(m * 5));
}

// h(l, m, delta) = 2^(e * l * 2^(5m)), exact.
inline BigInt bound_h(const BigInt& l, const BigInt& m, const Density& delta) {
  BigInt E = bound_h_exponent(l, m, delta);
  expect(E <= detail::kMagCapBits, Err::bad_input,
         "bound_h exceeds the exact-representation cap",
         {{"exact_value", "2^" + E.str()}});
  return BigInt(1) << static_cast<unsigned>(E);
}

// hbar(x, n, k) = h(2^x, n, 1/k) * k^(2^x), exact.
inline BigInt bound_hbar(std::uint64_t x, const BigInt& n, std::uint64_t k) {
  expect(k >= 1, Err::bad_input, "bound_hbar needs k >= 1");
  expect(x <= 20, Err::bad_input, "bound_hbar exponent cap (x <= 20) exceeded");
  BigInt leaves = BigInt(1) << static_cast<unsigned>(x);
  Density d = Density::one_over(k);
  BigInt h = bound_h(leaves, n, d);
  BigInt factor = 1;
  if (k >= 2) {
    // k^(2^x): keep the exact size under the cap.
    BigInt bits = leaves * (static_cast<long>(boost::multiprecision::msb(BigInt(k))) + 1);
    expect(bits <= detail::kMagCapBits, Err::bad_input,
           "bound_hbar exceeds the exact-representation cap");
    factor = boost::multiprecision::pow(BigInt(k), static_cast<unsigned>(leaves));
  }
  return h * factor;
}

// Exact test "size >= hbar(x, n, k)" that never materializes the tower.
inline bool size_meets_hbar(std::uint64_t size, std::uint64_t x, const BigInt& n,
                            std::uint64_t k) {
  expect(k >= 1, Err::bad_input, "size_meets_hbar needs k >= 1");
  if (n > 12 || x > 20) return false;  // exponent >= 2^65 > any set size
  Density d = Density::one_over(k);
  BigInt E = BigInt(d.e) * (BigInt(1) << static_cast<unsigned>(x)) *
             (BigInt(1) << static_cast<unsigned>(5 * static_cast<std::uint64_t>(n)));
  if (E >= 64) return false;  // hbar >= 2^64 > size
  BigInt hbar = bound_hbar(x, n, k);
  return BigInt(size) >= hbar;
}

// A printable exact expression for hbar, for deficit reports.
inline std::string hbar_expression(std::uint64_t x, const BigInt& n, std::uint64_t k) {
  Density d = Density::one_over(k);
  std::string E = "(" + std::to_string(d.e) + "*2^" + std::to_string(x) + "*2^(5*" +
                  n.str() + "))";
  return "2^" + E + "*" + std::to_string(k) + "^(2^" + std::to_string(x) + ")";
}

// ---------------------------------------------------------------------------
// Antichain selection.

struct AntichainResult {
  LevelSet Z;
  std::vector<FinTree> trees;
};

// Per tree: level y -> the dense antichain A_{k,y}, sorted ascending.
using DenseFamily = std::vector<std::map<std::uint64_t, std::vector<BitString>>>;

namespace detail {

inline std::uint64_t count_prefix_members(const std::vector<BitString>& sorted_set,
                                          const BitString& zeta) {
  // Members extending zeta, assuming all members share one length >= |zeta|.
  if (sorted_set.empty()) return 0;
  std::size_t L = sorted_set.front().size();
  ensure(L >= zeta.size(), "dense set below the node");
  BitString lo = BitString::unchecked(zeta.str() + std::string(L - zeta.size(), '0'));
  BitString hi = BitString::unchecked(zeta.str() + std::string(L - zeta.size(), '1'));
  auto b = std::lower_bound(sorted_set.begin(), sorted_set.end(), lo);
  auto e = std::upper_bound(sorted_set.begin(), sorted_set.end(), hi);
  return static_cast<std::uint64_t>(e - b);
}

inline AntichainResult antichain_core(const LevelSet& X, const LevelSet& Y,
                                      const std::vector<FinTree>& trees,
                                      const DenseFamily& A, std::uint64_t m,
                                      const Density& delta) {
  if (m == 1) {
    AntichainResult r;
    r.Z = LevelSet({X.min()});
    for (const auto& T : trees) {
      auto roots = T.level(X.min());
      ensure(roots.size() == 1, "tree root is not unique");
      r.trees.push_back(FinTree::closure_of({roots[0]}));
    }
    return r;
  }
  std::uint64_t e = delta.e;
  // Strip the e+3 least members of Y.
  expect(BigInt(Y.size()) >= BigInt(e) + 4, Err::stage_failure,
         "not enough levels to absorb the density loss",
         {{"m", std::to_string(m)},
          {"stage", "strip"},
          {"required", (BigInt(e) + 4).str()},
          {"actual", std::to_string(Y.size())}});
  LevelSet Y0 = Y.suffix(static_cast<std::size_t>(e + 3));

  // B_{k,y}: nodes at level y with an A-member prefix at some Y0-level <= y.
  auto B_of = [&](std::size_t tk, std::uint64_t y) {
    std::vector<BitString> out;
    for (const auto& sigma : trees[tk].level(y)) {
      for (std::uint64_t x : Y0.values()) {
        if (x > y) break;
        auto it = A[tk].find(x);
        ensure(it != A[tk].end(), "dense family missing a level");
        if (std::binary_search(it->second.begin(), it->second.end(),
                               sigma.prefix(static_cast<std::size_t>(x)))) {
          out.push_back(sigma);
          break;
        }
      }
    }
    return out;
  };

  // Quantize |B_{k,y}| / |T_k at y| to v/2^(e+2) and pigeonhole the vectors.
  BigInt q = BigInt(1) << static_cast<unsigned>(e + 2);
  std::map<std::vector<BigInt>, std::vector<std::uint64_t>> classes;
  for (std::uint64_t y : Y0.values()) {
    std::vector<BigInt> vec;
    for (std::size_t tk = 0; tk < trees.size(); ++tk) {
      BigInt level_count(trees[tk].level_count(static_cast<std::size_t>(y)));
      ensure(level_count > 0, "tree empty at a selected level");
      BigInt v = q * BigInt(B_of(tk, y).size()) / level_count;
      if (v >= q) v = q - 1;
      vec.push_back(v);
    }
    classes[vec].push_back(y);
  }
  // Largest class; ties towards the least vector (map order is canonical).
  const std::vector<std::uint64_t>* best = nullptr;
  for (const auto& [vec, ys] : classes)
    if (!best || ys.size() > best->size()) best = &ys;
  LevelSet Y1 = LevelSet::unchecked(*best);
  std::uint64_t y1 = Y1.min();

  // D_{k,y}: members of B_{k,y1} whose cone keeps a quarter of the density.
  Density quarter = Density::of(delta.value / 4);
  std::vector<std::vector<BitString>> Bsel;
  for (std::size_t tk = 0; tk < trees.size(); ++tk) Bsel.push_back(B_of(tk, y1));
  auto in_D = [&](std::size_t tk, const BitString& zeta, std::uint64_t y) {
    auto it = A[tk].find(y);
    ensure(it != A[tk].end(), "dense family missing a level");
    BigInt above(count_prefix_members(it->second, zeta));
    BigInt cone_size(trees[tk].count_extensions(zeta, static_cast<std::size_t>(y)));
    return 4 * delta.den() * above >= delta.num() * cone_size;
  };

  // One intersection selection per tree, shrinking the level pool each time.
  Density eps = Density::of(delta.value * delta.value / 16);
  Density half = Density::of(delta.value / 2);
  std::vector<std::uint64_t> pool(Y1.values());
  std::vector<std::pair<BitString, BitString>> picks;
  for (std::size_t tk = 0; tk < trees.size(); ++tk) {
    auto S = trees[tk].level(static_cast<std::size_t>(y1));
    std::vector<std::pair<std::uint64_t, std::vector<bool>>> R;
    for (std::uint64_t y : pool) {
      std::vector<bool> bits(S.size(), false);
      for (std::size_t idx = 0; idx < S.size(); ++idx)
        bits[idx] = std::binary_search(Bsel[tk].begin(), Bsel[tk].end(), S[idx]) &&
                    in_D(tk, S[idx], y);
      R.emplace_back(y, std::move(bits));
    }
    IntersectionResult pick;
    try {
      pick = intersection_select(S.size(), R, eps, half, /*enforce_density=*/false);
    } catch (const Error& err) {
      if (err.code() != Err::no_pair) throw;
      fail(Err::stage_failure, "no level-sharing pair in tree " + std::to_string(tk),
           {{"m", std::to_string(m)},
            {"stage", "intersection"},
            {"tree", std::to_string(tk)},
            {"levels_available", std::to_string(pool.size())}});
    }
    picks.emplace_back(S[pick.a], S[pick.b]);
    pool = std::move(pick.levels);
  }

  // Recurse into the picked cones with quartered density.
  LevelSet Xp = X.tail_from(y1);
  LevelSet Yp = LevelSet::unchecked(pool);
  std::vector<FinTree> subtrees;
  DenseFamily subA;
  for (std::size_t tk = 0; tk < trees.size(); ++tk) {
    for (const BitString& zeta : {picks[tk].first, picks[tk].second}) {
      subtrees.push_back(cone(trees[tk], zeta));
      std::map<std::uint64_t, std::vector<BitString>> acc;
      for (std::uint64_t y : Yp.values()) {
        std::vector<BitString> keep;
        for (const auto& a : A[tk].at(y))
          if (a.has_prefix(zeta)) keep.push_back(a);
        acc[y] = std::move(keep);
      }
      subA.push_back(std::move(acc));
    }
  }
  AntichainResult sub = antichain_core(Xp, Yp, subtrees, subA, m - 1, quarter);

  AntichainResult r;
  std::vector<std::uint64_t> zv = {X.min()};
  zv.insert(zv.end(), sub.Z.values().begin(), sub.Z.values().end());
  r.Z = LevelSet(std::move(zv));
  for (std::size_t tk = 0; tk < trees.size(); ++tk)
    r.trees.push_back(sub.trees[2 * tk].node_union(sub.trees[2 * tk + 1]));
  return r;
}

}  // namespace detail

// Select m levels Z (including min X) and Z-quasistrong subtrees S_k whose
// every selected branch keeps meeting the dense antichains A_{k,y}.
// Guaranteed to succeed when |Y| >= bound_h(#trees, m, delta); otherwise it
// runs best-effort and reports the failing stage exactly.
inline AntichainResult antichain_select(const LevelSet& X, const LevelSet& Y,
                                        const std::vector<FinTree>& trees,
                                        const DenseFamily& A, std::uint64_t m,
                                        const Density& delta) {
  expect(!X.empty(), Err::bad_input, "antichain selection needs a nonempty level set");
  expect(m >= 1, Err::bad_input, "antichain selection needs m >= 1");
  expect(!trees.empty(), Err::bad_input, "antichain selection needs at least one tree");
  expect(!Y.empty() && Y.subset_of(X), Err::bad_input,
         "selection levels must form a nonempty subset of the tree levels");
  expect(A.size() == trees.size(), Err::bad_input,
         "dense family must match the tree family");
  for (std::size_t tk = 0; tk < trees.size(); ++tk) {
    const FinTree& T = trees[tk];
    expect(T.level_count(static_cast<std::size_t>(X.min())) == 1, Err::bad_input,
           "tree " + std::to_string(tk) + " must have a unique node at min X");
    expect(is_quasistrong(T, X), Err::not_quasistrong,
           "tree " + std::to_string(tk) + " is not quasistrong for " + X.str());
    for (std::uint64_t y : Y.values()) {
      auto it = A[tk].find(y);
      expect(it != A[tk].end(), Err::bad_input,
             "dense family missing level " + std::to_string(y) + " for tree " +
                 std::to_string(tk));
      const auto& set = it->second;
      expect(std::is_sorted(set.begin(), set.end()), Err::bad_input,
             "dense sets must be sorted");
      for (const auto& a : set)
        expect(a.size() == y && T.contains(a), Err::bad_input,
               "dense member \"" + a.str() + "\" is not a tree node at level " +
                   std::to_string(y));
      BigInt level_count(T.level_count(static_cast<std::size_t>(y)));
      expect(BigInt(set.size()) * delta.den() >= delta.num() * level_count,
             Err::bad_input,
             "dense set thinner than delta at level " + std::to_string(y) + " of tree " +
                 std::to_string(tk),
             {{"required", detail::ceil_mul(delta, level_count).str()},
              {"actual", std::to_string(set.size())}});
    }
  }
  return detail::antichain_core(X, Y, trees, A, m, delta);
}

// ---------------------------------------------------------------------------
// Prehomogeneous selection for a colored family of quasistrong trees.

// Levels Z (|Z| = n, min Z = min X) and per-member Z-quasistrong subtrees that
// are prehomogeneous for the claimed colors.  Guaranteed when
// |X| >= bound_hbar(min X, n, k); best-effort with exact stage reports below.
inline Certificate prehom_select(const LevelSet& X, const TreeFamily& family,
                                 const Coloring& C, std::uint64_t n, int k) {
  expect(!X.empty(), Err::bad_input, "selection needs a nonempty level set");
  expect(n >= 1, Err::bad_input, "selection needs n >= 1");
  expect(k >= 1, Err::bad_input, "selection needs k >= 1");
  expect(C.k <= k, Err::bad_input, "coloring uses more colors than requested");
  expect(family.root_level == X.min(), Err::bad_input,
         "family root level must equal min X");
  expect(!family.members.empty(), Err::bad_input, "selection needs a nonempty family");
  family.validate();
  for (const auto& [rho, T] : family.members) {
    expect(is_quasistrong(T, X), Err::not_quasistrong,
           "family member \"" + rho.str() + "\" is not quasistrong for " + X.str());
    for (const auto& nd : T.nodes())
      expect(C.defined(nd), Err::partial_coloring,
             "coloring undefined on node \"" + nd.str() + "\"");
  }
  expect(BigInt(X.size()) >= BigInt(n), Err::stage_failure,
         "fewer levels than selection targets",
         {{"stage", "size"}, {"required", BigInt(n).str()},
          {"actual", std::to_string(X.size())}});

  Certificate cert;
  cert.kind = CertKind::prehom;
  cert.X = X;
  cert.k = k;
  cert.context["n"] = std::to_string(n);

  if (k == 1) {
    // One color: every pair is trivially witnessed, so any quasistrong
    // thinning works.
    LevelSet Z = X.slice(0, static_cast<std::size_t>(n));
    cert.levels = Z;
    for (const auto& [rho, T] : family.members) {
      cert.trees[rho] = prune_to_quasistrong(T, X, Z);
      cert.colors[rho] = 0;
    }
    return cert;
  }

  // Per level x, per member: the least color filling a 1/k fraction.
  std::vector<BitString> keys;
  std::vector<FinTree> trees;
  for (const auto& [rho, T] : family.members) {
    keys.push_back(rho);
    trees.push_back(T);
  }
  auto f_at = [&](std::size_t tk, std::uint64_t x) {
    const FinTree& T = trees[tk];
    auto level = T.level(static_cast<std::size_t>(x));
    BigInt total(level.size());
    for (int c = 0; c < k; ++c) {
      BigInt cnt = 0;
      for (const auto& sigma : level)
        if (C.at(sigma) == c) ++cnt;
      if (cnt * k >= total) return c;
    }
    ensure(false, "no color reaches the pigeonhole threshold");
    return 0;
  };
  std::map<std::vector<int>, std::vector<std::uint64_t>> classes;
  for (std::uint64_t x : X.values()) {
    std::vector<int> vec;
    for (std::size_t tk = 0; tk < trees.size(); ++tk) vec.push_back(f_at(tk, x));
    classes[vec].push_back(x);
  }
  const std::vector<int>* best_vec = nullptr;
  const std::vector<std::uint64_t>* best_ys = nullptr;
  for (const auto& [vec, ys] : classes)
    if (!best_ys || ys.size() > best_ys->size()) {
      best_vec = &vec;
      best_ys = &ys;
    }
  LevelSet Y = LevelSet::unchecked(*best_ys);

  DenseFamily A(trees.size());
  for (std::size_t tk = 0; tk < trees.size(); ++tk)
    for (std::uint64_t y : Y.values()) {
      std::vector<BitString> keep;
      for (const auto& sigma : trees[tk].level(static_cast<std::size_t>(y)))
        if (C.at(sigma) == (*best_vec)[tk]) keep.push_back(sigma);
      A[tk][y] = std::move(keep);
    }
  Density delta = Density::one_over(static_cast<std::uint64_t>(k));
  AntichainResult sel = antichain_select(X, Y, trees, A, n, delta);

  cert.levels = sel.Z;
  for (std::size_t tk = 0; tk < trees.size(); ++tk) {
    // Soundness: check the claims before emitting them.
    ensure(sel.trees[tk].subset_of(trees[tk]), "selected subtree leaves its tree");
    ensure(is_quasistrong(sel.trees[tk], sel.Z), "selected subtree is not quasistrong");
    ensure(prehomogeneous_colors(sel.trees[tk], C, sel.Z).count((*best_vec)[tk]) == 1,
           "selected subtree is not prehomogeneous for its color");
    cert.trees[keys[tk]] = sel.trees[tk];
    cert.colors[keys[tk]] = (*best_vec)[tk];
  }
  return cert;
}

}  // namespace qstree
