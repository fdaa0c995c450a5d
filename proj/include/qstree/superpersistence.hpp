#pragma once
// Superpersistence: responders that answer a whole family of colored
// quasistrong trees at once with a persistent set, per-member prehomogeneous
// subtrees, and a machine-checkable certificate.  Culminates in the main
// construction: w^(2d+1)-largeness yields prehomogeneous sets that are
// w^d-large.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "antichain.hpp"
#include "basics.hpp"
#include "certificate.hpp"
#include "largeness.hpp"
#include "levels.hpp"
#include "persistence.hpp"
#include "quasistrong.hpp"
#include "tree.hpp"

namespace qstree {

struct SuperResponse {
  PersistentSet P;                    // persistent on the selected levels
  std::map<BitString, FinTree> trees; // per family member: P.levels-quasistrong
  std::map<BitString, int> colors;    // per family member: its prehomogeneous color
  Certificate cert;
};

struct SuperpersistentSet {
  LevelSet levels;
  Alpha alpha;
  int k = 1;
  int depth = 0;
  std::function<SuperResponse(const TreeFamily&, const Coloring&)> respond;
};

// ---------------------------------------------------------------------------
// Base case: a big enough set is (w, k, i)-superpersistent outright.

inline SuperpersistentSet super_omega(const LevelSet& X, int k, int i,
                                      bool best_effort = false) {
  expect(k >= 1 && i >= 0, Err::bad_input, "superpersistence needs k >= 1, i >= 0");
  expect(!X.empty(), Err::bad_input, "superpersistence needs a nonempty set");
  BigInt n_req = required_omega_size(X.min(), static_cast<std::uint64_t>(k),
                                     static_cast<std::uint64_t>(i));
  if (!best_effort)
    expect(size_meets_hbar(X.size(), X.min(), n_req, static_cast<std::uint64_t>(k)),
           Err::too_small, "set smaller than the selection bound",
           {{"required", hbar_expression(X.min(), n_req, static_cast<std::uint64_t>(k))},
            {"actual", std::to_string(X.size())}});
  SuperpersistentSet sp;
  sp.levels = X;
  sp.alpha = Alpha::omega();
  sp.k = k;
  sp.depth = i;
  LevelSet Xc = X;
  sp.respond = [Xc, k, i, n_req](const TreeFamily& family, const Coloring& C) {
    expect(BigInt(Xc.size()) >= n_req, Err::too_small,
           "set smaller than the witness the response must carry",
           {{"required", n_req.str()}, {"actual", std::to_string(Xc.size())}});
    std::uint64_t n = static_cast<std::uint64_t>(n_req);
    Certificate cert = prehom_select(Xc, family, C, n, k);
    cert.alpha_claim = Alpha::omega();
    SuperResponse out;
    out.P = persistent_omega(cert.levels, k, i);
    out.trees = cert.trees;
    out.colors = cert.colors;
    out.cert = std::move(cert);
    return out;
  };
  return sp;
}

// ---------------------------------------------------------------------------
// Joint response through a stack of superpersistent sets.

struct SuperStackResponse {
  std::vector<PersistentSet> members;            // one per stack member, common depth
  std::map<BitString, FinTree> trees;            // per family member: stack-quasistrong
  std::map<BitString, std::vector<int>> colors;  // per family member, per stack member
};

inline SuperStackResponse super_stack_respond(const std::vector<SuperpersistentSet>& ctxs,
                                              const TreeFamily& family, const Coloring& C) {
  expect(!ctxs.empty(), Err::bad_input, "stack must be nonempty");
  std::size_t n = ctxs.size();
  for (const auto& c : ctxs) {
    expect(c.k == ctxs[0].k, Err::bad_input, "stack members must share k");
    expect(c.depth == ctxs[0].depth, Err::bad_input, "stack members must share their depth");
    expect(c.alpha == ctxs[0].alpha, Err::bad_input, "stack members must share their ordinal");
  }
  int depth = ctxs[0].depth;
  expect(depth >= static_cast<int>(n) - 1, Err::bad_input,
         "stack response needs depth >= stack length - 1",
         {{"required_depth", std::to_string(n - 1)}, {"actual_depth", std::to_string(depth)}});
  StackOfSets xs;
  for (const auto& c : ctxs) xs.push_back(c.levels);
  require_stack(xs, "superpersistent stack");
  expect(family.root_level == xs[0].min(), Err::bad_input,
         "family root level must equal the first member's minimum");
  expect(!family.members.empty(), Err::bad_input, "response needs a nonempty family");
  family.validate();
  for (const auto& [rho, T] : family.members) {
    for (std::size_t m = 0; m < n; ++m)
      expect(is_quasistrong(T, xs[m]), Err::not_quasistrong,
             "family member \"" + rho.str() + "\" is not quasistrong for stack member " +
                 std::to_string(m));
    for (std::size_t m = 1; m < n; ++m) {
      auto [lo, hi] = T.level_range(xs[m - 1].max());
      for (std::size_t t = lo; t < hi; ++t)
        expect(T.count_extensions(T.nodes()[t], xs[m].min()) >= 1, Err::not_quasistrong,
               "family node \"" + T.nodes()[t].str() +
                   "\" has no extension into stack member " + std::to_string(m));
    }
    for (const auto& nd : T.nodes())
      expect(C.defined(nd), Err::partial_coloring,
             "coloring undefined on node \"" + nd.str() + "\"");
  }

  // One response per stage, each answering every cone at that stage at once.
  std::vector<SuperResponse> SR;
  SR.reserve(n);
  for (std::size_t m = 0; m < n; ++m) {
    TreeFamily fam_m;
    fam_m.root_level = xs[m].min();
    for (const auto& [rho, T] : family.members)
      for (const auto& zeta : T.level(xs[m].min()))
        fam_m.members[zeta] = restrict_height(cone(T, zeta), xs[m].max());
    SuperResponse r = ctxs[m].respond(fam_m, C);
    ensure(r.P.depth == depth, "stage response has the wrong depth");
    ensure(r.P.levels.min() == xs[m].min(), "stage response moved the minimum");
    SR.push_back(std::move(r));
  }

  // Assemble: grow each family member's tree stage by stage, walking the
  // already-used members down their witness chains so the next joint response
  // sees a stack of matching depths.
  std::vector<PersistentSet> Ys;
  Ys.push_back(truncate_depth(SR[0].P, depth));
  std::map<BitString, FinTree> S;
  std::map<BitString, std::vector<int>> vecs;
  for (const auto& [rho, T] : family.members) {
    S[rho] = SR[0].trees.at(rho);
    vecs[rho] = {SR[0].colors.at(rho)};
  }
  for (std::size_t m = 0; m + 1 < n; ++m) {
    for (const auto& [rho, T] : family.members) {
      Coloring Cm;
      Cm.k = C.k;
      for (const auto& sigma : S[rho].level(Ys[m].levels.max())) {
        auto z = T.first_extension(sigma, xs[m + 1].min());
        ensure(z.has_value(), "no continuation into the next stage");
        Cm.set(sigma, SR[m + 1].colors.at(*z));
      }
      PersistResponse r = persistent_stack_respond(Ys, S[rho], Cm);
      vecs[rho].push_back(r.color);
      std::vector<BitString> nodes = r.tree.nodes();
      for (const auto& tau : r.tree.level(Ys[m].witness->levels.max())) {
        const BitString* chosen = nullptr;
        for (const auto& cand : S[rho].extensions(tau, Ys[m].levels.max()))
          if (Cm.at(cand) == r.color) {
            chosen = &cand;
            break;
          }
        ensure(chosen != nullptr, "stack response lost its continuation");
        auto z = T.first_extension(*chosen, xs[m + 1].min());
        ensure(z.has_value(), "no continuation into the next stage");
        const auto& u = SR[m + 1].trees.at(*z).nodes();
        nodes.insert(nodes.end(), u.begin(), u.end());
      }
      S[rho] = FinTree::from_nodes(std::move(nodes), /*require_closed=*/false);
    }
    for (std::size_t l = 0; l <= m; ++l) {
      PersistentSet w = *Ys[l].witness;
      Ys[l] = std::move(w);
    }
    Ys.push_back(truncate_depth(SR[m + 1].P, depth - static_cast<int>(m) - 1));
  }

  StackOfSets final_levels;
  for (const auto& p : Ys) final_levels.push_back(p.levels);
  for (const auto& [rho, Srho] : S)
    ensure(is_quasistrong(Srho, final_levels), "assembled tree lost quasistrongness");
  return SuperStackResponse{std::move(Ys), std::move(S), std::move(vecs)};
}

// ---------------------------------------------------------------------------
// Merging a stack of superpersistent sets.

// Stack length needed to merge n members at depth i against families of at
// most 2^x0 trees with k colors: (2^(i+1).n - 2^(i+1)) . k^(2^x0) + 1.
inline BigInt super_merge_count(std::uint64_t n, int k, int i, std::uint64_t x0) {
  expect(n >= 1 && k >= 1 && i >= 0, Err::bad_input, "merge parameters out of range");
  expect(i <= 600000, Err::bad_input, "merge depth out of range");
  BigInt K = 1;
  if (k >= 2) {
    expect(x0 <= 20, Err::bad_input, "merge tree-count exponent out of range");
    BigInt bits = (BigInt(1) << static_cast<unsigned>(x0)) *
                  (static_cast<long>(boost::multiprecision::msb(BigInt(k))) + 1);
    expect(bits <= detail::kMagCapBits, Err::bad_input,
           "merge pigeonhole factor exceeds the exact-representation cap");
    K = boost::multiprecision::pow(BigInt(k), 1u << static_cast<unsigned>(x0));
  }
  BigInt base = (BigInt(1) << static_cast<unsigned>(i + 1)) * n -
                (BigInt(1) << static_cast<unsigned>(i + 1));
  return base * K + 1;
}

// Merge a stack of super_merge_count(n, k, i, x0) superpersistent sets of
// depth i + count - 1 into one (a.n, k, i)-superpersistent set, valid against
// families of at most 2^x0 trees.
inline SuperpersistentSet super_stack_merge(const std::vector<SuperpersistentSet>& ctxs,
                                            std::uint64_t n, std::uint64_t x0) {
  expect(n >= 1, Err::bad_input, "merge multiplier must be >= 1");
  expect(!ctxs.empty(), Err::bad_input, "merge stack must be nonempty");
  for (const auto& c : ctxs) {
    expect(c.k == ctxs[0].k, Err::bad_input, "merge members must share k");
    expect(c.depth == ctxs[0].depth, Err::bad_input, "merge members must share their depth");
    expect(c.alpha == ctxs[0].alpha, Err::bad_input, "merge members must share their ordinal");
  }
  int k = ctxs[0].k;
  int depth = ctxs[0].depth;
  expect(depth >= static_cast<int>(ctxs.size()) - 1, Err::wrong_count,
         "merge stack longer than its depth allows",
         {{"actual", std::to_string(ctxs.size())},
          {"max_for_depth", std::to_string(depth + 1)}});
  int i = depth - static_cast<int>(ctxs.size()) + 1;
  BigInt required = super_merge_count(n, k, i, x0);
  expect(BigInt(ctxs.size()) == required, Err::wrong_count,
         "merge needs exactly (2^(i+1).n - 2^(i+1)).k^(2^x0) + 1 stack members",
         {{"required", required.str()}, {"actual", std::to_string(ctxs.size())}});
  StackOfSets xs;
  for (const auto& c : ctxs) xs.push_back(c.levels);
  require_stack(xs, "superpersistent merge stack");
  LevelSet X_all = stack_union(xs);
  BigInt mult = BigInt(ctxs[0].alpha.n) * n;
  expect(mult <= (BigInt(1) << 62), Err::bad_input, "merged multiplier out of range");
  Alpha a_out(ctxs[0].alpha.d, ctxs[0].alpha.n * n);
  // 2^(i+1).n - 2^(i+1) + 1 members must agree on their whole color vector.
  std::size_t L_sz = static_cast<std::size_t>(
      (BigInt(1) << static_cast<unsigned>(i + 1)) * n -
      (BigInt(1) << static_cast<unsigned>(i + 1)) + 1);

  SuperpersistentSet sp;
  sp.levels = X_all;
  sp.alpha = a_out;
  sp.k = k;
  sp.depth = i;
  std::vector<SuperpersistentSet> members = ctxs;
  std::uint64_t nn = n;
  sp.respond = [members, nn, L_sz, k, a_out, X_all](const TreeFamily& family,
                                                    const Coloring& C) {
    SuperStackResponse ssr = super_stack_respond(members, family, C);
    // Pigeonhole the stack members by their full color vector.
    std::map<std::vector<int>, std::vector<std::size_t>> classes;
    for (std::size_t m = 0; m < members.size(); ++m) {
      std::vector<int> key;
      for (const auto& [rho, vec] : ssr.colors) key.push_back(vec[m]);
      classes[key].push_back(m);
    }
    const std::vector<int>* best_key = nullptr;
    const std::vector<std::size_t>* best = nullptr;
    for (const auto& [key, ms] : classes)
      if (!best || ms.size() > best->size()) {
        best_key = &key;
        best = &ms;
      }
    expect(best->size() >= L_sz, Err::stage_failure,
           "no color vector repeats across enough stack members",
           {{"stage", "merge-pigeonhole"},
            {"required", std::to_string(L_sz)},
            {"actual", std::to_string(best->size())}});
    std::vector<std::size_t> L(best->begin(), best->begin() + static_cast<long>(L_sz));

    std::vector<PersistentSet> evens;
    std::vector<LevelSet> kept, bridges;
    for (std::size_t t = 0; t < L.size(); ++t) {
      if (t % 2 == 0) {
        evens.push_back(ssr.members[L[t]]);
        kept.push_back(ssr.members[L[t]].levels);
      } else {
        bridges.push_back(ssr.members[L[t]].levels);
      }
    }
    SuperResponse out;
    out.P = persistent_stack_merge(evens, nn);
    std::size_t pos = 0;
    for (const auto& [rho, vec] : ssr.colors) {
      FinTree Srho = detail::thin_through(ssr.trees.at(rho), kept, bridges);
      int c = (*best_key)[pos++];
      ensure(is_quasistrong(Srho, out.P.levels), "merged tree lost quasistrongness");
      ensure(prehomogeneous_colors(Srho, C, out.P.levels).count(c) == 1,
             "merged tree is not prehomogeneous for its color");
      out.trees[rho] = std::move(Srho);
      out.colors[rho] = c;
    }
    out.cert.kind = CertKind::prehom;
    out.cert.X = X_all;
    out.cert.levels = out.P.levels;
    out.cert.trees = out.trees;
    out.cert.colors = out.colors;
    out.cert.k = k;
    out.cert.alpha_claim = a_out;
    return out;
  };
  return sp;
}

// ---------------------------------------------------------------------------
// Spreading a superpersistent set over a superset of its levels.

// Families rooted at min X2 are pruned down to one branch through P's levels,
// so the response family stays as small as the original family.
inline SuperpersistentSet super_superset(const SuperpersistentSet& P, const LevelSet& X2) {
  expect(!X2.empty(), Err::bad_input, "superset must be nonempty");
  expect(P.levels.subset_of(X2), Err::not_superset,
         "levels must contain the superpersistent set's levels",
         {{"levels", P.levels.str()}, {"superset", X2.str()}});
  if (X2 == P.levels) return P;
  SuperpersistentSet q;
  q.levels = X2;
  q.alpha = P.alpha;
  q.k = P.k;
  q.depth = P.depth;
  SuperpersistentSet inner = P;
  LevelSet X2c = X2;
  q.respond = [inner, X2c](const TreeFamily& family, const Coloring& C) {
    expect(family.root_level == X2c.min(), Err::bad_input,
           "family root level must equal the superset's minimum");
    expect(!family.members.empty(), Err::bad_input, "response needs a nonempty family");
    family.validate();
    LevelSet X2lo = [&] {
      std::vector<std::uint64_t> v;
      for (std::uint64_t x : X2c.values())
        if (x <= inner.levels.max()) v.push_back(x);
      return LevelSet::unchecked(std::move(v));
    }();
    TreeFamily fam_in;
    fam_in.root_level = inner.levels.min();
    std::map<BitString, BitString> pick;  // outer root -> inner root
    for (const auto& [rho, T] : family.members) {
      expect(is_quasistrong(T, X2c), Err::not_quasistrong,
             "family member \"" + rho.str() + "\" is not quasistrong for " + X2c.str());
      for (const auto& nd : T.nodes())
        expect(C.defined(nd), Err::partial_coloring,
               "coloring undefined on node \"" + nd.str() + "\"");
      FinTree pruned =
          prune_to_quasistrong(restrict_height(T, inner.levels.max()), X2lo, inner.levels);
      auto bots = pruned.level(inner.levels.min());
      ensure(!bots.empty(), "pruned family member lost its bottom level");
      BitString zeta = bots.front();
      fam_in.members.emplace(zeta, cone(pruned, zeta));
      pick.emplace(rho, zeta);
    }
    SuperResponse sr = inner.respond(fam_in, C);
    SuperResponse out;
    out.P = sr.P;
    for (const auto& [rho, zeta] : pick) {
      out.trees[rho] = sr.trees.at(zeta);
      out.colors[rho] = sr.colors.at(zeta);
    }
    out.cert = sr.cert;
    out.cert.X = X2c;
    out.cert.trees = out.trees;
    out.cert.colors = out.colors;
    return out;
  };
  return q;
}

// ---------------------------------------------------------------------------
// Lifting: w^d.(min X + 1) superpersistence becomes w^(d+1) superpersistence.

inline SuperpersistentSet super_lift(const SuperpersistentSet& P) {
  const LevelSet& X = P.levels;
  expect(!X.empty(), Err::bad_input, "lift needs a nonempty set");
  expect(P.alpha.n == X.min() + 1, Err::wrong_alpha,
         "lift needs the ordinal multiplier to equal min + 1",
         {{"required", "w^" + std::to_string(P.alpha.d) + "." + std::to_string(X.min() + 1)},
          {"actual", P.alpha.str()}});
  Alpha a_out(P.alpha.d + 1, 1);
  SuperpersistentSet q;
  q.levels = X;
  q.alpha = a_out;
  q.k = P.k;
  q.depth = P.depth;
  SuperpersistentSet inner = P;
  std::uint64_t x0 = X.min();
  q.respond = [inner, x0, a_out](const TreeFamily& family, const Coloring& C) {
    SuperResponse sr = inner.respond(family, C);
    const LevelSet& Z = sr.P.levels;
    ensure(Z.size() >= 2, "lift response carries too few levels");
    std::vector<std::uint64_t> yv = {x0};
    for (std::size_t j = 1; j < Z.size(); ++j) yv.push_back(Z[j]);
    LevelSet Y(std::move(yv));
    SuperResponse out;
    out.P = persistent_lift(persistent_map(sr.P, Y));
    for (const auto& [rho, Srho] : sr.trees) {
      auto bots = Srho.level(Z.min());
      ensure(!bots.empty(), "lift response lost its bottom level");
      const BitString sigma = bots.front();
      FinTree U = Srho.filter([&](const BitString& t) { return t.compatible(sigma); });
      ensure(is_quasistrong(U, Y), "lifted tree lost quasistrongness");
      ensure(prehomogeneous_colors(U, C, Y).count(sr.colors.at(rho)) == 1,
             "lifted tree is not prehomogeneous for its color");
      out.trees[rho] = std::move(U);
      out.colors[rho] = sr.colors.at(rho);
    }
    out.cert = sr.cert;
    out.cert.levels = Y;
    out.cert.trees = out.trees;
    out.cert.colors = out.colors;
    out.cert.alpha_claim = a_out;
    return out;
  };
  return q;
}

// ---------------------------------------------------------------------------
// The main superpersistence construction.

inline SuperpersistentSet super_from_large(const LevelSet& X, std::uint32_t d, int k,
                                           int i, bool best_effort = false) {
  expect(d >= 1, Err::bad_input, "superpersistence construction needs d >= 1");
  expect(k >= 1 && i >= 0, Err::bad_input,
         "superpersistence construction needs k >= 1, i >= 0");
  expect(!X.empty(), Err::bad_input, "superpersistence construction needs a nonempty set");
  if (!best_effort) {
    Alpha need(2 * d + 1, 1);
    expect(is_large(X, need), Err::not_large, "set is not " + need.str() + "-large",
           {{"alpha", need.str()}});
    std::uint64_t floor = std::max<std::uint64_t>(
        {4, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(i)});
    expect(X.min() > floor, Err::min_too_small,
           "least element too small for the construction",
           {{"required_min", std::to_string(floor + 1)},
            {"actual_min", std::to_string(X.min())}});
  }
  if (d == 1) return super_omega(X, k, i, best_effort);

  std::uint64_t x0 = X.min();
  expect(x0 >= 1, Err::min_too_small, "least element must be >= 1",
         {{"required_min", "1"}, {"actual_min", "0"}});
  std::uint64_t n = x0 + 1;
  BigInt nhat = super_merge_count(n, k, i, x0);
  std::vector<LevelSet> pieces = detail::cut_shifted_pieces(X, d, nhat);
  BigInt piece_depth = nhat - 1 + i;
  expect(piece_depth <= 600000, Err::too_small,
         "construction depth out of practical range",
         {{"required_depth", piece_depth.str()}});
  int j = static_cast<int>(piece_depth);
  std::vector<SuperpersistentSet> parts;
  parts.reserve(pieces.size());
  for (const auto& piece : pieces)
    parts.push_back(super_from_large(piece, d - 1, k, j, best_effort));
  SuperpersistentSet merged = super_stack_merge(parts, n, x0);
  ensure(merged.levels.min() == x0, "merged stack does not start at min X");
  return super_lift(super_superset(merged, X));
}

// ---------------------------------------------------------------------------
// The headline construction: from a w^(2d+1)-large set of levels, every
// k-colored quasistrong tree admits a prehomogeneous quasistrong subtree on a
// w^d-large set of levels.

struct MainResult {
  LevelSet Y;
  Certificate cert;
};

inline MainResult prehomogeneous_main(const LevelSet& X, std::uint32_t d, int k,
                                      const FinTree& T, const Coloring& C,
                                      bool best_effort = false) {
  expect(d >= 1 && k >= 1, Err::bad_input, "main construction needs d >= 1, k >= 1");
  expect(!X.empty(), Err::bad_input, "main construction needs a nonempty set");
  expect(is_quasistrong(T, X), Err::not_quasistrong,
         "challenge tree is not quasistrong for " + X.str());
  FinTree Tr = restrict_height(T, X.max());
  for (const auto& nd : Tr.nodes())
    expect(C.defined(nd), Err::partial_coloring,
           "coloring undefined on node \"" + nd.str() + "\"");
  SuperpersistentSet sup = super_from_large(X, d, k, 0, best_effort);
  TreeFamily family;
  family.root_level = X.min();
  for (const auto& rho : Tr.level(X.min())) family.members.emplace(rho, cone(Tr, rho));
  SuperResponse sr = sup.respond(family, C);
  ensure(is_large(sr.P.levels, Alpha(d, 1)), "selected levels lost largeness");
  MainResult out;
  out.Y = sr.P.levels;
  out.cert = std::move(sr.cert);
  out.cert.kind = CertKind::main;
  out.cert.X = X;
  out.cert.alpha_claim = Alpha(d, 1);
  return out;
}

}  // namespace qstree
