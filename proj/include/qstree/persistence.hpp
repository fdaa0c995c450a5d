#pragma once
// Persistence: level sets that can answer colored-tree challenges repeatedly.
//
// X is (a,k,0)-persistent iff X is a-large.  X is (a,k,i+1)-persistent iff it
// has an (a,k,i)-persistent witness Y ⊆ X such that for every X-quasistrong T
// and every k-coloring C of T ∩ 2^{max X} there are a color c and a
// Y-quasistrong S ⊆ T whose every top node has a C-color-c extension in
// T ∩ 2^{max X}.  A PersistentSet bundles the witness chain with a concrete
// responder realizing that clause, and the combinators below mirror the
// closure properties: supersets, level-wise shrinking maps, stacks, merges of
// stacks into multiples, and lifting w^d.(min X + 1) to w^(d+1).

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "basics.hpp"
#include "kg.hpp"
#include "largeness.hpp"
#include "levels.hpp"
#include "quasistrong.hpp"
#include "tree.hpp"

namespace qstree {

struct PersistResponse {
  int color = 0;
  FinTree tree;
};

struct PersistentSet {
  LevelSet levels;
  Alpha alpha;
  int k = 1;
  int depth = 0;
  std::shared_ptr<const PersistentSet> witness;  // null iff depth == 0
  std::function<PersistResponse(const FinTree&, const Coloring&)> respond;

  std::vector<LevelSet> chain() const {
    std::vector<LevelSet> c = {levels};
    for (const PersistentSet* p = witness.get(); p; p = p->witness.get())
      c.push_back(p->levels);
    return c;
  }
};

inline PersistentSet make_depth0(LevelSet X, Alpha a, int k) {
  PersistentSet p;
  p.levels = std::move(X);
  p.alpha = a;
  p.k = k;
  p.depth = 0;
  return p;
}

// A depth-i set viewed at a shallower depth: same levels, witness chain cut.
inline PersistentSet truncate_depth(const PersistentSet& P, int j) {
  expect(j >= 0 && j <= P.depth, Err::bad_input, "truncation depth out of range");
  if (j == P.depth) return P;
  if (j == 0) return make_depth0(P.levels, P.alpha, P.k);
  PersistentSet q = P;
  q.depth = j;
  q.witness = std::make_shared<const PersistentSet>(truncate_depth(*P.witness, j - 1));
  return q;
}

// ---------------------------------------------------------------------------
// Size bounds for the w-level construction.

// The source recurrence: gbar(x,k,0) = x+k+1, gbar(x,k,i+1) = g(gbar(x,k,i), 1/k).
inline BigInt bound_gbar(std::uint64_t x, std::uint64_t k, std::uint64_t i) {
  expect(k >= 1, Err::bad_input, "bound_gbar needs k >= 1");
  Density d = Density::one_over(k);
  BigInt v = BigInt(x) + k + 1;
  for (std::uint64_t j = 0; j < i; ++j) v = bound_g(v, d);
  return v;
}

// The size actually required at construction depth i: one extra element per
// density-selection round, so each iterate is g(., 1/k) + 1.  Agrees with
// bound_gbar + 1 for i <= 1.
inline BigInt required_omega_size(std::uint64_t x, std::uint64_t k, std::uint64_t i) {
  expect(k >= 1, Err::bad_input, "required size needs k >= 1");
  if (i == 0) return BigInt(x) + 1;  // w-largeness
  Density d = Density::one_over(k);
  BigInt v = BigInt(x) + k + 1;
  for (std::uint64_t j = 1; j < i; ++j) v = bound_g(v, d) + 1;
  return bound_g(v, d) + 1;
}

// ---------------------------------------------------------------------------
// (w, k, i)-persistence from raw size, via iterated density selection.

inline PersistentSet persistent_omega(const LevelSet& X, int k, int i,
                                      bool best_effort = false) {
  expect(k >= 1 && i >= 0, Err::bad_input, "persistence needs k >= 1, i >= 0");
  expect(!X.empty(), Err::bad_input, "persistence needs a nonempty set");
  if (i == 0) {
    expect(is_large(X, Alpha::omega()), Err::too_small,
           "set is not w-large",
           {{"required", std::to_string(X.min() + 1)},
            {"actual", std::to_string(X.size())}});
    return make_depth0(X, Alpha::omega(), k);
  }
  BigInt required = required_omega_size(X.min(), static_cast<std::uint64_t>(k),
                                        static_cast<std::uint64_t>(i));
  // The requirement is not waivable: the witness levels are literal indices
  // into X, so a smaller set cannot even form its chain.  Best-effort callers
  // get the same exact deficit report.
  (void)best_effort;
  expect(BigInt(X.size()) >= required, Err::too_small,
         "set too small for the requested persistence depth",
         {{"required", required.str()},
          {"actual", std::to_string(X.size())},
          {"min", std::to_string(X.min())},
          {"k", std::to_string(k)},
          {"i", std::to_string(i)}});

  Density delta = Density::one_over(static_cast<std::uint64_t>(k));
  BigInt m_big = required_omega_size(X.min(), static_cast<std::uint64_t>(k),
                                     static_cast<std::uint64_t>(i - 1));
  ensure(m_big <= BigInt(X.size()), "witness size exceeds the set");
  std::uint64_t m = static_cast<std::uint64_t>(m_big);

  LevelSet Y = kg_levels(X, m, delta);
  ensure(Y.min() == X.min() && Y.size() == m, "witness levels malformed");
  PersistentSet wit = persistent_omega(Y, k, i - 1);

  PersistentSet P;
  P.levels = X;
  P.alpha = Alpha::omega();
  P.k = k;
  P.depth = i;
  P.witness = std::make_shared<const PersistentSet>(std::move(wit));
  LevelSet Xc = X;
  LevelSet Yc = Y;
  int kk = k;
  P.respond = [Xc, Yc, m, delta, kk](const FinTree& T, const Coloring& C) {
    expect(is_quasistrong(T, Xc), Err::not_quasistrong,
           "challenge tree is not quasistrong for " + Xc.str());
    expect(C.k <= kk, Err::bad_input, "coloring uses more colors than the responder handles");
    auto leaves = T.level(Xc.max());
    std::vector<std::uint64_t> count(static_cast<std::size_t>(C.k), 0);
    for (const auto& leaf : leaves) ++count[static_cast<std::size_t>(C.at(leaf))];
    int c = 0;
    for (int j = 1; j < C.k; ++j)
      if (count[static_cast<std::size_t>(j)] > count[static_cast<std::size_t>(c)]) c = j;
    std::vector<BitString> A;
    for (const auto& leaf : leaves)
      if (C.at(leaf) == c) A.push_back(leaf);
    KgResult r = kg_extract(T, Xc, A, m, delta);
    ensure(r.Y == Yc, "responder selected unexpected witness levels");
    return PersistResponse{c, std::move(r.S)};
  };
  return P;
}

// ---------------------------------------------------------------------------
// Supersets: a superset of a persistent set is persistent with the same
// witness; the responder prunes the bigger tree down first.

inline PersistentSet persistent_superset(const PersistentSet& P, const LevelSet& X2) {
  expect(P.levels.subset_of(X2), Err::not_superset,
         "superset target does not contain the persistent set's levels");
  if (X2 == P.levels) return P;
  PersistentSet q;
  q.levels = X2;
  q.alpha = P.alpha;
  q.k = P.k;
  q.depth = P.depth;
  q.witness = P.witness;
  if (P.depth == 0) {
    ensure(is_large(X2, P.alpha), "superset lost largeness");
    return q;
  }
  PersistentSet inner = P;
  q.respond = [inner, X2](const FinTree& T, const Coloring& C) {
    expect(is_quasistrong(T, X2), Err::not_quasistrong,
           "challenge tree is not quasistrong for " + X2.str());
    // Prune to the inner levels, then recolor its top from the true leaves.
    std::uint64_t top = inner.levels.max();
    LevelSet X2lo = LevelSet::unchecked([&] {
      std::vector<std::uint64_t> v;
      for (std::uint64_t x : X2.values())
        if (x <= top) v.push_back(x);
      return v;
    }());
    FinTree Tlow = restrict_height(T, top);
    FinTree Tp = prune_to_quasistrong(Tlow, X2lo, inner.levels);
    Coloring Cp;
    Cp.k = C.k;
    for (const auto& sigma : Tp.level(top)) {
      auto zeta = T.first_extension(sigma, X2.max());
      ensure(zeta.has_value(), "quasistrong tree lost its extensions");
      Cp.set(sigma, C.at(*zeta));
    }
    PersistResponse r = inner.respond(Tp, Cp);
    // r.tree's top nodes reach Cp-color-c nodes, which in turn extend to
    // C-color-c nodes at the true leaf level, so r is valid unchanged.
    return r;
  };
  return q;
}

// ---------------------------------------------------------------------------
// Level-wise shrinking maps: given y_j <= x_j pointwise, the image set is
// persistent via tree conjugation.

namespace detail {

// Level-indexed bijection between a Y-quasistrong tree and a synthetic
// X-quasistrong tree (|Y| = |X|, y_j <= x_j).  Nodes at y_j are mapped to
// nodes at x_j by per-segment rank encoding.
struct Conjugation {
  FinTree image;                      // the X-side tree
  std::map<BitString, BitString> fwd; // Y-side node (at a Y level) -> X-side
  std::map<BitString, BitString> bwd;
};

inline Conjugation conjugate_tree(const FinTree& T, const LevelSet& Y, const LevelSet& X) {
  Conjugation c;
  std::vector<BitString> cur = T.level(Y.min());
  expect(!cur.empty(), Err::not_quasistrong, "tree has no nodes at the bottom level");
  ensure(Y.min() >= 64 || cur.size() <= (std::uint64_t{1} << Y.min()), "level overfull");
  std::vector<BitString> cur_img;
  for (std::size_t r = 0; r < cur.size(); ++r) {
    BitString img = encode_rank(r, static_cast<std::size_t>(X.min()));
    c.fwd[cur[r]] = img;
    c.bwd[img] = cur[r];
    cur_img.push_back(img);
  }
  for (std::size_t j = 0; j + 1 < Y.size(); ++j) {
    std::vector<BitString> next, next_img;
    std::size_t gap = static_cast<std::size_t>(X[j + 1] - X[j]);
    for (std::size_t t = 0; t < cur.size(); ++t) {
      auto exts = T.extensions(cur[t], Y[j + 1]);
      ensure(exts.size() == 2, "conjugation requires exactly two extensions");
      for (std::size_t r = 0; r < 2; ++r) {
        BitString img = BitString::unchecked(cur_img[t].str() + encode_rank(r, gap).str());
        c.fwd[exts[r]] = img;
        c.bwd[img] = exts[r];
        next.push_back(exts[r]);
        next_img.push_back(img);
      }
    }
    cur = std::move(next);
    cur_img = std::move(next_img);
  }
  c.image = FinTree::closure_of(cur_img);
  return c;
}

}  // namespace detail

inline PersistentSet persistent_map(const PersistentSet& P, const LevelSet& Y) {
  const LevelSet& X = P.levels;
  expect(Y.size() == X.size(), Err::bad_map, "map must preserve the number of levels",
         {{"expected", std::to_string(X.size())}, {"actual", std::to_string(Y.size())}});
  for (std::size_t j = 0; j < Y.size(); ++j)
    expect(Y[j] <= X[j], Err::bad_map,
           "map must not increase any level (position " + std::to_string(j) + ")",
           {{"from", std::to_string(X[j])}, {"to", std::to_string(Y[j])}});
  if (Y == X) return P;
  PersistentSet q;
  q.levels = Y;
  q.alpha = P.alpha;
  q.k = P.k;
  q.depth = P.depth;
  if (P.depth == 0) {
    ensure(is_large(Y, P.alpha), "pointwise-dominated image lost largeness");
    return q;
  }
  // Witness: the image of the witness levels under the same index map.
  const LevelSet& W = P.witness->levels;
  std::vector<std::uint64_t> wimg;
  for (std::uint64_t w : W.values()) wimg.push_back(Y[X.index_of(w)]);
  LevelSet Wimg(std::move(wimg));
  q.witness = std::make_shared<const PersistentSet>(persistent_map(*P.witness, Wimg));
  PersistentSet inner = P;
  q.respond = [inner, X, Y, Wimg](const FinTree& T, const Coloring& C) {
    expect(is_quasistrong(T, Y), Err::not_quasistrong,
           "challenge tree is not quasistrong for " + Y.str());
    detail::Conjugation conj = detail::conjugate_tree(T, Y, X);
    Coloring Cx;
    Cx.k = C.k;
    for (const auto& sigma : T.level(Y.max()))
      Cx.set(conj.fwd.at(sigma), C.at(sigma));
    PersistResponse r = inner.respond(conj.image, Cx);
    const LevelSet& W = inner.witness->levels;
    std::vector<BitString> tops;
    for (const auto& t : r.tree.level(W.max())) {
      auto it = conj.bwd.find(t);
      ensure(it != conj.bwd.end(), "responder output leaves the conjugated tree");
      tops.push_back(it->second);
    }
    FinTree S = FinTree::closure_of(tops);
    ensure(is_quasistrong(S, Wimg), "mapped response lost quasistrongness");
    return PersistResponse{r.color, std::move(S)};
  };
  return q;
}

// ---------------------------------------------------------------------------
// Stacks: joint response through a stack of persistent sets.

namespace detail {

inline void validate_persistent_stack(const std::vector<PersistentSet>& Ps,
                                      bool need_depth) {
  expect(!Ps.empty(), Err::bad_input, "stack must be nonempty");
  StackOfSets levels;
  for (const auto& p : Ps) levels.push_back(p.levels);
  require_stack(levels, "persistent stack");
  for (const auto& p : Ps) {
    expect(p.k == Ps[0].k, Err::bad_input, "stack members must share k");
    expect(p.depth == Ps[0].depth, Err::bad_input, "stack members must share their depth");
    expect(p.alpha == Ps[0].alpha, Err::bad_input, "stack members must share their ordinal");
  }
  if (need_depth)
    expect(Ps[0].depth >= 1, Err::bad_input, "stack response needs depth >= 1 members");
}

}  // namespace detail

// Joint response: color c and S ⊆ T quasistrong for the stack of the members'
// witness level sets, whose member-m tops always continue into member m+1 and
// whose final tops reach C-color-c leaves.
inline PersistResponse persistent_stack_respond(const std::vector<PersistentSet>& Ps,
                                                const FinTree& T, const Coloring& C) {
  detail::validate_persistent_stack(Ps, /*need_depth=*/true);
  std::size_t n = Ps.size();
  for (std::size_t m = 0; m < n; ++m)
    expect(is_quasistrong(T, Ps[m].levels), Err::not_quasistrong,
           "challenge tree is not quasistrong for stack member " + std::to_string(m));
  for (std::size_t m = 1; m < n; ++m) {
    auto [lo, hi] = T.level_range(Ps[m - 1].levels.max());
    for (std::size_t t = lo; t < hi; ++t)
      expect(T.count_extensions(T.nodes()[t], Ps[m].levels.min()) >= 1, Err::not_quasistrong,
             "tree node \"" + T.nodes()[t].str() + "\" has no extension into stack member " +
                 std::to_string(m));
  }

  // Backward pass: color the top of member m-1 by member m's response color.
  std::vector<std::map<BitString, PersistResponse>> resp(n);
  Coloring Cm = C;
  for (std::size_t m = n; m-- > 1;) {
    Coloring Cprev;
    Cprev.k = C.k;
    for (const auto& rho : T.level(Ps[m - 1].levels.max())) {
      FinTree Trho = restrict_height(cone(T, rho), Ps[m].levels.max());
      PersistResponse r = Ps[m].respond(Trho, Cm);
      Cprev.set(rho, r.color);
      resp[m].emplace(rho, std::move(r));
    }
    Cm = std::move(Cprev);
  }
  PersistResponse r0 = Ps[0].respond(restrict_height(T, Ps[0].levels.max()), Cm);
  int c = r0.color;

  // Forward pass: every top continues into the least next-member response of
  // the same color, so the color survives to the true leaves.
  std::vector<BitString> nodes = r0.tree.nodes();
  std::vector<BitString> frontier = r0.tree.level(Ps[0].witness->levels.max());
  // Colors of member-m tops live in the coloring rebuilt during the backward
  // pass; recompute it on demand from resp[m].
  for (std::size_t m = 1; m < n; ++m) {
    std::vector<BitString> next_frontier;
    for (const auto& sigma : frontier) {
      const PersistResponse* chosen = nullptr;
      for (const auto& rho : T.extensions(sigma, Ps[m - 1].levels.max())) {
        auto it = resp[m].find(rho);
        if (it != resp[m].end() && it->second.color == c) {
          chosen = &it->second;
          break;
        }
      }
      ensure(chosen != nullptr, "stack response lost its continuation");
      const auto& u = chosen->tree.nodes();
      nodes.insert(nodes.end(), u.begin(), u.end());
      auto tops = chosen->tree.level(Ps[m].witness->levels.max());
      next_frontier.insert(next_frontier.end(), tops.begin(), tops.end());
    }
    frontier = std::move(next_frontier);
  }
  return PersistResponse{c, FinTree::from_nodes(std::move(nodes), /*require_closed=*/false)};
}

namespace detail {

// Keep only a quasistrong skeleton through alternating kept/bridge level sets:
// per kept top, branch through two least bridge extensions, then continue
// above the least next-kept extension of each.  Preserves the kept sets'
// quasistrong structure with exactly-two junctions.
inline FinTree thin_through(const FinTree& S, const std::vector<LevelSet>& kept,
                            const std::vector<LevelSet>& bridges) {
  ensure(!kept.empty() && bridges.size() + 1 == kept.size(), "thin_through shape");
  std::vector<BitString> nodes;
  for (const auto& nd : S.nodes())
    if (nd.size() <= kept[0].max()) nodes.push_back(nd);
  std::vector<BitString> frontier = S.level(kept[0].max());
  for (std::size_t t = 0; t + 1 < kept.size(); ++t) {
    std::vector<BitString> next_frontier;
    for (const auto& sigma : frontier) {
      auto branches = S.extensions(sigma, bridges[t].max());
      ensure(branches.size() >= 2, "thin_through: fewer than two bridge extensions");
      for (std::size_t j = 0; j < 2; ++j) {
        auto b = S.first_extension(branches[j], kept[t + 1].min());
        ensure(b.has_value(), "thin_through: bridge does not reach the next kept set");
        for (const auto& tau : S.nodes())
          if (tau.size() <= kept[t + 1].max() && tau.compatible(*b)) nodes.push_back(tau);
        auto tops = S.extensions(*b, kept[t + 1].max());
        next_frontier.insert(next_frontier.end(), tops.begin(), tops.end());
      }
    }
    std::sort(next_frontier.begin(), next_frontier.end());
    next_frontier.erase(std::unique(next_frontier.begin(), next_frontier.end()),
                        next_frontier.end());
    frontier = std::move(next_frontier);
  }
  return FinTree::from_nodes(std::move(nodes), /*require_closed=*/false);
}

// Drop the least element of X and a leading w^(2d) block, cut `count` many
// w^(2d-1) blocks from what remains, and shift every piece down by one pool
// position so the first piece starts at min X.  Pointwise shrinking preserves
// block largeness, so each shifted piece is still w^(2d-1)-large whenever the
// pool pieces were.
inline std::vector<LevelSet> cut_shifted_pieces(const LevelSet& X, std::uint32_t d,
                                                const BigInt& count) {
  LevelSet X1pool = [&] {
    LevelSet rest = X.suffix(1);
    auto b1 = shortest_power_prefix(Span(rest.values()), 2 * d);
    expect(b1.has_value(), Err::not_large,
           "set cannot spare a leading w^" + std::to_string(2 * d) + " block",
           {{"alpha", Alpha(2 * d, 1).str()}});
    return rest.suffix(*b1);
  }();
  expect(!X1pool.empty(), Err::too_small, "no elements left after the leading block",
         {{"required", "1"}, {"actual", "0"}});
  LevelSet pool = X1pool.suffix(1);
  expect(BigInt(pool.size()) >= count, Err::too_small,
         "piece pool cannot hold the required stack",
         {{"required_pieces", count.str()}, {"pool_size", std::to_string(pool.size())}});
  std::uint64_t piece_count = static_cast<std::uint64_t>(count);
  std::size_t t0 = X.index_of(X1pool.min());
  auto shift = [&](const LevelSet& Y) {
    std::vector<std::uint64_t> out;
    for (std::uint64_t y : Y.values()) {
      std::size_t p = X.index_of(y) - t0;  // position within X1pool
      ensure(p >= 1, "piece reaches below the pool");
      out.push_back(X[p - 1]);
    }
    return LevelSet(std::move(out));
  };
  std::vector<LevelSet> pieces;
  std::size_t from = 0;
  for (std::uint64_t t = 0; t < piece_count; ++t) {
    Span rest(pool.values().data() + from, pool.size() - from);
    auto len = shortest_power_prefix(rest, 2 * d - 1);
    expect(len.has_value(), Err::too_small,
           "piece pool ran out of w^" + std::to_string(2 * d - 1) + " blocks",
           {{"required_pieces", count.str()}, {"found_pieces", std::to_string(t)}});
    pieces.push_back(shift(pool.slice(from, *len)));
    from += *len;
  }
  return pieces;
}

}  // namespace detail

// Merge a stack of 2^i.n - 2^i + 1 many (a,k,i)-persistent sets into one
// (a.n,k,i)-persistent set on the union of their levels.
inline PersistentSet persistent_stack_merge(const std::vector<PersistentSet>& Ps,
                                            std::uint64_t n) {
  expect(n >= 1, Err::bad_input, "merge multiplier must be >= 1");
  detail::validate_persistent_stack(Ps, /*need_depth=*/false);
  int i = Ps[0].depth;
  expect(i <= 600000, Err::bad_input, "merge depth out of range");
  BigInt required = (BigInt(1) << static_cast<unsigned>(i)) * n -
                    (BigInt(1) << static_cast<unsigned>(i)) + 1;
  expect(BigInt(Ps.size()) == required, Err::wrong_count,
         "merge needs exactly 2^i.n - 2^i + 1 stack members",
         {{"required", required.str()}, {"actual", std::to_string(Ps.size())}});

  StackOfSets all;
  for (const auto& p : Ps) all.push_back(p.levels);
  LevelSet X = stack_union(all);
  BigInt mult = BigInt(Ps[0].alpha.n) * n;
  expect(mult <= (BigInt(1) << 62), Err::bad_input, "merged multiplier out of range");
  Alpha a_out(Ps[0].alpha.d, Ps[0].alpha.n * n);

  if (i == 0) {
    ensure(is_large(X, a_out), "stack union lost largeness");
    return make_depth0(X, a_out, Ps[0].k);
  }

  // Witness: the merged witnesses of the even-position members.
  std::vector<PersistentSet> even_wits;
  std::vector<LevelSet> kept, bridges;
  for (std::size_t t = 0; t < Ps.size(); ++t) {
    if (t % 2 == 0) {
      even_wits.push_back(*Ps[t].witness);
      kept.push_back(Ps[t].witness->levels);
    } else {
      bridges.push_back(Ps[t].witness->levels);
    }
  }
  PersistentSet wit = persistent_stack_merge(even_wits, n);

  PersistentSet q;
  q.levels = X;
  q.alpha = a_out;
  q.k = Ps[0].k;
  q.depth = i;
  q.witness = std::make_shared<const PersistentSet>(std::move(wit));
  std::vector<PersistentSet> members = Ps;
  q.respond = [members, kept, bridges](const FinTree& T, const Coloring& C) {
    PersistResponse r = persistent_stack_respond(members, T, C);
    FinTree S = detail::thin_through(r.tree, kept, bridges);
    return PersistResponse{r.color, std::move(S)};
  };
  return q;
}

// ---------------------------------------------------------------------------
// Lifting: w^d.(min X + 1) persistence becomes w^(d+1) persistence.

inline PersistentSet persistent_lift(const PersistentSet& P) {
  const LevelSet& X = P.levels;
  expect(!X.empty(), Err::bad_input, "lift needs a nonempty set");
  expect(P.alpha.n == X.min() + 1, Err::wrong_alpha,
         "lift needs the ordinal multiplier to equal min + 1",
         {{"required", "w^" + std::to_string(P.alpha.d) + "." + std::to_string(X.min() + 1)},
          {"actual", P.alpha.str()}});
  Alpha a_out(P.alpha.d + 1, 1);
  if (P.depth == 0) {
    ensure(is_large(X, a_out), "lift lost largeness");
    return make_depth0(X, a_out, P.k);
  }
  const LevelSet& W = P.witness->levels;
  ensure(W.size() >= 2, "lift witness too small");
  std::vector<std::uint64_t> zv = {X.min()};
  for (std::size_t j = 1; j < W.size(); ++j) zv.push_back(W[j]);
  LevelSet Z(std::move(zv));
  PersistentSet q;
  q.levels = X;
  q.alpha = a_out;
  q.k = P.k;
  q.depth = P.depth;
  q.witness = std::make_shared<const PersistentSet>(
      persistent_lift(persistent_map(*P.witness, Z)));
  PersistentSet inner = P;
  std::uint64_t w1 = W[1];
  std::uint64_t wmin = W.min();
  q.respond = [inner, w1, wmin](const FinTree& T, const Coloring& C) {
    PersistResponse r = inner.respond(T, C);
    auto bottoms = r.tree.level(wmin);
    ensure(!bottoms.empty(), "lift: response has no bottom node");
    const BitString nu = bottoms.front();
    auto exts = r.tree.extensions(nu, w1);
    ensure(exts.size() >= 2, "lift: bottom node does not split");
    const BitString a = exts[0], b = exts[1];
    FinTree U = r.tree.filter(
        [&](const BitString& t) { return t.compatible(a) || t.compatible(b); });
    return PersistResponse{r.color, std::move(U)};
  };
  return q;
}

// ---------------------------------------------------------------------------
// The main construction: w^(2d+1)-largeness yields (w^d, k, i)-persistence.

inline PersistentSet persistent_from_large(const LevelSet& X, std::uint32_t d, int k,
                                           int i, bool best_effort = false) {
  expect(d >= 1, Err::bad_input, "persistence construction needs d >= 1");
  expect(k >= 1 && i >= 0, Err::bad_input, "persistence construction needs k >= 1, i >= 0");
  expect(!X.empty(), Err::bad_input, "persistence construction needs a nonempty set");
  if (!best_effort) {
    Alpha need(2 * d + 1, 1);
    expect(is_large(X, need), Err::not_large,
           "set is not " + need.str() + "-large", {{"alpha", need.str()}});
    std::uint64_t floor = std::max<std::uint64_t>(
        {static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(i), 2});
    expect(X.min() > floor, Err::min_too_small,
           "least element too small for the construction",
           {{"required_min", std::to_string(floor + 1)},
            {"actual_min", std::to_string(X.min())}});
  }
  if (i == 0) {
    Alpha target(d, 1);
    expect(is_large(X, target), Err::not_large,
           "set is not " + target.str() + "-large", {{"alpha", target.str()}});
    return make_depth0(X, target, k);
  }
  if (d == 1) {
    // Find the longest suffix big enough for the requested iteration depth.
    BigInt best_deficit = -1;
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < X.size(); ++j) {
      BigInt req = required_omega_size(X[j], static_cast<std::uint64_t>(k),
                                       static_cast<std::uint64_t>(i));
      BigInt avail(X.size() - j);
      if (avail >= req) {
        PersistentSet tail = persistent_omega(X.suffix(j), k, i);
        return persistent_superset(tail, X);
      }
      BigInt deficit = req - avail;
      if (best_deficit < 0 || deficit < best_deficit) {
        best_deficit = deficit;
        best_j = j;
      }
    }
    fail(Err::too_small, "no suffix is big enough for the requested depth",
         {{"closest_suffix_min", std::to_string(X[best_j])},
          {"required", required_omega_size(X[best_j], static_cast<std::uint64_t>(k),
                                           static_cast<std::uint64_t>(i))
                           .str()},
          {"actual", std::to_string(X.size() - best_j)},
          {"deficit", best_deficit.str()}});
  }
  // d >= 2: peel the head block, split the rest into stacked pieces, recurse
  // one exponent down, merge, lift, and spread back over X.
  std::uint64_t x0 = X.min();
  expect(x0 >= 1, Err::min_too_small, "least element must be >= 1",
         {{"required_min", "1"}, {"actual_min", "0"}});
  std::uint64_t n = x0 + 1;
  expect(i <= 600000, Err::bad_input, "construction depth out of range");
  BigInt nbar = (BigInt(1) << static_cast<unsigned>(i)) * n -
                (BigInt(1) << static_cast<unsigned>(i)) + 1;

  // X minus its least element must start with two w^(2d)-blocks; the second
  // block onward is cut into stacked pieces and shifted down onto X.
  std::vector<LevelSet> pieces = detail::cut_shifted_pieces(X, d, nbar);
  std::vector<PersistentSet> parts;
  parts.reserve(pieces.size());
  for (const auto& piece : pieces)
    parts.push_back(persistent_from_large(piece, d - 1, k, i, best_effort));
  PersistentSet merged = persistent_stack_merge(parts, n);
  ensure(merged.levels.min() == x0, "merged stack does not start at min X");
  PersistentSet lifted = persistent_lift(merged);
  return persistent_superset(lifted, X);
}

}  // namespace qstree
