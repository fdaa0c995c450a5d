#pragma once
// Quasistrongness of a tree with respect to a level set, two-way pruning to a
// sub-level-set, and prehomogeneity of colored quasistrong trees.
//
// T is X-quasistrong (X = {x_0 < ... < x_t}) iff T ∩ 2^{x_j} is nonempty for
// every j and every node at level x_j has exactly two extensions at level
// x_{j+1}.  For a stack of sets the condition is required of each member.

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "basics.hpp"
#include "levels.hpp"
#include "tree.hpp"

namespace qstree {

inline bool is_quasistrong(const FinTree& T, const LevelSet& X) {
  if (X.empty()) return true;
  for (std::size_t j = 0; j < X.size(); ++j)
    if (T.level_count(X[j]) == 0) return false;
  for (std::size_t j = 0; j + 1 < X.size(); ++j) {
    auto [lo, hi] = T.level_range(X[j]);
    for (std::size_t i = lo; i < hi; ++i)
      if (T.count_extensions(T.nodes()[i], X[j + 1]) != 2) return false;
  }
  return true;
}

inline bool is_quasistrong(const FinTree& T, const StackOfSets& stack) {
  for (const auto& X : stack)
    if (!is_quasistrong(T, X)) return false;
  return true;
}

// Prune an X-quasistrong tree to a Y-quasistrong subtree, Y ⊆ X: keep every
// node at level min Y, then per kept node the two least extensions at each
// following Y-level; the result is the prefix closure of the final kept nodes.
inline FinTree prune_to_quasistrong(const FinTree& T, const LevelSet& X, const LevelSet& Y) {
  expect(!Y.empty(), Err::bad_input, "prune target must be nonempty");
  expect(Y.subset_of(X), Err::bad_input, "prune target must be a subset of the tree's levels");
  expect(is_quasistrong(T, X), Err::not_quasistrong,
         "tree is not quasistrong for " + X.str());
  std::vector<BitString> kept = T.level(Y.min());
  for (std::size_t j = 0; j + 1 < Y.size(); ++j) {
    std::vector<BitString> next;
    next.reserve(kept.size() * 2);
    for (const auto& sigma : kept) {
      auto exts = T.extensions(sigma, Y[j + 1]);
      ensure(exts.size() >= 2, "quasistrong node with fewer than two extensions");
      next.push_back(exts[0]);
      next.push_back(exts[1]);
    }
    kept = std::move(next);
  }
  return FinTree::closure_of(kept);
}

// Colors c such that every pair σ ⊆ τ of nodes of T at consecutive levels of
// X has an intermediate node ζ (σ ⊆ ζ ⊆ τ) with C(ζ) = c.  Requires C total
// on T.  Returns the set of all such colors (empty = not prehomogeneous).
inline std::set<int> prehomogeneous_colors(const FinTree& T, const Coloring& C,
                                           const LevelSet& X) {
  for (const auto& n : T.nodes())
    expect(C.defined(n), Err::partial_coloring,
           "coloring undefined on tree node \"" + n.str() + "\"");
  std::set<int> colors;
  for (int c = 0; c < C.k; ++c) colors.insert(c);
  for (std::size_t j = 0; j + 1 < X.size() && !colors.empty(); ++j) {
    auto [lo, hi] = T.level_range(X[j + 1]);
    for (std::size_t i = lo; i < hi && !colors.empty(); ++i) {
      const BitString& tau = T.nodes()[i];
      if (!T.contains(tau.prefix(static_cast<std::size_t>(X[j])))) continue;
      std::set<int> on_path;
      for (std::size_t l = static_cast<std::size_t>(X[j]); l <= tau.size(); ++l) {
        BitString zeta = tau.prefix(l);
        if (T.contains(zeta)) on_path.insert(C.at(zeta));
      }
      std::set<int> keep;
      std::set_intersection(colors.begin(), colors.end(), on_path.begin(), on_path.end(),
                            std::inserter(keep, keep.begin()));
      colors = std::move(keep);
    }
  }
  return colors;
}

inline bool is_prehomogeneous(const FinTree& T, const Coloring& C, const LevelSet& X) {
  return !prehomogeneous_colors(T, C, X).empty();
}

struct StackPrehomReport {
  std::vector<std::set<int>> per_member;
  std::set<int> uniform;  // colors valid for every member
};

inline StackPrehomReport prehomogeneous_colors(const FinTree& T, const Coloring& C,
                                               const StackOfSets& stack) {
  StackPrehomReport r;
  for (int c = 0; c < C.k; ++c) r.uniform.insert(c);
  for (const auto& X : stack) {
    r.per_member.push_back(prehomogeneous_colors(T, C, X));
    std::set<int> keep;
    std::set_intersection(r.uniform.begin(), r.uniform.end(), r.per_member.back().begin(),
                          r.per_member.back().end(), std::inserter(keep, keep.begin()));
    r.uniform = std::move(keep);
  }
  return r;
}

}  // namespace qstree
