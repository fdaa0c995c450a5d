#pragma once
// Shared helpers for the test suite: canonical small instances, complete
// binary trees, blanket colorings, and a tiny deterministic RNG wrapper.

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <qstree/oracle.hpp>
#include <qstree/superpersistence.hpp>

namespace testsup {

using namespace qstree;

// All binary strings of length <= height, as a tree.
inline FinTree complete_tree(std::size_t height) {
  std::vector<BitString> nodes;
  for (std::size_t len = 0; len <= height; ++len)
    for (std::uint64_t r = 0; r < (std::uint64_t{1} << len); ++r)
      nodes.push_back(encode_rank(r, len));
  return FinTree::from_nodes(std::move(nodes));
}

// Color every length-`level` node of T by fn; all other nodes stay uncolored.
inline Coloring color_level(const FinTree& T, std::size_t level, int k,
                            const std::function<int(const BitString&)>& fn) {
  Coloring C;
  C.k = k;
  for (const auto& nu : T.level(level)) C.set(nu, fn(nu));
  return C;
}

// Color every node of T by fn.
inline Coloring color_all(const FinTree& T, int k,
                          const std::function<int(const BitString&)>& fn) {
  Coloring C;
  C.k = k;
  for (const auto& nu : T.nodes()) C.set(nu, fn(nu));
  return C;
}

inline LevelSet consecutive(std::uint64_t lo, std::uint64_t hi) {
  std::vector<std::uint64_t> v;
  for (std::uint64_t x = lo; x <= hi; ++x) v.push_back(x);
  return LevelSet(std::move(v));
}

// A generous search budget for in-test oracle calls; per-test limits stay
// far below these.
inline SearchBudget wide_budget() {
  SearchBudget b;
  b.max_trees = 5'000'000;
  b.max_colorings = 200'000'000;
  b.timeout_ms = 600'000;
  return b;
}

// A random minimal X-quasistrong tree: one random junction node per branch.
// Level gaps must stay <= 20 so suffix choices fit comfortably in a word.
inline FinTree random_qs_tree(const LevelSet& X, std::mt19937_64& rng) {
  const auto& xs = X.values();
  std::vector<BitString> tops;
  std::uint64_t root_rank =
      std::uniform_int_distribution<std::uint64_t>(0, (1ull << xs[0]) - 1)(rng);
  std::vector<BitString> frontier = {encode_rank(root_rank, xs[0])};
  for (std::size_t j = 0; j + 1 < xs.size(); ++j) {
    std::uint64_t gap = xs[j + 1] - xs[j];
    std::uint64_t options = 1ull << gap;
    std::vector<BitString> next;
    next.reserve(frontier.size() * 2);
    for (const auto& nu : frontier) {
      std::uint64_t a = std::uniform_int_distribution<std::uint64_t>(0, options - 1)(rng);
      std::uint64_t b = std::uniform_int_distribution<std::uint64_t>(0, options - 2)(rng);
      if (b >= a) ++b;
      next.push_back(BitString::unchecked(nu.str() + encode_rank(a, gap).str()));
      next.push_back(BitString::unchecked(nu.str() + encode_rank(b, gap).str()));
    }
    frontier = std::move(next);
  }
  return FinTree::closure_of(frontier);
}

}  // namespace testsup
