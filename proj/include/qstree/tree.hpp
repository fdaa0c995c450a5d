#pragma once
// Finite prefix-closed binary trees, stored as a canonically sorted node
// vector (length first, then lex).  Level and extension queries are
// contiguous subranges found by binary search.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "basics.hpp"
#include "levels.hpp"

namespace qstree {

class FinTree {
 public:
  FinTree() = default;

  // Sorts, deduplicates, and (by default) requires prefix closure.
  static FinTree from_nodes(std::vector<BitString> nodes, bool require_closed = true) {
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    FinTree t;
    t.nodes_ = std::move(nodes);
    if (require_closed)
      for (const auto& n : t.nodes_)
        if (!n.empty())
          expect(t.contains(n.prefix(n.size() - 1)), Err::bad_input,
                 "tree is not prefix-closed at \"" + n.str() + "\"");
    return t;
  }

  // Prefix closure of the given nodes.
  static FinTree closure_of(const std::vector<BitString>& tops) {
    std::vector<BitString> all;
    for (const auto& t : tops)
      for (std::size_t l = 0; l <= t.size(); ++l) all.push_back(t.prefix(l));
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    FinTree t;
    t.nodes_ = std::move(all);
    return t;
  }

  const std::vector<BitString>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  std::size_t height() const { return nodes_.empty() ? 0 : nodes_.back().size(); }

  bool contains(const BitString& b) const {
    return std::binary_search(nodes_.begin(), nodes_.end(), b);
  }

  // [begin, end) index range of the nodes of length L.
  std::pair<std::size_t, std::size_t> level_range(std::size_t L) const {
    auto cmp_len = [](const BitString& a, std::size_t len) { return a.size() < len; };
    auto lo = std::lower_bound(nodes_.begin(), nodes_.end(), L, cmp_len);
    auto hi = std::lower_bound(nodes_.begin(), nodes_.end(), L + 1, cmp_len);
    return {static_cast<std::size_t>(lo - nodes_.begin()),
            static_cast<std::size_t>(hi - nodes_.begin())};
  }

  std::size_t level_count(std::size_t L) const {
    auto [lo, hi] = level_range(L);
    return hi - lo;
  }

  std::vector<BitString> level(std::size_t L) const {
    auto [lo, hi] = level_range(L);
    return {nodes_.begin() + lo, nodes_.begin() + hi};
  }

  // [begin, end) index range of the length-L extensions of p (L >= |p|).
  std::pair<std::size_t, std::size_t> extension_range(const BitString& p, std::size_t L) const {
    ensure(L >= p.size(), "extension_range below the node");
    BitString lo = BitString::unchecked(p.str() + std::string(L - p.size(), '0'));
    BitString hi = BitString::unchecked(p.str() + std::string(L - p.size(), '1'));
    auto b = std::lower_bound(nodes_.begin(), nodes_.end(), lo);
    auto e = std::upper_bound(nodes_.begin(), nodes_.end(), hi);
    return {static_cast<std::size_t>(b - nodes_.begin()),
            static_cast<std::size_t>(e - nodes_.begin())};
  }

  std::size_t count_extensions(const BitString& p, std::size_t L) const {
    auto [lo, hi] = extension_range(p, L);
    return hi - lo;
  }

  std::vector<BitString> extensions(const BitString& p, std::size_t L) const {
    auto [lo, hi] = extension_range(p, L);
    return {nodes_.begin() + lo, nodes_.begin() + hi};
  }

  // Least extension of p at level L, if any.
  std::optional<BitString> first_extension(const BitString& p, std::size_t L) const {
    auto [lo, hi] = extension_range(p, L);
    if (lo == hi) return std::nullopt;
    return nodes_[lo];
  }

  bool subset_of(const FinTree& o) const {
    return std::includes(o.nodes_.begin(), o.nodes_.end(), nodes_.begin(), nodes_.end());
  }

  FinTree node_union(const FinTree& o) const {
    std::vector<BitString> out;
    std::set_union(nodes_.begin(), nodes_.end(), o.nodes_.begin(), o.nodes_.end(),
                   std::back_inserter(out));
    FinTree t;
    t.nodes_ = std::move(out);
    return t;
  }

  template <class Pred>
  FinTree filter(Pred keep) const {
    FinTree t;
    for (const auto& n : nodes_)
      if (keep(n)) t.nodes_.push_back(n);
    return t;
  }

  bool operator==(const FinTree&) const = default;

 private:
  std::vector<BitString> nodes_;
};

// Nodes compatible with rho (its prefixes and its extensions).
inline FinTree cone(const FinTree& T, const BitString& rho) {
  return T.filter([&](const BitString& n) { return n.compatible(rho); });
}

// Nodes of length <= y.
inline FinTree restrict_height(const FinTree& T, std::size_t y) {
  return T.filter([&](const BitString& n) { return n.size() <= y; });
}

// A k-coloring of tree nodes, possibly partial.
struct Coloring {
  int k = 1;
  std::map<BitString, int> assign;

  bool defined(const BitString& b) const { return assign.count(b) != 0; }

  int at(const BitString& b) const {
    auto it = assign.find(b);
    expect(it != assign.end(), Err::partial_coloring,
           "coloring undefined at \"" + b.str() + "\"");
    ensure(it->second >= 0 && it->second < k, "color out of range");
    return it->second;
  }

  void set(const BitString& b, int c) {
    expect(c >= 0 && c < k, Err::bad_input, "color out of range");
    assign[b] = c;
  }
};

// A family of trees with a common root level: member keyed by its root node.
struct TreeFamily {
  std::uint64_t root_level = 0;
  std::map<BitString, FinTree> members;

  void validate() const {
    for (const auto& [rho, T] : members) {
      expect(rho.size() == root_level, Err::bad_input,
             "family key \"" + rho.str() + "\" does not sit at the root level");
      auto lv = T.level(root_level);
      expect(lv.size() == 1 && lv[0] == rho, Err::bad_input,
             "family member \"" + rho.str() + "\" must have exactly that node at the root level");
      for (const auto& n : T.nodes())
        expect(n.compatible(rho), Err::bad_input,
               "family member \"" + rho.str() + "\" contains the incompatible node \"" +
                   n.str() + "\"");
    }
  }
};

}  // namespace qstree
