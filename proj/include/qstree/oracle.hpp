#pragma once
// Brute-force ground truth, kept deliberately separate from the constructive
// selection code.  Everything here decides properties by exhaustive
// enumeration under an explicit budget: enumeration of quasistrong trees in a
// fixed canonical order, exact persistence decision, least-size searches, and
// an independent certificate checker that re-derives every claim from tree
// and largeness primitives alone.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "basics.hpp"
#include "certificate.hpp"
#include "kg.hpp"
#include "largeness.hpp"
#include "levels.hpp"
#include "persistence.hpp"
#include "quasistrong.hpp"
#include "superpersistence.hpp"
#include "tree.hpp"

namespace qstree {

// ---------------------------------------------------------------------------
// Budgets.  Every exhaustive search ticks a meter; exceeding any limit raises
// Err::exhausted, so a partial search can never masquerade as an answer.

struct SearchBudget {
  std::uint64_t max_trees = 200000;
  std::uint64_t max_colorings = 4000000;
  std::uint64_t timeout_ms = 120000;

  // Defaults, overridable through QSTREE_MAX_TREES, QSTREE_MAX_COLORINGS,
  // and QSTREE_TIMEOUT_MS.
  static SearchBudget from_env() {
    SearchBudget b;
    auto read = [](const char* name, std::uint64_t& slot) {
      if (const char* v = std::getenv(name)) {
        char* end = nullptr;
        unsigned long long parsed = std::strtoull(v, &end, 10);
        if (end && *end == '\0' && parsed > 0) slot = parsed;
      }
    };
    read("QSTREE_MAX_TREES", b.max_trees);
    read("QSTREE_MAX_COLORINGS", b.max_colorings);
    read("QSTREE_TIMEOUT_MS", b.timeout_ms);
    return b;
  }
};

class BudgetMeter {
 public:
  explicit BudgetMeter(const SearchBudget& b)
      : budget_(b), deadline_(std::chrono::steady_clock::now() +
                              std::chrono::milliseconds(b.timeout_ms)) {
    expect(b.max_trees > 0 && b.max_colorings > 0 && b.timeout_ms > 0,
           Err::bad_input, "search budget limits must all be positive");
  }

  void tick_tree() {
    ++trees_;
    if (trees_ > budget_.max_trees)
      fail(Err::exhausted, "tree enumeration budget exceeded",
           {{"max_trees", std::to_string(budget_.max_trees)}});
    maybe_check_time();
  }

  void tick_coloring() {
    ++colorings_;
    if (colorings_ > budget_.max_colorings)
      fail(Err::exhausted, "coloring enumeration budget exceeded",
           {{"max_colorings", std::to_string(budget_.max_colorings)}});
    maybe_check_time();
  }

  std::uint64_t trees() const { return trees_; }
  std::uint64_t colorings() const { return colorings_; }

 private:
  void maybe_check_time() {
    if (((trees_ + colorings_) & 0xFF) != 0) return;
    if (std::chrono::steady_clock::now() > deadline_)
      fail(Err::exhausted, "search timeout exceeded",
           {{"timeout_ms", std::to_string(budget_.timeout_ms)}});
  }

  SearchBudget budget_;
  std::chrono::steady_clock::time_point deadline_;
  std::uint64_t trees_ = 0;
  std::uint64_t colorings_ = 0;
};

// ---------------------------------------------------------------------------
// Canonical enumeration of the quasistrong trees over a level set.  Every
// emitted tree is the prefix closure of one choice of: a nonempty set of
// nodes at the bottom level, then, per node and per consecutive level pair,
// an unordered pair of extensions at the next level.  These are exactly the
// minimal quasistrong trees trimmed to the top level; every quasistrong tree
// contains one of them, and deleting nodes never helps a responder, so
// universal statements checked over this family hold over all of them.
//
// Order: bottom sets by ascending bitmask over the lex-ordered strings (bit 0
// = lex-least); then pair choices per node in node order, later nodes varying
// fastest; pairs (a, b), a < b, in lexicographic (a, b) order.

namespace detail {

inline BitString with_suffix(const BitString& base, std::uint64_t suffix_rank,
                             std::size_t suffix_len) {
  std::string s = base.str();
  for (std::size_t i = 0; i < suffix_len; ++i) {
    bool bit = (suffix_rank >> (suffix_len - 1 - i)) & 1;
    s.push_back(bit ? '1' : '0');
  }
  return BitString::unchecked(std::move(s));
}

// Recurses over the nodes of one level, assigning each its extension pair.
template <class Fn>
bool qs_assign_pairs(const std::vector<std::uint64_t>& levels, std::size_t li,
                     const std::vector<BitString>& level_nodes, std::size_t ni,
                     std::vector<BitString>& next_nodes, BudgetMeter& meter, Fn&& fn);

template <class Fn>
bool qs_next_level(const std::vector<std::uint64_t>& levels, std::size_t li,
                   const std::vector<BitString>& level_nodes, BudgetMeter& meter,
                   Fn&& fn) {
  if (li + 1 == levels.size()) {
    meter.tick_tree();
    return fn(FinTree::closure_of(level_nodes));
  }
  std::vector<BitString> next;
  return qs_assign_pairs(levels, li, level_nodes, 0, next, meter, fn);
}

template <class Fn>
bool qs_assign_pairs(const std::vector<std::uint64_t>& levels, std::size_t li,
                     const std::vector<BitString>& level_nodes, std::size_t ni,
                     std::vector<BitString>& next_nodes, BudgetMeter& meter, Fn&& fn) {
  if (ni == level_nodes.size()) {
    std::vector<BitString> sorted = next_nodes;
    std::sort(sorted.begin(), sorted.end());
    return qs_next_level(levels, li + 1, sorted, meter, fn);
  }
  std::size_t gap = static_cast<std::size_t>(levels[li + 1] - levels[li]);
  expect(gap <= 62, Err::bad_input, "level gap too wide to enumerate");
  std::uint64_t width = std::uint64_t(1) << gap;
  for (std::uint64_t a = 0; a < width; ++a) {
    for (std::uint64_t b = a + 1; b < width; ++b) {
      next_nodes.push_back(with_suffix(level_nodes[ni], a, gap));
      next_nodes.push_back(with_suffix(level_nodes[ni], b, gap));
      if (!qs_assign_pairs(levels, li, level_nodes, ni + 1, next_nodes, meter, fn))
        return false;
      next_nodes.pop_back();
      next_nodes.pop_back();
    }
  }
  return true;
}

}  // namespace detail

// Calls fn for each tree; fn returns false to stop.  Returns true iff the
// enumeration ran to completion.
template <class Fn>
bool for_each_qs_tree(const LevelSet& X, BudgetMeter& meter, Fn&& fn) {
  expect(!X.empty(), Err::bad_input, "tree enumeration needs a nonempty level set");
  expect(X.min() <= 16, Err::bad_input, "bottom level too high to enumerate");
  std::size_t x0 = static_cast<std::size_t>(X.min());
  std::size_t nstrings = std::size_t(1) << x0;
  std::vector<BitString> strings;
  strings.reserve(nstrings);
  for (std::uint64_t r = 0; r < nstrings; ++r)
    strings.push_back(detail::with_suffix(BitString(), r, x0));
  std::sort(strings.begin(), strings.end());

  std::vector<bool> mask(nstrings, false);
  auto advance = [&]() {
    for (std::size_t i = 0; i < nstrings; ++i) {
      if (!mask[i]) {
        mask[i] = true;
        for (std::size_t j = 0; j < i; ++j) mask[j] = false;
        return true;
      }
    }
    return false;
  };
  while (advance()) {
    std::vector<BitString> roots;
    for (std::size_t i = 0; i < nstrings; ++i)
      if (mask[i]) roots.push_back(strings[i]);
    if (!detail::qs_next_level(X.values(), 0, roots, meter, fn)) return false;
  }
  return true;
}

inline std::uint64_t count_qs_trees(const LevelSet& X, BudgetMeter& meter) {
  std::uint64_t n = 0;
  for_each_qs_tree(X, meter, [&](const FinTree&) {
    ++n;
    return true;
  });
  return n;
}

// Calls fn for every total k-coloring of the tree's nodes at leaf_level, in
// odometer order (first node most significant).  With symmetry set and k == 2
// the first node's color is pinned to 0; any property invariant under a
// global color swap loses nothing.
template <class Fn>
bool for_each_leaf_coloring(const FinTree& T, std::uint64_t leaf_level, int k,
                            bool symmetry, BudgetMeter& meter, Fn&& fn) {
  expect(k >= 1, Err::bad_input, "coloring enumeration needs k >= 1");
  std::vector<BitString> leaves = T.level(static_cast<std::size_t>(leaf_level));
  expect(!leaves.empty(), Err::bad_input, "tree has no nodes at the coloring level");
  std::vector<int> digit(leaves.size(), 0);
  // Digits below `stop` never vary; pinning the first digit to 0 is the k == 2
  // color-swap symmetry reduction.
  std::size_t stop = (symmetry && k == 2) ? 1 : 0;
  for (;;) {
    meter.tick_coloring();
    Coloring C;
    C.k = k;
    for (std::size_t i = 0; i < leaves.size(); ++i) C.assign[leaves[i]] = digit[i];
    if (!fn(C)) return false;
    std::size_t pos = leaves.size();
    bool rolled = true;
    while (pos > stop) {
      --pos;
      if (++digit[pos] < k) {
        rolled = false;
        break;
      }
      digit[pos] = 0;
    }
    if (rolled) return true;
  }
}

// ---------------------------------------------------------------------------
// Exact response search.  For candidate levels Y inside an instance whose
// nodes are colored at leaf_level: a response is a color c and a Y-quasistrong
// S <= T whose every leaf reaches color c.  A node at the top Y-level is good
// for c when it has a c-colored extension at leaf_level; a node at a lower
// Y-level is good when at least two of its next-Y-level extensions are.  A
// response exists iff some bottom-level node is good for some color, and the
// lex-least such choice assembles one.

inline std::optional<PersistResponse> find_response(const FinTree& T,
                                                    std::uint64_t leaf_level,
                                                    const LevelSet& Y,
                                                    const Coloring& C, int k) {
  expect(!Y.empty(), Err::bad_input, "response search needs candidate levels");
  expect(k >= 1 && k <= 31, Err::bad_input, "response search needs 1 <= k <= 31");
  const auto& ys = Y.values();
  // good[j][i]: color bitmask for the i-th node of T at level ys[j].
  std::vector<std::vector<std::uint32_t>> good(ys.size());
  std::vector<std::vector<BitString>> lv(ys.size());
  for (std::size_t j = 0; j < ys.size(); ++j)
    lv[j] = T.level(static_cast<std::size_t>(ys[j]));
  {
    std::size_t j = ys.size() - 1;
    good[j].assign(lv[j].size(), 0);
    for (std::size_t i = 0; i < lv[j].size(); ++i)
      for (const auto& tau :
           T.extensions(lv[j][i], static_cast<std::size_t>(leaf_level)))
        good[j][i] |= std::uint32_t(1) << C.at(tau);
  }
  for (std::size_t j = ys.size() - 1; j-- > 0;) {
    good[j].assign(lv[j].size(), 0);
    for (std::size_t i = 0; i < lv[j].size(); ++i) {
      for (int c = 0; c < k; ++c) {
        int hits = 0;
        for (const auto& tau :
             T.extensions(lv[j][i], static_cast<std::size_t>(ys[j + 1]))) {
          auto it = std::lower_bound(lv[j + 1].begin(), lv[j + 1].end(), tau);
          ensure(it != lv[j + 1].end() && *it == tau, "extension missing from level");
          if (good[j + 1][static_cast<std::size_t>(it - lv[j + 1].begin())] &
              (std::uint32_t(1) << c))
            if (++hits == 2) break;
        }
        if (hits >= 2) good[j][i] |= std::uint32_t(1) << c;
      }
    }
  }
  for (int c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < lv[0].size(); ++i) {
      if (!(good[0][i] & (std::uint32_t(1) << c))) continue;
      std::vector<BitString> frontier = {lv[0][i]};
      for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
        std::vector<BitString> next;
        for (const auto& sigma : frontier) {
          int taken = 0;
          for (const auto& tau :
               T.extensions(sigma, static_cast<std::size_t>(ys[j + 1]))) {
            auto it = std::lower_bound(lv[j + 1].begin(), lv[j + 1].end(), tau);
            if (good[j + 1][static_cast<std::size_t>(it - lv[j + 1].begin())] &
                (std::uint32_t(1) << c)) {
              next.push_back(tau);
              if (++taken == 2) break;
            }
          }
          ensure(taken == 2, "good node lost its good extensions");
        }
        frontier = std::move(next);
      }
      PersistResponse r;
      r.color = c;
      r.tree = FinTree::closure_of(frontier);
      return r;
    }
  }
  return std::nullopt;
}

inline bool response_exists(const FinTree& T, std::uint64_t leaf_level,
                            const LevelSet& Y, const Coloring& C, int k) {
  return find_response(T, leaf_level, Y, C, k).has_value();
}

// ---------------------------------------------------------------------------
// Exact persistence decision, straight from the definition: depth 0 is
// largeness; depth i >= 1 asks for a subset that is persistent at depth i-1
// and answers every (tree, leaf coloring) challenge over the full set.

struct PersistVerdict {
  bool persistent = false;
  std::optional<LevelSet> witness;            // surviving subset, when found
  std::optional<LevelSet> counter_candidate;  // first viable subset, when defeated
  std::optional<FinTree> counter_tree;        // a challenge defeating it
  std::optional<Coloring> counter_coloring;
  std::uint64_t trees_searched = 0;
  std::uint64_t colorings_searched = 0;
};

namespace detail {

struct OracleCache {
  Alpha alpha = Alpha::omega();
  int k = 1;
  bool symmetry = true;
  std::map<std::pair<std::vector<std::uint64_t>, int>, bool> memo;
};

inline bool persistent_rec(const LevelSet& X, int i, OracleCache& cache,
                           BudgetMeter& meter, PersistVerdict* report);

// All subsets of X that could witness depth i: large for alpha and persistent
// at depth i - 1.  Ordered by size, then lexicographically by values.
inline std::vector<LevelSet> viable_candidates(const LevelSet& X, int i,
                                               OracleCache& cache, BudgetMeter& meter) {
  const auto& vals = X.values();
  expect(vals.size() <= 20, Err::bad_input, "set too large for subset search");
  std::vector<std::vector<std::uint64_t>> subsets;
  for (std::uint64_t m = 1; m < (std::uint64_t(1) << vals.size()); ++m) {
    std::vector<std::uint64_t> v;
    for (std::size_t b = 0; b < vals.size(); ++b)
      if (m & (std::uint64_t(1) << b)) v.push_back(vals[b]);
    subsets.push_back(std::move(v));
  }
  std::sort(subsets.begin(), subsets.end(),
            [](const auto& a, const auto& b) {
              if (a.size() != b.size()) return a.size() < b.size();
              return a < b;
            });
  std::vector<LevelSet> out;
  for (auto& v : subsets) {
    LevelSet Y(v);
    if (!is_large(Y, cache.alpha)) continue;
    if (persistent_rec(Y, i - 1, cache, meter, nullptr)) out.push_back(std::move(Y));
  }
  return out;
}

inline bool persistent_rec(const LevelSet& X, int i, OracleCache& cache,
                           BudgetMeter& meter, PersistVerdict* report) {
  if (i == 0) return is_large(X, cache.alpha);
  auto key = std::make_pair(X.values(), i);
  if (report == nullptr) {
    auto it = cache.memo.find(key);
    if (it != cache.memo.end()) return it->second;
  }
  std::vector<LevelSet> candidates = viable_candidates(X, i, cache, meter);
  std::vector<std::size_t> alive(candidates.size());
  for (std::size_t j = 0; j < alive.size(); ++j) alive[j] = j;
  bool counter_recorded = false;
  if (!candidates.empty()) {
    for_each_qs_tree(X, meter, [&](const FinTree& T) {
      return for_each_leaf_coloring(
          T, X.max(), cache.k, cache.symmetry, meter, [&](const Coloring& C) {
            for (std::size_t j = 0; j < alive.size();) {
              if (response_exists(T, X.max(), candidates[alive[j]], C, cache.k)) {
                ++j;
                continue;
              }
              if (alive[j] == 0 && report && !counter_recorded) {
                counter_recorded = true;
                report->counter_candidate = candidates[0];
                report->counter_tree = T;
                report->counter_coloring = C;
              }
              alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(j));
            }
            return !alive.empty();
          });
    });
  }
  bool verdict = !alive.empty();
  cache.memo[key] = verdict;
  if (report) {
    report->persistent = verdict;
    if (verdict) report->witness = candidates[alive.front()];
  }
  return verdict;
}

}  // namespace detail

inline PersistVerdict check_persistent_exact(const LevelSet& X, Alpha alpha, int k,
                                             int i, BudgetMeter& meter,
                                             bool color_symmetry = true) {
  expect(!X.empty(), Err::bad_input, "persistence check needs a nonempty set");
  expect(k >= 1 && i >= 0, Err::bad_input, "persistence check needs k >= 1, i >= 0");
  detail::OracleCache cache;
  cache.alpha = alpha;
  cache.k = k;
  cache.symmetry = color_symmetry;
  PersistVerdict v;
  if (i == 0) {
    v.persistent = is_large(X, alpha);
  } else {
    detail::persistent_rec(X, i, cache, meter, &v);
  }
  v.trees_searched = meter.trees();
  v.colorings_searched = meter.colorings();
  return v;
}

inline PersistVerdict check_persistent_exact(const LevelSet& X, Alpha alpha, int k,
                                             int i,
                                             const SearchBudget& budget = SearchBudget::from_env(),
                                             bool color_symmetry = true) {
  BudgetMeter meter(budget);
  return check_persistent_exact(X, alpha, k, i, meter, color_symmetry);
}

// ---------------------------------------------------------------------------
// Least-size searches over the consecutive family {1..n}.  For each n the
// property must hold for every admissible challenge; the first n where it
// does is reported together with the size at which the library's bound
// guarantees it.  Budget exhaustion propagates; it never reads as an answer.

struct MinimalSizeResult {
  bool found = false;
  std::uint64_t least_n = 0;
  std::uint64_t n_max = 0;
  std::string guaranteed_size;  // exact decimal, or "" when no bound applies
};

namespace detail {

inline LevelSet consecutive(std::uint64_t n) {
  std::vector<std::uint64_t> v(n);
  for (std::uint64_t i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i + 1;
  return LevelSet(v);
}

}  // namespace detail

struct VerifyContext;
struct VerifyReport;
inline VerifyReport verify_certificate(const Certificate& cert, const VerifyContext& ctx);

// Every dense-enough subset of every tree's top level must admit a selection
// whose certificate passes the independent checker.
inline MinimalSizeResult minimal_size_search_kg(std::uint64_t m, const Density& delta,
                                                std::uint64_t n_max, BudgetMeter& meter);

// The exact persistence decision must come out true.
inline MinimalSizeResult minimal_size_search_persistence(Alpha alpha, int k, int i,
                                                         std::uint64_t n_max,
                                                         BudgetMeter& meter,
                                                         bool color_symmetry = true) {
  MinimalSizeResult r;
  r.n_max = n_max;
  r.guaranteed_size = required_omega_size(1, static_cast<std::uint64_t>(k),
                                          static_cast<std::uint64_t>(i))
                          .str();
  for (std::uint64_t n = 1; n <= n_max; ++n) {
    detail::OracleCache cache;
    cache.alpha = alpha;
    cache.k = k;
    cache.symmetry = color_symmetry;
    LevelSet X = detail::consecutive(n);
    bool ok = (i == 0) ? is_large(X, alpha)
                       : detail::persistent_rec(X, i, cache, meter, nullptr);
    if (ok) {
      r.found = true;
      r.least_n = n;
      return r;
    }
  }
  return r;
}

// Every full-tree coloring of every tree must yield a verified certificate
// from the best-effort end-to-end construction.
inline MinimalSizeResult minimal_size_search_prehom(std::uint32_t d, int k,
                                                    std::uint64_t n_max,
                                                    BudgetMeter& meter);

// ---------------------------------------------------------------------------
// Independent certificate checking.  Uses only tree navigation, quasistrong
// and largeness primitives; never calls the selection code it audits.

struct VerifyContext {
  const FinTree* instance = nullptr;          // tree the certificate selects from
  const TreeFamily* family = nullptr;         // per-key instances, when keyed
  const Coloring* coloring = nullptr;         // coloring the claims refer to
  const std::vector<BitString>* dense = nullptr;  // target set for reach checks
};

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool valid = false;

  const CheckResult* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

namespace detail {

inline void add_check(VerifyReport& r, std::string name, bool pass,
                      std::string detail = "") {
  r.checks.push_back({std::move(name), pass, std::move(detail)});
}

inline bool prefix_closed(const FinTree& S) {
  for (const auto& n : S.nodes())
    if (!n.empty() && !S.contains(n.prefix(n.size() - 1))) return false;
  return true;
}

// First consecutive-level node pair in S with no node of color c on the path
// between them; nullopt when S is prehomogeneous for c over these levels.
inline std::optional<std::pair<BitString, BitString>> prehom_defect(
    const FinTree& S, const Coloring& C, const LevelSet& levels, int c) {
  const auto& ys = levels.values();
  for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
    for (const auto& sigma : S.level(static_cast<std::size_t>(ys[j]))) {
      for (const auto& tau :
           S.extensions(sigma, static_cast<std::size_t>(ys[j + 1]))) {
        bool hit = false;
        for (std::size_t L = sigma.size(); L <= tau.size() && !hit; ++L) {
          BitString zeta = tau.prefix(L);
          if (S.contains(zeta) && C.defined(zeta) && C.at(zeta) == c) hit = true;
        }
        if (!hit) return std::make_pair(sigma, tau);
      }
    }
  }
  return std::nullopt;
}

}  // namespace detail

inline VerifyReport verify_certificate(const Certificate& cert,
                                       const VerifyContext& ctx) {
  expect(!cert.levels.empty(), Err::malformed_certificate,
         "certificate carries no selected levels");
  expect(!cert.trees.empty(), Err::malformed_certificate,
         "certificate carries no selected trees");
  expect(cert.k >= 1, Err::malformed_certificate, "certificate has k < 1");
  bool colored = cert.kind != CertKind::kg_extract;
  if (colored)
    for (const auto& [rho, S] : cert.trees) {
      (void)S;
      expect(cert.colors.count(rho) != 0, Err::malformed_certificate,
             "certificate tree \"" + rho.str() + "\" has no color claim");
    }
  switch (cert.kind) {
    case CertKind::kg_extract:
      expect(ctx.instance != nullptr && ctx.dense != nullptr, Err::bad_input,
             "checking a selection certificate needs the tree and the dense set");
      break;
    case CertKind::persist_respond:
      expect(ctx.instance != nullptr && ctx.coloring != nullptr, Err::bad_input,
             "checking a response certificate needs the tree and the coloring");
      break;
    case CertKind::prehom:
    case CertKind::main:
      expect(ctx.coloring != nullptr, Err::bad_input,
             "checking a prehomogeneity certificate needs the coloring");
      break;
  }

  VerifyReport r;
  detail::add_check(r, "levels-within-instance", cert.X.empty() ||
                    cert.levels.subset_of(cert.X));
  if (cert.kind == CertKind::prehom || cert.kind == CertKind::main)
    detail::add_check(r, "min-preserved",
                      !cert.X.empty() && cert.levels.min() == cert.X.min(),
                      "selected levels must keep the instance minimum");
  if (cert.alpha_claim)
    detail::add_check(r, "levels-largeness", is_large(cert.levels, *cert.alpha_claim),
                      cert.alpha_claim->str());

  std::vector<BitString> dense_sorted;
  if (ctx.dense != nullptr) {
    dense_sorted = *ctx.dense;
    std::sort(dense_sorted.begin(), dense_sorted.end());
  }

  for (const auto& [rho, S] : cert.trees) {
    std::string tag = "tree[" + (rho.empty() ? std::string("-") : rho.str()) + "]-";
    detail::add_check(r, tag + "nonempty", !S.empty());
    if (S.empty()) continue;
    detail::add_check(r, tag + "prefix-closed", detail::prefix_closed(S));
    if (ctx.instance != nullptr)
      detail::add_check(r, tag + "within-instance", S.subset_of(*ctx.instance));
    if (ctx.family != nullptr) {
      auto it = ctx.family->members.find(rho);
      detail::add_check(r, tag + "within-member",
                        it != ctx.family->members.end() && S.subset_of(it->second),
                        it == ctx.family->members.end() ? "no family member with this key"
                                                        : "");
    }
    detail::add_check(r, tag + "quasistrong", is_quasistrong(S, cert.levels),
                      "for levels " + cert.levels.str());
    int c = 0;
    if (colored) {
      c = cert.colors.at(rho);
      detail::add_check(r, tag + "color-range", c >= 0 && c < cert.k);
      if (c < 0 || c >= cert.k) continue;
    }
    switch (cert.kind) {
      case CertKind::kg_extract: {
        bool all = true;
        std::string det;
        for (const auto& top : S.level(static_cast<std::size_t>(cert.levels.max()))) {
          bool reached = false;
          for (const auto& d : dense_sorted)
            if (d.size() >= top.size() && d.prefix(top.size()) == top &&
                ctx.instance->contains(d)) {
              reached = true;
              break;
            }
          if (!reached) {
            all = false;
            det = "top \"" + top.str() + "\" reaches no dense node";
            break;
          }
        }
        detail::add_check(r, tag + "tops-reach-dense", all, det);
        break;
      }
      case CertKind::persist_respond: {
        bool all = true;
        std::string det;
        std::size_t leaf_level = static_cast<std::size_t>(cert.X.max());
        for (const auto& top : S.level(static_cast<std::size_t>(cert.levels.max()))) {
          bool reached = false;
          for (const auto& tau : ctx.instance->extensions(top, leaf_level))
            if (ctx.coloring->defined(tau) && ctx.coloring->at(tau) == c) {
              reached = true;
              break;
            }
          if (!reached) {
            all = false;
            det = "top \"" + top.str() + "\" reaches no node of color " +
                  std::to_string(c);
            break;
          }
        }
        detail::add_check(r, tag + "tops-reach-color", all, det);
        break;
      }
      case CertKind::prehom:
      case CertKind::main: {
        auto defect = detail::prehom_defect(S, *ctx.coloring, cert.levels, c);
        detail::add_check(r, tag + "prehomogeneous", !defect.has_value(),
                          defect ? "no color-" + std::to_string(c) +
                                       " node between \"" + defect->first.str() +
                                       "\" and \"" + defect->second.str() + "\""
                                 : "color " + std::to_string(c));
        break;
      }
    }
  }
  r.valid = std::all_of(r.checks.begin(), r.checks.end(),
                        [](const CheckResult& c) { return c.pass; });
  return r;
}

// ---------------------------------------------------------------------------
// Deferred bodies that need verify_certificate.

inline MinimalSizeResult minimal_size_search_kg(std::uint64_t m, const Density& delta,
                                                std::uint64_t n_max, BudgetMeter& meter) {
  expect(m >= 1, Err::bad_input, "selection search needs m >= 1");
  MinimalSizeResult r;
  r.n_max = n_max;
  r.guaranteed_size = (bound_g(BigInt(m), delta) + 1).str();
  for (std::uint64_t n = 1; n <= n_max; ++n) {
    LevelSet X = detail::consecutive(n);
    bool all_ok = true;
    for_each_qs_tree(X, meter, [&](const FinTree& T) {
      std::vector<BitString> leaves = T.level(static_cast<std::size_t>(X.max()));
      expect(leaves.size() <= 24, Err::bad_input,
             "too many top nodes to enumerate dense subsets");
      BigInt required = detail::ceil_mul(delta, BigInt(leaves.size()));
      for (std::uint64_t sel = 1; sel < (std::uint64_t(1) << leaves.size()); ++sel) {
        meter.tick_coloring();
        std::vector<BitString> A;
        for (std::size_t b = 0; b < leaves.size(); ++b)
          if (sel & (std::uint64_t(1) << b)) A.push_back(leaves[b]);
        if (BigInt(A.size()) < required) continue;
        try {
          KgResult kg = kg_extract(T, X, A, m, delta);
          VerifyContext ctx;
          ctx.instance = &T;
          ctx.dense = &A;
          if (!verify_certificate(kg.cert, ctx).valid) all_ok = false;
        } catch (const Error& e) {
          if (e.code() == Err::exhausted || e.code() == Err::internal) throw;
          all_ok = false;
        }
        if (!all_ok) break;
      }
      return all_ok;
    });
    if (all_ok) {
      r.found = true;
      r.least_n = n;
      return r;
    }
  }
  return r;
}

inline MinimalSizeResult minimal_size_search_prehom(std::uint32_t d, int k,
                                                    std::uint64_t n_max,
                                                    BudgetMeter& meter) {
  expect(d >= 1 && k >= 1, Err::bad_input, "search needs d >= 1, k >= 1");
  MinimalSizeResult r;
  r.n_max = n_max;
  for (std::uint64_t n = 1; n <= n_max; ++n) {
    LevelSet X = detail::consecutive(n);
    bool all_ok = true;
    for_each_qs_tree(X, meter, [&](const FinTree& T) {
      // Odometer over total colorings of all tree nodes.
      std::vector<BitString> nodes = T.nodes();
      std::vector<int> digit(nodes.size(), 0);
      for (;;) {
        meter.tick_coloring();
        Coloring C;
        C.k = k;
        for (std::size_t i = 0; i < nodes.size(); ++i) C.assign[nodes[i]] = digit[i];
        try {
          MainResult mr = prehomogeneous_main(X, d, k, T, C, /*best_effort=*/true);
          VerifyContext ctx;
          ctx.instance = &T;
          ctx.coloring = &C;
          if (!verify_certificate(mr.cert, ctx).valid) all_ok = false;
        } catch (const Error& e) {
          if (e.code() == Err::exhausted || e.code() == Err::internal) throw;
          all_ok = false;
        }
        if (!all_ok) return false;
        std::size_t pos = nodes.size();
        bool rolled = true;
        while (pos > 0) {
          --pos;
          if (++digit[pos] < k) {
            rolled = false;
            break;
          }
          digit[pos] = 0;
        }
        if (rolled) return true;
      }
    });
    if (all_ok) {
      r.found = true;
      r.least_n = n;
      return r;
    }
  }
  return r;
}

}  // namespace qstree
