#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace qstree;
using testsup::color_level;
using testsup::complete_tree;
using testsup::consecutive;
using testsup::wide_budget;

namespace {

// Verify a response against (T, C) with the independent checker.
bool response_verifies(const PersistentSet& P, const FinTree& T, const Coloring& C,
                       const PersistResponse& r) {
  Certificate cert;
  cert.kind = CertKind::persist_respond;
  cert.X = P.levels;
  cert.levels = P.witness->levels;
  cert.trees[BitString()] = r.tree;
  cert.colors[BitString()] = r.color;
  cert.k = P.k;
  VerifyContext ctx;
  ctx.instance = &T;
  ctx.coloring = &C;
  return verify_certificate(cert, ctx).valid;
}

// A synthetic depth-1 persistent set whose responder is the exhaustive
// search itself: sound on every challenge where a response exists.
PersistentSet dp_backed(const LevelSet& levels, const LevelSet& wit, Alpha a, int k) {
  PersistentSet p;
  p.levels = levels;
  p.alpha = a;
  p.k = k;
  p.depth = 1;
  p.witness = std::make_shared<const PersistentSet>(make_depth0(wit, a, k));
  std::uint64_t leaf = levels.max();
  LevelSet w = wit;
  p.respond = [leaf, w, k](const FinTree& T, const Coloring& C) {
    auto r = find_response(T, leaf, w, C, k);
    expect(r.has_value(), Err::selection_failed, "synthetic responder found no response");
    return *r;
  };
  return p;
}

}  // namespace

TEST_CASE("witness size bound pins") {
  CHECK(bound_gbar(4, 2, 0) == 7);
  CHECK(bound_gbar(4, 2, 1) == 33);
  CHECK(bound_gbar(1, 1, 1) == 5);
  CHECK(required_omega_size(1, 1, 1) == 6);
  CHECK(required_omega_size(1, 2, 1) == 13);
  CHECK(required_omega_size(3, 1, 0) == 4);
  CHECK(required_omega_size(1, 1, 2) == 16);
}

TEST_CASE("depth-0 sets carry largeness only") {
  PersistentSet p = persistent_omega(LevelSet({2, 3, 4}), 3, 0);
  CHECK(p.depth == 0);
  CHECK(p.alpha == Alpha::omega());
  CHECK(p.witness == nullptr);
  CHECK(p.chain() == std::vector<LevelSet>{LevelSet({2, 3, 4})});
  try {
    persistent_omega(LevelSet({5, 6}), 1, 0);
    FAIL("unreachable");
  } catch (const Error& e) {
    CHECK(e.code() == Err::too_small);
    CHECK(e.detail().at("required") == "6");
  }
}

TEST_CASE("depth-1 construction answers every quasistrong challenge") {
  LevelSet X = consecutive(1, 6);
  PersistentSet P = persistent_omega(X, 1, 1);
  CHECK(P.depth == 1);
  CHECK(P.witness->levels == LevelSet({1, 3}));
  CHECK(P.chain() == std::vector<LevelSet>{X, LevelSet({1, 3})});

  BudgetMeter meter(wide_budget());
  std::size_t challenged = 0;
  for_each_qs_tree(X, meter, [&](const FinTree& T) {
    Coloring C = color_level(T, 6, 1, [](const BitString&) { return 0; });
    PersistResponse r = P.respond(T, C);
    CHECK(r.color == 0);
    CHECK(is_quasistrong(r.tree, P.witness->levels));
    CHECK(r.tree.subset_of(T));
    CHECK(response_verifies(P, T, C, r));
    // The exhaustive search agrees a response exists here.
    CHECK(find_response(T, 6, P.witness->levels, C, 1).has_value());
    ++challenged;
    return true;
  });
  CHECK(challenged == 3);
}

TEST_CASE("two colors: the responder picks a color it can serve") {
  LevelSet X = consecutive(1, 13);
  PersistentSet P = persistent_omega(X, 2, 1);
  CHECK(P.witness->levels == LevelSet({1, 4}));
  // One fixed challenge: the full binary tree under root "0", leaves colored
  // by their second bit.
  std::vector<BitString> tops;
  for (std::uint64_t r = 0; r < (1ull << 12); ++r)
    tops.push_back(BitString::unchecked("0" + encode_rank(r, 12).str()));
  FinTree T = FinTree::closure_of(tops);
  Coloring C = color_level(T, 13, 2, [](const BitString& s) { return s[1] == '1' ? 1 : 0; });
  PersistResponse r = P.respond(T, C);
  CHECK(is_quasistrong(r.tree, LevelSet({1, 4})));
  CHECK(response_verifies(P, T, C, r));
}

TEST_CASE("too-small sets are rejected with the exact deficit") {
  try {
    persistent_omega(consecutive(1, 12), 2, 1);
    FAIL("unreachable");
  } catch (const Error& e) {
    CHECK(e.code() == Err::too_small);
    CHECK(e.detail().at("required") == "13");
    CHECK(e.detail().at("actual") == "12");
  }
}

TEST_CASE("supersets respond by pruning and recoloring") {
  PersistentSet P = persistent_omega(consecutive(1, 6), 1, 1);
  LevelSet X2 = consecutive(1, 8);
  PersistentSet Q = persistent_superset(P, X2);
  CHECK(Q.levels == X2);
  CHECK(Q.witness->levels == LevelSet({1, 3}));
  // Challenge: full binary tree over levels 1..8 below root "0".
  std::vector<BitString> tops;
  for (std::uint64_t r = 0; r < (1ull << 7); ++r)
    tops.push_back(BitString::unchecked("0" + encode_rank(r, 7).str()));
  FinTree T = FinTree::closure_of(tops);
  Coloring C = color_level(T, 8, 1, [](const BitString&) { return 0; });
  PersistResponse r = Q.respond(T, C);
  CHECK(is_quasistrong(r.tree, LevelSet({1, 3})));
  CHECK(response_verifies(Q, T, C, r));
  CHECK_THROWS_AS(persistent_superset(P, LevelSet({2, 3, 4})), Error);
}

TEST_CASE("pointwise-shrinking maps conjugate the challenge") {
  // X = {1,2,3,4,5,7} is exactly big enough; map it onto {1,...,6}.
  LevelSet X({1, 2, 3, 4, 5, 7});
  PersistentSet P = persistent_omega(X, 1, 1);
  LevelSet Y = consecutive(1, 6);
  PersistentSet Q = persistent_map(P, Y);
  CHECK(Q.levels == Y);
  CHECK(Q.witness->levels == LevelSet({1, 3}));
  std::vector<BitString> tops;
  for (std::uint64_t r = 0; r < (1ull << 5); ++r)
    tops.push_back(BitString::unchecked("0" + encode_rank(r, 5).str()));
  FinTree T = FinTree::closure_of(tops);
  Coloring C = color_level(T, 6, 1, [](const BitString&) { return 0; });
  PersistResponse r = Q.respond(T, C);
  CHECK(is_quasistrong(r.tree, LevelSet({1, 3})));
  CHECK(r.tree.subset_of(T));
  CHECK(response_verifies(Q, T, C, r));
  // Increasing any level is rejected.
  CHECK_THROWS_AS(persistent_map(P, LevelSet({1, 2, 3, 4, 6, 8})), Error);
  // Level-count mismatch is rejected.
  CHECK_THROWS_AS(persistent_map(P, LevelSet({1, 2, 3})), Error);
}

TEST_CASE("stack responses connect members bottom to top") {
  std::vector<PersistentSet> Ps = {
      dp_backed(consecutive(1, 3), LevelSet({1, 3}), Alpha::omega(), 2),
      dp_backed(consecutive(4, 6), LevelSet({4, 6}), Alpha::omega(), 2)};
  FinTree T = complete_tree(6);
  Coloring C = color_level(T, 6, 2, [](const BitString& s) {
    int ones = 0;
    for (std::size_t j = 0; j < s.size(); ++j) ones += s[j] == '1';
    return ones % 2;
  });
  PersistResponse r = persistent_stack_respond(Ps, T, C);
  StackOfSets wits = {LevelSet({1, 3}), LevelSet({4, 6})};
  CHECK(is_quasistrong(r.tree, wits));
  CHECK(r.tree.subset_of(T));
  // Member-1 tops continue into member 2 within the response tree.
  for (const auto& sigma : r.tree.level(3))
    CHECK(r.tree.count_extensions(sigma, 4) >= 1);
  // Final tops reach a leaf of the response color in T.
  for (const auto& top : r.tree.level(6)) CHECK(C.at(top) == r.color);
}

TEST_CASE("merging a stack multiplies the ordinal") {
  // Depth 0: three w-large pieces merge into one w.3-large set.
  std::vector<PersistentSet> parts = {make_depth0(LevelSet({1, 2}), Alpha::omega(), 1),
                                      make_depth0(LevelSet({3, 4, 5, 6}), Alpha::omega(), 1),
                                      make_depth0(consecutive(7, 14), Alpha::omega(), 1)};
  PersistentSet M = persistent_stack_merge(parts, 3);
  CHECK(M.alpha == Alpha(1, 3));
  CHECK(M.depth == 0);
  CHECK(M.levels == consecutive(1, 14));
  // Wrong member count is rejected exactly.
  try {
    persistent_stack_merge({parts[0], parts[1]}, 3);
    FAIL("unreachable");
  } catch (const Error& e) {
    CHECK(e.code() == Err::wrong_count);
    CHECK(e.detail().at("required") == "3");
  }
}

TEST_CASE("depth-1 merge responds jointly and thins to a quasistrong skeleton") {
  // 2^1*2 - 2^1 + 1 = 3 members at depth 1.
  std::vector<PersistentSet> Ps = {
      dp_backed(consecutive(1, 3), LevelSet({1, 3}), Alpha::omega(), 2),
      dp_backed(consecutive(4, 6), LevelSet({4, 6}), Alpha::omega(), 2),
      dp_backed(consecutive(7, 9), LevelSet({7, 9}), Alpha::omega(), 2)};
  PersistentSet M = persistent_stack_merge(Ps, 2);
  CHECK(M.alpha == Alpha(1, 2));
  CHECK(M.depth == 1);
  CHECK(M.levels == consecutive(1, 9));
  CHECK(M.witness->levels == LevelSet({1, 3, 7, 9}));
  FinTree T = complete_tree(9);
  Coloring C = color_level(T, 9, 2, [](const BitString& s) { return s[4] == '1' ? 1 : 0; });
  PersistResponse r = M.respond(T, C);
  CHECK(is_quasistrong(r.tree, M.witness->levels));
  CHECK(r.tree.subset_of(T));
  for (const auto& top : r.tree.level(9)) CHECK(C.at(top) == r.color);
  // The exhaustive search agrees a response exists on these witness levels.
  CHECK(find_response(T, 9, M.witness->levels, C, 2).has_value());
}

TEST_CASE("lifting turns multiplier min+1 into the next power") {
  PersistentSet P = dp_backed(consecutive(1, 5), LevelSet({1, 2, 3, 4}), Alpha(1, 2), 2);
  PersistentSet Q = persistent_lift(P);
  CHECK(Q.alpha == Alpha(2, 1));
  CHECK(Q.depth == 1);
  CHECK(Q.witness->levels == LevelSet({1, 2, 3, 4}));
  CHECK(Q.witness->alpha == Alpha(2, 1));
  FinTree T = complete_tree(5);
  Coloring C = color_level(T, 5, 2, [](const BitString& s) { return s[0] == '1' ? 1 : 0; });
  PersistResponse r = Q.respond(T, C);
  CHECK(is_quasistrong(r.tree, LevelSet({1, 2, 3, 4})));
  CHECK(r.tree.level_count(1) == 1);  // lift narrows to a single bottom node
  CHECK(response_verifies(Q, T, C, r));
  // Wrong multiplier is rejected.
  PersistentSet bad = dp_backed(consecutive(1, 5), LevelSet({1, 2, 3, 4}), Alpha(1, 3), 2);
  CHECK_THROWS_AS(persistent_lift(bad), Error);
}

TEST_CASE("construction from largeness reports honest obstructions") {
  // Large enough for w^3 but the least element is below the floor.
  try {
    persistent_from_large(consecutive(1, 14), 1, 2, 1);
    FAIL("unreachable");
  } catch (const Error& e) {
    CHECK(e.code() == Err::min_too_small);
    CHECK(e.detail().at("required_min") == "3");
    CHECK(e.detail().at("actual_min") == "1");
  }
  // Not w^3-large at all.
  try {
    persistent_from_large(consecutive(5, 30), 1, 1, 1);
    FAIL("unreachable");
  } catch (const Error& e) {
    CHECK(e.code() == Err::not_large);
    CHECK(e.detail().at("alpha") == "w^3");
  }
  // Best-effort honesty: when no suffix can carry the depth, the exact
  // closest deficit is reported.
  try {
    persistent_from_large(consecutive(1, 12), 1, 2, 1, /*best_effort=*/true);
    FAIL("unreachable");
  } catch (const Error& e) {
    CHECK(e.code() == Err::too_small);
    CHECK(e.detail().at("required") == "13");
    CHECK(e.detail().at("actual") == "12");
    CHECK(e.detail().at("deficit") == "1");
  }
  // Best-effort success on a set with a big-enough suffix.
  PersistentSet P = persistent_from_large(consecutive(1, 13), 1, 2, 1, /*best_effort=*/true);
  CHECK(P.levels == consecutive(1, 13));
  CHECK(P.depth == 1);
  CHECK(P.alpha == Alpha::omega());
}

TEST_CASE("truncation cuts the witness chain") {
  PersistentSet P = persistent_omega(consecutive(1, 6), 1, 1);
  PersistentSet T0 = truncate_depth(P, 0);
  CHECK(T0.depth == 0);
  CHECK(T0.witness == nullptr);
  CHECK(T0.levels == P.levels);
  CHECK_THROWS_AS(truncate_depth(P, 2), Error);
}
