#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace qstree;
using testsup::color_all;
using testsup::complete_tree;
using testsup::consecutive;

namespace {

// Depth-j persistent set on fixed levels whose responder is the exhaustive
// search; the witness chain repeats the same levels.
PersistentSet dp_deep(const LevelSet& levels, int depth, int k) {
  if (depth == 0) return make_depth0(levels, Alpha::omega(), k);
  PersistentSet p;
  p.levels = levels;
  p.alpha = Alpha::omega();
  p.k = k;
  p.depth = depth;
  p.witness = std::make_shared<const PersistentSet>(dp_deep(levels, depth - 1, k));
  LevelSet w = levels;
  p.respond = [w, k](const FinTree& T, const Coloring& C) {
    auto r = find_response(T, w.max(), w, C, k);
    expect(r.has_value(), Err::selection_failed, "synthetic responder found no response");
    return *r;
  };
  return p;
}

// Synthetic superpersistent set: selects the first n_sel levels through the
// one-color selector and backs the result with the exhaustive responder.
SuperpersistentSet synth_super(const LevelSet& levels, int depth, std::uint64_t n_sel) {
  SuperpersistentSet sp;
  sp.levels = levels;
  sp.alpha = Alpha::omega();
  sp.k = 1;
  sp.depth = depth;
  LevelSet X = levels;
  sp.respond = [X, depth, n_sel](const TreeFamily& family, const Coloring& C) {
    Certificate cert = prehom_select(X, family, C, n_sel, 1);
    cert.alpha_claim = Alpha::omega();
    SuperResponse out;
    out.P = dp_deep(cert.levels, depth, 1);
    out.trees = cert.trees;
    out.colors = cert.colors;
    out.cert = std::move(cert);
    return out;
  };
  return sp;
}

// Family of the level-1 cones of a tree.
TreeFamily cone_family(const FinTree& T, std::uint64_t root_level) {
  TreeFamily f;
  f.root_level = root_level;
  for (const auto& rho : T.level(root_level)) f.members.emplace(rho, cone(T, rho));
  return f;
}

}  // namespace

TEST_CASE("intersection selection finds the least pair sharing enough levels") {
  // Elements 0,1 occur together everywhere.
  std::vector<std::pair<std::uint64_t, std::vector<bool>>> R = {
      {1, {true, true, false, false}},
      {2, {true, true, true, false}},
      {3, {true, true, false, true}}};
  IntersectionResult r =
      intersection_select(4, R, Density::of(BigRat(1)), Density::of(BigRat(1, 2)));
  CHECK(r.a == 0);
  CHECK(r.b == 1);
  CHECK(r.levels == std::vector<std::uint64_t>{1, 2, 3});
}

TEST_CASE("intersection selection enforces the density exactly") {
  std::vector<std::pair<std::uint64_t, std::vector<bool>>> R = {
      {5, {true, false, false, false}}};
  try {
    intersection_select(4, R, Density::of(BigRat(1, 4)), Density::of(BigRat(1, 2)));
    FAIL("unreachable");
  } catch (const Error& e) {
    CHECK(e.code() == Err::bad_density);
    CHECK(e.detail().at("y") == "5");
    CHECK(e.detail().at("required") == "2");
    CHECK(e.detail().at("actual") == "1");
  }
  // The same rows pass once enforcement is off.
  IntersectionResult r = intersection_select(4, R, Density::of(BigRat(1, 4)),
                                             Density::of(BigRat(1, 2)),
                                             /*enforce_density=*/false);
  CHECK(r.a == 0);
}

TEST_CASE("a missing pair is only an internal error when the guarantee held") {
  // delta*s - 1 = 0: the counting guarantee is vacuous, so NoPair is honest.
  std::vector<std::pair<std::uint64_t, std::vector<bool>>> R = {{1, {true, false}},
                                                                {2, {false, true}}};
  try {
    intersection_select(2, R, Density::of(BigRat(1, 2)), Density::of(BigRat(1, 2)));
    FAIL("unreachable");
  } catch (const Error& e) {
    CHECK(e.code() == Err::no_pair);
    CHECK(e.detail().at("guarantee_held") == "false");
    CHECK(e.detail().at("size") == "2");
  }
}

TEST_CASE("pair-count lower bound is exact rational arithmetic") {
  // ((1/2*8 - 1)^2 - 1/4*64) / (2*(1 - 1/4)) = (9 - 16) / (3/2) = -14/3.
  CHECK(intersection_pair_bound(8, Density::of(BigRat(1, 2)), Density::of(BigRat(1, 4))) ==
        BigRat(-14, 3));
  // ((1/2*100 - 1)^2 - 1/100*10000) / (2*(99/100)) = 2301 * 50 / 99.
  CHECK(intersection_pair_bound(100, Density::of(BigRat(1, 2)),
                                Density::of(BigRat(1, 100))) == BigRat(115050, 99));
  CHECK_THROWS_AS(intersection_pair_bound(4, Density::of(BigRat(1, 2)),
                                          Density::of(BigRat(1))),
                  Error);
}

TEST_CASE("tower bound pins") {
  Density half = Density::of(BigRat(1, 2));
  Density quarter = Density::of(BigRat(1, 4));
  CHECK(bound_h_exponent(1, 1, half) == 64);
  CHECK(bound_h(1, 0, half) == 4);
  CHECK(bound_h(2, 0, quarter) == 64);
  CHECK(bound_h(1, 1, half) == BigInt(1) << 64);
  CHECK(bound_h(2, 1, half) == BigInt(1) << 128);
  try {
    bound_h(1, 4, half);  // exponent 2 * 2^20 overflows the exact cap
    FAIL("unreachable");
  } catch (const Error& e) {
    CHECK(e.code() == Err::bad_input);
    CHECK(e.detail().at("exact_value") == "2^2097152");
  }
}

TEST_CASE("colored tower bound pins") {
  CHECK(bound_hbar(1, 0, 2) == 64);
  CHECK(bound_hbar(0, 0, 2) == 8);
  CHECK(bound_hbar(1, 1, 2) == BigInt(1) << 130);
  CHECK_THROWS_AS(bound_hbar(21, 0, 2), Error);
  CHECK(hbar_expression(1, 2, 2) == "2^(2*2^1*2^(5*2))*2^(2^1)");

  CHECK(size_meets_hbar(8, 0, 0, 2));
  CHECK_FALSE(size_meets_hbar(7, 0, 0, 2));
  CHECK_FALSE(size_meets_hbar(1000000, 1, 2, 2));   // bound is 2^4096-ish
  CHECK_FALSE(size_meets_hbar(1000000, 0, 13, 2));  // iteration count shortcut
}

TEST_CASE("tower bound dominates its own recursion step") {
  // h(l, m, delta) >= h(2l, m-1, delta/4) * 2^(3l(e+2)) + e + 3 at one point.
  Density half = Density::of(BigRat(1, 2));
  Density eighth = Density::of(BigRat(1, 8));
  BigInt lhs = bound_h(1, 1, half);
  BigInt rhs = bound_h(2, 0, eighth) * (BigInt(1) << (3 * (2 + 2))) + 2 + 3;
  CHECK(lhs >= rhs);
}

TEST_CASE("antichain selection base case returns the root level") {
  FinTree T = FinTree::closure_of({BitString("00"), BitString("01")});
  LevelSet X({1, 2});
  DenseFamily A(1);
  A[0][1] = {BitString("0")};
  A[0][2] = {BitString("00"), BitString("01")};
  AntichainResult r = antichain_select(X, X, {T}, A, 1, Density::of(BigRat(1, 2)));
  CHECK(r.Z == LevelSet({1}));
  REQUIRE(r.trees.size() == 1);
  CHECK(r.trees[0].contains(BitString("0")));
  CHECK(r.trees[0].level_count(2) == 0);
}

TEST_CASE("antichain selection validates its dense family") {
  FinTree T = FinTree::closure_of({BitString("00"), BitString("01")});
  LevelSet X({1, 2});
  Density half = Density::of(BigRat(1, 2));
  {  // thin dense set
    DenseFamily A(1);
    A[0][1] = {BitString("0")};
    A[0][2] = {};
    try {
      antichain_select(X, X, {T}, A, 1, Density::of(BigRat(1)));
      FAIL("unreachable");
    } catch (const Error& e) {
      CHECK(e.code() == Err::bad_input);
      CHECK(e.detail().at("required") == "2");
      CHECK(e.detail().at("actual") == "0");
    }
  }
  {  // member outside the tree
    DenseFamily A(1);
    A[0][1] = {BitString("0")};
    A[0][2] = {BitString("11")};
    CHECK_THROWS_AS(antichain_select(X, X, {T}, A, 1, half), Error);
  }
  {  // too few levels to strip for m = 2
    DenseFamily A(1);
    A[0][1] = {BitString("0")};
    A[0][2] = {BitString("00"), BitString("01")};
    try {
      antichain_select(X, X, {T}, A, 2, half);
      FAIL("unreachable");
    } catch (const Error& e) {
      CHECK(e.code() == Err::stage_failure);
      CHECK(e.detail().at("stage") == "strip");
    }
  }
}

TEST_CASE("prehomogeneous selection: one color slices, two colors select") {
  FinTree T = complete_tree(12);
  LevelSet X = consecutive(1, 12);
  TreeFamily family = cone_family(T, 1);

  // k = 1: the first n levels and a pruned skeleton.
  Coloring C1 = color_all(T, 1, [](const BitString&) { return 0; });
  Certificate c1 = prehom_select(X, family, C1, 3, 1);
  CHECK(c1.kind == CertKind::prehom);
  CHECK(c1.levels == LevelSet({1, 2, 3}));
  for (const auto& [rho, S] : c1.trees) {
    CHECK(is_quasistrong(S, c1.levels));
    CHECK(S.subset_of(family.members.at(rho)));
    CHECK(c1.colors.at(rho) == 0);
  }

  // k = 2, each cone monochromatic in its own color: the selection keeps the
  // root level, lands on the first level after the density strip, and reports
  // the right color per cone.
  Coloring C2 = color_all(T, 2, [](const BitString& s) {
    return s.empty() ? 0 : (s[0] == '1' ? 1 : 0);
  });
  Certificate c2 = prehom_select(X, family, C2, 2, 2);
  CHECK(c2.levels == LevelSet({1, 6}));
  CHECK(c2.colors.at(BitString("0")) == 0);
  CHECK(c2.colors.at(BitString("1")) == 1);
  for (const auto& [rho, S] : c2.trees) {
    CHECK(is_quasistrong(S, c2.levels));
    CHECK(S.subset_of(family.members.at(rho)));
    CHECK(prehomogeneous_colors(S, C2, c2.levels).count(c2.colors.at(rho)) == 1);
  }
  VerifyContext ctx;
  ctx.coloring = &C2;
  CHECK(verify_certificate(c2, ctx).valid);
}

TEST_CASE("prehomogeneous selection reports its obstructions") {
  FinTree T = complete_tree(3);
  LevelSet X = consecutive(1, 3);
  TreeFamily family = cone_family(T, 1);
  Coloring C = color_all(T, 1, [](const BitString&) { return 0; });
  try {
    prehom_select(X, family, C, 4, 1);
    FAIL("unreachable");
  } catch (const Error& e) {
    CHECK(e.code() == Err::stage_failure);
    CHECK(e.detail().at("stage") == "size");
    CHECK(e.detail().at("required") == "4");
  }
  // Family rooted at the wrong level.
  TreeFamily off = cone_family(T, 2);
  CHECK_THROWS_AS(prehom_select(X, off, C, 2, 1), Error);
  // Coloring missing a node.
  Coloring partial;
  partial.k = 1;
  CHECK_THROWS_AS(prehom_select(X, family, partial, 2, 1), Error);
}

TEST_CASE("base superpersistence is honest about the tower bound") {
  try {
    super_omega(consecutive(1, 10), 2, 0);
    FAIL("unreachable");
  } catch (const Error& e) {
    CHECK(e.code() == Err::too_small);
    CHECK(e.detail().at("required") == hbar_expression(1, 2, 2));
    CHECK(e.detail().at("actual") == "10");
  }
}

TEST_CASE("best-effort base superpersistence answers a family") {
  LevelSet X = consecutive(1, 8);
  SuperpersistentSet sp = super_omega(X, 1, 1, /*best_effort=*/true);
  CHECK(sp.alpha == Alpha::omega());
  CHECK(sp.depth == 1);
  FinTree T = complete_tree(8);
  TreeFamily family = cone_family(T, 1);
  Coloring C = color_all(T, 1, [](const BitString&) { return 0; });
  SuperResponse sr = sp.respond(family, C);
  CHECK(sr.P.levels == consecutive(1, 6));  // required_omega_size(1,1,1) = 6
  CHECK(sr.P.depth == 1);
  CHECK(sr.P.witness->levels == LevelSet({1, 3}));
  for (const auto& [rho, S] : sr.trees) {
    CHECK(is_quasistrong(S, sr.P.levels));
    CHECK(S.subset_of(family.members.at(rho)));
  }
  CHECK(sr.cert.alpha_claim.has_value());
  VerifyContext ctx;
  ctx.coloring = &C;
  CHECK(verify_certificate(sr.cert, ctx).valid);

  // Too few levels to carry the witness: exact deficit at respond time.
  SuperpersistentSet small = super_omega(consecutive(1, 5), 1, 1, /*best_effort=*/true);
  FinTree T5 = complete_tree(5);
  Coloring C5 = color_all(T5, 1, [](const BitString&) { return 0; });
  try {
    small.respond(cone_family(T5, 1), C5);
    FAIL("unreachable");
  } catch (const Error& e) {
    CHECK(e.code() == Err::too_small);
    CHECK(e.detail().at("required") == "6");
    CHECK(e.detail().at("actual") == "5");
  }
}

TEST_CASE("merge stack-length pins") {
  CHECK(super_merge_count(2, 1, 0, 3) == 3);
  CHECK(super_merge_count(2, 2, 0, 1) == 9);
  CHECK(super_merge_count(3, 2, 1, 2) == 129);
  CHECK(super_merge_count(1, 5, 2, 0) == 1);
}

TEST_CASE("joint stack response answers both stages and stays quasistrong") {
  std::vector<SuperpersistentSet> ctxs = {synth_super(consecutive(1, 3), 1, 2),
                                          synth_super(consecutive(4, 6), 1, 2)};
  FinTree T = complete_tree(6);
  TreeFamily family = cone_family(T, 1);
  Coloring C = color_all(T, 1, [](const BitString&) { return 0; });
  SuperStackResponse ssr = super_stack_respond(ctxs, family, C);
  REQUIRE(ssr.members.size() == 2);
  CHECK(ssr.members[0].levels == LevelSet({1, 2}));
  CHECK(ssr.members[1].levels == LevelSet({4, 5}));
  StackOfSets final_levels = {ssr.members[0].levels, ssr.members[1].levels};
  for (const auto& [rho, S] : ssr.trees) {
    CHECK(is_quasistrong(S, final_levels));
    CHECK(S.subset_of(family.members.at(rho)));
    CHECK(ssr.colors.at(rho) == std::vector<int>{0, 0});
  }

  // Depth too shallow for the stack length.
  std::vector<SuperpersistentSet> shallow = {
      super_omega(consecutive(1, 3), 1, 0, /*best_effort=*/true),
      super_omega(consecutive(4, 6), 1, 0, /*best_effort=*/true)};
  try {
    super_stack_respond(shallow, family, C);
    FAIL("unreachable");
  } catch (const Error& e) {
    CHECK(e.code() == Err::bad_input);
    CHECK(e.detail().at("required_depth") == "1");
    CHECK(e.detail().at("actual_depth") == "0");
  }
}

TEST_CASE("merging superpersistent stacks checks the exact count") {
  auto member = [](std::uint64_t lo, std::uint64_t hi) {
    return super_omega(consecutive(lo, hi), 1, 2, /*best_effort=*/true);
  };
  // super_merge_count(2, 1, 0, x0) = 3 members at depth 0 + 3 - 1 = 2.
  std::vector<SuperpersistentSet> ctxs = {member(1, 2), member(3, 4), member(5, 6)};
  SuperpersistentSet M = super_stack_merge(ctxs, 2, 1);
  CHECK(M.levels == consecutive(1, 6));
  CHECK(M.alpha == Alpha(1, 2));
  CHECK(M.depth == 0);
  CHECK(M.k == 1);

  try {
    super_stack_merge({member(1, 2), member(3, 4)}, 2, 1);
    FAIL("unreachable");
  } catch (const Error& e) {
    CHECK(e.code() == Err::wrong_count);
    CHECK(e.detail().at("required") == "5");  // depth 2, 2 members => i = 1
    CHECK(e.detail().at("actual") == "2");
  }
  // Members must stack.
  std::vector<SuperpersistentSet> overlap = {member(1, 3), member(3, 4), member(5, 6)};
  CHECK_THROWS_AS(super_stack_merge(overlap, 2, 1), Error);
}

TEST_CASE("superset spreading prunes the challenge down to the inner set") {
  SuperpersistentSet inner = synth_super(LevelSet({2, 3, 4}), 0, 3);
  CHECK_THROWS_AS(super_superset(inner, LevelSet({3, 4, 5})), Error);
  SuperpersistentSet same = super_superset(inner, LevelSet({2, 3, 4}));
  CHECK(same.levels == inner.levels);

  LevelSet X2({1, 2, 3, 4});
  SuperpersistentSet sp = super_superset(inner, X2);
  CHECK(sp.levels == X2);
  CHECK(sp.alpha == inner.alpha);
  FinTree T = complete_tree(4);
  TreeFamily family = cone_family(T, 1);
  Coloring C = color_all(T, 1, [](const BitString&) { return 0; });
  SuperResponse sr = sp.respond(family, C);
  CHECK(sr.P.levels == LevelSet({2, 3, 4}));
  CHECK(sr.cert.X == X2);
  for (const auto& [rho, S] : sr.trees) {
    CHECK(is_quasistrong(S, LevelSet({2, 3, 4})));
    CHECK(S.subset_of(family.members.at(rho)));
  }
}

TEST_CASE("lifting requires the multiplier to match the minimum") {
  auto member = [](std::uint64_t lo, std::uint64_t hi) {
    return super_omega(consecutive(lo, hi), 1, 2, /*best_effort=*/true);
  };
  SuperpersistentSet M =
      super_stack_merge({member(1, 2), member(3, 4), member(5, 6)}, 2, 1);
  SuperpersistentSet L = super_lift(M);  // min 1, multiplier 2
  CHECK(L.alpha == Alpha(2, 1));
  CHECK(L.levels == M.levels);
  CHECK(L.depth == M.depth);

  try {
    super_lift(super_omega(consecutive(1, 3), 1, 0, /*best_effort=*/true));
    FAIL("unreachable");
  } catch (const Error& e) {
    CHECK(e.code() == Err::wrong_alpha);
    CHECK(e.detail().at("required") == "w^1.2");
    CHECK(e.detail().at("actual") == "w");
  }
}

TEST_CASE("superpersistence from largeness reports honest obstructions") {
  // Not w^3-large.
  try {
    super_from_large(consecutive(2, 20), 1, 2, 0);
    FAIL("unreachable");
  } catch (const Error& e) {
    CHECK(e.code() == Err::not_large);
    CHECK(e.detail().at("alpha") == "w^3");
  }
  // w^3-large but the least element is below the floor max(4, k, i) = 4.
  try {
    super_from_large(consecutive(1, 14), 1, 2, 0);
    FAIL("unreachable");
  } catch (const Error& e) {
    CHECK(e.code() == Err::min_too_small);
    CHECK(e.detail().at("required_min") == "5");
    CHECK(e.detail().at("actual_min") == "1");
  }
  // Depth 2 needs a leading w^4 block even in best-effort mode.
  try {
    super_from_large(consecutive(2, 30), 2, 2, 0, /*best_effort=*/true);
    FAIL("unreachable");
  } catch (const Error& e) {
    CHECK(e.code() == Err::not_large);
    CHECK(e.detail().at("alpha") == "w^4");
  }
}

TEST_CASE("main construction selects a large prehomogeneous level set") {
  FinTree T = complete_tree(12);
  LevelSet X = consecutive(1, 12);
  Coloring C = color_all(T, 2, [](const BitString& s) {
    return s.empty() ? 0 : (s[0] == '1' ? 1 : 0);
  });
  MainResult r = prehomogeneous_main(X, 1, 2, T, C, /*best_effort=*/true);
  CHECK(r.Y == LevelSet({1, 6}));
  CHECK(is_large(r.Y, Alpha::omega()));
  CHECK(r.cert.kind == CertKind::main);
  CHECK(r.cert.X == X);
  REQUIRE(r.cert.alpha_claim.has_value());
  CHECK(*r.cert.alpha_claim == Alpha::omega());
  VerifyContext ctx;
  ctx.coloring = &C;
  VerifyReport rep = verify_certificate(r.cert, ctx);
  CHECK(rep.valid);

  // One color collapses to the slice path: first two levels.
  Coloring C1 = color_all(T, 1, [](const BitString&) { return 0; });
  MainResult r1 = prehomogeneous_main(X, 1, 1, T, C1, /*best_effort=*/true);
  CHECK(r1.Y == LevelSet({1, 2}));
  VerifyContext ctx1;
  ctx1.coloring = &C1;
  CHECK(verify_certificate(r1.cert, ctx1).valid);
}

TEST_CASE("main construction reports honest obstructions") {
  {  // honest mode on a w^3-large set with a too-small minimum
    FinTree T = complete_tree(14);
    LevelSet X = consecutive(1, 14);
    Coloring C = color_all(T, 2, [](const BitString&) { return 0; });
    try {
      prehomogeneous_main(X, 1, 2, T, C);
      FAIL("unreachable");
    } catch (const Error& e) {
      CHECK(e.code() == Err::min_too_small);
      CHECK(e.detail().at("required_min") == "5");
    }
  }
  {  // challenge tree not quasistrong for X
    FinTree T = complete_tree(2);
    Coloring C = color_all(T, 1, [](const BitString&) { return 0; });
    CHECK_THROWS_AS(prehomogeneous_main(LevelSet({1, 3}), 1, 1, T, C), Error);
  }
  {  // coloring missing a node below max X
    FinTree T = complete_tree(2);
    Coloring C;
    C.k = 1;
    C.set(BitString("00"), 0);
    try {
      prehomogeneous_main(LevelSet({1, 2}), 1, 1, T, C);
      FAIL("unreachable");
    } catch (const Error& e) {
      CHECK(e.code() == Err::partial_coloring);
    }
  }
}
