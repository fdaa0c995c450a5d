#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace qstree;
using testsup::complete_tree;

TEST_CASE("bit strings order shorter-first then lexicographic") {
  std::vector<BitString> v = {BitString("01"), BitString("1"), BitString(""),
                              BitString("00"), BitString("0"), BitString("10")};
  std::sort(v.begin(), v.end());
  std::vector<std::string> got;
  for (const auto& b : v) got.push_back(b.str());
  CHECK(got == std::vector<std::string>{"", "0", "1", "00", "01", "10"});
}

TEST_CASE("bit string prefix and compatibility") {
  BitString a("0110");
  CHECK(a.prefix(2) == BitString("01"));
  CHECK(a.has_prefix(BitString("011")));
  CHECK_FALSE(a.has_prefix(BitString("10")));
  CHECK(a.compatible(BitString("01")));
  CHECK(BitString("01").compatible(a));
  CHECK_FALSE(BitString("00").compatible(BitString("01")));
  CHECK_THROWS_AS(BitString("012"), Error);
}

TEST_CASE("rank encoding is most-significant-bit first") {
  CHECK(encode_rank(0, 3) == BitString("000"));
  CHECK(encode_rank(5, 4) == BitString("0101"));
  CHECK(encode_rank(1, 1) == BitString("1"));
  CHECK(encode_rank(0, 0) == BitString(""));
}

TEST_CASE("level sets validate strict ascent") {
  CHECK_THROWS_AS(LevelSet({3, 3}), Error);
  CHECK_THROWS_AS(LevelSet({4, 2}), Error);
  LevelSet X({2, 5, 9});
  CHECK(X.min() == 2);
  CHECK(X.max() == 9);
  CHECK(X.index_of(5) == 1);
  CHECK(X.suffix(1) == LevelSet({5, 9}));
  CHECK(X.tail_from(5) == LevelSet({5, 9}));
  CHECK(X.tail_from(6) == LevelSet({9}));
  CHECK(LevelSet({2, 9}).subset_of(X));
  CHECK_FALSE(LevelSet({2, 3}).subset_of(X));
  CHECK(X.str() == "{2,5,9}");
}

TEST_CASE("stacks are separated nonempty runs") {
  CHECK(is_stack({LevelSet({1, 2}), LevelSet({3, 5})}));
  CHECK_FALSE(is_stack({LevelSet({1, 3}), LevelSet({3, 5})}));
  CHECK_FALSE(is_stack({LevelSet({1, 4}), LevelSet({3, 5})}));
  CHECK(stack_union({LevelSet({1, 2}), LevelSet({4})}) == LevelSet({1, 2, 4}));
}

TEST_CASE("ordinal notation parses and prints") {
  CHECK(Alpha::parse("w") == Alpha(1, 1));
  CHECK(Alpha::parse("w^3") == Alpha(3, 1));
  CHECK(Alpha::parse("w.4") == Alpha(1, 4));
  CHECK(Alpha::parse("w^2.5") == Alpha(2, 5));
  CHECK(Alpha(2, 5).str() == "w^2.5");
  CHECK(Alpha(3, 1).str() == "w^3");
  CHECK_THROWS_AS(Alpha::parse("x^2"), Error);
  CHECK_THROWS_AS(Alpha::parse("w^"), Error);
  CHECK_THROWS_AS(Alpha::parse("w^2.3junk"), Error);
  CHECK_THROWS_AS(Alpha(0, 1), Error);
}

TEST_CASE("trees sort, close, and answer range queries") {
  FinTree T = FinTree::closure_of({BitString("010"), BitString("0011")});
  CHECK(T.contains(BitString("")));
  CHECK(T.contains(BitString("01")));
  CHECK(T.contains(BitString("001")));
  CHECK_FALSE(T.contains(BitString("1")));
  CHECK(T.level_count(1) == 1);
  CHECK(T.level_count(3) == 2);
  CHECK(T.extensions(BitString("0"), 3) ==
        std::vector<BitString>{BitString("001"), BitString("010")});
  CHECK(T.first_extension(BitString("00"), 4) == BitString("0011"));
  CHECK_FALSE(T.first_extension(BitString("01"), 4).has_value());
  CHECK_THROWS_AS(
      FinTree::from_nodes({BitString(""), BitString("01")}),
      Error);  // missing "0"
  FinTree open = FinTree::from_nodes({BitString(""), BitString("01")}, false);
  CHECK(open.size() == 2);
}

TEST_CASE("cone and height restriction") {
  FinTree T = complete_tree(3);
  FinTree C0 = cone(T, BitString("0"));
  CHECK(C0.contains(BitString("")));
  CHECK(C0.contains(BitString("011")));
  CHECK_FALSE(C0.contains(BitString("1")));
  CHECK(restrict_height(T, 2).size() == 1 + 2 + 4);
}

TEST_CASE("colorings are partial and validate range") {
  Coloring C;
  C.k = 2;
  C.set(BitString("01"), 1);
  CHECK(C.defined(BitString("01")));
  CHECK(C.at(BitString("01")) == 1);
  CHECK_FALSE(C.defined(BitString("10")));
  CHECK_THROWS_AS(C.at(BitString("10")), Error);
  CHECK_THROWS_AS(C.set(BitString("0"), 2), Error);
}

TEST_CASE("tree families key members by their root node") {
  TreeFamily F;
  F.root_level = 1;
  F.members[BitString("0")] = FinTree::closure_of({BitString("010"), BitString("001")});
  F.members[BitString("1")] = FinTree::closure_of({BitString("101")});
  F.validate();
  TreeFamily bad;
  bad.root_level = 2;
  bad.members[BitString("0")] = FinTree::closure_of({BitString("00")});
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("quasistrong trees need every junction to split in two") {
  LevelSet X({1, 3});
  // One node at level 1 with two incompatible extensions at level 3.
  FinTree good = FinTree::closure_of({BitString("010"), BitString("001")});
  CHECK(is_quasistrong(good, X));
  // Only one extension at level 3.
  FinTree thin = FinTree::closure_of({BitString("010")});
  CHECK_FALSE(is_quasistrong(thin, X));
  // Three extensions is too many: the splits must be exact.
  FinTree fat =
      FinTree::closure_of({BitString("000"), BitString("001"), BitString("010")});
  CHECK_FALSE(is_quasistrong(fat, X));
  // Empty at a required level.
  CHECK_FALSE(is_quasistrong(FinTree::closure_of({BitString("0")}), X));
  // The complete tree splits exactly in two at consecutive levels.
  CHECK(is_quasistrong(complete_tree(3), LevelSet({1, 2, 3})));
  CHECK_FALSE(is_quasistrong(complete_tree(3), LevelSet({1, 3})));
}

TEST_CASE("pruning recovers a quasistrong subtree on sub-levels") {
  FinTree T = complete_tree(3);
  LevelSet X({1, 2, 3});
  LevelSet Y({1, 3});
  FinTree P = prune_to_quasistrong(T, X, Y);
  CHECK(is_quasistrong(P, Y));
  CHECK(P.subset_of(T));
}

TEST_CASE("prehomogeneity scans paths between consecutive selected levels") {
  FinTree T = complete_tree(2);
  LevelSet X({1, 2});
  Coloring C;
  C.k = 2;
  // Color all four leaves 0, both inner nodes 1.
  for (const auto& nu : T.level(2)) C.set(nu, 0);
  for (const auto& nu : T.level(1)) C.set(nu, 1);
  C.set(BitString(""), 1);
  auto cs = prehomogeneous_colors(T, C, X);
  // Between level 1 and level 2 every path meets color 0 (the endpoint) and
  // color 1 (the start), so both colors qualify.
  CHECK(cs == std::set<int>{0, 1});
  // Recolor one leaf to 1: color 0 loses that path.
  C.assign[BitString("00")] = 1;
  cs = prehomogeneous_colors(T, C, X);
  CHECK(cs == std::set<int>{1});
}

TEST_CASE("certificate kind names round-trip") {
  CHECK(std::string(cert_kind_name(CertKind::kg_extract)) == "kg-extract");
  CHECK(std::string(cert_kind_name(CertKind::persist_respond)) == "persist-respond");
  CHECK(std::string(cert_kind_name(CertKind::prehom)) == "prehom");
  CHECK(std::string(cert_kind_name(CertKind::main)) == "main");
}

TEST_CASE("errors carry a code and exact detail") {
  try {
    fail(Err::too_small, "boom", {{"required", "5"}, {"actual", "3"}});
    FAIL("unreachable");
  } catch (const Error& e) {
    CHECK(e.code() == Err::too_small);
    CHECK(std::string(e.what()) == "boom");
    CHECK(e.detail().at("required") == "5");
    CHECK(e.detail().at("actual") == "3");
  }
  CHECK(std::string(err_name(Err::bad_input)) == "bad_input");
  CHECK(std::string(err_name(Err::exhausted)) == "exhausted");
}
