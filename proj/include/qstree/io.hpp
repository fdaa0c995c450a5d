#pragma once
// JSON encoding and decoding for the library's value types and reports.
// Output is canonical: object keys sorted, big integers and rationals as
// exact decimal strings, arrays in the container's canonical order.  Parsing
// validates structure and re-checks every container invariant on the way in.

#include <json.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "oracle.hpp"

namespace qstree::io {

using Json = nlohmann::json;

inline Json parse_text(const std::string& text, const std::string& what) {
  Json j = Json::parse(text, nullptr, /*allow_exceptions=*/false);
  expect(!j.is_discarded(), Err::bad_input, what + " is not valid JSON");
  return j;
}

inline BigInt parse_bigint(const std::string& s) {
  expect(!s.empty(), Err::bad_input, "empty integer literal");
  std::size_t start = (s[0] == '-') ? 1 : 0;
  expect(start < s.size(), Err::bad_input, "bad integer literal \"" + s + "\"");
  for (std::size_t i = start; i < s.size(); ++i)
    expect(s[i] >= '0' && s[i] <= '9', Err::bad_input,
           "bad integer literal \"" + s + "\"");
  return BigInt(s);
}

inline Density parse_density(const std::string& s) {
  auto slash = s.find('/');
  BigInt num = parse_bigint(s.substr(0, slash));
  BigInt den = slash == std::string::npos ? BigInt(1) : parse_bigint(s.substr(slash + 1));
  expect(den > 0, Err::bad_input, "density denominator must be positive: \"" + s + "\"");
  return Density::of(BigRat(num, den));
}

// ---------------------------------------------------------------------------
// Level sets.

inline Json levels_json(const LevelSet& X) { return Json(X.values()); }

inline LevelSet levels_from(const Json& j) {
  expect(j.is_array(), Err::bad_input, "level set must be a JSON array");
  std::vector<std::uint64_t> v;
  for (const auto& e : j) {
    expect(e.is_number_unsigned(), Err::bad_input,
           "level set entries must be nonnegative integers");
    v.push_back(e.get<std::uint64_t>());
  }
  return LevelSet(v);
}

// ---------------------------------------------------------------------------
// Trees, colorings, tree families.

inline Json tree_json(const FinTree& T) {
  Json nodes = Json::array();
  for (const auto& n : T.nodes()) nodes.push_back(n.str());
  return Json{{"nodes", std::move(nodes)}};
}

inline FinTree tree_from(const Json& j, bool require_closed = true) {
  expect(j.is_object() && j.contains("nodes") && j["nodes"].is_array(),
         Err::bad_input, "tree must be {\"nodes\": [...]}");
  std::vector<BitString> nodes;
  for (const auto& e : j["nodes"]) {
    expect(e.is_string(), Err::bad_input, "tree nodes must be bit strings");
    nodes.push_back(BitString(e.get<std::string>()));
  }
  return FinTree::from_nodes(std::move(nodes), require_closed);
}

inline Json coloring_json(const Coloring& C) {
  Json assign = Json::object();
  for (const auto& [b, c] : C.assign) assign[b.str()] = c;
  return Json{{"k", C.k}, {"assign", std::move(assign)}};
}

inline Coloring coloring_from(const Json& j) {
  expect(j.is_object() && j.contains("k") && j["k"].is_number_integer(),
         Err::bad_input, "coloring must be {\"k\": ..., \"assign\": {...}}");
  Coloring C;
  C.k = j["k"].get<int>();
  expect(C.k >= 1, Err::bad_input, "coloring needs k >= 1");
  if (j.contains("assign")) {
    expect(j["assign"].is_object(), Err::bad_input, "coloring assign must be an object");
    for (const auto& [key, val] : j["assign"].items()) {
      expect(val.is_number_integer(), Err::bad_input, "colors must be integers");
      C.set(BitString(key), val.get<int>());
    }
  }
  return C;
}

inline Json family_json(const TreeFamily& F) {
  Json members = Json::object();
  for (const auto& [rho, T] : F.members) members[rho.str()] = tree_json(T);
  return Json{{"root_level", F.root_level}, {"members", std::move(members)}};
}

inline TreeFamily family_from(const Json& j) {
  expect(j.is_object() && j.contains("root_level") && j.contains("members") &&
             j["members"].is_object(),
         Err::bad_input, "tree family must be {\"root_level\": ..., \"members\": {...}}");
  TreeFamily F;
  F.root_level = j["root_level"].get<std::uint64_t>();
  for (const auto& [key, val] : j["members"].items())
    F.members.emplace(BitString(key), tree_from(val));
  F.validate();
  return F;
}

// ---------------------------------------------------------------------------
// Certificates.

inline CertKind cert_kind_from(const std::string& name) {
  if (name == "kg-extract") return CertKind::kg_extract;
  if (name == "persist-respond") return CertKind::persist_respond;
  if (name == "prehom") return CertKind::prehom;
  if (name == "main") return CertKind::main;
  fail(Err::malformed_certificate, "unknown certificate kind \"" + name + "\"");
}

inline Json certificate_json(const Certificate& cert) {
  Json trees = Json::object();
  for (const auto& [rho, S] : cert.trees) trees[rho.str()] = tree_json(S);
  Json colors = Json::object();
  for (const auto& [rho, c] : cert.colors) colors[rho.str()] = c;
  Json j{{"kind", cert_kind_name(cert.kind)},
         {"x", levels_json(cert.X)},
         {"levels", levels_json(cert.levels)},
         {"trees", std::move(trees)},
         {"colors", std::move(colors)},
         {"k", cert.k}};
  if (cert.alpha_claim) j["alpha"] = cert.alpha_claim->str();
  if (!cert.context.empty()) j["context"] = cert.context;
  return j;
}

inline Certificate certificate_from(const Json& j) {
  expect(j.is_object(), Err::malformed_certificate, "certificate must be a JSON object");
  for (const char* field : {"kind", "x", "levels", "trees", "colors", "k"})
    expect(j.contains(field), Err::malformed_certificate,
           std::string("certificate lacks \"") + field + "\"");
  Certificate cert;
  cert.kind = cert_kind_from(j["kind"].get<std::string>());
  cert.X = levels_from(j["x"]);
  cert.levels = levels_from(j["levels"]);
  expect(j["trees"].is_object() && j["colors"].is_object(), Err::malformed_certificate,
         "certificate trees/colors must be objects");
  for (const auto& [key, val] : j["trees"].items())
    cert.trees.emplace(BitString(key), tree_from(val, /*require_closed=*/false));
  for (const auto& [key, val] : j["colors"].items()) {
    expect(val.is_number_integer(), Err::malformed_certificate,
           "certificate colors must be integers");
    cert.colors.emplace(BitString(key), val.get<int>());
  }
  cert.k = j["k"].get<int>();
  if (j.contains("alpha")) cert.alpha_claim = Alpha::parse(j["alpha"].get<std::string>());
  if (j.contains("context"))
    for (const auto& [key, val] : j["context"].items())
      cert.context[key] = val.get<std::string>();
  return cert;
}

// ---------------------------------------------------------------------------
// Reports.

inline Json verify_report_json(const VerifyReport& r) {
  Json checks = Json::array();
  for (const auto& c : r.checks) {
    Json e{{"name", c.name}, {"pass", c.pass}};
    if (!c.detail.empty()) e["detail"] = c.detail;
    checks.push_back(std::move(e));
  }
  return Json{{"valid", r.valid}, {"checks", std::move(checks)}};
}

inline Json persist_verdict_json(const PersistVerdict& v) {
  Json j{{"persistent", v.persistent},
         {"searched", Json{{"trees", v.trees_searched}, {"colorings", v.colorings_searched}}}};
  if (v.witness) j["witness"] = levels_json(*v.witness);
  if (v.counter_candidate) {
    Json counter{{"candidate", levels_json(*v.counter_candidate)}};
    if (v.counter_tree) counter["tree"] = tree_json(*v.counter_tree);
    if (v.counter_coloring) counter["coloring"] = coloring_json(*v.counter_coloring);
    j["counter"] = std::move(counter);
  }
  return j;
}

inline Json minimal_size_json(const MinimalSizeResult& r) {
  Json j{{"found", r.found}, {"n_max", r.n_max}};
  if (r.found) j["least_n"] = r.least_n;
  if (!r.guaranteed_size.empty()) j["guaranteed_size"] = r.guaranteed_size;
  return j;
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace qstree::io
