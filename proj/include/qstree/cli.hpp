#pragma once
// Command dispatch for the batch CLI.  Pure function of its argument vector
// and the files it reads: every command writes one canonical JSON report
// (manifest embedded) and returns 0 on success/verified, 1 when a property
// fails, a certificate is invalid, or an honest size deficit is reported,
// 2 on malformed input or usage errors.

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "io.hpp"
#include "manifest.hpp"

namespace qstree::cli {

struct CliResult {
  int exit_code = 0;
  std::string output;
};

namespace detail {

using io::Json;

const std::set<std::string>& bool_flags() {
  static const std::set<std::string> kBool = {"best-effort", "no-symmetry", "list",
                                              "homogeneous"};
  return kBool;
}

struct Args {
  std::vector<std::string> pos;
  std::map<std::string, std::string> flags;
  std::set<std::string> switches;
  io::RunManifest manifest;

  bool has(const std::string& f) const { return flags.count(f) != 0; }
  bool on(const std::string& s) const { return switches.count(s) != 0; }

  const std::string& need(const std::string& f) const {
    auto it = flags.find(f);
    expect(it != flags.end(), Err::bad_input, "missing required flag --" + f);
    return it->second;
  }

  std::uint64_t need_u64(const std::string& f) const {
    const std::string& s = need(f);
    expect(!s.empty() && s.find_first_not_of("0123456789") == std::string::npos &&
               s.size() <= 19,
           Err::bad_input, "flag --" + f + " needs a nonnegative integer");
    return std::stoull(s);
  }

  std::uint64_t u64_or(const std::string& f, std::uint64_t fallback) const {
    return has(f) ? need_u64(f) : fallback;
  }

  // File path, or inline JSON when the value itself starts like JSON.
  Json load(const std::string& f) {
    const std::string& v = need(f);
    std::string bytes;
    if (!v.empty() && (v[0] == '[' || v[0] == '{')) {
      bytes = v;
    } else {
      std::ifstream in(v, std::ios::binary);
      expect(in.good(), Err::bad_input, "cannot read file \"" + v + "\"");
      std::ostringstream ss;
      ss << in.rdbuf();
      bytes = ss.str();
    }
    manifest.input_digests[f] = io::digest_hex(bytes);
    return io::parse_text(bytes, "--" + f);
  }

  SearchBudget budget() const {
    SearchBudget b = SearchBudget::from_env();
    if (has("budget-trees")) b.max_trees = need_u64("budget-trees");
    if (has("budget-colorings")) b.max_colorings = need_u64("budget-colorings");
    if (has("budget-ms")) b.timeout_ms = need_u64("budget-ms");
    return b;
  }
};

inline Args parse_args(const std::vector<std::string>& argv) {
  Args a;
  std::size_t i = 0;
  while (i < argv.size()) {
    const std::string& tok = argv[i];
    if (tok.rfind("--", 0) == 0) {
      std::string name = tok.substr(2);
      expect(!name.empty(), Err::bad_input, "stray \"--\" in arguments");
      if (bool_flags().count(name)) {
        a.switches.insert(name);
        ++i;
      } else {
        expect(i + 1 < argv.size(), Err::bad_input, "flag --" + name + " needs a value");
        expect(a.flags.emplace(name, argv[i + 1]).second, Err::bad_input,
               "flag --" + name + " given twice");
        i += 2;
      }
    } else {
      a.pos.push_back(tok);
      ++i;
    }
  }
  return a;
}

// ---------------------------------------------------------------------------
// Recipe execution: a persistent set rebuilt from its construction recipe.

inline PersistentSet run_recipe(const Json& r) {
  expect(r.is_object() && r.contains("op") && r["op"].is_string(), Err::bad_input,
         "recipe step must be {\"op\": ...}");
  std::string op = r["op"].get<std::string>();
  bool be = r.value("best_effort", false);
  auto child = [&]() -> PersistentSet {
    expect(r.contains("child"), Err::bad_input, "recipe op \"" + op + "\" needs a child");
    return run_recipe(r["child"]);
  };
  if (op == "omega")
    return persistent_omega(io::levels_from(r.at("set")), r.at("k").get<int>(),
                            r.at("i").get<int>(), be);
  if (op == "from-large")
    return persistent_from_large(io::levels_from(r.at("set")),
                                 r.at("d").get<std::uint32_t>(), r.at("k").get<int>(),
                                 r.at("i").get<int>(), be);
  if (op == "superset") return persistent_superset(child(), io::levels_from(r.at("set")));
  if (op == "map") return persistent_map(child(), io::levels_from(r.at("set")));
  if (op == "lift") return persistent_lift(child());
  if (op == "merge") {
    expect(r.contains("parts") && r["parts"].is_array() && !r["parts"].empty(),
           Err::bad_input, "recipe op \"merge\" needs a nonempty parts array");
    std::vector<PersistentSet> parts;
    for (const auto& p : r["parts"]) parts.push_back(run_recipe(p));
    return persistent_stack_merge(parts, r.at("n").get<std::uint64_t>());
  }
  fail(Err::bad_input, "unknown recipe op \"" + op + "\"");
}

inline Json chain_json(const PersistentSet& P) {
  Json out = Json::array();
  for (const auto& lv : P.chain()) out.push_back(io::levels_json(lv));
  return out;
}

// ---------------------------------------------------------------------------
// Homogeneous post-pass: deepest perfect monochromatic system inside a
// certificate tree.  d(nu) = 1 when nu has no two incompatible same-colored
// strict extensions, else 1 + the best min over such pairs; ties take the
// least pair, so the output is canonical.

struct HomResult {
  int depth = 0;
  std::vector<BitString> nodes;
};

inline HomResult extract_homogeneous(const FinTree& S, const Coloring& C, int c) {
  std::vector<BitString> mono;
  for (const auto& nu : S.nodes())
    if (C.defined(nu) && C.at(nu) == c) mono.push_back(nu);
  // Canonical node order is length-first, so process deepest first.
  std::map<BitString, int> depth;
  std::map<BitString, std::pair<BitString, BitString>> pick;
  for (auto it = mono.rbegin(); it != mono.rend(); ++it) {
    const BitString& nu = *it;
    int best = 0;
    std::pair<BitString, BitString> arg;
    for (const auto& a : mono) {
      if (!(nu < a) || !a.has_prefix(nu) || a == nu) continue;
      for (const auto& b : mono) {
        if (!(a < b) || !b.has_prefix(nu)) continue;
        if (a.compatible(b)) continue;
        int d = std::min(depth[a], depth[b]);
        if (d > best) {
          best = d;
          arg = {a, b};
        }
      }
    }
    depth[nu] = best + 1;
    if (best > 0) pick[nu] = arg;
  }
  HomResult h;
  BitString root;
  for (const auto& nu : mono)
    if (depth[nu] > h.depth) {
      h.depth = depth[nu];
      root = nu;
    }
  if (h.depth == 0) return h;
  std::vector<BitString> frontier = {root};
  while (!frontier.empty()) {
    std::vector<BitString> next;
    for (const auto& nu : frontier) {
      h.nodes.push_back(nu);
      auto it = pick.find(nu);
      if (it != pick.end() && depth[nu] > 1) {
        next.push_back(it->second.first);
        next.push_back(it->second.second);
      }
    }
    frontier = std::move(next);
  }
  std::sort(h.nodes.begin(), h.nodes.end());
  return h;
}

// ---------------------------------------------------------------------------
// Commands.

inline std::pair<int, Json> cmd_bounds(Args& a) {
  expect(a.pos.size() >= 2, Err::bad_input,
         "usage: bounds {g|gbar|h|hbar} <args...>");
  const std::string& which = a.pos[1];
  auto arg = [&](std::size_t i) -> const std::string& {
    expect(a.pos.size() > i, Err::bad_input, "bounds " + which + ": missing argument");
    return a.pos[i];
  };
  auto num = [&](std::size_t i) -> BigInt { return io::parse_bigint(arg(i)); };
  auto small = [&](std::size_t i) -> std::uint64_t {
    BigInt v = num(i);
    expect(v >= 0 && v <= BigInt(1) << 40, Err::bad_input,
           "bounds " + which + ": argument out of range");
    return static_cast<std::uint64_t>(v);
  };
  Json out;
  if (which == "g") {
    out["value"] = bound_g(num(2), io::parse_density(arg(3))).str();
  } else if (which == "gbar") {
    out["value"] = bound_gbar(small(2), small(3), small(4)).str();
  } else if (which == "h" || which == "hbar") {
    try {
      BigInt v = which == "h"
                     ? bound_h(small(2), small(3), io::parse_density(arg(4)))
                     : bound_hbar(small(2), small(3), small(4));
      out["value"] = v.str();
    } catch (const Error& e) {
      auto it = e.detail().find("exact_value");
      if (e.code() != Err::bad_input || it == e.detail().end()) throw;
      out["value"] = it->second;
      out["symbolic"] = true;
    }
  } else {
    fail(Err::bad_input, "unknown bounds kind \"" + which + "\"");
  }
  return {0, out};
}

inline std::pair<int, Json> cmd_large(Args& a) {
  expect(a.pos.size() == 2, Err::bad_input, "usage: large {check|decompose} ...");
  LevelSet X = io::levels_from(a.load("set"));
  Alpha alpha = Alpha::parse(a.need("alpha"));
  if (a.pos[1] == "check") {
    bool l = is_large(X, alpha);
    return {l ? 0 : 1, Json{{"large", l}, {"alpha", alpha.str()}}};
  }
  if (a.pos[1] == "decompose") {
    StackOfSets blocks = decompose(X, alpha);
    Json jb = Json::array();
    for (const auto& b : blocks) jb.push_back(io::levels_json(b));
    return {0, Json{{"blocks", std::move(jb)}, {"alpha", alpha.str()}}};
  }
  fail(Err::bad_input, "unknown large subcommand \"" + a.pos[1] + "\"");
}

inline std::pair<int, Json> cmd_tree(Args& a) {
  expect(a.pos.size() == 2, Err::bad_input,
         "usage: tree {check-qs|check-prehom|prune} ...");
  LevelSet X = io::levels_from(a.load("set"));
  FinTree T = io::tree_from(a.load("tree"));
  if (a.pos[1] == "check-qs") {
    bool qs = is_quasistrong(T, X);
    return {qs ? 0 : 1, Json{{"quasistrong", qs}}};
  }
  if (a.pos[1] == "check-prehom") {
    Coloring C = io::coloring_from(a.load("coloring"));
    std::set<int> colors = prehomogeneous_colors(T, C, X);
    Json jc = Json::array();
    for (int c : colors) jc.push_back(c);
    bool ok = a.has("color") ? colors.count(static_cast<int>(a.need_u64("color"))) != 0
                             : !colors.empty();
    return {ok ? 0 : 1, Json{{"prehomogeneous", ok}, {"colors", std::move(jc)}}};
  }
  if (a.pos[1] == "prune") {
    LevelSet Y = io::levels_from(a.load("sub"));
    FinTree P = prune_to_quasistrong(T, X, Y);
    bool qs = is_quasistrong(P, Y);
    return {qs ? 0 : 1, Json{{"quasistrong", qs}, {"tree", io::tree_json(P)}}};
  }
  fail(Err::bad_input, "unknown tree subcommand \"" + a.pos[1] + "\"");
}

inline std::pair<int, Json> cmd_kg(Args& a) {
  expect(a.pos.size() == 2 && a.pos[1] == "run", Err::bad_input, "usage: kg run ...");
  LevelSet X = io::levels_from(a.load("set"));
  FinTree T = io::tree_from(a.load("tree"));
  Json jd = a.load("dense");
  expect(jd.is_array(), Err::bad_input, "--dense must be a JSON array of bit strings");
  std::vector<BitString> A;
  for (const auto& e : jd) A.push_back(BitString(e.get<std::string>()));
  KgResult r = kg_extract(T, X, A, a.need_u64("m"), io::parse_density(a.need("delta")),
                          a.on("best-effort"));
  VerifyContext ctx;
  ctx.instance = &T;
  ctx.dense = &A;
  VerifyReport vr = verify_certificate(r.cert, ctx);
  return {vr.valid ? 0 : 1, Json{{"levels", io::levels_json(r.Y)},
                                 {"certificate", io::certificate_json(r.cert)},
                                 {"verified", vr.valid},
                                 {"report", io::verify_report_json(vr)}}};
}

inline std::pair<int, Json> cmd_persist(Args& a) {
  expect(a.pos.size() == 2, Err::bad_input, "usage: persist {build|respond} ...");
  Json recipe;
  if (a.has("recipe")) {
    recipe = a.load("recipe");
  } else {
    // Leaf recipe synthesized from flags.
    Alpha alpha = Alpha::parse(a.need("alpha"));
    expect(alpha.n == 1, Err::bad_input,
           "direct flags cover w^d only; use --recipe for multiplied ordinals");
    recipe = Json{{"op", "from-large"},
                  {"set", a.load("set")},
                  {"d", alpha.d},
                  {"k", a.need_u64("k")},
                  {"i", a.need_u64("i")},
                  {"best_effort", a.on("best-effort")}};
  }
  PersistentSet P = run_recipe(recipe);
  Json base{{"chain", chain_json(P)},
            {"alpha", P.alpha.str()},
            {"k", P.k},
            {"depth", P.depth},
            {"recipe", recipe}};
  if (a.pos[1] == "build") return {0, std::move(base)};
  if (a.pos[1] == "respond") {
    expect(P.depth >= 1, Err::bad_input, "responder unused at depth 0");
    FinTree T = io::tree_from(a.load("tree"));
    Coloring C = io::coloring_from(a.load("coloring"));
    PersistResponse r = P.respond(T, C);
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
    VerifyReport vr = verify_certificate(cert, ctx);
    base["color"] = r.color;
    base["certificate"] = io::certificate_json(cert);
    base["verified"] = vr.valid;
    base["report"] = io::verify_report_json(vr);
    return {vr.valid ? 0 : 1, std::move(base)};
  }
  fail(Err::bad_input, "unknown persist subcommand \"" + a.pos[1] + "\"");
}

inline std::pair<int, Json> cmd_prehom(Args& a) {
  expect(a.pos.size() == 2 && a.pos[1] == "run", Err::bad_input, "usage: prehom run ...");
  LevelSet X = io::levels_from(a.load("set"));
  TreeFamily F = io::family_from(a.load("family"));
  Coloring C = io::coloring_from(a.load("coloring"));
  Certificate cert = prehom_select(X, F, C, a.need_u64("n"),
                                   static_cast<int>(a.need_u64("k")));
  VerifyContext ctx;
  ctx.family = &F;
  ctx.coloring = &C;
  VerifyReport vr = verify_certificate(cert, ctx);
  return {vr.valid ? 0 : 1, Json{{"levels", io::levels_json(cert.levels)},
                                 {"certificate", io::certificate_json(cert)},
                                 {"verified", vr.valid},
                                 {"report", io::verify_report_json(vr)}}};
}

inline std::pair<int, Json> cmd_main(Args& a) {
  expect(a.pos.size() == 2 && a.pos[1] == "run", Err::bad_input, "usage: main run ...");
  LevelSet X = io::levels_from(a.load("set"));
  FinTree T = io::tree_from(a.load("tree"));
  Coloring C = io::coloring_from(a.load("coloring"));
  std::uint32_t d = static_cast<std::uint32_t>(a.need_u64("d"));
  int k = static_cast<int>(a.need_u64("k"));
  MainResult r = prehomogeneous_main(X, d, k, T, C, a.on("best-effort"));
  VerifyContext ctx;
  ctx.instance = &T;
  ctx.coloring = &C;
  VerifyReport vr = verify_certificate(r.cert, ctx);
  Json out{{"levels", io::levels_json(r.Y)},
           {"certificate", io::certificate_json(r.cert)},
           {"verified", vr.valid},
           {"report", io::verify_report_json(vr)}};
  if (a.on("homogeneous")) {
    Json hom = Json::array();
    for (const auto& [rho, S] : r.cert.trees) {
      HomResult h = extract_homogeneous(S, C, r.cert.colors.at(rho));
      Json nodes = Json::array();
      for (const auto& nu : h.nodes) nodes.push_back(nu.str());
      hom.push_back(Json{{"root", rho.str()},
                         {"color", r.cert.colors.at(rho)},
                         {"depth", h.depth},
                         {"nodes", std::move(nodes)}});
    }
    out["homogeneous"] = std::move(hom);
  }
  return {vr.valid ? 0 : 1, std::move(out)};
}

inline std::pair<int, Json> cmd_oracle(Args& a) {
  expect(a.pos.size() == 2, Err::bad_input,
         "usage: oracle {persistent|minimal|enum} ...");
  BudgetMeter meter(a.budget());
  if (a.pos[1] == "persistent") {
    LevelSet X = io::levels_from(a.load("set"));
    PersistVerdict v = check_persistent_exact(
        X, Alpha::parse(a.need("alpha")), static_cast<int>(a.need_u64("k")),
        static_cast<int>(a.need_u64("i")), meter, !a.on("no-symmetry"));
    return {v.persistent ? 0 : 1, io::persist_verdict_json(v)};
  }
  if (a.pos[1] == "minimal") {
    const std::string& prop = a.need("property");
    std::uint64_t n_max = a.need_u64("n-max");
    MinimalSizeResult r;
    if (prop == "kg") {
      r = minimal_size_search_kg(a.need_u64("m"), io::parse_density(a.need("delta")),
                                 n_max, meter);
    } else if (prop == "persistence") {
      r = minimal_size_search_persistence(Alpha::parse(a.need("alpha")),
                                          static_cast<int>(a.need_u64("k")),
                                          static_cast<int>(a.need_u64("i")), n_max,
                                          meter, !a.on("no-symmetry"));
    } else if (prop == "prehom") {
      r = minimal_size_search_prehom(static_cast<std::uint32_t>(a.need_u64("d")),
                                     static_cast<int>(a.need_u64("k")), n_max, meter);
    } else {
      fail(Err::bad_input, "unknown property \"" + prop + "\"");
    }
    return {r.found ? 0 : 1, io::minimal_size_json(r)};
  }
  if (a.pos[1] == "enum") {
    LevelSet X = io::levels_from(a.load("set"));
    Json out;
    if (a.on("list")) {
      Json trees = Json::array();
      for_each_qs_tree(X, meter, [&](const FinTree& T) {
        trees.push_back(io::tree_json(T));
        return true;
      });
      out["count"] = trees.size();
      out["trees"] = std::move(trees);
    } else {
      out["count"] = count_qs_trees(X, meter);
    }
    return {0, out};
  }
  fail(Err::bad_input, "unknown oracle subcommand \"" + a.pos[1] + "\"");
}

inline std::pair<int, Json> cmd_verify(Args& a) {
  Certificate cert = io::certificate_from(a.load("cert"));
  FinTree instance;
  TreeFamily family;
  Coloring coloring;
  std::vector<BitString> dense;
  VerifyContext ctx;
  if (a.has("instance")) {
    instance = io::tree_from(a.load("instance"));
    ctx.instance = &instance;
  }
  if (a.has("family")) {
    family = io::family_from(a.load("family"));
    ctx.family = &family;
  }
  if (a.has("coloring")) {
    coloring = io::coloring_from(a.load("coloring"));
    ctx.coloring = &coloring;
  }
  if (a.has("dense")) {
    Json jd = a.load("dense");
    expect(jd.is_array(), Err::bad_input, "--dense must be a JSON array of bit strings");
    for (const auto& e : jd) dense.push_back(BitString(e.get<std::string>()));
    ctx.dense = &dense;
  }
  VerifyReport vr = verify_certificate(cert, ctx);
  return {vr.valid ? 0 : 1, io::verify_report_json(vr)};
}

}  // namespace detail

inline CliResult dispatch(const std::vector<std::string>& argv) {
  using detail::Json;
  detail::Args args;
  Json report;
  int code = 0;
  try {
    args = detail::parse_args(argv);
    expect(!args.pos.empty(), Err::bad_input,
           "usage: {bounds|large|tree|kg|persist|prehom|main|oracle|verify} ...");
    args.manifest.command = args.pos[0];
    for (std::size_t i = 1; i < args.pos.size(); ++i)
      args.manifest.command += " " + args.pos[i];
    for (const auto& [k, v] : args.flags) args.manifest.params[k] = v;
    for (const auto& s : args.switches) args.manifest.params[s] = "true";
    args.manifest.seed = args.u64_or("seed", 0);

    const std::string& cmd = args.pos[0];
    std::pair<int, Json> r;
    if (cmd == "bounds") r = detail::cmd_bounds(args);
    else if (cmd == "large") r = detail::cmd_large(args);
    else if (cmd == "tree") r = detail::cmd_tree(args);
    else if (cmd == "kg") r = detail::cmd_kg(args);
    else if (cmd == "persist") r = detail::cmd_persist(args);
    else if (cmd == "prehom") r = detail::cmd_prehom(args);
    else if (cmd == "main") r = detail::cmd_main(args);
    else if (cmd == "oracle") r = detail::cmd_oracle(args);
    else if (cmd == "verify") r = detail::cmd_verify(args);
    else fail(Err::bad_input, "unknown command \"" + cmd + "\"");
    code = r.first;
    report = std::move(r.second);
  } catch (const Error& e) {
    report = Json{{"error", err_name(e.code())}, {"message", e.what()}};
    if (!e.detail().empty()) report["detail"] = e.detail();
    bool malformed = e.code() == Err::bad_input || e.code() == Err::partial_coloring ||
                     e.code() == Err::malformed_certificate;
    code = malformed ? 2 : 1;
  } catch (const std::exception& e) {
    report = Json{{"error", "internal"}, {"message", e.what()}};
    code = 1;
  }
  report["manifest"] = io::manifest_json(args.manifest);
  return {code, io::dump(report)};
}

}  // namespace qstree::cli
