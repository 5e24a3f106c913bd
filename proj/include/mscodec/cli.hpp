#pragma once

#include "decoder.hpp"
#include "encoder.hpp"
#include "generate.hpp"
#include "oracle.hpp"
#include "transforms.hpp"
#include "verifier.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mscodec {

// Everything one invocation needs, resolved from flags and the environment.
// r belongs to verification only: encoding and decoding never read it.
struct RunConfig {
  std::string command;
  std::string input_path;
  std::string output_path;  // empty prints to the output stream

  std::optional<Rational> r;  // verify: require home diameter >= r
  size_t level_cap = 6;       // encode window; the environment moves the default
  int precision = 10;         // query rounding exponent
  Rational eps = Rational(0);  // verify slack and roundtrip tolerance

  std::string stage;                  // normalize: stop after this stage
  ScaleMode scale = ScaleMode::raw;   // encode output scale
  bool triangle = false;              // verify: exhaustive triangle scan
  std::string axioms;                 // verify: "TL" or "TS"
  std::vector<std::string> endpoints;  // query: the two point names

  std::uint64_t seed = 0;  // gen
  std::optional<size_t> gen_points;
  std::optional<size_t> gen_preds;
};

namespace detail {

inline void check_run_config(const RunConfig& cfg) {
  if (cfg.level_cap < 1) throw input_error("the level window must keep at least one copy");
  if (cfg.precision < 0) throw input_error("precision must be nonnegative");
  if (cfg.eps < 0) throw input_error("tolerance must be nonnegative");
  if (cfg.r && (*cfg.r <= 0 || *cfg.r > 1))
    throw input_error("the diameter threshold must lie in (0, 1]");
}

// The default window size, overridable by MSCODEC_LEVEL_CAP. Read once per
// run; an explicit --levels still wins.
inline size_t env_level_cap() {
  const char* env = std::getenv("MSCODEC_LEVEL_CAP");
  if (!env) return 6;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1)
    throw input_error("MSCODEC_LEVEL_CAP must be a positive integer");
  return size_t(v);
}

inline Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw input_error(path + ": " + e.what());
  }
}

// Structure-consuming commands accept either a bare presentation or the
// {structure, trace} envelope written by normalize.
inline const Json& structure_slot(const Json& doc) {
  if (doc.is_object())
    if (auto it = doc.find("structure"); it != doc.end()) return *it;
  return doc;
}

inline void emit(const RunConfig& cfg, std::ostream& out, const Json& doc) {
  if (cfg.output_path.empty()) {
    out << doc.dump(2) << '\n';
    return;
  }
  std::ofstream f(cfg.output_path);
  if (!f) throw input_error("cannot write " + cfg.output_path);
  f << doc.dump(2) << '\n';
}

// Largest entrywise gap between two presentations of identical shape. A
// shape mismatch is reported instead of a number, since there is nothing
// meaningful to subtract.
inline Json presentation_gap(const FinitePresentation& got, const FinitePresentation& want) {
  Json gap = Json::object();
  if (got.signature != want.signature || got.points != want.points) {
    gap["comparable"] = false;
    return gap;
  }
  Rational metric_gap(0);
  for (size_t sort = 0; sort < want.sort_count(); ++sort)
    for (size_t i = 0; i < want.point_count(sort); ++i)
      for (size_t j = i + 1; j < want.point_count(sort); ++j)
        metric_gap = rat_max(metric_gap, rat_abs(got.dist(sort, i, j) - want.dist(sort, i, j)));
  Rational table_gap(0);
  for (size_t p = 0; p < want.tables.size(); ++p)
    for_each_tuple(want.tables[p].shape(), [&](const std::vector<size_t>& tuple) {
      table_gap = rat_max(table_gap, rat_abs(got.tables[p].at(tuple) - want.tables[p].at(tuple)));
    });
  gap["comparable"] = true;
  gap["metric_gap"] = format_rational(metric_gap);
  gap["table_gap"] = format_rational(table_gap);
  return gap;
}

inline bool gap_within(const Json& gap, const Rational& eps) {
  if (!gap.at("comparable").get<bool>()) return false;
  return parse_rational(gap.at("metric_gap").get<std::string>()) <= eps &&
         parse_rational(gap.at("table_gap").get<std::string>()) <= eps;
}

inline int cmd_normalize(const RunConfig& cfg, std::ostream& out) {
  FinitePresentation s = presentation_from_json(structure_slot(load_json(cfg.input_path)));
  int stages = cfg.stage.empty() ? int(pipeline_stage_names().size())
                                 : pipeline_stage_prefix(cfg.stage);
  PipelineResult pr = normalize_pipeline(s, stages);
  Json doc = Json::object();
  doc["structure"] = presentation_to_json(pr.structure);
  doc["trace"] = trace_to_json(pr.trace);
  emit(cfg, out, doc);
  return 0;
}

inline int cmd_encode(const RunConfig& cfg, std::ostream& out) {
  FinitePresentation s = presentation_from_json(structure_slot(load_json(cfg.input_path)));
  emit(cfg, out, encoded_to_json(encode(s, cfg.level_cap, cfg.scale)));
  return 0;
}

inline int cmd_decode(const RunConfig& cfg, std::ostream& out) {
  emit(cfg, out, presentation_to_json(decode(load_json(cfg.input_path))));
  return 0;
}

inline int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!cfg.triangle && cfg.axioms.empty())
    throw input_error("verify needs --triangle and/or --axioms");
  Json doc = load_json(cfg.input_path);
  Json report = Json::object();
  bool failed = false;

  if (cfg.triangle) {
    FinitePresentation s = presentation_from_json(structure_slot(doc));
    Json rows = Json::array();
    for (size_t sort = 0; sort < s.sort_count(); ++sort)
      for (const auto& t : check_triangle(s.metric[sort])) {
        Json row = Json::object();
        row["sort"] = s.signature.sorts[sort];
        row["p"] = s.points[sort][t[0]];
        row["via"] = s.points[sort][t[1]];
        row["q"] = s.points[sort][t[2]];
        rows.push_back(std::move(row));
      }
    report["triangle"] = Json{{"ok", rows.empty()}, {"violations", rows}};
    if (!rows.empty()) {
      failed = true;
      err << rows.size() << " triangle violations\n";
    }
  }

  if (!cfg.axioms.empty()) {
    TheoryOptions opt;
    opt.eps = cfg.eps;
    opt.r = cfg.r;
    AxiomReport rep;
    if (cfg.axioms == "TL") {
      FinitePresentation X = presentation_from_json(structure_slot(doc));
      rep = doc.is_object() && doc.contains("metadata") ? check_theory_tl(X, doc["metadata"], opt)
                                                        : check_theory_tl(X, opt);
    } else {
      if (!doc.is_object() || !doc.contains("structure") || !doc.contains("trace"))
        throw input_error("the TS suite reads normalize output: {structure, trace}");
      FinitePresentation s = presentation_from_json(doc["structure"]);
      PipelineTrace trace = trace_from_json(doc["trace"]);
      const StageTrace* merge = nullptr;
      for (const auto& st : trace)
        if (st.stage == "merge" && !st.skipped) merge = &st;
      if (!merge) throw input_error("the trace has no sort-merge record to verify against");
      // Later stages rewrite the predicate list, so the record only
      // describes the structure while merge is the last applied stage.
      if (&trace.back() != merge)
        throw input_error("the structure has moved past the sort merge; use normalize --stage merge");
      rep = check_theory_ts(s, theory_s_spec_from_trace(merge->payload), opt);
    }
    report["axioms"] = rep.to_json();
    if (!rep.ok()) {
      failed = true;
      for (const auto& c : rep.checks)
        if (!c.advisory && c.status == "fail") {
          err << "axiom " << c.id << " failed\n";
          break;
        }
    }
  }

  emit(cfg, out, report);
  return failed ? 1 : 0;
}

inline int cmd_query(const RunConfig& cfg, std::ostream& out) {
  FinitePresentation s = presentation_from_json(structure_slot(load_json(cfg.input_path)));
  const std::string& p = cfg.endpoints[0];
  const std::string& q = cfg.endpoints[1];
  std::optional<size_t> sort;
  size_t i = 0, j = 0;
  for (size_t k = 0; k < s.sort_count() && !sort; ++k) {
    const auto& names = s.points[k];
    auto pi = std::find(names.begin(), names.end(), p);
    auto qi = std::find(names.begin(), names.end(), q);
    if (pi != names.end() && qi != names.end()) {
      sort = k;
      i = size_t(pi - names.begin());
      j = size_t(qi - names.begin());
    }
  }
  if (!sort) throw input_error("no sort contains both \"" + p + "\" and \"" + q + "\"");
  OraclePresentation oracle = make_oracle(s);
  Json doc = Json::object();
  doc["p"] = p;
  doc["q"] = q;
  doc["precision"] = cfg.precision;
  doc["value"] = format_rational(oracle.dist_query(*sort, i, j, cfg.precision));
  emit(cfg, out, doc);
  return 0;
}

inline int cmd_roundtrip(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  FinitePresentation s = presentation_from_json(structure_slot(load_json(cfg.input_path)));
  PipelineResult pr = normalize_pipeline(s);
  // Recovering the last predicate reads one level past it, so the window is
  // widened to stay lossless however many predicates the pipeline produced.
  // The pipeline validates its input and guarantees a valid output, which
  // makes the encoder's own revalidation redundant here.
  size_t cap = std::max(cfg.level_cap, pr.structure.signature.predicates.size() + 1);
  Json packed = encoded_to_json(encode(pr.structure, cap, ScaleMode::raw, true));
  FinitePresentation dec = decode(packed);
  FinitePresentation back = invert_pipeline(dec, pr.trace);

  Json doc = Json::object();
  doc["normalized"] = presentation_gap(dec, pr.structure);
  doc["original"] = presentation_gap(back, s);
  doc["tolerance"] = format_rational(cfg.eps);
  bool ok = gap_within(doc["normalized"], cfg.eps) && gap_within(doc["original"], cfg.eps);
  doc["ok"] = ok;
  emit(cfg, out, doc);
  if (!ok) err << "round trip left discrepancies above the tolerance\n";
  return ok ? 0 : 1;
}

inline int cmd_gen(const RunConfig& cfg, std::ostream& out) {
  GenerateConfig g;
  g.seed = cfg.seed;
  g.points = cfg.gen_points;
  g.predicates = cfg.gen_preds;
  emit(cfg, out, presentation_to_json(generate_structure(g)));
  return 0;
}

}  // namespace detail

// Parses the argument list (without the program name) and runs one command.
// Exit codes: 0 success, 1 verification failure, 2 input or format error.
// Diagnostics go to err; results go to out or the --out file.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg.level_cap = detail::env_level_cap();
  } catch (const input_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  CLI::App app{"codec between finitely presented metric structures and bare metric spaces"};
  app.require_subcommand(1);
  auto add_out = [&](CLI::App* c) {
    c->add_option("-o,--out", cfg.output_path, "write the result to this file instead of stdout");
  };

  CLI::App* normalize = app.add_subcommand("normalize", "run the normalization stages");
  normalize->add_option("input", cfg.input_path, "structure JSON file")->required();
  normalize->add_option("--stage", cfg.stage,
                        "stop after this stage (reduce, merge, uuc, lipschitz, binarize)");
  add_out(normalize);

  CLI::App* encode_cmd = app.add_subcommand("encode", "encode a normalized structure as a metric space");
  encode_cmd->add_option("input", cfg.input_path, "normalized structure JSON file")->required();
  encode_cmd->add_option("--levels", cfg.level_cap, "level copies kept in the finite window");
  encode_cmd
      ->add_option("--scale", cfg.scale, "distance scale: raw or unit")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, ScaleMode>{{"raw", ScaleMode::raw}, {"unit", ScaleMode::unit}}));
  add_out(encode_cmd);

  CLI::App* decode_cmd = app.add_subcommand("decode", "recover the structure behind an encoded space");
  decode_cmd->add_option("input", cfg.input_path, "encoded JSON file")->required();
  add_out(decode_cmd);

  std::string eps_text, r_text;
  CLI::App* verify = app.add_subcommand("verify", "check metric and axiom properties");
  verify->add_option("input", cfg.input_path, "encoded space or normalize output")->required();
  verify->add_flag("--triangle", cfg.triangle, "scan every ordered triple for triangle violations");
  verify->add_option("--axioms", cfg.axioms, "axiom suite: TL for encoded spaces, TS for merged structures")
      ->check(CLI::IsMember({"TL", "TS"}));
  verify->add_option("--eps", eps_text, "slack for axiom comparisons (rational, default 0)");
  verify->add_option("--r", r_text, "require the home diameter to reach this rational in (0, 1]");
  add_out(verify);

  CLI::App* query = app.add_subcommand("query", "approximate one distance through the oracle tier");
  query->add_option("input", cfg.input_path, "structure JSON file")->required();
  query->add_option("--dist", cfg.endpoints, "the two point names")->expected(2)->required();
  query->add_option("--prec", cfg.precision, "answer within 2^-prec of the exact value");
  add_out(query);

  std::string rt_eps_text;
  CLI::App* roundtrip = app.add_subcommand("roundtrip", "normalize, encode, decode and diff");
  roundtrip->add_option("input", cfg.input_path, "structure JSON file")->required();
  roundtrip->add_option("--eps", rt_eps_text, "largest acceptable discrepancy (rational, default 0)");
  add_out(roundtrip);

  CLI::App* gen = app.add_subcommand("gen", "sample a random valid structure");
  gen->add_option("--seed", cfg.seed, "generator seed");
  size_t gen_points = 0, gen_preds = 0;
  CLI::Option* points_opt = gen->add_option("--points", gen_points, "points per sort");
  CLI::Option* preds_opt = gen->add_option("--preds", gen_preds, "predicate count");
  add_out(gen);

  std::vector<const char*> argv;
  argv.push_back("mscodec");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    cfg.command = app.get_subcommands().front()->get_name();
    if (!eps_text.empty()) cfg.eps = parse_rational(eps_text);
    if (!rt_eps_text.empty()) cfg.eps = parse_rational(rt_eps_text);
    if (!r_text.empty()) cfg.r = parse_rational(r_text);
    if (points_opt->count()) cfg.gen_points = gen_points;
    if (preds_opt->count()) cfg.gen_preds = gen_preds;
    detail::check_run_config(cfg);

    if (cfg.command == "normalize") return detail::cmd_normalize(cfg, out);
    if (cfg.command == "encode") return detail::cmd_encode(cfg, out);
    if (cfg.command == "decode") return detail::cmd_decode(cfg, out);
    if (cfg.command == "verify") return detail::cmd_verify(cfg, out, err);
    if (cfg.command == "query") return detail::cmd_query(cfg, out);
    if (cfg.command == "roundtrip") return detail::cmd_roundtrip(cfg, out, err);
    return detail::cmd_gen(cfg, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  return run_cli(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace mscodec
