// graf: command-line front end. Every command writes its artifacts and a
// manifest.json into --out and exits non-zero on any error.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "graf/analysis.hpp"
#include "graf/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace graf;

namespace {

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error("cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(p.string() + ": " + e.what());
  }
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

SearchSpaceSpec load_space(const std::string& name) {
  if (name.size() > 5 && name.ends_with(".json")) return spec_from_json(read_json(name));
  return builtin_space(name);
}

// Options shared by the commands that read a benchmark.
struct Source {
  std::string config;
  std::string in;
  std::string space;
  std::string out;

  json doc = json::object();

  void add(CLI::App* app, bool with_config) {
    if (with_config) app->add_option("--config", config, "JSON config file");
    app->add_option("--in", in, "benchmark JSONL (default: synthetic benchmark of --space)");
    app->add_option("--space", space, "built-in space name or spec JSON file");
    app->add_option("--out", out, "output directory")->required();
  }

  // Loads the config document; its "dataset" path is relative to the file.
  void load_config() {
    if (config.empty()) return;
    doc = read_json(config);
    if (!doc.is_object()) throw Error(config + ": expected object");
    if (in.empty() && doc.contains("dataset") && doc["dataset"].is_string()) {
      const fs::path p = doc["dataset"].get<std::string>();
      in = (p.is_relative() ? fs::path(config).parent_path() / p : p).string();
    }
    if (space.empty() && doc.contains("space") && doc["space"].is_string()) space = doc["space"].get<std::string>();
  }

  SearchSpaceSpec spec() const { return load_space(space.empty() ? "nb201_like" : space); }

  Dataset dataset(const SearchSpaceSpec& s) const {
    if (in.empty()) return build_space_dataset(s, SynthConfig{});
    return load_dataset(in, &s);
  }

  json describe() const {
    return {{"dataset", in.empty() ? json("synthetic:" + std::string(kSynthGeneratorVersion)) : json(in)},
            {"space", space.empty() ? "nb201_like" : space}};
  }
};

json merge(json a, const json& b) {
  a.update(b);
  return a;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto end = s.find(',', start);
    const auto item = s.substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (!item.empty()) out.push_back(item);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------

void cmd_synth(const Source& src, const std::string& target_fn, std::optional<double> noise,
               std::optional<std::uint64_t> seed, bool all_cells) {
  Source s = src;
  s.load_config();
  const json& doc = s.doc;
  SynthConfig cfg = synth_config_from(ConfigNode(doc));
  if (!target_fn.empty()) cfg.target_fn = target_fn;
  if (noise) cfg.noise_sigma = *noise;
  if (seed) cfg.seed = *seed;
  if (all_cells) cfg.well_formed_only = false;
  if (cfg.noise_sigma < 0) throw Error("--noise must be >= 0");
  const auto spec = s.spec();
  const Dataset ds = build_space_dataset(spec, cfg);
  fs::create_directories(s.out);
  save_dataset(fs::path(s.out) / "bench.jsonl", ds, spec);
  write_manifest(s.out, "synth", merge(synth_config_to_json(cfg), {{"space", spec.name}}), cfg.seed);
  std::cout << ds.size() << " records written to " << (fs::path(s.out) / "bench.jsonl").string() << '\n';
}

void cmd_extract(const Source& src, const std::string& recipe, const std::string& targets, std::uint64_t path_cap) {
  const auto spec = src.spec();
  const Dataset ds = src.dataset(spec);
  const auto fm = assemble(ds, parse_recipe(recipe, split_list(targets)), spec, {path_cap, Exec::kParallel});
  fs::create_directories(src.out);
  auto out = open_out(fs::path(src.out) / "features.csv");
  write_feature_csv(out, fm, ds.ids());
  write_manifest(src.out, "extract",
                 merge(src.describe(), {{"recipe", recipe}, {"targets", targets}, {"path_cap", path_cap}}), 0);
  std::cout << fm.x.rows() << " rows, " << fm.columns.size() << " feature columns\n";
}

void cmd_prune(const Source& src) {
  if (src.in.empty()) throw Error("prune needs --in");
  const auto spec = src.spec();
  const Dataset ds = load_dataset(src.in, &spec);
  Dataset kept;
  json removed = json::array();
  for (const auto& rec : ds.records) {
    bool ok = true;
    if (const auto* cells = std::get_if<std::vector<CellGraph>>(&rec.arch))
      for (const auto& c : *cells) ok = ok && is_well_formed(c, spec);
    if (ok)
      kept.records.push_back(rec);
    else
      removed.push_back(rec.arch_id);
  }
  fs::create_directories(src.out);
  save_dataset(fs::path(src.out) / "pruned.jsonl", kept, spec);
  const json report{{"total", ds.size()}, {"kept", kept.size()}, {"removed", removed.size()}, {"removed_ids", removed}};
  open_out(fs::path(src.out) / "prune_report.json") << report.dump(2) << '\n';
  write_manifest(src.out, "prune", src.describe(), 0);
  std::cout << "kept " << kept.size() << " of " << ds.size() << '\n';
}

void cmd_redundancy(const Source& src, const std::string& recipe, double tolerance) {
  const auto spec = src.spec();
  const Dataset ds = src.dataset(spec);
  const auto fm = assemble(ds, parse_recipe(recipe), spec);
  const auto res = eliminate_redundant(fm.x, tolerance);
  std::vector<char> keep(fm.columns.size(), 0);
  for (std::size_t c : res.kept) keep[c] = 1;
  fs::create_directories(src.out);
  auto out = open_out(fs::path(src.out) / "redundancy.csv");
  out << "index,feature,kept\n";
  for (std::size_t c = 0; c < fm.columns.size(); ++c)
    out << c << ",\"" << fm.columns[c] << "\"," << (keep[c] ? 1 : 0) << '\n';
  write_manifest(src.out, "redundancy", merge(src.describe(), {{"recipe", recipe}, {"tolerance", tolerance}}), 0);
  std::cout << "kept " << res.kept.size() << " of " << fm.columns.size() << " columns\n";
}

void cmd_importance(const Source& src, const json& overrides, std::size_t top) {
  Source s = src;
  s.load_config();
  const json doc = merge(s.doc, overrides);
  const ImportanceConfig cfg = importance_config_from(ConfigNode(doc));
  const auto spec = s.spec();
  const auto rep = importance_report(importance_runs(s.dataset(spec), spec, cfg));
  fs::create_directories(s.out);
  auto out = open_out(fs::path(s.out) / "importance.csv");
  rep.write_csv(out);
  write_manifest(s.out, "importance", merge(cfg.to_json(), s.describe()), cfg.seeds.front());
  rep.write_table(std::cout, top);
}

void cmd_search(const Source& src, const json& overrides, bool random_baseline) {
  Source s = src;
  s.load_config();
  const json doc = merge(s.doc, overrides);
  const SearchConfig cfg = search_config_from(ConfigNode(doc));
  const std::string recipe = doc.value("recipe", "graf");
  const std::string target = doc.value("target", "val_acc");
  const auto spec = s.spec();
  const Dataset ds = s.dataset(spec);
  const auto fm = assemble(ds, parse_recipe(recipe, {target}), spec);
  const auto y = fm.y.column(0);
  const auto ids = ds.ids();
  const SearchTrace trace = run_search(fm.x, y, ids, cfg);

  fs::create_directories(s.out);
  auto out = open_out(fs::path(s.out) / "trace.csv");
  trace.write_csv(out);
  json summary{{"queries", trace.queries()},
               {"best_arch_id", ids[trace.best_index]},
               {"best_value", trace.best_value},
               {"best_percentile", percentile_of(y, trace.best_value)},
               {"exhausted", trace.exhausted}};
  if (random_baseline) {
    const SearchTrace rnd = run_random_search(y, ids, trace.queries(), cfg.seed);
    auto rout = open_out(fs::path(s.out) / "random_trace.csv");
    rnd.write_csv(rout);
    summary["random_best_value"] = rnd.best_value;
    summary["random_best_percentile"] = percentile_of(y, rnd.best_value);
  }
  open_out(fs::path(s.out) / "summary.json") << summary.dump(2) << '\n';
  write_manifest(s.out, "search",
                 merge(search_config_to_json(cfg), merge(s.describe(), {{"recipe", recipe}, {"target", target}})),
                 cfg.seed);
  std::cout << "best " << summary["best_arch_id"].get<std::string>() << " value " << trace.best_value
            << " percentile " << summary["best_percentile"].get<double>() << '\n';
}

void cmd_evaluate(const Source& src, const json& overrides) {
  Source s = src;
  s.load_config();
  const json doc = merge(s.doc, overrides);
  const EvaluateConfig cfg = evaluate_config_from(ConfigNode(doc));
  const auto spec = s.spec();
  const auto report = run_evaluate(s.dataset(spec), spec, cfg);
  fs::create_directories(s.out);
  auto rep = open_out(fs::path(s.out) / "report.csv");
  report.write_report_csv(rep);
  auto per = open_out(fs::path(s.out) / "per_seed.csv");
  report.write_per_seed_csv(per, cfg.targets);
  write_manifest(s.out, "evaluate", merge(cfg.to_json(), s.describe()), doc.value("master_seed", std::uint64_t{0}));
  for (const auto& row : report.summary())
    std::cout << row.recipe << " @" << row.train_size << ": " << format_mean_std(row.mean, row.std) << '\n';
}

void cmd_schema(const std::string& space, const std::string& out_dir) {
  const auto spec = load_space(space);
  const auto schema = feature_schema(spec);
  if (out_dir.empty()) {
    for (const auto& n : schema.names()) std::cout << n << '\n';
    return;
  }
  fs::create_directories(out_dir);
  open_out(fs::path(out_dir) / "schema.json") << schema.to_json().dump(2) << '\n';
  write_manifest(out_dir, "schema", {{"space", space}}, 0);
  std::cout << schema.size() << " features\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GRAF feature extraction, predictor evaluation and surrogate search"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kGrafVersion);

  // synth
  Source synth_src;
  std::string target_fn;
  std::optional<double> noise;
  std::optional<std::uint64_t> synth_seed;
  bool all_cells = false;
  auto* synth = app.add_subcommand("synth", "write a synthetic benchmark for an enumerable space");
  synth_src.add(synth, true);
  synth->add_option("--target-fn", target_fn, "depth_shortcut | conv_count | skip_shortcut | random | feature:<name>");
  synth->add_option("--noise", noise, "target noise sigma");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_flag("--all-cells", all_cells, "keep cells with unreachable operations");

  // extract
  Source extract_src;
  std::string extract_recipe = "graf", extract_targets = "val_acc";
  std::uint64_t path_cap = kDefaultPathEncodingCap;
  auto* extract = app.add_subcommand("extract", "write the feature matrix of a benchmark as CSV");
  extract_src.add(extract, false);
  extract->add_option("--recipe", extract_recipe, "feature recipe, e.g. graf, oh, zcp+graf");
  extract->add_option("--targets", extract_targets, "comma-separated target names");
  extract->add_option("--path-cap", path_cap, "largest path encoding allowed");

  // prune
  Source prune_src;
  auto* prune = app.add_subcommand("prune", "drop architectures with unreachable operations");
  prune_src.add(prune, false);

  // redundancy
  Source red_src;
  std::string red_recipe = "graf";
  double tolerance = 1e-8;
  auto* redundancy = app.add_subcommand("redundancy", "report linearly redundant feature columns");
  red_src.add(redundancy, false);
  redundancy->add_option("--recipe", red_recipe, "feature recipe");
  redundancy->add_option("--tolerance", tolerance, "relative residual tolerance");

  // importance
  Source imp_src;
  std::optional<std::string> imp_recipe, imp_target, imp_method;
  std::optional<std::uint64_t> imp_size, imp_seeds;
  bool imp_drop = false;
  std::size_t top = 10;
  auto* importance = app.add_subcommand("importance", "mean feature-importance ranks over seeds");
  imp_src.add(importance, true);
  importance->add_option("--recipe", imp_recipe, "feature recipe");
  importance->add_option("--target", imp_target, "target name");
  importance->add_option("--method", imp_method, "permutation | shapley");
  importance->add_option("--train-size", imp_size, "training rows per seed");
  importance->add_option("--n-seeds", imp_seeds, "number of derived seeds");
  importance->add_flag("--drop-redundant", imp_drop, "rank only non-redundant columns");
  importance->add_option("--top", top, "rows in the printed table");

  // search
  Source search_src;
  std::optional<std::string> search_recipe, search_target;
  std::optional<std::uint64_t> search_seed;
  std::optional<int> iterations;
  bool random_baseline = false;
  auto* search = app.add_subcommand("search", "surrogate search with Thompson sampling");
  search_src.add(search, true);
  search->add_option("--recipe", search_recipe, "surrogate feature recipe");
  search->add_option("--target", search_target, "target to maximize");
  search->add_option("--seed", search_seed, "search seed");
  search->add_option("--iterations", iterations, "search iterations");
  search->add_flag("--random-baseline", random_baseline, "also run random search with the same budget");

  // evaluate
  Source eval_src;
  std::optional<std::string> eval_recipes, eval_sizes;
  std::optional<std::uint64_t> eval_seeds;
  auto* evaluate = app.add_subcommand("evaluate", "Kendall tau sweep over recipes, train sizes and seeds");
  eval_src.add(evaluate, true);
  evaluate->add_option("--recipes", eval_recipes, "comma-separated recipes");
  evaluate->add_option("--train-sizes", eval_sizes, "comma-separated train sizes");
  evaluate->add_option("--n-seeds", eval_seeds, "number of derived seeds");

  // schema
  std::string schema_space = "nb201_like", schema_out;
  auto* schema = app.add_subcommand("schema", "list the GRAF feature columns of a space");
  schema->add_option("--space", schema_space, "built-in space name or spec JSON file");
  schema->add_option("--out", schema_out, "write schema.json here instead of printing");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      cmd_synth(synth_src, target_fn, noise, synth_seed, all_cells);
    } else if (extract->parsed()) {
      cmd_extract(extract_src, extract_recipe, extract_targets, path_cap);
    } else if (prune->parsed()) {
      cmd_prune(prune_src);
    } else if (redundancy->parsed()) {
      cmd_redundancy(red_src, red_recipe, tolerance);
    } else if (importance->parsed()) {
      json o = json::object();
      if (imp_recipe) o["recipe"] = *imp_recipe;
      if (imp_target) o["target"] = *imp_target;
      if (imp_method) o["method"] = *imp_method;
      if (imp_size) o["train_size"] = *imp_size;
      if (imp_seeds) {
        o["n_seeds"] = *imp_seeds;
        o["seeds"] = nullptr;
      }
      if (imp_drop) o["drop_redundant"] = true;
      cmd_importance(imp_src, o, top);
    } else if (search->parsed()) {
      json o = json::object();
      if (search_recipe) o["recipe"] = *search_recipe;
      if (search_target) o["target"] = *search_target;
      if (search_seed) o["seed"] = *search_seed;
      if (iterations) o["n_iterations"] = *iterations;
      cmd_search(search_src, o, random_baseline);
    } else if (evaluate->parsed()) {
      json o = json::object();
      if (eval_recipes) o["recipes"] = split_list(*eval_recipes);
      if (eval_sizes) {
        json sizes = json::array();
        for (const auto& v : split_list(*eval_sizes)) sizes.push_back(std::stoull(v));
        o["train_sizes"] = sizes;
      }
      if (eval_seeds) {
        o["n_seeds"] = *eval_seeds;
        o["seeds"] = nullptr;
      }
      cmd_evaluate(eval_src, o);
    } else if (schema->parsed()) {
      cmd_schema(schema_space, schema_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
