#include "graf/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "graf/metrics.hpp"
#include "graf/parallel.hpp"
#include "graf/rng.hpp"

namespace graf {

void EvaluateConfig::check() const {
  if (recipes.empty()) throw Error("evaluate: no recipes");
  if (train_sizes.empty()) throw Error("evaluate: no train sizes");
  if (seeds.empty()) throw Error("evaluate: no seeds");
  if (targets.empty() || targets.size() > 2) throw Error("evaluate: expected one or two targets");
  for (const auto& r : recipes) parse_recipe(r, targets);
  for (std::size_t s : train_sizes)
    if (s < 2) throw Error("evaluate: train sizes must be >= 2");
  forest.check();
  gbt.check();
}

nlohmann::json EvaluateConfig::to_json() const {
  nlohmann::json sizes = nlohmann::json::array();
  for (std::size_t s : train_sizes) sizes.push_back(s);
  return {{"schema_version", kConfigSchemaVersion},
          {"recipes", recipes},
          {"train_sizes", sizes},
          {"seeds", seeds},
          {"targets", targets},
          {"model", model == ModelChoice::kForest ? "rf" : "gbt"},
          {"forest", forest.to_json()},
          {"gbt", gbt.to_json()},
          {"path_cap", path_cap}};
}

std::string format_mean_std(double mean, double std) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f^%.2f", mean, std);
  return buf;
}

std::vector<EvalSummary> EvaluateReport::summary() const {
  std::vector<EvalSummary> out;
  for (const auto& r : runs) {
    auto it = std::find_if(out.begin(), out.end(), [&](const EvalSummary& s) {
      return s.recipe == r.recipe && s.train_size == r.train_size;
    });
    if (it == out.end()) {
      out.push_back({r.recipe, r.train_size, 0.0, 0.0, {}});
      it = out.end() - 1;
    }
    it->values.push_back(r.tau);
  }
  for (auto& s : out) {
    s.mean = mean(s.values);
    s.std = sample_std(s.values);
  }
  return out;
}

const EvalSummary& EvaluateReport::at(std::string_view recipe, std::size_t size) const {
  cache_ = summary();
  for (const auto& s : cache_)
    if (s.recipe == recipe && s.train_size == size) return s;
  throw Error("no evaluation for recipe '" + std::string(recipe) + "' at size " + std::to_string(size));
}

void EvaluateReport::write_report_csv(std::ostream& out) const {
  out << "recipe,train_size,mean_tau,std_tau,formatted,values\n";
  out.precision(17);
  for (const auto& s : summary()) {
    out << s.recipe << ',' << s.train_size << ',' << s.mean << ',' << s.std << ','
        << format_mean_std(s.mean, s.std) << ',';
    for (std::size_t i = 0; i < s.values.size(); ++i) out << (i ? ";" : "") << s.values[i];
    out << '\n';
  }
}

void EvaluateReport::write_per_seed_csv(std::ostream& out, const std::vector<std::string>& targets) const {
  out << "recipe,train_size,seed,tau";
  if (targets.size() > 1)
    for (const auto& t : targets) out << ",tau_" << t;
  out << '\n';
  out.precision(17);
  for (const auto& r : runs) {
    out << r.recipe << ',' << r.train_size << ',' << r.seed << ',' << r.tau;
    if (targets.size() > 1)
      for (double t : r.target_taus) out << ',' << t;
    out << '\n';
  }
}

EvalRun evaluate_once(const FeatureMatrix& fm, const std::string& recipe, std::size_t train_size,
                      std::uint64_t seed, const EvaluateConfig& cfg) {
  const std::size_t n = fm.x.rows();
  if (train_size >= n)
    throw Error("train size " + std::to_string(train_size) + " leaves no test rows (dataset has " +
                std::to_string(n) + ")");
  const Split split = sample_split(n, train_size, derive_seed(seed, SeedStream::kSplit));
  const DenseMatrix xtr = fm.x.select_rows(split.train);
  const DenseMatrix ytr = fm.y.select_rows(split.train);
  const DenseMatrix xte = fm.x.select_rows(split.test);
  const DenseMatrix yte = fm.y.select_rows(split.test);
  const std::uint64_t model_seed = derive_seed(seed, SeedStream::kModel);
  const std::uint64_t fp = column_fingerprint(fm.columns);

  DenseMatrix pred(xte.rows(), fm.y.cols());
  if (cfg.model == ModelChoice::kForest) {
    ForestConfig fc = cfg.forest;
    fc.seed = model_seed;
    pred = fit_forest(xtr, ytr, fc, fp, Exec::kSerial).predict(xte, fp, Exec::kSerial);
  } else {
    for (std::size_t t = 0; t < fm.y.cols(); ++t) {
      GbtConfig gc = cfg.gbt;
      gc.seed = fm.y.cols() == 1 ? model_seed : derive_seed(model_seed, SeedStream::kModel, t);
      const auto col = ytr.column(t);
      const DenseMatrix p = fit_gbt(xtr, DenseMatrix::from_column(col), gc, fp).predict(xte, fp, Exec::kSerial);
      for (std::size_t r = 0; r < p.rows(); ++r) pred(r, t) = p(r, 0);
    }
  }

  EvalRun run{recipe, train_size, seed, {}, 0.0};
  for (std::size_t t = 0; t < fm.y.cols(); ++t)
    run.target_taus.push_back(kendall_tau(pred.column(t), yte.column(t)));
  run.tau = mean(run.target_taus);
  return run;
}

EvaluateReport run_evaluate(const Dataset& ds, const SearchSpaceSpec& spec, const EvaluateConfig& cfg,
                            Exec exec) {
  cfg.check();
  std::vector<FeatureMatrix> matrices;
  const FeatureSchema schema = feature_schema(spec);
  for (const auto& r : cfg.recipes)
    matrices.push_back(assemble(ds, parse_recipe(r, cfg.targets), spec, schema, {cfg.path_cap, exec}));

  struct Task {
    std::size_t recipe, size, seed;
  };
  std::vector<Task> tasks;
  for (std::size_t r = 0; r < cfg.recipes.size(); ++r)
    for (std::size_t s = 0; s < cfg.train_sizes.size(); ++s)
      for (std::size_t k = 0; k < cfg.seeds.size(); ++k) tasks.push_back({r, s, k});

  EvaluateReport report;
  report.runs.resize(tasks.size());
  parallel_for(tasks.size(), exec, [&](std::size_t i) {
    const Task& t = tasks[i];
    report.runs[i] = evaluate_once(matrices[t.recipe], cfg.recipes[t.recipe], cfg.train_sizes[t.size],
                                   cfg.seeds[t.seed], cfg);
  });
  return report;
}

void ImportanceConfig::check() const {
  if (seeds.empty()) throw Error("importance: no seeds");
  if (train_size < 2) throw Error("importance: train_size must be >= 2");
  if (repeats < 1) throw Error("importance: repeats must be >= 1");
  if (eval_rows == 0) throw Error("importance: eval_rows must be > 0");
  if (shapley_samples == 0 || background_rows == 0)
    throw Error("importance: shapley_samples and background_rows must be > 0");
  parse_recipe(recipe, {target});
  forest.check();
}

nlohmann::json ImportanceConfig::to_json() const {
  return {{"schema_version", kConfigSchemaVersion},
          {"recipe", recipe},
          {"target", target},
          {"train_size", train_size},
          {"seeds", seeds},
          {"method", method == ImportanceMethod::kPermutation ? "permutation" : "shapley"},
          {"drop_redundant", drop_redundant},
          {"repeats", repeats},
          {"eval_rows", eval_rows},
          {"shapley_samples", shapley_samples},
          {"background_rows", background_rows},
          {"forest", forest.to_json()}};
}

std::vector<std::map<std::string, double>> importance_runs(const Dataset& ds, const SearchSpaceSpec& spec,
                                                           const ImportanceConfig& cfg, Exec exec) {
  cfg.check();
  FeatureMatrix fm = assemble(ds, parse_recipe(cfg.recipe, {cfg.target}), spec, {kDefaultPathEncodingCap, exec});
  const std::size_t n = fm.x.rows();
  if (cfg.train_size >= n)
    throw Error("importance: train size " + std::to_string(cfg.train_size) + " leaves no test rows");
  if (cfg.drop_redundant) {
    const auto kept = eliminate_redundant(fm.x).kept;
    std::vector<std::string> names;
    for (std::size_t c : kept) names.push_back(fm.columns[c]);
    fm.x = fm.x.select_cols(kept);
    fm.columns = std::move(names);
  }

  std::vector<std::map<std::string, double>> runs(cfg.seeds.size());
  parallel_for(cfg.seeds.size(), exec, [&](std::size_t k) {
    const std::uint64_t seed = cfg.seeds[k];
    const Split split = sample_split(n, cfg.train_size, derive_seed(seed, SeedStream::kSplit));
    ForestConfig fc = cfg.forest;
    fc.seed = derive_seed(seed, SeedStream::kModel);
    const DenseMatrix xtr = fm.x.select_rows(split.train);
    const auto model = fit_forest(xtr, fm.y.select_rows(split.train), fc, 0, Exec::kSerial);

    Rng rng(derive_seed(seed, SeedStream::kShuffle));
    const std::size_t m = std::min(cfg.eval_rows, split.test.size());
    std::vector<std::size_t> rows;
    for (std::size_t i : rng.sample_without_replacement(split.test.size(), m)) rows.push_back(split.test[i]);
    std::sort(rows.begin(), rows.end());
    const DenseMatrix xe = fm.x.select_rows(rows);

    std::vector<double> score;
    if (cfg.method == ImportanceMethod::kPermutation) {
      std::vector<double> ye;
      for (std::size_t r : rows) ye.push_back(fm.y(r, 0));
      score = permutation_importance(model, xe, ye, negative_mse, derive_seed(seed, SeedStream::kShuffle, 1),
                                     cfg.repeats, Exec::kSerial);
    } else {
      const std::size_t b = std::min(cfg.background_rows, xtr.rows());
      std::vector<std::size_t> bg;
      for (std::size_t i : rng.sample_without_replacement(xtr.rows(), b)) bg.push_back(i);
      ShapleyConfig sc;
      sc.n_samples = cfg.shapley_samples;
      sc.seed = derive_seed(seed, SeedStream::kShapley);
      score = mean_abs_shapley(model, xtr.select_rows(bg), xe, sc, Exec::kSerial);
    }
    for (std::size_t c = 0; c < fm.columns.size(); ++c) runs[k][fm.columns[c]] = score[c];
  });
  return runs;
}


// ---------------------------------------------------------------------------

namespace {

// Explicit "seeds", or "n_seeds" run seeds derived from "master_seed".
std::vector<std::uint64_t> seed_list(const ConfigNode& node, std::uint64_t default_count) {
  if (node.has("seeds") && node.has("n_seeds")) node.fail("n_seeds", "conflicts with seeds");
  if (node.has("seeds")) return node.get_uints("seeds", {});
  std::vector<std::uint64_t> out;
  const auto n = node.get_uint("n_seeds", default_count);
  const auto master = node.get_uint("master_seed", 0);
  for (std::uint64_t k = 0; k < n; ++k) out.push_back(derive_seed(master, SeedStream::kSplit, k));
  return out;
}

// Re-throws a semantic check failure under the node's path.
template <typename C>
void check_at(const ConfigNode& node, const C& c) {
  try {
    c.check();
  } catch (const Error& e) {
    throw Error((node.path().empty() ? std::string("config") : node.path()) + ": " + e.what());
  }
}

}  // namespace

ForestConfig forest_config_from(const ConfigNode& node) {
  node.only({"n_trees", "max_depth", "min_samples_split", "min_samples_leaf", "feature_fraction", "bootstrap",
             "seed"});
  ForestConfig c;
  c.n_trees = static_cast<int>(node.get_int("n_trees", c.n_trees));
  if (node.has("max_depth")) c.max_depth = static_cast<int>(node.get_int("max_depth", 0));
  c.min_samples_split = static_cast<int>(node.get_int("min_samples_split", c.min_samples_split));
  c.min_samples_leaf = static_cast<int>(node.get_int("min_samples_leaf", c.min_samples_leaf));
  c.feature_fraction = node.get_double("feature_fraction", c.feature_fraction);
  c.bootstrap = node.get_bool("bootstrap", c.bootstrap);
  c.seed = node.get_uint("seed", c.seed);
  check_at(node, c);
  return c;
}

GbtConfig gbt_config_from(const ConfigNode& node) {
  node.only({"n_rounds", "learning_rate", "subsample", "max_depth", "min_samples_leaf", "seed"});
  GbtConfig c;
  c.n_rounds = static_cast<int>(node.get_int("n_rounds", c.n_rounds));
  c.learning_rate = node.get_double("learning_rate", c.learning_rate);
  c.subsample = node.get_double("subsample", c.subsample);
  c.max_depth = static_cast<int>(node.get_int("max_depth", c.max_depth));
  c.min_samples_leaf = static_cast<int>(node.get_int("min_samples_leaf", c.min_samples_leaf));
  c.seed = node.get_uint("seed", c.seed);
  check_at(node, c);
  return c;
}

EvaluateConfig evaluate_config_from(const ConfigNode& node) {
  node.only({"schema_version", "dataset", "space", "recipes", "train_sizes", "seeds", "n_seeds", "master_seed",
             "targets", "model", "forest", "gbt", "path_cap"});
  node.check_schema_version();
  EvaluateConfig c;
  c.recipes = node.get_strings("recipes", c.recipes);
  c.targets = node.get_strings("targets", c.targets);
  if (node.has("train_sizes")) {
    c.train_sizes.clear();
    for (auto s : node.get_uints("train_sizes", {})) c.train_sizes.push_back(static_cast<std::size_t>(s));
  }
  c.seeds = seed_list(node, 50);
  const std::string model = node.get_string("model", "rf");
  if (model == "rf")
    c.model = ModelChoice::kForest;
  else if (model == "gbt")
    c.model = ModelChoice::kBoosted;
  else
    node.fail("model", "expected \"rf\" or \"gbt\"");
  if (node.has("forest")) c.forest = forest_config_from(node.child("forest"));
  if (node.has("gbt")) c.gbt = gbt_config_from(node.child("gbt"));
  c.path_cap = node.get_uint("path_cap", c.path_cap);
  check_at(node, c);
  return c;
}

SearchConfig search_config_from(const ConfigNode& node) {
  node.only({"schema_version", "dataset", "space", "recipe", "target", "n_iterations", "candidates_per_iter",
             "evals_per_iter", "ensemble_size", "initial_random_evals", "seed", "member_bootstrap", "forest"});
  node.check_schema_version();
  SearchConfig c;
  c.n_iterations = static_cast<int>(node.get_int("n_iterations", c.n_iterations));
  c.candidates_per_iter = static_cast<int>(node.get_int("candidates_per_iter", c.candidates_per_iter));
  c.evals_per_iter = static_cast<int>(node.get_int("evals_per_iter", c.evals_per_iter));
  c.ensemble_size = static_cast<int>(node.get_int("ensemble_size", c.ensemble_size));
  c.initial_random_evals = static_cast<int>(node.get_int("initial_random_evals", c.initial_random_evals));
  c.seed = node.get_uint("seed", c.seed);
  c.member_bootstrap = node.get_bool("member_bootstrap", c.member_bootstrap);
  if (node.has("forest")) c.forest = forest_config_from(node.child("forest"));
  check_at(node, c);
  return c;
}

nlohmann::json search_config_to_json(const SearchConfig& c) {
  return {{"schema_version", kConfigSchemaVersion},
          {"n_iterations", c.n_iterations},
          {"candidates_per_iter", c.candidates_per_iter},
          {"evals_per_iter", c.evals_per_iter},
          {"ensemble_size", c.ensemble_size},
          {"initial_random_evals", c.initial_random_evals},
          {"seed", c.seed},
          {"member_bootstrap", c.member_bootstrap},
          {"forest", c.forest.to_json()}};
}

ImportanceConfig importance_config_from(const ConfigNode& node) {
  node.only({"schema_version", "dataset", "space", "recipe", "target", "train_size", "seeds", "n_seeds",
             "master_seed", "method", "drop_redundant", "repeats", "eval_rows", "shapley_samples",
             "background_rows", "forest"});
  node.check_schema_version();
  ImportanceConfig c;
  c.recipe = node.get_string("recipe", c.recipe);
  c.target = node.get_string("target", c.target);
  c.train_size = node.get_uint("train_size", c.train_size);
  c.seeds = seed_list(node, 20);
  const std::string method = node.get_string("method", "permutation");
  if (method == "permutation")
    c.method = ImportanceMethod::kPermutation;
  else if (method == "shapley")
    c.method = ImportanceMethod::kShapley;
  else
    node.fail("method", "expected \"permutation\" or \"shapley\"");
  c.drop_redundant = node.get_bool("drop_redundant", c.drop_redundant);
  c.repeats = static_cast<int>(node.get_int("repeats", c.repeats));
  c.eval_rows = node.get_uint("eval_rows", c.eval_rows);
  c.shapley_samples = node.get_uint("shapley_samples", c.shapley_samples);
  c.background_rows = node.get_uint("background_rows", c.background_rows);
  if (node.has("forest")) c.forest = forest_config_from(node.child("forest"));
  check_at(node, c);
  return c;
}

SynthConfig synth_config_from(const ConfigNode& node) {
  node.only({"schema_version", "generator", "space", "target_fn", "target_name", "noise_sigma", "seed",
             "well_formed_only"});
  node.check_schema_version();
  if (node.get_string("generator", kSynthGeneratorVersion) != kSynthGeneratorVersion)
    node.fail("generator", std::string("unsupported, expected ") + kSynthGeneratorVersion);
  SynthConfig c;
  c.target_fn = node.get_string("target_fn", c.target_fn);
  c.target_name = node.get_string("target_name", c.target_name);
  c.noise_sigma = node.get_double("noise_sigma", c.noise_sigma);
  if (c.noise_sigma < 0) node.fail("noise_sigma", "must be >= 0");
  c.seed = node.get_uint("seed", c.seed);
  c.well_formed_only = node.get_bool("well_formed_only", c.well_formed_only);
  return c;
}

nlohmann::json synth_config_to_json(const SynthConfig& c) {
  return {{"schema_version", kConfigSchemaVersion}, {"generator", kSynthGeneratorVersion},
          {"target_fn", c.target_fn},               {"target_name", c.target_name},
          {"noise_sigma", c.noise_sigma},           {"seed", c.seed},
          {"well_formed_only", c.well_formed_only}};
}

void write_manifest(const std::filesystem::path& dir, const std::string& command, const nlohmann::json& config,
                    std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  const nlohmann::json m{{"tool", "graf"},
                         {"version", kGrafVersion},
                         {"config_schema_version", kConfigSchemaVersion},
                         {"synth_generator", kSynthGeneratorVersion},
                         {"command", command},
                         {"seed", seed},
                         {"config", config}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw Error("cannot write " + (dir / "manifest.json").string());
  out << m.dump(2) << '\n';
}

}  // namespace graf
