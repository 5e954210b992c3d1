#pragma once

// Seeded predictor sweeps over (recipe, train size, seed), run configs and
// output-directory manifests.
//
// Seed tree for one evaluate run: run seed s -> split seed
// derive_seed(s, kSplit), model seed derive_seed(s, kModel); per-tree seeds
// derive from the model seed. With "n_seeds" instead of an explicit "seeds"
// list, run seed k is derive_seed(master_seed, kSplit, k).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "graf/analysis.hpp"
#include "graf/config.hpp"
#include "graf/dataset.hpp"
#include "graf/search.hpp"
#include "graf/synth.hpp"
#include "graf/tree_models.hpp"

namespace graf {

inline constexpr const char* kGrafVersion = "1.0.0";

enum class ModelChoice { kForest, kBoosted };

struct EvaluateConfig {
  std::vector<std::string> recipes{"graf"};
  std::vector<std::size_t> train_sizes{32, 128, 1024};
  std::vector<std::uint64_t> seeds;
  /// One target, or two for joint prediction.
  std::vector<std::string> targets{"val_acc"};
  ModelChoice model = ModelChoice::kForest;
  ForestConfig forest;
  GbtConfig gbt;
  std::uint64_t path_cap = kDefaultPathEncodingCap;

  void check() const;
  nlohmann::json to_json() const;
};

struct EvalRun {
  std::string recipe;
  std::size_t train_size = 0;
  std::uint64_t seed = 0;
  /// Per target, in config order.
  std::vector<double> target_taus;
  /// Mean of target_taus.
  double tau = 0.0;
};

struct EvalSummary {
  std::string recipe;
  std::size_t train_size = 0;
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> values;
};

struct EvaluateReport {
  /// (recipe, size, seed) order as configured.
  std::vector<EvalRun> runs;

  std::vector<EvalSummary> summary() const;
  const EvalSummary& at(std::string_view recipe, std::size_t size) const;
  /// recipe,train_size,mean_tau,std_tau,formatted,values
  void write_report_csv(std::ostream& out) const;
  /// recipe,train_size,seed,tau[,tau_<target>...]
  void write_per_seed_csv(std::ostream& out, const std::vector<std::string>& targets) const;

 private:
  mutable std::vector<EvalSummary> cache_;
};

/// Paper-style "mean^std" cell with two decimals.
std::string format_mean_std(double mean, double std);

/// Tasks run in parallel; each fits serially, so results do not depend on
/// the thread count.
EvaluateReport run_evaluate(const Dataset& ds, const SearchSpaceSpec& spec, const EvaluateConfig& cfg,
                            Exec exec = Exec::kParallel);

/// One (recipe, size, seed) task against an already assembled matrix.
EvalRun evaluate_once(const FeatureMatrix& fm, const std::string& recipe, std::size_t train_size,
                      std::uint64_t seed, const EvaluateConfig& cfg);

enum class ImportanceMethod { kPermutation, kShapley };

/// Feature-importance sweep: per seed, split and fit as in evaluate, then
/// score every column on a sample of test rows. Seeds follow the evaluate
/// tree; the evaluation-row sample uses derive_seed(s, kShuffle).
struct ImportanceConfig {
  std::string recipe = "graf";
  std::string target = "val_acc";
  std::size_t train_size = 1024;
  std::vector<std::uint64_t> seeds;
  ImportanceMethod method = ImportanceMethod::kPermutation;
  /// Restrict to the columns kept by eliminate_redundant over all rows.
  bool drop_redundant = false;
  /// Permutation repeats per column.
  int repeats = 3;
  /// Test rows scored per seed (permutation) or explained (Shapley).
  std::size_t eval_rows = 256;
  std::size_t shapley_samples = 64;
  std::size_t background_rows = 32;
  ForestConfig forest;

  void check() const;
  nlohmann::json to_json() const;
};

/// One run map per seed, in seed order.
std::vector<std::map<std::string, double>> importance_runs(const Dataset& ds, const SearchSpaceSpec& spec,
                                                           const ImportanceConfig& cfg,
                                                           Exec exec = Exec::kParallel);

// Config parsing. Unknown fields and type mismatches are errors that carry
// the field path.
ForestConfig forest_config_from(const ConfigNode& node);
GbtConfig gbt_config_from(const ConfigNode& node);
EvaluateConfig evaluate_config_from(const ConfigNode& node);
SearchConfig search_config_from(const ConfigNode& node);
SynthConfig synth_config_from(const ConfigNode& node);
ImportanceConfig importance_config_from(const ConfigNode& node);
nlohmann::json search_config_to_json(const SearchConfig& cfg);
nlohmann::json synth_config_to_json(const SynthConfig& cfg);

/// Writes <dir>/manifest.json: command, config snapshot, seed and versions.
void write_manifest(const std::filesystem::path& dir, const std::string& command, const nlohmann::json& config,
                    std::uint64_t seed);

}  // namespace graf
