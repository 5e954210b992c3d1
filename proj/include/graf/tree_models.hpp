#pragma once

// CART regression trees, bagged random forests and least-squares gradient
// boosting. All models are multi-target capable except boosting, and fully
// determined by their config seed: the same seed gives byte-identical models
// at any OpenMP thread count.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graf/common.hpp"
#include "json.hpp"

namespace graf {

/// Random-forest settings. Defaults mirror the scikit-learn regressor:
/// 100 trees, unlimited depth, every feature considered at each split,
/// bootstrap samples of size n.
struct ForestConfig {
  int n_trees = 100;
  std::optional<int> max_depth;
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  double feature_fraction = 1.0;
  bool bootstrap = true;
  std::uint64_t seed = 0;

  void check() const;
  nlohmann::json to_json() const;
  static ForestConfig from_json(const nlohmann::json& j);
};

/// Stage-wise boosting settings (the "XGB+" configuration).
struct GbtConfig {
  int n_rounds = 10000;
  double learning_rate = 0.01;
  double subsample = 0.9;
  int max_depth = 6;
  int min_samples_leaf = 1;
  std::uint64_t seed = 0;

  void check() const;
  nlohmann::json to_json() const;
  static GbtConfig from_json(const nlohmann::json& j);
};

/// Array-encoded tree. Node 0 is the root; leaves have feature == -1.
/// value holds n_targets entries per node (meaningful on leaves).
struct Tree {
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<double> value;

  std::size_t num_nodes() const { return feature.size(); }
  /// Leaf index reached by row x.
  int leaf_of(std::span<const double> x) const;
  bool operator==(const Tree&) const = default;
};

enum class ModelKind { kRandomForest, kBoosted };

class ForestModel {
 public:
  ModelKind kind = ModelKind::kRandomForest;
  std::size_t n_features = 0;
  std::size_t n_targets = 0;
  /// Added to every prediction (zero for forests, the target mean for boosting).
  std::vector<double> base_score;
  std::vector<Tree> trees;
  std::uint64_t fingerprint = 0;
  nlohmann::json config;

  /// rows x n_targets. Forests average the trees, boosting sums them on top
  /// of base_score. Throws on a fingerprint or width mismatch.
  DenseMatrix predict(const DenseMatrix& x, std::optional<std::uint64_t> fingerprint = {},
                      Exec exec = Exec::kParallel) const;
  double predict_row(std::span<const double> x, std::size_t target = 0) const;
  /// Per-tree outputs for target `target`: trees x rows.
  DenseMatrix predict_per_tree(const DenseMatrix& x, std::size_t target = 0) const;

  /// Feature indices used by at least one split.
  std::vector<std::size_t> used_features() const;

  nlohmann::json to_json() const;
  std::string serialize() const { return to_json().dump(); }
  static ForestModel from_json(const nlohmann::json& j);

  bool operator==(const ForestModel&) const = default;
};

/// FNV-1a over the column names, separated by NUL.
std::uint64_t column_fingerprint(std::span<const std::string> names);

/// y is rows x targets. Trees are fitted in parallel under Exec::kParallel;
/// each tree's randomness comes from its own derived seed.
ForestModel fit_forest(const DenseMatrix& x, const DenseMatrix& y, const ForestConfig& cfg,
                       std::uint64_t fingerprint = 0, Exec exec = Exec::kParallel);

/// y must have exactly one column.
ForestModel fit_gbt(const DenseMatrix& x, const DenseMatrix& y, const GbtConfig& cfg,
                    std::uint64_t fingerprint = 0);

}  // namespace graf
