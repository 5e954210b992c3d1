#pragma once

// Feature redundancy elimination and feature importance.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "graf/common.hpp"
#include "graf/metrics.hpp"
#include "graf/tree_models.hpp"

namespace graf {

struct RedundancyResult {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> removed;
};

/// Walks the columns in order and drops every column that a least-squares
/// fit (with intercept) on all other still-present columns reproduces up to
/// residual norm <= tolerance * column norm. The kept columns are linearly
/// independent modulo the constant; their count is the rank of the
/// column-centred matrix.
RedundancyResult eliminate_redundant(const DenseMatrix& x, double tolerance = 1e-8);

/// Metric used by permutation importance: higher is better.
using ScoreFn = std::function<double(std::span<const double> pred, std::span<const double> truth)>;

inline double kendall_score(std::span<const double> pred, std::span<const double> truth) {
  return kendall_tau(pred, truth);
}
double negative_mse(std::span<const double> pred, std::span<const double> truth);

/// baseline score minus the mean score after shuffling one column,
/// `repeats` shuffles per column.
std::vector<double> permutation_importance(const ForestModel& model, const DenseMatrix& x,
                                           std::span<const double> y, const ScoreFn& metric,
                                           std::uint64_t seed, int repeats = 5,
                                           Exec exec = Exec::kParallel);

struct ShapleyConfig {
  std::size_t n_samples = 128;
  std::uint64_t seed = 0;
  std::size_t target = 0;
};

struct ShapleyResult {
  std::vector<double> contributions;
  /// Monte-Carlo standard error per feature.
  std::vector<double> std_error;
  double prediction = 0.0;
  /// Mean prediction over the background rows.
  double baseline = 0.0;
  /// Standard error of sum(contributions) as an estimate of prediction - baseline.
  double sum_std_error = 0.0;
};

/// Permutation-sampling Shapley estimate: each sample draws a feature order
/// and a background row, then switches features from the background value to
/// x_row one at a time and credits each change in prediction to the feature.
ShapleyResult shapley_mc(const ForestModel& model, const DenseMatrix& background,
                         std::span<const double> x_row, const ShapleyConfig& cfg,
                         Exec exec = Exec::kParallel);

/// Mean |contribution| per feature over the explained rows.
std::vector<double> mean_abs_shapley(const ForestModel& model, const DenseMatrix& background,
                                     const DenseMatrix& rows, const ShapleyConfig& cfg,
                                     Exec exec = Exec::kParallel);

struct ImportanceReport {
  std::vector<FeatureRank> ranking;

  std::vector<FeatureRank> top(std::size_t k) const;
  /// feature,mean_rank,rank_std
  void write_csv(std::ostream& out) const;
  /// Fixed-width top-k table.
  void write_table(std::ostream& out, std::size_t k = 10) const;
};

/// runs: one map feature -> importance score per seeded run.
ImportanceReport importance_report(const std::vector<std::map<std::string, double>>& runs);

}  // namespace graf
