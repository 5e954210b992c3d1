#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "graf/common.hpp"

namespace graf {

/// Kendall tau-b in O(n log n) (sort plus merge-sort inversion count).
/// Throws on length mismatch, n < 2, non-finite input or when either side is
/// entirely tied.
double kendall_tau(std::span<const double> x, std::span<const double> y);

/// Average (mid) ranks, 1-based.
std::vector<double> mid_ranks(std::span<const double> v);

double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of mid-ranks. Throws on zero rank variance.
double spearman_rho(std::span<const double> x, std::span<const double> y);

struct GroupedCorrelation {
  /// Spearman per group; groups with fewer than two members or constant
  /// ranks are omitted.
  std::map<std::string, double> groups;
  double all_data = 0.0;
  std::map<std::string, std::size_t> group_sizes;

  double mean_abs_within() const;
};

GroupedCorrelation grouped_rank_correlation(std::span<const double> score,
                                            std::span<const double> target,
                                            std::span<const std::string> group_key);

struct FeatureRank {
  std::string feature;
  double mean_rank = 0.0;
  double rank_std = 0.0;
};

/// Ranks features within each run by descending score (rank 0 = largest,
/// ties share the average of their positions), then averages across runs.
/// Result is sorted by mean rank, ties by name. Throws if runs cover
/// different feature sets.
std::vector<FeatureRank> mean_rank(const std::vector<std::map<std::string, double>>& runs);

double mean(std::span<const double> v);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sample_std(std::span<const double> v);

}  // namespace graf
