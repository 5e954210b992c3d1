#pragma once

// Surrogate-driven search over a tabular benchmark: an ensemble of forests
// refitted every iteration, independent Thompson sampling as acquisition.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "graf/common.hpp"
#include "graf/tree_models.hpp"

namespace graf {

struct SearchConfig {
  int n_iterations = 25;
  int candidates_per_iter = 200;
  int evals_per_iter = 20;
  int ensemble_size = 3;
  int initial_random_evals = 20;
  std::uint64_t seed = 0;
  /// Fit each member on a bootstrap resample of the evaluated set.
  bool member_bootstrap = true;
  ForestConfig forest;

  void check() const;
};

struct TraceEntry {
  int iteration = 0;  // 0 = initial random sample
  std::size_t index = 0;
  std::string arch_id;
  double value = 0.0;
  double best_so_far = 0.0;
};

struct SearchTrace {
  std::vector<TraceEntry> entries;
  /// Row of the best evaluated architecture.
  std::size_t best_index = 0;
  double best_value = 0.0;
  bool exhausted = false;

  std::size_t queries() const { return entries.size(); }
  /// iteration,queries_used,arch_id,value,best_so_far
  void write_csv(std::ostream& out) const;
};

/// Maximizes `target` over the rows of `features`. ids may be empty.
SearchTrace run_search(const DenseMatrix& features, std::span<const double> target,
                       std::span<const std::string> ids, const SearchConfig& cfg,
                       Exec exec = Exec::kParallel);

SearchTrace run_random_search(std::span<const double> target, std::span<const std::string> ids,
                              std::size_t budget, std::uint64_t seed);

/// Fraction of `values` that are <= v.
double percentile_of(std::span<const double> values, double v);

}  // namespace graf
