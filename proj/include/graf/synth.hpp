#pragma once

// Synthetic benchmarks over exhaustively enumerable spaces: every
// well-formed cell with a ground-truth target built from graph properties
// plus seeded noise, and synthetic proxy columns.
//
// Target functions (generator version "synth-v1"):
//   depth_shortcut  0.70 + 0.03*op_count(conv3x3) - 0.02*max(0, max_path(all ops) - 3)
//                   + 0.05*[min_path(skip) == 1]
//   conv_count      0.70 + 0.03*op_count(conv3x3) + 0.015*op_count(conv1x1)
//   skip_shortcut   0.75 - 0.02*min_path(skip)
//   random          uniform [0, 1), independent of the graph
//   feature:<name>  the named GRAF column
// Gaussian noise with sigma = noise_sigma is added to every target except
// "random".
//
// Proxies: flops and params are exact linear functions of the conv counts;
// nwot is conv-count dominated (15*#conv3x3 + 8*#conv1x1 + N(0, 1)); synflow
// grows with log(params) and the non-zero depth plus noise; jacov is
// uniform noise.

#include <cstdint>
#include <map>
#include <string>

#include "graf/dataset.hpp"
#include "graf/metrics.hpp"

namespace graf {

inline constexpr const char* kSynthGeneratorVersion = "synth-v1";

struct SynthConfig {
  std::string target_fn = "depth_shortcut";
  std::string target_name = "val_acc";
  double noise_sigma = 0.01;
  std::uint64_t seed = 0;
  bool well_formed_only = true;
};

Dataset build_space_dataset(const SearchSpaceSpec& spec, const SynthConfig& cfg,
                            Exec exec = Exec::kParallel);

/// Groups records by their (#conv1x1, #conv3x3) pair and reports per-group
/// and whole-population Spearman correlation of `proxy` with `target`.
GroupedCorrelation cluster_bias_fixture(const Dataset& ds, const SearchSpaceSpec& spec,
                                        const std::string& proxy = "nwot",
                                        const std::string& target = "val_acc");

}  // namespace graf
