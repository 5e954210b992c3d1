#pragma once

// Neural graph features: operation counts, operation-restricted min/max path
// lengths and node degrees for cells, cumulative module statistics for macro
// architectures.

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "graf/arch_graph.hpp"
#include "graf/common.hpp"
#include "json.hpp"

namespace graf {

enum class FeatureFamily {
  kOpCount,
  kMinPath,
  kMaxPath,
  kInputOutDegree,
  kOutputInDegree,
  kMeanInDegree,
  kMeanOutDegree,
  kMacroStridesUntil,
  kMacroChannelsUntil,
  kMacroTypeCount,
  kExtra,
};

std::string_view family_name(FeatureFamily f);

/// User-supplied feature appended after the built-in families.
struct ExtraFeature {
  std::string name;
  std::function<double(std::span<const CellGraph>, const SearchSpaceSpec&)> compute;
};

struct FeatureSpec {
  std::string name;
  FeatureFamily family = FeatureFamily::kOpCount;
  /// Admissible operations for subset families.
  OpMask allowed = 0;
  /// Operation index (op counts), module position or module kind (macro).
  int position = -1;
  int cell = 0;
  /// Index into SearchSpaceSpec::input_nodes for input-anchored families.
  int input = 0;
  int extra = -1;
};

struct FeatureSchema {
  std::vector<FeatureSpec> features;
  std::vector<ExtraFeature> extras;

  std::size_t size() const { return features.size(); }
  std::vector<std::string> names() const;
  /// Throws if absent.
  std::size_t index_of(std::string_view name) const;
  nlohmann::json to_json() const;
};

/// Column layout for a space. Cell spaces: per cell, op counts followed by
/// the subset families (min path, max path, input out-degree, output
/// in-degree, mean in-degree, mean out-degree), each over all nonempty
/// operation subsets in increasing bitmask order. Input-anchored families
/// repeat per input when a cell has several inputs.
FeatureSchema feature_schema(const SearchSpaceSpec& spec, std::vector<ExtraFeature> extras = {});

/// "skip,conv3x3" style listing of a mask in space operation order.
std::string mask_name(const SearchSpaceSpec& spec, OpMask mask);

/// Value used for path features when no admissible path exists: |V'| + 1.
inline int path_sentinel(const SearchSpaceSpec& spec) { return spec.num_nodes + 1; }

/// Shortest input->output path (in edges) whose labeled elements all lie in
/// `allowed`, or the sentinel. `input` indexes spec.input_nodes.
int min_path_over(const CellGraph& cell, const SearchSpaceSpec& spec, OpMask allowed, int input = 0);
int max_path_over(const CellGraph& cell, const SearchSpaceSpec& spec, OpMask allowed, int input = 0);

struct DegreeFeatures {
  double input_out_degree = 0;
  double output_in_degree = 0;
  double mean_in_degree = 0;
  double mean_out_degree = 0;
};

DegreeFeatures degree_features(const CellGraph& cell, const SearchSpaceSpec& spec, OpMask allowed,
                               int input = 0);

std::vector<double> extract_micro(std::span<const CellGraph> cells, const SearchSpaceSpec& spec,
                                  const FeatureSchema& schema);
std::vector<double> extract_macro(const MacroArch& arch);
std::vector<double> extract_graf(const Architecture& arch, const SearchSpaceSpec& spec,
                                 const FeatureSchema& schema);

/// One row per architecture, in input order. The parallel kernel and the
/// serial reference produce identical matrices.
DenseMatrix extract_graf_batch(std::span<const Architecture> archs, const SearchSpaceSpec& spec,
                               const FeatureSchema& schema, Exec exec = Exec::kParallel);

}  // namespace graf
