#pragma once

// Benchmark records, JSONL I/O, feature-matrix assembly and seeded splits.
//
// One record per line:
//   {"arch_id": "...", "space": "nb201_like",
//    "cells": [{"num_nodes": 4, "edges": [[0,1], ...], "labels": {"0-1": "conv3x3", ...}}],
//    "targets": {"val_acc": 0.91}, "zcp": {"flops": 12.5, ...}}
// Macro records use "cells": {"macro": ["normal", "strided", ...]}.
// Node-labeled cells key labels by node id ("3": "conv3x3").

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "graf/arch_graph.hpp"
#include "graf/common.hpp"
#include "graf/encodings.hpp"
#include "graf/features.hpp"

namespace graf {

struct BenchmarkRecord {
  std::string arch_id;
  std::string space;
  Architecture arch;
  std::map<std::string, double> targets;
  std::map<std::string, double> zcp;
};

struct Dataset {
  std::vector<BenchmarkRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  std::vector<Architecture> architectures() const;
  /// Throws if any record lacks the metric.
  std::vector<double> target(std::string_view metric) const;
  std::vector<double> proxy(std::string_view name) const;
  std::vector<std::string> ids() const;
};

/// Resolves a record's "space" field. The default resolver knows the
/// built-in spaces.
using SpaceResolver = std::function<SearchSpaceSpec(std::string_view)>;

nlohmann::json record_to_json(const BenchmarkRecord& rec, const SearchSpaceSpec& spec);
BenchmarkRecord record_from_json(const nlohmann::json& j, const SearchSpaceSpec& spec);

/// Reads JSONL. Errors carry the 1-based line number. If `spec` is given,
/// every record is parsed against it; otherwise the record's "space" is
/// resolved.
Dataset read_dataset(std::istream& in, const SearchSpaceSpec* spec = nullptr,
                     const SpaceResolver& resolve = builtin_space);
Dataset load_dataset(const std::filesystem::path& path, const SearchSpaceSpec* spec = nullptr,
                     const SpaceResolver& resolve = builtin_space);
void write_dataset(std::ostream& out, const Dataset& ds, const SearchSpaceSpec& spec);
void save_dataset(const std::filesystem::path& path, const Dataset& ds, const SearchSpaceSpec& spec);

// ---------------------------------------------------------------------------

enum class FeatureFamilySet : unsigned {
  kNone = 0,
  kGraf = 1U << 0,
  kOneHot = 1U << 1,
  kPath = 1U << 2,
  kZcp = 1U << 3,
  kFp = 1U << 4,
};

constexpr FeatureFamilySet operator|(FeatureFamilySet a, FeatureFamilySet b) {
  return static_cast<FeatureFamilySet>(static_cast<unsigned>(a) | static_cast<unsigned>(b));
}
constexpr bool has(FeatureFamilySet set, FeatureFamilySet f) {
  return (static_cast<unsigned>(set) & static_cast<unsigned>(f)) != 0;
}

/// Proxies that need no data batch.
inline const std::vector<std::string> kFlopsParams{"flops", "params"};

struct FeatureRecipe {
  FeatureFamilySet families = FeatureFamilySet::kNone;
  /// One target, or two for joint (multi-objective) prediction.
  std::vector<std::string> targets;

  /// Canonical "graf+zcp" style name.
  std::string name() const;
};

/// Parses "graf+zcp", "oh", "fp+graf", ... (case-insensitive; "onehot" and
/// "pe"/"path" aliases accepted).
FeatureRecipe parse_recipe(std::string_view text, std::vector<std::string> targets = {});

struct FeatureMatrix {
  std::vector<std::string> columns;
  DenseMatrix x;
  std::vector<std::string> target_names;
  /// rows x target_names.size()
  DenseMatrix y;
};

struct AssembleOptions {
  std::uint64_t path_cap = kDefaultPathEncodingCap;
  Exec exec = Exec::kParallel;
};

/// Columns are concatenated in family order GRAF, OH, PE, ZCP/FP. ZCP columns
/// follow the proxy names of the first record in sorted order; a record
/// missing any of them is an error.
FeatureMatrix assemble(const Dataset& ds, const FeatureRecipe& recipe, const SearchSpaceSpec& spec,
                       const FeatureSchema& schema, const AssembleOptions& opts = {});
FeatureMatrix assemble(const Dataset& ds, const FeatureRecipe& recipe, const SearchSpaceSpec& spec,
                       const AssembleOptions& opts = {});

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Uniform train sample without replacement, test = complement. Both lists
/// are ascending.
Split sample_split(std::size_t n, std::size_t train_size, std::uint64_t seed);

/// Writes columns as CSV with an arch_id first column and the targets last.
void write_feature_csv(std::ostream& out, const FeatureMatrix& fm, const std::vector<std::string>& ids);

}  // namespace graf
