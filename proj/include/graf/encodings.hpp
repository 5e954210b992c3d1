#pragma once

// Baseline architecture encodings: one-hot (operations + adjacency) and
// path encoding.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "graf/arch_graph.hpp"
#include "graf/common.hpp"

namespace graf {

inline constexpr std::uint64_t kDefaultPathEncodingCap = 100'000;

/// Column names of the one-hot encoding. Per cell: one |O| block per possible
/// labeled element (topology edges, every admissible DAG edge, or every node
/// slot for node-labeled spaces), then the flattened |V'| x |V'| adjacency.
std::vector<std::string> onehot_columns(const SearchSpaceSpec& spec);
std::vector<double> onehot(std::span<const CellGraph> cells, const SearchSpaceSpec& spec);

/// Number of distinct labeled input->output paths the space admits.
std::uint64_t path_encoding_size(const SearchSpaceSpec& spec);
/// Throws Error when the universe exceeds `cap`.
std::vector<std::string> path_encoding_columns(const SearchSpaceSpec& spec,
                                               std::uint64_t cap = kDefaultPathEncodingCap);
std::vector<double> path_encoding(std::span<const CellGraph> cells, const SearchSpaceSpec& spec,
                                  std::uint64_t cap = kDefaultPathEncodingCap);

}  // namespace graf
