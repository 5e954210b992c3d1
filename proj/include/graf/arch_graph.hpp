#pragma once

// Cell-based and macro search spaces as labeled DAGs.
//
// Node ids inside a cell are topologically sorted: every edge (s, d) has
// s < d, the input nodes are fixed ids taken from the space description and
// the output node is always the highest id of the cell.

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace graf {

using NodeId = int;
using OpIndex = int;
using OpMask = std::uint32_t;

/// Label of input/output nodes in node-labeled spaces.
inline constexpr OpIndex kNoOp = -1;
/// Label produced when parsing an operation name the space does not know.
inline constexpr OpIndex kUnknownOp = -2;

enum class LabelPlacement { kOnEdges, kOnNodes };
enum class SpaceKind { kCell, kMacro };

struct Edge {
  NodeId src = 0;
  NodeId dst = 0;
  auto operator<=>(const Edge&) const = default;
};

struct SearchSpaceSpec {
  std::string name;
  SpaceKind kind = SpaceKind::kCell;
  std::vector<std::string> operations;
  LabelPlacement label_placement = LabelPlacement::kOnEdges;
  /// Maximum node count of a cell (|V'|).
  int num_nodes = 0;
  std::optional<std::vector<Edge>> fixed_topology;
  std::vector<NodeId> input_nodes{0};
  NodeId output_node = 0;
  std::optional<std::string> zero_op;
  int cells_per_arch = 1;
  /// Tags used in feature names when cells_per_arch > 1.
  std::vector<std::string> cell_names;
  bool compute_min_path = true;
  /// Every intermediate node feeds the output through an implicit unlabeled
  /// edge (concatenation); cells then carry no labeled edges into the output.
  bool concat_output = false;

  /// -1 if absent.
  OpIndex op_index(std::string_view op) const;
  OpIndex require_op(std::string_view op) const;
  std::optional<OpIndex> zero_index() const;
  OpMask full_mask() const { return (OpMask{1} << operations.size()) - 1; }
  OpMask mask_of(std::initializer_list<std::string_view> ops) const;
  bool is_input(NodeId v) const;
  /// Throws Error describing the first violated invariant.
  void check() const;
  std::string cell_tag(int cell) const;
};

struct CellGraph {
  int num_nodes = 0;
  std::vector<Edge> edges;
  /// One label per edge (edge-labeled) or per node (node-labeled; kNoOp on
  /// input and output nodes).
  std::vector<OpIndex> labels;

  NodeId output() const { return num_nodes - 1; }
  bool operator==(const CellGraph&) const = default;
};

enum class ModuleKind { kNormal = 0, kStrided = 1, kChannelIncrease = 2, kStridedAndChannel = 3 };

inline constexpr int kMacroMinModules = 4;
inline constexpr int kMacroMaxModules = 6;

struct MacroArch {
  std::vector<ModuleKind> modules;
  bool operator==(const MacroArch&) const = default;
};

std::string_view module_kind_name(ModuleKind k);
ModuleKind parse_module_kind(std::string_view name);
void check_macro(const MacroArch& arch);

/// One architecture: the cells of a cell-based space (one per cell type) or
/// a macro module sequence.
using Architecture = std::variant<std::vector<CellGraph>, MacroArch>;

// ---------------------------------------------------------------------------
// Built-in spaces and JSON

SearchSpaceSpec builtin_space(std::string_view name);
std::vector<std::string> builtin_space_names();

nlohmann::json spec_to_json(const SearchSpaceSpec& spec);
SearchSpaceSpec spec_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Construction helpers

struct LabeledEdge {
  NodeId src;
  NodeId dst;
  std::string op;
};

/// Edge-labeled cell from (src, dst, op name) triples. Unknown names become
/// kUnknownOp so that validate_cell can report them.
CellGraph make_edge_cell(const SearchSpaceSpec& spec, const std::vector<LabeledEdge>& edges);
/// Node-labeled cell: `ops` lists the labels of the intermediate nodes
/// 1..n-2 in order; input is node 0, output node n-1.
CellGraph make_node_cell(const SearchSpaceSpec& spec, const std::vector<Edge>& edges,
                         const std::vector<std::string>& ops);

/// Edges in (src, dst) order with their labels permuted alongside.
CellGraph canonical_edge_order(const CellGraph& cell, const SearchSpaceSpec& spec);

// ---------------------------------------------------------------------------
// Operations

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate_cell(const CellGraph& cell, const SearchSpaceSpec& spec);
/// Throws Error listing the violations.
void require_valid(const CellGraph& cell, const SearchSpaceSpec& spec);

/// Labeled elements (edges for edge-labeled spaces, nodes for node-labeled
/// ones) carrying a non-zero operation that lie on no input->output path made
/// only of non-zero elements.
struct UnreachableSet {
  std::vector<Edge> edges;
  std::vector<NodeId> nodes;
  bool empty() const { return edges.empty() && nodes.empty(); }
};

UnreachableSet find_unreachable(const CellGraph& cell, const SearchSpaceSpec& spec);
bool is_well_formed(const CellGraph& cell, const SearchSpaceSpec& spec);

inline constexpr std::uint64_t kDefaultEnumerationCap = 10'000'000;

/// |O|^|E| for a fixed-topology space; throws if the space has no fixed topology.
std::uint64_t space_size(const SearchSpaceSpec& spec);
/// Cell number `index` in lexicographic order of operation indices (first
/// topology edge is the most significant digit).
CellGraph cell_at(const SearchSpaceSpec& spec, std::uint64_t index);

/// Visits every label assignment of a fixed-topology space in lexicographic
/// order, optionally skipping ill-formed cells. The callback receives the
/// enumeration index and the cell.
void for_each_cell(const SearchSpaceSpec& spec, bool well_formed_only,
                   const std::function<void(std::uint64_t, const CellGraph&)>& fn,
                   std::uint64_t cap = kDefaultEnumerationCap);

std::vector<CellGraph> enumerate_cells(const SearchSpaceSpec& spec, bool well_formed_only,
                                       std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace graf
