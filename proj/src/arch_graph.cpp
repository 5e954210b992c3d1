#include "graf/arch_graph.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "graf/common.hpp"

namespace graf {

namespace {

std::string edge_str(const Edge& e) {
  return "(" + std::to_string(e.src) + "," + std::to_string(e.dst) + ")";
}

std::vector<Edge> complete_dag(int n) {
  std::vector<Edge> out;
  for (int s = 0; s < n; ++s)
    for (int d = s + 1; d < n; ++d) out.push_back({s, d});
  return out;
}

}  // namespace

OpIndex SearchSpaceSpec::op_index(std::string_view op) const {
  auto it = std::find(operations.begin(), operations.end(), op);
  return it == operations.end() ? -1 : static_cast<OpIndex>(it - operations.begin());
}

OpIndex SearchSpaceSpec::require_op(std::string_view op) const {
  OpIndex i = op_index(op);
  if (i < 0) throw Error("space '" + name + "' has no operation '" + std::string(op) + "'");
  return i;
}

std::optional<OpIndex> SearchSpaceSpec::zero_index() const {
  if (!zero_op) return std::nullopt;
  OpIndex i = op_index(*zero_op);
  if (i < 0) return std::nullopt;
  return i;
}

OpMask SearchSpaceSpec::mask_of(std::initializer_list<std::string_view> ops) const {
  OpMask m = 0;
  for (auto op : ops) m |= OpMask{1} << require_op(op);
  return m;
}

bool SearchSpaceSpec::is_input(NodeId v) const {
  return std::find(input_nodes.begin(), input_nodes.end(), v) != input_nodes.end();
}

std::string SearchSpaceSpec::cell_tag(int cell) const {
  if (cells_per_arch <= 1) return {};
  if (cell < static_cast<int>(cell_names.size())) return cell_names[cell];
  return "cell" + std::to_string(cell);
}

void SearchSpaceSpec::check() const {
  if (name.empty()) throw Error("space: empty name");
  if (operations.empty()) throw Error("space '" + name + "': operations must be nonempty");
  std::set<std::string> uniq(operations.begin(), operations.end());
  if (uniq.size() != operations.size())
    throw Error("space '" + name + "': operation names must be unique");
  if (kind == SpaceKind::kMacro) return;
  if (operations.size() > 20)
    throw Error("space '" + name + "': at most 20 operations are supported");
  if (num_nodes < 2) throw Error("space '" + name + "': num_nodes must be >= 2");
  if (input_nodes.empty()) throw Error("space '" + name + "': no input nodes");
  for (NodeId v : input_nodes) {
    if (v < 0 || v >= num_nodes) throw Error("space '" + name + "': input node out of range");
    if (v == output_node) throw Error("space '" + name + "': input and output nodes overlap");
  }
  if (output_node != num_nodes - 1)
    throw Error("space '" + name + "': output node must be the last node (num_nodes - 1)");
  if (zero_op && op_index(*zero_op) < 0)
    throw Error("space '" + name + "': zero_op '" + *zero_op + "' is not an operation");
  if (cells_per_arch < 1) throw Error("space '" + name + "': cells_per_arch must be >= 1");
  if (cells_per_arch > 1 && cell_names.size() != static_cast<std::size_t>(cells_per_arch))
    throw Error("space '" + name + "': cell_names must name every cell");
  if (fixed_topology) {
    for (const Edge& e : *fixed_topology) {
      if (e.src < 0 || e.dst >= num_nodes || e.src >= e.dst)
        throw Error("space '" + name + "': bad topology edge " + edge_str(e));
    }
  }
}

std::string_view module_kind_name(ModuleKind k) {
  switch (k) {
    case ModuleKind::kNormal: return "normal";
    case ModuleKind::kStrided: return "strided";
    case ModuleKind::kChannelIncrease: return "channel_increase";
    case ModuleKind::kStridedAndChannel: return "strided_and_channel";
  }
  return "?";
}

ModuleKind parse_module_kind(std::string_view name) {
  for (int k = 0; k < 4; ++k)
    if (module_kind_name(static_cast<ModuleKind>(k)) == name) return static_cast<ModuleKind>(k);
  throw Error("unknown macro module kind '" + std::string(name) + "'");
}

void check_macro(const MacroArch& arch) {
  const auto n = static_cast<int>(arch.modules.size());
  if (n < kMacroMinModules || n > kMacroMaxModules)
    throw Error("macro architecture must have 4-6 modules, got " + std::to_string(n));
}

// ---------------------------------------------------------------------------

SearchSpaceSpec builtin_space(std::string_view name) {
  SearchSpaceSpec s;
  s.name = std::string(name);
  if (name == "nb201_like" || name == "tnb_micro_like") {
    s.operations = {"zero", "skip", "conv1x1", "conv3x3", "avgpool3x3"};
    if (name == "tnb_micro_like") s.operations.pop_back();
    s.num_nodes = 4;
    s.fixed_topology = complete_dag(4);
    s.input_nodes = {0};
    s.output_node = 3;
    s.zero_op = "zero";
  } else if (name == "nb101_like") {
    s.operations = {"conv1x1", "conv3x3", "maxpool3x3"};
    s.label_placement = LabelPlacement::kOnNodes;
    s.num_nodes = 7;
    s.input_nodes = {0};
    s.output_node = 6;
  } else if (name == "nb301_like") {
    s.operations = {"maxpool3x3", "avgpool3x3", "skip",      "sepconv3x3",
                    "sepconv5x5", "dilconv3x3", "dilconv5x5"};
    s.num_nodes = 7;
    s.input_nodes = {0, 1};
    s.output_node = 6;
    s.cells_per_arch = 2;
    s.cell_names = {"normal", "reduce"};
    s.compute_min_path = false;
    s.concat_output = true;
  } else if (name == "tnb_macro") {
    s.kind = SpaceKind::kMacro;
    for (int k = 0; k < 4; ++k)
      s.operations.emplace_back(module_kind_name(static_cast<ModuleKind>(k)));
  } else {
    throw Error("unknown built-in space '" + std::string(name) + "'");
  }
  s.check();
  return s;
}

std::vector<std::string> builtin_space_names() {
  return {"nb201_like", "tnb_micro_like", "nb101_like", "nb301_like", "tnb_macro"};
}

nlohmann::json spec_to_json(const SearchSpaceSpec& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["kind"] = s.kind == SpaceKind::kMacro ? "macro" : "cell";
  j["operations"] = s.operations;
  if (s.kind == SpaceKind::kMacro) return j;
  j["label_placement"] = s.label_placement == LabelPlacement::kOnNodes ? "on_nodes" : "on_edges";
  j["num_nodes"] = s.num_nodes;
  if (s.fixed_topology) {
    auto& t = j["fixed_topology"] = nlohmann::json::array();
    for (const Edge& e : *s.fixed_topology) t.push_back({e.src, e.dst});
  }
  j["input_nodes"] = s.input_nodes;
  j["output_node"] = s.output_node;
  if (s.zero_op) j["zero_op"] = *s.zero_op;
  j["cells_per_arch"] = s.cells_per_arch;
  if (!s.cell_names.empty()) j["cell_names"] = s.cell_names;
  j["compute_min_path"] = s.compute_min_path;
  j["concat_output"] = s.concat_output;
  return j;
}

SearchSpaceSpec spec_from_json(const nlohmann::json& j) {
  SearchSpaceSpec s;
  try {
    s.name = j.at("name").get<std::string>();
    s.kind = j.value("kind", std::string("cell")) == "macro" ? SpaceKind::kMacro : SpaceKind::kCell;
    s.operations = j.at("operations").get<std::vector<std::string>>();
    if (s.kind == SpaceKind::kCell) {
      const std::string placement = j.value("label_placement", std::string("on_edges"));
      if (placement != "on_edges" && placement != "on_nodes")
        throw Error("label_placement: expected on_edges or on_nodes");
      s.label_placement =
          placement == "on_nodes" ? LabelPlacement::kOnNodes : LabelPlacement::kOnEdges;
      s.num_nodes = j.at("num_nodes").get<int>();
      if (j.contains("fixed_topology")) {
        std::vector<Edge> topo;
        for (const auto& e : j["fixed_topology"]) topo.push_back({e.at(0), e.at(1)});
        s.fixed_topology = std::move(topo);
      }
      s.input_nodes = j.value("input_nodes", std::vector<int>{0});
      s.output_node = j.value("output_node", s.num_nodes - 1);
      if (j.contains("zero_op")) s.zero_op = j["zero_op"].get<std::string>();
      s.cells_per_arch = j.value("cells_per_arch", 1);
      s.cell_names = j.value("cell_names", std::vector<std::string>{});
      s.compute_min_path = j.value("compute_min_path", true);
      s.concat_output = j.value("concat_output", false);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("space spec: ") + e.what());
  }
  s.check();
  return s;
}

// ---------------------------------------------------------------------------

CellGraph make_edge_cell(const SearchSpaceSpec& spec, const std::vector<LabeledEdge>& edges) {
  CellGraph c;
  c.num_nodes = spec.num_nodes;
  for (const auto& e : edges) {
    c.edges.push_back({e.src, e.dst});
    OpIndex op = spec.op_index(e.op);
    c.labels.push_back(op < 0 ? kUnknownOp : op);
  }
  return c;
}

CellGraph make_node_cell(const SearchSpaceSpec& spec, const std::vector<Edge>& edges,
                         const std::vector<std::string>& ops) {
  CellGraph c;
  c.num_nodes = static_cast<int>(ops.size()) + 2;
  c.edges = edges;
  c.labels.assign(c.num_nodes, kNoOp);
  for (std::size_t i = 0; i < ops.size(); ++i) {
    OpIndex op = spec.op_index(ops[i]);
    c.labels[i + 1] = op < 0 ? kUnknownOp : op;
  }
  return c;
}

CellGraph canonical_edge_order(const CellGraph& cell, const SearchSpaceSpec& spec) {
  std::vector<std::size_t> perm(cell.edges.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::sort(perm.begin(), perm.end(),
            [&](std::size_t a, std::size_t b) { return cell.edges[a] < cell.edges[b]; });
  CellGraph out;
  out.num_nodes = cell.num_nodes;
  const bool edge_labels = spec.label_placement == LabelPlacement::kOnEdges;
  for (std::size_t i : perm) out.edges.push_back(cell.edges[i]);
  if (edge_labels) {
    for (std::size_t i : perm) out.labels.push_back(cell.labels[i]);
  } else {
    out.labels = cell.labels;
  }
  return out;
}

ValidationReport validate_cell(const CellGraph& cell, const SearchSpaceSpec& spec) {
  ValidationReport r;
  auto fail = [&](std::string msg) { r.violations.push_back(std::move(msg)); };
  if (spec.kind != SpaceKind::kCell) {
    fail("space '" + spec.name + "' is not a cell space");
    return r;
  }
  const bool on_nodes = spec.label_placement == LabelPlacement::kOnNodes;
  const NodeId max_input = *std::max_element(spec.input_nodes.begin(), spec.input_nodes.end());
  if (on_nodes && !spec.fixed_topology) {
    if (cell.num_nodes < max_input + 2 || cell.num_nodes > spec.num_nodes)
      fail("bad node count " + std::to_string(cell.num_nodes));
  } else if (cell.num_nodes != spec.num_nodes) {
    fail("bad node count " + std::to_string(cell.num_nodes) + ", expected " +
         std::to_string(spec.num_nodes));
  }

  std::set<Edge> seen;
  for (const Edge& e : cell.edges) {
    if (e.src < 0 || e.dst < 0 || e.src >= cell.num_nodes || e.dst >= cell.num_nodes) {
      fail("bad node id in edge " + edge_str(e));
      continue;
    }
    if (e.src >= e.dst) fail("not a DAG: edge " + edge_str(e) + " violates topological order");
    if (spec.is_input(e.dst)) fail("edge " + edge_str(e) + " enters an input node");
    if (spec.concat_output && e.dst == cell.output())
      fail("edge " + edge_str(e) + " enters the concatenated output");
    if (!seen.insert(e).second) fail("duplicate edge " + edge_str(e));
  }
  if (spec.fixed_topology) {
    std::set<Edge> topo(spec.fixed_topology->begin(), spec.fixed_topology->end());
    for (const Edge& e : cell.edges)
      if (!topo.contains(e)) fail("edge " + edge_str(e) + " not in the space topology");
    for (const Edge& e : topo)
      if (!seen.contains(e)) fail("topology edge " + edge_str(e) + " missing");
  }

  const auto n_ops = static_cast<OpIndex>(spec.operations.size());
  if (!on_nodes) {
    if (cell.labels.size() != cell.edges.size()) {
      fail("label count does not match edge count");
    } else {
      for (std::size_t i = 0; i < cell.edges.size(); ++i)
        if (cell.labels[i] < 0 || cell.labels[i] >= n_ops)
          fail("unknown operation on edge " + edge_str(cell.edges[i]));
    }
  } else {
    if (cell.labels.size() != static_cast<std::size_t>(cell.num_nodes)) {
      fail("label count does not match node count");
    } else {
      for (NodeId v = 0; v < cell.num_nodes; ++v) {
        const bool io = spec.is_input(v) || v == cell.output();
        if (io && cell.labels[v] != kNoOp)
          fail("input/output node " + std::to_string(v) + " carries an operation");
        if (!io && (cell.labels[v] < 0 || cell.labels[v] >= n_ops))
          fail("unknown operation on node " + std::to_string(v));
      }
    }
  }
  return r;
}

void require_valid(const CellGraph& cell, const SearchSpaceSpec& spec) {
  auto report = validate_cell(cell, spec);
  if (report.ok()) return;
  std::ostringstream os;
  os << "invalid cell for space '" << spec.name << "':";
  for (const auto& v : report.violations) os << " " << v << ";";
  throw Error(os.str());
}

UnreachableSet find_unreachable(const CellGraph& cell, const SearchSpaceSpec& spec) {
  require_valid(cell, spec);
  UnreachableSet out;
  const auto zero = spec.zero_index();
  if (!zero) return out;

  const int n = cell.num_nodes;
  const NodeId out_node = cell.output();
  const bool on_nodes = spec.label_placement == LabelPlacement::kOnNodes;
  auto node_passable = [&](NodeId v) {
    return !on_nodes || cell.labels[v] == kNoOp || cell.labels[v] != *zero;
  };
  auto edge_passable = [&](std::size_t i) {
    if (on_nodes) return node_passable(cell.edges[i].src) && node_passable(cell.edges[i].dst);
    return cell.labels[i] != *zero;
  };

  std::vector<std::size_t> order(cell.edges.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return cell.edges[a] < cell.edges[b]; });

  std::vector<char> fw(n, 0), bw(n, 0);
  for (NodeId v : spec.input_nodes) fw[v] = 1;
  for (std::size_t i : order) {
    const Edge& e = cell.edges[i];
    if (fw[e.src] && edge_passable(i)) fw[e.dst] = 1;
  }
  bw[out_node] = 1;
  if (spec.concat_output) {
    for (NodeId v = 0; v < out_node; ++v)
      if (!spec.is_input(v) && node_passable(v)) bw[v] = 1;
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const Edge& e = cell.edges[*it];
    if (bw[e.dst] && edge_passable(*it)) bw[e.src] = 1;
  }

  if (on_nodes) {
    for (NodeId v = 0; v < n; ++v) {
      if (cell.labels[v] == kNoOp || cell.labels[v] == *zero) continue;
      if (!(fw[v] && bw[v])) out.nodes.push_back(v);
    }
  } else {
    for (std::size_t i : order) {
      if (cell.labels[i] == *zero) continue;
      const Edge& e = cell.edges[i];
      if (!(fw[e.src] && bw[e.dst])) out.edges.push_back(e);
    }
  }
  return out;
}

bool is_well_formed(const CellGraph& cell, const SearchSpaceSpec& spec) {
  return find_unreachable(cell, spec).empty();
}

std::uint64_t space_size(const SearchSpaceSpec& spec) {
  if (spec.kind != SpaceKind::kCell || !spec.fixed_topology)
    throw Error("space '" + spec.name + "' has no fixed topology and cannot be enumerated");
  if (spec.label_placement == LabelPlacement::kOnNodes)
    throw Error("enumeration of node-labeled spaces is not supported");
  std::uint64_t total = 1;
  const std::uint64_t base = spec.operations.size();
  for (std::size_t i = 0; i < spec.fixed_topology->size(); ++i) {
    if (total > std::numeric_limits<std::uint64_t>::max() / base)
      return std::numeric_limits<std::uint64_t>::max();
    total *= base;
  }
  return total;
}

CellGraph cell_at(const SearchSpaceSpec& spec, std::uint64_t index) {
  const std::uint64_t total = space_size(spec);
  if (index >= total) throw Error("cell index out of range");
  CellGraph c;
  c.num_nodes = spec.num_nodes;
  c.edges = *spec.fixed_topology;
  c.labels.assign(c.edges.size(), 0);
  const std::uint64_t base = spec.operations.size();
  for (std::size_t i = c.edges.size(); i-- > 0;) {
    c.labels[i] = static_cast<OpIndex>(index % base);
    index /= base;
  }
  return c;
}

void for_each_cell(const SearchSpaceSpec& spec, bool well_formed_only,
                   const std::function<void(std::uint64_t, const CellGraph&)>& fn,
                   std::uint64_t cap) {
  const std::uint64_t total = space_size(spec);
  if (total > cap)
    throw Error("space '" + spec.name + "' has " + std::to_string(total) +
                " cells, above the enumeration cap of " + std::to_string(cap) +
                "; raise the cap to at least " + std::to_string(total));
  CellGraph c = cell_at(spec, 0);
  const auto base = static_cast<OpIndex>(spec.operations.size());
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    if (!well_formed_only || is_well_formed(c, spec)) fn(idx, c);
    // Odometer increment, last edge is the least significant digit.
    for (std::size_t i = c.labels.size(); i-- > 0;) {
      if (++c.labels[i] < base) break;
      c.labels[i] = 0;
    }
  }
}

std::vector<CellGraph> enumerate_cells(const SearchSpaceSpec& spec, bool well_formed_only,
                                       std::uint64_t cap) {
  std::vector<CellGraph> out;
  for_each_cell(
      spec, well_formed_only, [&](std::uint64_t, const CellGraph& c) { out.push_back(c); }, cap);
  return out;
}

}  // namespace graf
