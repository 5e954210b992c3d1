#include "graf/encodings.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "graf/common.hpp"

namespace graf {

namespace {

bool on_nodes(const SearchSpaceSpec& spec) {
  return spec.label_placement == LabelPlacement::kOnNodes;
}

// Every edge a cell of the space may label, in (src, dst) order.
std::vector<Edge> edge_universe(const SearchSpaceSpec& spec) {
  if (spec.fixed_topology) {
    std::vector<Edge> e = *spec.fixed_topology;
    std::sort(e.begin(), e.end());
    return e;
  }
  std::vector<Edge> out;
  const NodeId last = spec.num_nodes - 1;
  for (NodeId s = 0; s < spec.num_nodes; ++s)
    for (NodeId d = s + 1; d < spec.num_nodes; ++d) {
      if (spec.is_input(d)) continue;
      if (spec.concat_output && d == last) continue;
      out.push_back({s, d});
    }
  return out;
}

std::string suffix(const SearchSpaceSpec& spec, int cell) {
  return spec.cells_per_arch > 1 ? "@" + spec.cell_tag(cell) : std::string{};
}

void check_cells(std::span<const CellGraph> cells, const SearchSpaceSpec& spec) {
  if (spec.kind != SpaceKind::kCell) throw Error("encodings require a cell-based space");
  if (cells.size() != static_cast<std::size_t>(spec.cells_per_arch))
    throw Error("encoding: expected " + std::to_string(spec.cells_per_arch) + " cell(s)");
  for (const auto& c : cells) require_valid(c, spec);
}

// A path shape is the node sequence from an input to the output, with the
// output written as |V'| - 1 so that node-labeled cells of different sizes
// share one universe.
struct PathShape {
  std::vector<NodeId> nodes;
  int labeled = 0;  // labeled elements on the path
};

int labeled_elements(const SearchSpaceSpec& spec, const std::vector<NodeId>& nodes) {
  const int hops = static_cast<int>(nodes.size()) - 1;
  if (on_nodes(spec)) return hops - 1;
  return spec.concat_output ? hops - 1 : hops;
}

// Enumerates input->output paths of a graph given by adjacency lists.
// `out` is the graph's own output id, rewritten to `canon_out`.
void collect_paths(const SearchSpaceSpec& spec, const std::vector<std::vector<NodeId>>& adj,
                   NodeId out, NodeId canon_out, std::vector<std::vector<NodeId>>& paths) {
  std::vector<NodeId> stack;
  auto dfs = [&](auto&& self, NodeId v) -> void {
    stack.push_back(v);
    if (v == out) {
      auto p = stack;
      p.back() = canon_out;
      paths.push_back(std::move(p));
    } else {
      if (spec.concat_output && stack.size() > 1 && !spec.is_input(v)) {
        auto p = stack;
        p.push_back(canon_out);
        paths.push_back(std::move(p));
      }
      for (NodeId w : adj[v]) self(self, w);
    }
    stack.pop_back();
  };
  for (NodeId in : spec.input_nodes) dfs(dfs, in);
}

std::vector<PathShape> path_shapes(const SearchSpaceSpec& spec) {
  std::vector<std::vector<NodeId>> adj(spec.num_nodes);
  if (on_nodes(spec) && !spec.fixed_topology) {
    for (NodeId s = 0; s < spec.num_nodes; ++s)
      for (NodeId d = s + 1; d < spec.num_nodes; ++d)
        if (!spec.is_input(d)) adj[s].push_back(d);
  } else {
    for (const Edge& e : edge_universe(spec)) adj[e.src].push_back(e.dst);
  }
  std::vector<std::vector<NodeId>> paths;
  collect_paths(spec, adj, spec.num_nodes - 1, spec.num_nodes - 1, paths);
  std::vector<PathShape> shapes;
  for (auto& p : paths) {
    int k = labeled_elements(spec, p);
    shapes.push_back({std::move(p), k});
  }
  return shapes;
}

std::uint64_t checked_pow(std::uint64_t base, int exp) {
  std::uint64_t r = 1;
  for (int i = 0; i < exp; ++i) {
    if (r > std::numeric_limits<std::uint64_t>::max() / base)
      return std::numeric_limits<std::uint64_t>::max();
    r *= base;
  }
  return r;
}

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
  return a > std::numeric_limits<std::uint64_t>::max() - b ? std::numeric_limits<std::uint64_t>::max()
                                                            : a + b;
}

std::string join_nodes(const std::vector<NodeId>& nodes) {
  std::string s;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i) s += "-";
    s += std::to_string(nodes[i]);
  }
  return s;
}

}  // namespace

std::vector<std::string> onehot_columns(const SearchSpaceSpec& spec) {
  if (spec.kind != SpaceKind::kCell) throw Error("one-hot encoding requires a cell-based space");
  std::vector<std::string> cols;
  for (int c = 0; c < spec.cells_per_arch; ++c) {
    const std::string sfx = suffix(spec, c);
    if (on_nodes(spec)) {
      for (NodeId v = 0; v < spec.num_nodes; ++v)
        for (const auto& op : spec.operations)
          cols.push_back("oh(" + std::to_string(v) + "=" + op + ")" + sfx);
    } else {
      for (const Edge& e : edge_universe(spec))
        for (const auto& op : spec.operations)
          cols.push_back("oh(" + std::to_string(e.src) + "-" + std::to_string(e.dst) + "=" + op +
                         ")" + sfx);
    }
    for (NodeId s = 0; s < spec.num_nodes; ++s)
      for (NodeId d = 0; d < spec.num_nodes; ++d)
        cols.push_back("adj(" + std::to_string(s) + "-" + std::to_string(d) + ")" + sfx);
  }
  return cols;
}

std::vector<double> onehot(std::span<const CellGraph> cells, const SearchSpaceSpec& spec) {
  check_cells(cells, spec);
  const std::size_t n_ops = spec.operations.size();
  const std::size_t v_max = spec.num_nodes;
  const auto universe = edge_universe(spec);
  const std::size_t op_block = on_nodes(spec) ? v_max * n_ops : universe.size() * n_ops;
  const std::size_t per_cell = op_block + v_max * v_max;

  std::vector<double> out(per_cell * cells.size(), 0.0);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const CellGraph& cell = cells[c];
    double* base = out.data() + c * per_cell;
    double* adj = base + op_block;
    if (on_nodes(spec)) {
      for (NodeId v = 0; v < cell.num_nodes; ++v)
        if (cell.labels[v] >= 0) base[v * n_ops + cell.labels[v]] = 1.0;
    } else {
      for (std::size_t i = 0; i < cell.edges.size(); ++i) {
        auto it = std::lower_bound(universe.begin(), universe.end(), cell.edges[i]);
        base[(it - universe.begin()) * n_ops + cell.labels[i]] = 1.0;
      }
    }
    for (const Edge& e : cell.edges) adj[e.src * v_max + e.dst] = 1.0;
    if (spec.concat_output) {
      for (NodeId v = 0; v < cell.output(); ++v)
        if (!spec.is_input(v)) adj[v * v_max + cell.output()] = 1.0;
    }
  }
  return out;
}

std::uint64_t path_encoding_size(const SearchSpaceSpec& spec) {
  if (spec.kind != SpaceKind::kCell) throw Error("path encoding requires a cell-based space");
  std::uint64_t per_cell = 0;
  for (const auto& shape : path_shapes(spec))
    per_cell = saturating_add(per_cell, checked_pow(spec.operations.size(), shape.labeled));
  std::uint64_t total = 0;
  for (int c = 0; c < spec.cells_per_arch; ++c) total = saturating_add(total, per_cell);
  return total;
}

std::vector<std::string> path_encoding_columns(const SearchSpaceSpec& spec, std::uint64_t cap) {
  const std::uint64_t size = path_encoding_size(spec);
  if (size > cap)
    throw Error("path encoding of space '" + spec.name + "' has " + std::to_string(size) +
                " dimensions, above the cap of " + std::to_string(cap));
  const auto shapes = path_shapes(spec);
  const std::size_t n_ops = spec.operations.size();
  std::vector<std::string> cols;
  cols.reserve(size);
  for (int c = 0; c < spec.cells_per_arch; ++c) {
    const std::string sfx = suffix(spec, c);
    for (const auto& shape : shapes) {
      const std::uint64_t combos = checked_pow(n_ops, shape.labeled);
      for (std::uint64_t t = 0; t < combos; ++t) {
        // Mixed radix, first labeled element most significant.
        std::vector<std::string> ops(shape.labeled);
        std::uint64_t rest = t;
        for (int k = shape.labeled; k-- > 0;) {
          ops[k] = spec.operations[rest % n_ops];
          rest /= n_ops;
        }
        std::string label;
        for (std::size_t k = 0; k < ops.size(); ++k) label += (k ? "," : "") + ops[k];
        cols.push_back("path(" + join_nodes(shape.nodes) + ":" + label + ")" + sfx);
      }
    }
  }
  return cols;
}

std::vector<double> path_encoding(std::span<const CellGraph> cells, const SearchSpaceSpec& spec,
                                  std::uint64_t cap) {
  check_cells(cells, spec);
  const std::uint64_t size = path_encoding_size(spec);
  if (size > cap)
    throw Error("path encoding of space '" + spec.name + "' has " + std::to_string(size) +
                " dimensions, above the cap of " + std::to_string(cap));
  const auto shapes = path_shapes(spec);
  const std::size_t n_ops = spec.operations.size();
  std::map<std::vector<NodeId>, std::pair<std::size_t, int>> offset;  // shape -> (offset, labeled)
  std::size_t per_cell = 0;
  for (const auto& shape : shapes) {
    offset[shape.nodes] = {per_cell, shape.labeled};
    per_cell += checked_pow(n_ops, shape.labeled);
  }

  std::vector<double> out(size, 0.0);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const CellGraph& cell = cells[c];
    std::vector<std::vector<NodeId>> adj(cell.num_nodes);
    std::map<Edge, OpIndex> edge_label;
    for (std::size_t i = 0; i < cell.edges.size(); ++i) {
      adj[cell.edges[i].src].push_back(cell.edges[i].dst);
      if (!on_nodes(spec)) edge_label[cell.edges[i]] = cell.labels[i];
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());
    std::vector<std::vector<NodeId>> paths;
    collect_paths(spec, adj, cell.output(), spec.num_nodes - 1, paths);
    for (const auto& p : paths) {
      const auto& [off, labeled] = offset.at(p);
      std::uint64_t t = 0;
      if (on_nodes(spec)) {
        for (std::size_t k = 1; k + 1 < p.size(); ++k) t = t * n_ops + cell.labels[p[k]];
      } else {
        const std::size_t hops = p.size() - 1 - (spec.concat_output ? 1 : 0);
        for (std::size_t k = 0; k < hops; ++k) t = t * n_ops + edge_label.at({p[k], p[k + 1]});
      }
      out[c * per_cell + off + t] = 1.0;
    }
  }
  return out;
}

}  // namespace graf
