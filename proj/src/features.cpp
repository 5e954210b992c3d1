#include "graf/features.hpp"

#include <algorithm>
#include <limits>

#include "graf/parallel.hpp"

namespace graf {

namespace {

constexpr int kMacroPositions = 6;

struct PathLengths {
  int min;
  int max;
};

bool label_allowed(OpIndex label, OpMask allowed) {
  return label == kNoOp || (label >= 0 && ((allowed >> label) & 1U));
}

// Edge-labeled: the edge's own label. Node-labeled: every labeled endpoint.
bool edge_admissible(const CellGraph& cell, const SearchSpaceSpec& spec, std::size_t i,
                     OpMask allowed) {
  if (spec.label_placement == LabelPlacement::kOnEdges) return label_allowed(cell.labels[i], allowed);
  const Edge& e = cell.edges[i];
  return label_allowed(cell.labels[e.src], allowed) && label_allowed(cell.labels[e.dst], allowed);
}

bool is_intermediate(const SearchSpaceSpec& spec, const CellGraph& cell, NodeId v) {
  return !spec.is_input(v) && v != cell.output();
}

// `cell` must have its edges in (src, dst) order.
PathLengths path_lengths(const CellGraph& cell, const SearchSpaceSpec& spec, OpMask allowed,
                         int input) {
  constexpr int kNone = -1;
  const int n = cell.num_nodes;
  std::vector<int> lo(n, std::numeric_limits<int>::max()), hi(n, kNone);
  const NodeId from = spec.input_nodes.at(input);
  lo[from] = hi[from] = 0;
  for (std::size_t i = 0; i < cell.edges.size(); ++i) {
    const Edge& e = cell.edges[i];
    if (hi[e.src] == kNone || !edge_admissible(cell, spec, i, allowed)) continue;
    lo[e.dst] = std::min(lo[e.dst], lo[e.src] + 1);
    hi[e.dst] = std::max(hi[e.dst], hi[e.src] + 1);
  }
  const NodeId out = cell.output();
  if (spec.concat_output) {
    for (NodeId v = 0; v < out; ++v) {
      if (!is_intermediate(spec, cell, v) || hi[v] == kNone) continue;
      lo[out] = std::min(lo[out], lo[v] + 1);
      hi[out] = std::max(hi[out], hi[v] + 1);
    }
  }
  if (hi[out] == kNone) return {path_sentinel(spec), path_sentinel(spec)};
  return {lo[out], hi[out]};
}

DegreeFeatures degrees(const CellGraph& cell, const SearchSpaceSpec& spec, OpMask allowed,
                       int input) {
  DegreeFeatures d;
  const NodeId in = spec.input_nodes.at(input);
  const NodeId out = cell.output();
  double in_sum = 0, out_sum = 0;
  for (std::size_t i = 0; i < cell.edges.size(); ++i) {
    if (!edge_admissible(cell, spec, i, allowed)) continue;
    const Edge& e = cell.edges[i];
    if (e.src == in) d.input_out_degree += 1;
    if (e.dst == out) d.output_in_degree += 1;
    if (is_intermediate(spec, cell, e.dst)) in_sum += 1;
    if (is_intermediate(spec, cell, e.src)) out_sum += 1;
  }
  int n_mid = 0;
  for (NodeId v = 0; v < cell.num_nodes; ++v) n_mid += is_intermediate(spec, cell, v);
  if (n_mid > 0) {
    d.mean_in_degree = in_sum / n_mid;
    d.mean_out_degree = out_sum / n_mid;
  }
  return d;
}

std::string feature_name(const SearchSpaceSpec& spec, FeatureFamily fam, const std::string& ops,
                         int cell, int input, bool anchored) {
  std::string name = std::string(family_name(fam)) + "(" + ops + ")";
  if (spec.cells_per_arch > 1) name += "@" + spec.cell_tag(cell);
  if (anchored && spec.input_nodes.size() > 1) name += "#input_" + std::to_string(input);
  return name;
}

}  // namespace

std::string_view family_name(FeatureFamily f) {
  switch (f) {
    case FeatureFamily::kOpCount: return "op_count";
    case FeatureFamily::kMinPath: return "min_path";
    case FeatureFamily::kMaxPath: return "max_path";
    case FeatureFamily::kInputOutDegree: return "input_out_degree";
    case FeatureFamily::kOutputInDegree: return "output_in_degree";
    case FeatureFamily::kMeanInDegree: return "mean_in_degree";
    case FeatureFamily::kMeanOutDegree: return "mean_out_degree";
    case FeatureFamily::kMacroStridesUntil: return "macro_strides_until";
    case FeatureFamily::kMacroChannelsUntil: return "macro_channels_until";
    case FeatureFamily::kMacroTypeCount: return "macro_type_count";
    case FeatureFamily::kExtra: return "extra";
  }
  return "?";
}

std::vector<std::string> FeatureSchema::names() const {
  std::vector<std::string> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(f.name);
  return out;
}

std::size_t FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < features.size(); ++i)
    if (features[i].name == name) return i;
  throw Error("no feature named '" + std::string(name) + "'");
}

nlohmann::json FeatureSchema::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& f : features) {
    nlohmann::json j{{"name", f.name}, {"family", family_name(f.family)}};
    if (f.allowed != 0) j["allowed_mask"] = f.allowed;
    if (f.position >= 0) j["position"] = f.position;
    j["cell"] = f.cell;
    j["input"] = f.input;
    arr.push_back(std::move(j));
  }
  return nlohmann::json{{"num_features", features.size()}, {"features", std::move(arr)}};
}

std::string mask_name(const SearchSpaceSpec& spec, OpMask mask) {
  std::string out;
  for (std::size_t o = 0; o < spec.operations.size(); ++o) {
    if (!((mask >> o) & 1U)) continue;
    if (!out.empty()) out += ",";
    out += spec.operations[o];
  }
  return out;
}

FeatureSchema feature_schema(const SearchSpaceSpec& spec, std::vector<ExtraFeature> extras) {
  spec.check();
  FeatureSchema schema;
  auto& fs = schema.features;

  if (spec.kind == SpaceKind::kMacro) {
    for (int i = 0; i < kMacroPositions; ++i)
      fs.push_back({"macro_strides_until(" + std::to_string(i) + ")",
                    FeatureFamily::kMacroStridesUntil, 0, i});
    for (int i = 0; i < kMacroPositions; ++i)
      fs.push_back({"macro_channels_until(" + std::to_string(i) + ")",
                    FeatureFamily::kMacroChannelsUntil, 0, i});
    for (int k = 0; k < 4; ++k)
      fs.push_back({"macro_type_count(" + std::string(module_kind_name(static_cast<ModuleKind>(k))) +
                        ")",
                    FeatureFamily::kMacroTypeCount, 0, k});
  } else {
    const OpMask full = spec.full_mask();
    const int n_inputs = static_cast<int>(spec.input_nodes.size());
    for (int c = 0; c < spec.cells_per_arch; ++c) {
      for (std::size_t o = 0; o < spec.operations.size(); ++o) {
        FeatureSpec f{feature_name(spec, FeatureFamily::kOpCount, spec.operations[o], c, 0, false),
                      FeatureFamily::kOpCount, 0, static_cast<int>(o), c};
        fs.push_back(std::move(f));
      }
      auto add_subset_family = [&](FeatureFamily fam, bool anchored) {
        const int reps = anchored ? n_inputs : 1;
        for (int in = 0; in < reps; ++in) {
          for (OpMask m = 1; m <= full; ++m) {
            FeatureSpec f{feature_name(spec, fam, mask_name(spec, m), c, in, anchored), fam, m, -1,
                          c, in};
            fs.push_back(std::move(f));
          }
        }
      };
      if (spec.compute_min_path) add_subset_family(FeatureFamily::kMinPath, true);
      add_subset_family(FeatureFamily::kMaxPath, true);
      add_subset_family(FeatureFamily::kInputOutDegree, true);
      if (!spec.concat_output) add_subset_family(FeatureFamily::kOutputInDegree, false);
      add_subset_family(FeatureFamily::kMeanInDegree, false);
      add_subset_family(FeatureFamily::kMeanOutDegree, false);
    }
  }
  for (std::size_t i = 0; i < extras.size(); ++i) {
    FeatureSpec f{extras[i].name, FeatureFamily::kExtra};
    f.extra = static_cast<int>(i);
    fs.push_back(std::move(f));
  }
  schema.extras = std::move(extras);

  std::vector<std::string> names = schema.names();
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end())
    throw Error("feature schema has duplicate names");
  return schema;
}

int min_path_over(const CellGraph& cell, const SearchSpaceSpec& spec, OpMask allowed, int input) {
  require_valid(cell, spec);
  return path_lengths(canonical_edge_order(cell, spec), spec, allowed, input).min;
}

int max_path_over(const CellGraph& cell, const SearchSpaceSpec& spec, OpMask allowed, int input) {
  require_valid(cell, spec);
  return path_lengths(canonical_edge_order(cell, spec), spec, allowed, input).max;
}

DegreeFeatures degree_features(const CellGraph& cell, const SearchSpaceSpec& spec, OpMask allowed,
                               int input) {
  require_valid(cell, spec);
  return degrees(cell, spec, allowed, input);
}

std::vector<double> extract_micro(std::span<const CellGraph> cells, const SearchSpaceSpec& spec,
                                  const FeatureSchema& schema) {
  if (spec.kind != SpaceKind::kCell) throw Error("extract_micro: space is not cell-based");
  if (cells.size() != static_cast<std::size_t>(spec.cells_per_arch))
    throw Error("extract_micro: expected " + std::to_string(spec.cells_per_arch) +
                " cell(s), got " + std::to_string(cells.size()));
  std::vector<CellGraph> sorted;
  sorted.reserve(cells.size());
  for (const auto& c : cells) {
    require_valid(c, spec);
    sorted.push_back(canonical_edge_order(c, spec));
  }

  std::vector<double> out(schema.size());
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const FeatureSpec& f = schema.features[i];
    if (f.family == FeatureFamily::kExtra) {
      out[i] = schema.extras.at(f.extra).compute(cells, spec);
      continue;
    }
    const CellGraph& cell = sorted.at(f.cell);
    switch (f.family) {
      case FeatureFamily::kOpCount:
        out[i] = static_cast<double>(std::count(cell.labels.begin(), cell.labels.end(), f.position));
        break;
      case FeatureFamily::kMinPath:
        out[i] = path_lengths(cell, spec, f.allowed, f.input).min;
        break;
      case FeatureFamily::kMaxPath:
        out[i] = path_lengths(cell, spec, f.allowed, f.input).max;
        break;
      case FeatureFamily::kInputOutDegree:
        out[i] = degrees(cell, spec, f.allowed, f.input).input_out_degree;
        break;
      case FeatureFamily::kOutputInDegree:
        out[i] = degrees(cell, spec, f.allowed, f.input).output_in_degree;
        break;
      case FeatureFamily::kMeanInDegree:
        out[i] = degrees(cell, spec, f.allowed, f.input).mean_in_degree;
        break;
      case FeatureFamily::kMeanOutDegree:
        out[i] = degrees(cell, spec, f.allowed, f.input).mean_out_degree;
        break;
      default:
        throw Error("extract_micro: schema contains macro feature '" + f.name + "'");
    }
  }
  return out;
}

std::vector<double> extract_macro(const MacroArch& arch) {
  check_macro(arch);
  std::vector<double> out(2 * kMacroPositions + 4, 0.0);
  double strides = 0, channels = 0;
  for (int i = 0; i < kMacroPositions; ++i) {
    if (i < static_cast<int>(arch.modules.size())) {
      const ModuleKind k = arch.modules[i];
      strides += (k == ModuleKind::kStrided || k == ModuleKind::kStridedAndChannel);
      channels += (k == ModuleKind::kChannelIncrease || k == ModuleKind::kStridedAndChannel);
    }
    out[i] = strides;
    out[kMacroPositions + i] = channels;
  }
  for (ModuleKind k : arch.modules) out[2 * kMacroPositions + static_cast<int>(k)] += 1;
  return out;
}

std::vector<double> extract_graf(const Architecture& arch, const SearchSpaceSpec& spec,
                                 const FeatureSchema& schema) {
  if (const auto* macro = std::get_if<MacroArch>(&arch)) {
    if (spec.kind != SpaceKind::kMacro) throw Error("macro architecture in a cell space");
    auto v = extract_macro(*macro);
    if (v.size() != schema.size()) throw Error("macro schema mismatch");
    return v;
  }
  return extract_micro(std::get<std::vector<CellGraph>>(arch), spec, schema);
}

DenseMatrix extract_graf_batch(std::span<const Architecture> archs, const SearchSpaceSpec& spec,
                               const FeatureSchema& schema, Exec exec) {
  DenseMatrix out(archs.size(), schema.size());
  parallel_for(archs.size(), exec, [&](std::size_t r) {
    const auto v = extract_graf(archs[r], spec, schema);
    std::copy(v.begin(), v.end(), out.row(r).begin());
  });
  return out;
}

}  // namespace graf
