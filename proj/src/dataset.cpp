#include "graf/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "graf/parallel.hpp"
#include "graf/rng.hpp"

namespace graf {

namespace {

std::string edge_key(const Edge& e) { return std::to_string(e.src) + "-" + std::to_string(e.dst); }

Edge parse_edge_key(const std::string& key) {
  auto dash = key.find('-');
  if (dash == std::string::npos) throw Error("bad edge label key '" + key + "'");
  return {std::stoi(key.substr(0, dash)), std::stoi(key.substr(dash + 1))};
}

std::map<std::string, double> number_map(const nlohmann::json& j, const char* field) {
  std::map<std::string, double> out;
  if (!j.contains(field)) return out;
  for (const auto& [k, v] : j.at(field).items()) {
    if (!v.is_number()) throw Error(std::string(field) + "." + k + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw Error(std::string(field) + "." + k + ": non-finite value");
    out[k] = d;
  }
  return out;
}

}  // namespace

std::vector<Architecture> Dataset::architectures() const {
  std::vector<Architecture> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.arch);
  return out;
}

std::vector<double> Dataset::target(std::string_view metric) const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    auto it = r.targets.find(std::string(metric));
    if (it == r.targets.end())
      throw Error("record '" + r.arch_id + "' has no target '" + std::string(metric) + "'");
    out.push_back(it->second);
  }
  return out;
}

std::vector<double> Dataset::proxy(std::string_view name) const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    auto it = r.zcp.find(std::string(name));
    if (it == r.zcp.end())
      throw Error("record '" + r.arch_id + "' has no proxy '" + std::string(name) + "'");
    out.push_back(it->second);
  }
  return out;
}

std::vector<std::string> Dataset::ids() const {
  std::vector<std::string> out;
  for (const auto& r : records) out.push_back(r.arch_id);
  return out;
}

nlohmann::json record_to_json(const BenchmarkRecord& rec, const SearchSpaceSpec& spec) {
  nlohmann::json j;
  j["arch_id"] = rec.arch_id;
  j["space"] = rec.space.empty() ? spec.name : rec.space;
  if (const auto* macro = std::get_if<MacroArch>(&rec.arch)) {
    auto mods = nlohmann::json::array();
    for (ModuleKind k : macro->modules) mods.push_back(module_kind_name(k));
    j["cells"] = {{"macro", std::move(mods)}};
  } else {
    auto cells = nlohmann::json::array();
    for (const CellGraph& c : std::get<std::vector<CellGraph>>(rec.arch)) {
      nlohmann::json cj;
      cj["num_nodes"] = c.num_nodes;
      auto edges = nlohmann::json::array();
      for (const Edge& e : c.edges) edges.push_back({e.src, e.dst});
      cj["edges"] = std::move(edges);
      nlohmann::json labels = nlohmann::json::object();
      if (spec.label_placement == LabelPlacement::kOnEdges) {
        for (std::size_t i = 0; i < c.edges.size(); ++i)
          labels[edge_key(c.edges[i])] = spec.operations.at(c.labels[i]);
      } else {
        for (NodeId v = 0; v < c.num_nodes; ++v)
          if (c.labels[v] >= 0) labels[std::to_string(v)] = spec.operations.at(c.labels[v]);
      }
      cj["labels"] = std::move(labels);
      cells.push_back(std::move(cj));
    }
    j["cells"] = std::move(cells);
  }
  j["targets"] = rec.targets;
  j["zcp"] = rec.zcp;
  return j;
}

BenchmarkRecord record_from_json(const nlohmann::json& j, const SearchSpaceSpec& spec) {
  BenchmarkRecord rec;
  try {
    rec.arch_id = j.at("arch_id").get<std::string>();
    rec.space = j.value("space", spec.name);
    const auto& cells = j.at("cells");
    if (cells.is_object()) {
      if (spec.kind != SpaceKind::kMacro) throw Error("macro record in cell space " + spec.name);
      MacroArch m;
      for (const auto& k : cells.at("macro")) m.modules.push_back(parse_module_kind(k.get<std::string>()));
      check_macro(m);
      rec.arch = std::move(m);
    } else {
      if (spec.kind != SpaceKind::kCell) throw Error("cell record in macro space " + spec.name);
      std::vector<CellGraph> out;
      for (const auto& cj : cells) {
        CellGraph c;
        c.num_nodes = cj.value("num_nodes", spec.num_nodes);
        for (const auto& e : cj.at("edges")) c.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
        const auto& labels = cj.at("labels");
        if (spec.label_placement == LabelPlacement::kOnEdges) {
          std::map<Edge, OpIndex> by_edge;
          for (const auto& [k, v] : labels.items()) {
            OpIndex op = spec.op_index(v.get<std::string>());
            by_edge[parse_edge_key(k)] = op < 0 ? kUnknownOp : op;
          }
          for (const Edge& e : c.edges) {
            auto it = by_edge.find(e);
            if (it == by_edge.end()) throw Error("edge " + edge_key(e) + " has no label");
            c.labels.push_back(it->second);
          }
        } else {
          c.labels.assign(c.num_nodes, kNoOp);
          for (const auto& [k, v] : labels.items()) {
            const int node = std::stoi(k);
            if (node < 0 || node >= c.num_nodes) throw Error("label for bad node " + k);
            OpIndex op = spec.op_index(v.get<std::string>());
            c.labels[node] = op < 0 ? kUnknownOp : op;
          }
        }
        require_valid(c, spec);
        out.push_back(std::move(c));
      }
      if (out.size() != static_cast<std::size_t>(spec.cells_per_arch))
        throw Error("expected " + std::to_string(spec.cells_per_arch) + " cell(s)");
      rec.arch = std::move(out);
    }
    rec.targets = number_map(j, "targets");
    rec.zcp = number_map(j, "zcp");
  } catch (const nlohmann::json::exception& e) {
    throw Error(e.what());
  } catch (const std::invalid_argument& e) {
    throw Error(std::string("bad number: ") + e.what());
  }
  if (rec.targets.empty()) throw Error("record '" + rec.arch_id + "' has no targets");
  return rec;
}

Dataset read_dataset(std::istream& in, const SearchSpaceSpec* spec, const SpaceResolver& resolve) {
  Dataset ds;
  std::set<std::string> ids;
  std::map<std::string, SearchSpaceSpec> resolved;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const SearchSpaceSpec* s = spec;
      if (!s) {
        const std::string name = j.at("space").get<std::string>();
        auto it = resolved.find(name);
        if (it == resolved.end()) it = resolved.emplace(name, resolve(name)).first;
        s = &it->second;
      }
      BenchmarkRecord rec = record_from_json(j, *s);
      if (!ids.insert(rec.arch_id).second) throw Error("duplicate arch_id '" + rec.arch_id + "'");
      ds.records.push_back(std::move(rec));
    } catch (const std::exception& e) {
      throw Error("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path, const SearchSpaceSpec* spec,
                     const SpaceResolver& resolve) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_dataset(in, spec, resolve);
}

void write_dataset(std::ostream& out, const Dataset& ds, const SearchSpaceSpec& spec) {
  for (const auto& r : ds.records) out << record_to_json(r, spec).dump() << '\n';
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds, const SearchSpaceSpec& spec) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_dataset(out, ds, spec);
}

// ---------------------------------------------------------------------------

std::string FeatureRecipe::name() const {
  std::vector<std::string> parts;
  if (has(families, FeatureFamilySet::kGraf)) parts.emplace_back("graf");
  if (has(families, FeatureFamilySet::kOneHot)) parts.emplace_back("oh");
  if (has(families, FeatureFamilySet::kPath)) parts.emplace_back("pe");
  if (has(families, FeatureFamilySet::kZcp)) parts.emplace_back("zcp");
  else if (has(families, FeatureFamilySet::kFp)) parts.emplace_back("fp");
  std::string s;
  for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? "+" : "") + parts[i];
  return s;
}

FeatureRecipe parse_recipe(std::string_view text, std::vector<std::string> targets) {
  FeatureRecipe r;
  r.targets = std::move(targets);
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::stringstream ss(lower);
  std::string tok;
  while (std::getline(ss, tok, '+')) {
    if (tok == "graf") r.families = r.families | FeatureFamilySet::kGraf;
    else if (tok == "oh" || tok == "onehot") r.families = r.families | FeatureFamilySet::kOneHot;
    else if (tok == "pe" || tok == "path") r.families = r.families | FeatureFamilySet::kPath;
    else if (tok == "zcp") r.families = r.families | FeatureFamilySet::kZcp;
    else if (tok == "fp") r.families = r.families | FeatureFamilySet::kFp;
    else throw Error("unknown feature family '" + tok + "' in recipe '" + std::string(text) + "'");
  }
  if (r.families == FeatureFamilySet::kNone) throw Error("empty recipe");
  if (r.targets.size() > 2) throw Error("recipe: at most two targets");
  return r;
}

FeatureMatrix assemble(const Dataset& ds, const FeatureRecipe& recipe, const SearchSpaceSpec& spec,
                       const FeatureSchema& schema, const AssembleOptions& opts) {
  FeatureMatrix fm;
  const std::size_t n = ds.size();
  std::vector<DenseMatrix> blocks;
  auto archs = ds.architectures();

  auto cells_of = [&](std::size_t r) -> const std::vector<CellGraph>& {
    const auto* cells = std::get_if<std::vector<CellGraph>>(&archs[r]);
    if (!cells) throw Error("record '" + ds.records[r].arch_id + "' has no cells");
    return *cells;
  };
  auto encoded_block = [&](std::vector<std::string> cols, auto&& encode) {
    DenseMatrix m(n, cols.size());
    parallel_for(n, opts.exec, [&](std::size_t r) {
      const auto v = encode(cells_of(r));
      std::copy(v.begin(), v.end(), m.row(r).begin());
    });
    fm.columns.insert(fm.columns.end(), cols.begin(), cols.end());
    blocks.push_back(std::move(m));
  };

  if (has(recipe.families, FeatureFamilySet::kGraf)) {
    blocks.push_back(extract_graf_batch(archs, spec, schema, opts.exec));
    const auto names = schema.names();
    fm.columns.insert(fm.columns.end(), names.begin(), names.end());
  }
  if (has(recipe.families, FeatureFamilySet::kOneHot)) {
    encoded_block(onehot_columns(spec),
                  [&](const std::vector<CellGraph>& c) { return onehot(c, spec); });
  }
  if (has(recipe.families, FeatureFamilySet::kPath)) {
    encoded_block(path_encoding_columns(spec, opts.path_cap),
                  [&](const std::vector<CellGraph>& c) { return path_encoding(c, spec, opts.path_cap); });
  }
  if (has(recipe.families, FeatureFamilySet::kZcp) || has(recipe.families, FeatureFamilySet::kFp)) {
    std::vector<std::string> names;
    if (has(recipe.families, FeatureFamilySet::kZcp)) {
      if (n > 0)
        for (const auto& [k, v] : ds.records.front().zcp) names.push_back(k);
    } else {
      names = kFlopsParams;
    }
    DenseMatrix m(n, names.size());
    for (std::size_t r = 0; r < n; ++r) {
      const auto& zcp = ds.records[r].zcp;
      for (std::size_t j = 0; j < names.size(); ++j) {
        auto it = zcp.find(names[j]);
        if (it == zcp.end())
          throw Error("record '" + ds.records[r].arch_id + "' is missing proxy '" + names[j] + "'");
        m(r, j) = it->second;
      }
    }
    fm.columns.insert(fm.columns.end(), names.begin(), names.end());
    blocks.push_back(std::move(m));
  }

  fm.x = DenseMatrix(n, fm.columns.size());
  std::size_t offset = 0;
  for (const auto& b : blocks) {
    for (std::size_t r = 0; r < n; ++r)
      std::copy(b.row(r).begin(), b.row(r).end(), fm.x.row(r).begin() + offset);
    offset += b.cols();
  }
  for (double v : fm.x.data())
    if (!std::isfinite(v)) throw Error("assemble: non-finite feature value");

  fm.target_names = recipe.targets;
  fm.y = DenseMatrix(n, recipe.targets.size());
  for (std::size_t t = 0; t < recipe.targets.size(); ++t) {
    const auto col = ds.target(recipe.targets[t]);
    for (std::size_t r = 0; r < n; ++r) fm.y(r, t) = col[r];
  }
  return fm;
}

FeatureMatrix assemble(const Dataset& ds, const FeatureRecipe& recipe, const SearchSpaceSpec& spec,
                       const AssembleOptions& opts) {
  FeatureSchema schema;
  if (has(recipe.families, FeatureFamilySet::kGraf)) schema = feature_schema(spec);
  return assemble(ds, recipe, spec, schema, opts);
}

Split sample_split(std::size_t n, std::size_t train_size, std::uint64_t seed) {
  if (train_size >= n)
    throw Error("train size " + std::to_string(train_size) + " must be below dataset size " +
                std::to_string(n));
  Rng rng(seed);
  Split s;
  s.train = rng.sample_without_replacement(n, train_size);
  std::sort(s.train.begin(), s.train.end());
  std::vector<char> in_train(n, 0);
  for (auto i : s.train) in_train[i] = 1;
  s.test.reserve(n - train_size);
  for (std::size_t i = 0; i < n; ++i)
    if (!in_train[i]) s.test.push_back(i);
  return s;
}

void write_feature_csv(std::ostream& out, const FeatureMatrix& fm, const std::vector<std::string>& ids) {
  out << "arch_id";
  for (const auto& c : fm.columns) out << ",\"" << c << "\"";
  for (const auto& t : fm.target_names) out << ",target:" << t;
  out << '\n';
  out.precision(17);
  for (std::size_t r = 0; r < fm.x.rows(); ++r) {
    out << (r < ids.size() ? ids[r] : std::to_string(r));
    for (double v : fm.x.row(r)) out << ',' << v;
    for (std::size_t t = 0; t < fm.y.cols(); ++t) out << ',' << fm.y(r, t);
    out << '\n';
  }
}

}  // namespace graf
