#include "graf/synth.hpp"

#include <cmath>
#include <cstdio>

#include "graf/rng.hpp"

namespace graf {

namespace {

// Column lookup that tolerates spaces lacking an operation (count 0).
struct Columns {
  const FeatureSchema& schema;
  const SearchSpaceSpec& spec;

  std::optional<std::size_t> op_count(const std::string& op) const {
    if (spec.op_index(op) < 0) return std::nullopt;
    return schema.index_of("op_count(" + op + ")");
  }
  std::size_t min_path(OpMask m) const { return schema.index_of("min_path(" + mask_name(spec, m) + ")"); }
  std::size_t max_path(OpMask m) const { return schema.index_of("max_path(" + mask_name(spec, m) + ")"); }
};

double value_or_zero(const DenseMatrix& f, std::size_t r, std::optional<std::size_t> c) {
  return c ? f(r, *c) : 0.0;
}

}  // namespace

Dataset build_space_dataset(const SearchSpaceSpec& spec, const SynthConfig& cfg, Exec exec) {
  if (spec.cells_per_arch != 1 || !spec.fixed_topology)
    throw Error("synthetic benchmarks need an enumerable single-cell space, got '" + spec.name + "'");
  std::vector<std::uint64_t> index;
  std::vector<Architecture> archs;
  for_each_cell(spec, cfg.well_formed_only, [&](std::uint64_t i, const CellGraph& c) {
    index.push_back(i);
    archs.push_back(std::vector<CellGraph>{c});
  });

  const FeatureSchema schema = feature_schema(spec);
  const DenseMatrix f = extract_graf_batch(archs, spec, schema, exec);
  const Columns cols{schema, spec};
  const auto c1 = cols.op_count("conv1x1");
  const auto c3 = cols.op_count("conv3x3");
  const std::size_t n = archs.size();
  const int sentinel = path_sentinel(spec);

  std::vector<double> target(n);
  const std::string& fn = cfg.target_fn;
  if (fn == "depth_shortcut") {
    const std::size_t depth = cols.max_path(spec.full_mask());
    const std::size_t skip = cols.min_path(spec.mask_of({"skip"}));
    for (std::size_t r = 0; r < n; ++r)
      target[r] = 0.70 + 0.03 * value_or_zero(f, r, c3) - 0.02 * std::max(0.0, f(r, depth) - 3.0) +
                  (f(r, skip) == 1.0 ? 0.05 : 0.0);
  } else if (fn == "conv_count") {
    for (std::size_t r = 0; r < n; ++r)
      target[r] = 0.70 + 0.03 * value_or_zero(f, r, c3) + 0.015 * value_or_zero(f, r, c1);
  } else if (fn == "skip_shortcut") {
    const std::size_t skip = cols.min_path(spec.mask_of({"skip"}));
    for (std::size_t r = 0; r < n; ++r) target[r] = 0.75 - 0.02 * f(r, skip);
  } else if (fn == "random") {
    Rng rng(derive_seed(cfg.seed, SeedStream::kNoise, 1));
    for (auto& t : target) t = rng.uniform();
  } else if (fn.rfind("feature:", 0) == 0) {
    const std::size_t c = schema.index_of(fn.substr(8));
    for (std::size_t r = 0; r < n; ++r) target[r] = f(r, c);
  } else {
    throw Error("unknown target function '" + fn + "'");
  }
  if (fn != "random" && cfg.noise_sigma > 0) {
    Rng rng(derive_seed(cfg.seed, SeedStream::kNoise));
    for (auto& t : target) t += cfg.noise_sigma * rng.normal();
  }

  OpMask non_zero = spec.full_mask();
  if (auto z = spec.zero_index()) non_zero &= ~(OpMask{1} << *z);
  const std::size_t depth_nz = cols.max_path(non_zero);

  Dataset ds;
  ds.records.reserve(n);
  Rng proxy_rng(derive_seed(cfg.seed, SeedStream::kProxy));
  for (std::size_t r = 0; r < n; ++r) {
    const double n1 = value_or_zero(f, r, c1), n3 = value_or_zero(f, r, c3);
    BenchmarkRecord rec;
    char id[64];
    std::snprintf(id, sizeof id, "%s-%06llu", spec.name.c_str(), static_cast<unsigned long long>(index[r]));
    rec.arch_id = id;
    rec.space = spec.name;
    rec.arch = std::move(archs[r]);
    rec.targets[cfg.target_name] = target[r];
    const double params = 0.05 + 0.016 * n1 + 0.144 * n3;
    const double depth = f(r, depth_nz) == sentinel ? 0.0 : f(r, depth_nz);
    rec.zcp["flops"] = 2.0 + 1.5 * n1 + 13.5 * n3;
    rec.zcp["params"] = params;
    rec.zcp["nwot"] = 700.0 + 15.0 * n3 + 8.0 * n1 + proxy_rng.normal();
    rec.zcp["synflow"] = 10.0 * std::log1p(100.0 * params) + 2.0 * depth + 0.5 * proxy_rng.normal();
    rec.zcp["jacov"] = proxy_rng.uniform();
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

GroupedCorrelation cluster_bias_fixture(const Dataset& ds, const SearchSpaceSpec& spec,
                                        const std::string& proxy, const std::string& target) {
  const OpIndex c1 = spec.op_index("conv1x1");
  const OpIndex c3 = spec.op_index("conv3x3");
  std::vector<std::string> keys;
  keys.reserve(ds.size());
  for (const auto& rec : ds.records) {
    int n1 = 0, n3 = 0;
    for (const CellGraph& c : std::get<std::vector<CellGraph>>(rec.arch))
      for (OpIndex l : c.labels) {
        n1 += (c1 >= 0 && l == c1);
        n3 += (c3 >= 0 && l == c3);
      }
    keys.push_back("c1=" + std::to_string(n1) + ",c3=" + std::to_string(n3));
  }
  return grouped_rank_correlation(ds.proxy(proxy), ds.target(target), keys);
}

}  // namespace graf
