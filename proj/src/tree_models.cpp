#include "graf/tree_models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <numeric>

#include "graf/parallel.hpp"
#include "graf/rng.hpp"

namespace graf {

namespace {

// Split scores closer than this (relative) count as ties, so that
// equivalent partitions found through different features resolve to the
// lowest feature index regardless of summation order.
constexpr double kTieTolerance = 1e-12;

void check_finite(const DenseMatrix& m, const char* what) {
  for (double v : m.data())
    if (!std::isfinite(v)) throw Error(std::string(what) + " contains non-finite values");
}

void check_training_data(const DenseMatrix& x, const DenseMatrix& y) {
  if (x.rows() == 0) throw Error("cannot fit a model on an empty matrix");
  if (x.cols() == 0) throw Error("cannot fit a model without features");
  if (y.rows() != x.rows())
    throw Error("target rows (" + std::to_string(y.rows()) + ") do not match feature rows (" +
                std::to_string(x.rows()) + ")");
  if (y.cols() == 0) throw Error("no target columns");
  check_finite(x, "feature matrix");
  check_finite(y, "target matrix");
}

// Features with at most this many distinct values are searched through
// per-value accumulators; the others are sorted within each node.
constexpr std::size_t kMaxBins = 64;

// Training features recoded as indices into each column's sorted distinct
// values. Split search only needs the order of values, and thresholds are
// midpoints of neighbouring distinct values present in a node, so both
// search paths below return exactly the split a fully sorted scan would.
struct Prepared {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<std::vector<double>> values;  // per feature, ascending
  std::vector<std::uint32_t> codes;         // row-major n x d
  std::vector<char> binned;                 // values[f].size() <= kMaxBins
  std::vector<std::size_t> bin_offset;      // offset of f's accumulators
  std::vector<std::size_t> slot;            // column of f in `small`
  std::size_t n_small = 0;
  std::vector<std::uint8_t> small;          // row-major codes of binned features

  explicit Prepared(const DenseMatrix& x) : n(x.rows()), d(x.cols()), values(d), codes(n * d), binned(d),
                                            bin_offset(d + 1, 0) {
    std::vector<double> col(n);
    for (std::size_t f = 0; f < d; ++f) {
      for (std::size_t r = 0; r < n; ++r) col[r] = x(r, f);
      auto& v = values[f];
      v = col;
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
      for (std::size_t r = 0; r < n; ++r)
        codes[r * d + f] = static_cast<std::uint32_t>(std::lower_bound(v.begin(), v.end(), col[r]) - v.begin());
      binned[f] = v.size() <= kMaxBins;
      bin_offset[f + 1] = bin_offset[f] + (binned[f] ? v.size() : 0);
    }
    slot.assign(d, 0);
    for (std::size_t f = 0; f < d; ++f)
      if (binned[f]) slot[f] = n_small++;
    small.resize(n * n_small);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t f = 0; f < d; ++f)
        if (binned[f]) small[r * n_small + slot[f]] = static_cast<std::uint8_t>(codes[r * d + f]);
  }

  std::uint32_t code(int row, std::size_t f) const { return codes[static_cast<std::size_t>(row) * d + f]; }
};

struct TreeParams {
  int max_depth = -1;  // unlimited
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  std::size_t max_features = 0;
};

class TreeBuilder {
 public:
  // y is row-major n x n_targets; counts[r] is the multiplicity of row r in
  // this tree's sample.
  TreeBuilder(const Prepared& data, const double* y, std::size_t n_targets, const TreeParams& p, Rng& rng)
      : data_(data), y_(y), t_(n_targets), p_(p), rng_(rng) {}

  Tree build(const std::vector<int>& counts) {
    rows_.clear();
    for (std::size_t r = 0; r < counts.size(); ++r)
      for (int k = 0; k < counts[r]; ++k) rows_.push_back(static_cast<int>(r));
    buffer_.resize(rows_.size());
    sums_.assign(t_, 0.0);
    left_.assign(t_, 0.0);
    tree_ = Tree{};
    if (!rows_.empty()) {
      std::vector<std::size_t> active(data_.d);
      std::iota(active.begin(), active.end(), std::size_t{0});
      grow(0, rows_.size(), 0, active, slot(0, 0), false);
    }
    return std::move(tree_);
  }

 private:
  struct Best {
    bool found = false;
    double score = 0.0;
    std::size_t feature = 0;
    std::uint32_t code = 0;  // last code going left
    double threshold = 0.0;
  };

  // Per-value row counts and target sums of one node. Only entries of the
  // features the node searches through accumulators are valid.
  struct Hist {
    std::vector<std::uint32_t> count;
    std::vector<double> sum;
  };

  Hist& slot(int depth, int side) {
    while (hists_.size() <= static_cast<std::size_t>(depth)) hists_.emplace_back();
    Hist& h = hists_[static_cast<std::size_t>(depth)][static_cast<std::size_t>(side)];
    if (h.count.empty()) {
      h.count.resize(data_.bin_offset.back());
      h.sum.resize(data_.bin_offset.back() * t_);
    }
    return h;
  }

  // Accumulators pay off when a feature has few distinct values overall and
  // not many more than the node has rows; otherwise the node rows are sorted.
  bool use_bins(std::size_t f, std::size_t len) const {
    return data_.binned[f] && data_.values[f].size() <= 2 * len;
  }

  void accumulate(Hist& h, std::size_t begin, std::size_t end, const std::vector<std::size_t>& features) {
    cols_.clear();
    for (std::size_t f : features) {
      const std::size_t off = data_.bin_offset[f], bins = data_.values[f].size();
      std::fill_n(h.count.begin() + static_cast<long>(off), bins, 0U);
      std::fill_n(h.sum.begin() + static_cast<long>(off * t_), bins * t_, 0.0);
      cols_.push_back({data_.slot[f], off});
    }
    for (std::size_t i = begin; i < end; ++i) {
      const std::uint8_t* cr = &data_.small[static_cast<std::size_t>(rows_[i]) * data_.n_small];
      const double* yr = y_ + static_cast<std::size_t>(rows_[i]) * t_;
      if (t_ == 1) {
        for (const auto& [sl, off] : cols_) {
          ++h.count[off + cr[sl]];
          h.sum[off + cr[sl]] += yr[0];
        }
        continue;
      }
      for (const auto& [sl, off] : cols_) {
        const std::size_t bin = off + cr[sl];
        ++h.count[bin];
        for (std::size_t t = 0; t < t_; ++t) h.sum[bin * t_ + t] += yr[t];
      }
    }
  }

  int add_node() {
    tree_.feature.push_back(-1);
    tree_.threshold.push_back(0.0);
    tree_.left.push_back(-1);
    tree_.right.push_back(-1);
    tree_.value.insert(tree_.value.end(), t_, 0.0);
    return static_cast<int>(tree_.feature.size()) - 1;
  }

  // Candidate split between the distinct values with codes c and cn; left_
  // holds the target sums of the nl rows going left.
  void consider(Best& best, std::size_t f, std::size_t nl, std::size_t len, const double* total,
                std::uint32_t c, std::uint32_t cn) const {
    const std::size_t min_leaf = p_.min_samples_leaf;
    if (nl < min_leaf || len - nl < min_leaf) return;
    const double nr = static_cast<double>(len - nl);
    double score = 0.0;
    for (std::size_t t = 0; t < t_; ++t) {
      const double r = total[t] - left_[t];
      score += left_[t] * left_[t] / static_cast<double>(nl) + r * r / nr;
    }
    if (best.found && !(score > best.score + kTieTolerance * std::abs(best.score))) return;
    const double v = data_.values[f][c], vn = data_.values[f][cn];
    double mid = v + (vn - v) / 2.0;
    if (!(mid < vn)) mid = v;
    best = {true, score, f, c, mid};
  }

  void scan_binned(Best& best, const Hist& h, std::size_t f, std::size_t len, const double* total) {
    const std::size_t off = data_.bin_offset[f];
    const std::size_t bins = data_.values[f].size();
    std::fill(left_.begin(), left_.end(), 0.0);
    std::size_t nl = 0;
    std::uint32_t prev = 0;
    bool have_prev = false;
    for (std::size_t b = 0; b < bins; ++b) {
      const std::size_t cnt = h.count[off + b];
      if (cnt == 0) continue;
      if (have_prev) consider(best, f, nl, len, total, prev, static_cast<std::uint32_t>(b));
      nl += cnt;
      for (std::size_t t = 0; t < t_; ++t) left_[t] += h.sum[(off + b) * t_ + t];
      prev = static_cast<std::uint32_t>(b);
      have_prev = true;
    }
  }

  void scan_sorted(Best& best, std::size_t f, std::size_t begin, std::size_t len, const double* total) {
    sorted_.resize(len);
    for (std::size_t i = 0; i < len; ++i) sorted_[i] = {data_.code(rows_[begin + i], f), rows_[begin + i]};
    std::sort(sorted_.begin(), sorted_.end());
    std::fill(left_.begin(), left_.end(), 0.0);
    for (std::size_t i = 0; i + 1 < len; ++i) {
      const double* yr = y_ + static_cast<std::size_t>(sorted_[i].second) * t_;
      for (std::size_t t = 0; t < t_; ++t) left_[t] += yr[t];
      if (sorted_[i].first != sorted_[i + 1].first)
        consider(best, f, i + 1, len, total, sorted_[i].first, sorted_[i + 1].first);
    }
  }

  bool splittable(std::size_t len, int depth) const {
    return len >= static_cast<std::size_t>(p_.min_samples_split) &&
           len >= 2 * static_cast<std::size_t>(p_.min_samples_leaf) && (p_.max_depth < 0 || depth < p_.max_depth);
  }

  // `parent_active` lists, ascending, the features that were not constant on
  // the parent's rows; a feature constant on a node stays constant below it.
  // When `filled`, h already holds accumulators for every feature of
  // parent_active that use_bins selects at this node's size.
  int grow(std::size_t begin, std::size_t end, int depth, const std::vector<std::size_t>& parent_active, Hist& h,
           bool filled) {
    const int node = add_node();
    const std::size_t len = end - begin;

    std::fill(sums_.begin(), sums_.end(), 0.0);
    bool pure = true;
    const double* y0 = y_ + static_cast<std::size_t>(rows_[begin]) * t_;
    for (std::size_t i = begin; i < end; ++i) {
      const double* yr = y_ + static_cast<std::size_t>(rows_[i]) * t_;
      for (std::size_t t = 0; t < t_; ++t) {
        sums_[t] += yr[t];
        pure = pure && yr[t] == y0[t];
      }
    }
    for (std::size_t t = 0; t < t_; ++t) tree_.value[node * t_ + t] = sums_[t] / static_cast<double>(len);
    if (pure || !splittable(len, depth)) return node;

    std::vector<std::size_t> active;
    active.reserve(parent_active.size());
    const std::uint32_t* first = &data_.codes[static_cast<std::size_t>(rows_[begin]) * data_.d];
    for (std::size_t f : parent_active) {
      for (std::size_t i = begin + 1; i < end; ++i) {
        if (data_.code(rows_[i], f) != first[f]) {
          active.push_back(f);
          break;
        }
      }
    }
    if (active.empty()) return node;

    std::vector<std::size_t> candidates = active;
    if (p_.max_features < data_.d) {
      const std::size_t k = std::min(p_.max_features, candidates.size());
      for (std::size_t i = 0; i < k; ++i)
        std::swap(candidates[i], candidates[i + rng_.below(candidates.size() - i)]);
      candidates.resize(k);
      std::sort(candidates.begin(), candidates.end());
    }

    if (!filled) {
      std::vector<std::size_t> binned;
      for (std::size_t f : active)
        if (use_bins(f, len)) binned.push_back(f);
      accumulate(h, begin, end, binned);
    }

    const std::vector<double> total = sums_;
    Best best;
    for (std::size_t f : candidates) {
      if (use_bins(f, len))
        scan_binned(best, h, f, len, total.data());
      else
        scan_sorted(best, f, begin, len, total.data());
    }
    if (!best.found) return node;

    // Stable partition of the node rows.
    std::size_t l = 0, r = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const int row = rows_[i];
      if (data_.code(row, best.feature) <= best.code) rows_[begin + l++] = row;
      else buffer_[r++] = row;
    }
    std::copy(buffer_.begin(), buffer_.begin() + static_cast<long>(r), rows_.begin() + static_cast<long>(begin + l));
    const std::size_t mid = begin + l;

    tree_.feature[node] = static_cast<int>(best.feature);
    tree_.threshold[node] = best.threshold;

    // Accumulate the smaller child and derive the larger one by subtraction,
    // covering every feature either child may search through accumulators.
    Hist& hl = slot(depth + 1, 0);
    Hist& hr = slot(depth + 1, 1);
    const std::size_t big = std::max(l, r);
    const bool children_filled = splittable(big, depth + 1);
    if (children_filled) {
      std::vector<std::size_t> shared;
      for (std::size_t f : active)
        if (use_bins(f, big)) shared.push_back(f);
      const bool left_small = l <= r;
      Hist& hs = left_small ? hl : hr;
      Hist& hb = left_small ? hr : hl;
      if (left_small) accumulate(hs, begin, mid, shared);
      else accumulate(hs, mid, end, shared);
      for (std::size_t f : shared) {
        const std::size_t off = data_.bin_offset[f], bins = data_.values[f].size();
        for (std::size_t b = off; b < off + bins; ++b) hb.count[b] = h.count[b] - hs.count[b];
        for (std::size_t b = off * t_; b < (off + bins) * t_; ++b) hb.sum[b] = h.sum[b] - hs.sum[b];
      }
    }
    const int lc = grow(begin, mid, depth + 1, active, hl, children_filled);
    const int rc = grow(mid, end, depth + 1, active, hr, children_filled);
    tree_.left[node] = lc;
    tree_.right[node] = rc;
    return node;
  }

  const Prepared& data_;
  const double* y_;
  std::size_t t_;
  TreeParams p_;
  Rng& rng_;
  std::vector<int> rows_;
  std::vector<int> buffer_;
  std::deque<std::array<Hist, 2>> hists_;                  // child slots per depth
  std::vector<std::pair<std::size_t, std::size_t>> cols_;  // (slot, offset)
  std::vector<std::pair<std::uint32_t, int>> sorted_;
  std::vector<double> sums_;
  std::vector<double> left_;
  Tree tree_;
};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

void ForestConfig::check() const {
  if (n_trees < 1) throw Error("forest: n_trees must be >= 1");
  if (max_depth && *max_depth < 0) throw Error("forest: max_depth must be >= 0");
  if (min_samples_split < 2) throw Error("forest: min_samples_split must be >= 2");
  if (min_samples_leaf < 1) throw Error("forest: min_samples_leaf must be >= 1");
  if (!(feature_fraction > 0.0 && feature_fraction <= 1.0))
    throw Error("forest: feature_fraction must be in (0, 1]");
}

nlohmann::json ForestConfig::to_json() const {
  nlohmann::json j{{"n_trees", n_trees},
                   {"min_samples_split", min_samples_split},
                   {"min_samples_leaf", min_samples_leaf},
                   {"feature_fraction", feature_fraction},
                   {"bootstrap", bootstrap},
                   {"seed", seed}};
  j["max_depth"] = max_depth ? nlohmann::json(*max_depth) : nlohmann::json(nullptr);
  return j;
}

ForestConfig ForestConfig::from_json(const nlohmann::json& j) {
  ForestConfig c;
  c.n_trees = j.value("n_trees", c.n_trees);
  if (j.contains("max_depth") && !j["max_depth"].is_null()) c.max_depth = j["max_depth"].get<int>();
  c.min_samples_split = j.value("min_samples_split", c.min_samples_split);
  c.min_samples_leaf = j.value("min_samples_leaf", c.min_samples_leaf);
  c.feature_fraction = j.value("feature_fraction", c.feature_fraction);
  c.bootstrap = j.value("bootstrap", c.bootstrap);
  c.seed = j.value("seed", c.seed);
  c.check();
  return c;
}

void GbtConfig::check() const {
  if (n_rounds < 0) throw Error("gbt: n_rounds must be >= 0");
  if (!(learning_rate > 0.0)) throw Error("gbt: learning_rate must be > 0");
  if (!(subsample > 0.0 && subsample <= 1.0)) throw Error("gbt: subsample must be in (0, 1]");
  if (max_depth < 0) throw Error("gbt: max_depth must be >= 0");
  if (min_samples_leaf < 1) throw Error("gbt: min_samples_leaf must be >= 1");
}

nlohmann::json GbtConfig::to_json() const {
  return {{"n_rounds", n_rounds},   {"learning_rate", learning_rate},
          {"subsample", subsample}, {"max_depth", max_depth},
          {"min_samples_leaf", min_samples_leaf}, {"seed", seed}};
}

GbtConfig GbtConfig::from_json(const nlohmann::json& j) {
  GbtConfig c;
  c.n_rounds = j.value("n_rounds", c.n_rounds);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.subsample = j.value("subsample", c.subsample);
  c.max_depth = j.value("max_depth", c.max_depth);
  c.min_samples_leaf = j.value("min_samples_leaf", c.min_samples_leaf);
  c.seed = j.value("seed", c.seed);
  c.check();
  return c;
}

int Tree::leaf_of(std::span<const double> x) const {
  int node = 0;
  while (feature[node] >= 0) node = x[feature[node]] <= threshold[node] ? left[node] : right[node];
  return node;
}

DenseMatrix ForestModel::predict(const DenseMatrix& x, std::optional<std::uint64_t> fp,
                                 Exec exec) const {
  if (fp && *fp != fingerprint) throw Error("column fingerprint does not match the fitted model");
  if (x.cols() != n_features)
    throw Error("model expects " + std::to_string(n_features) + " features, got " +
                std::to_string(x.cols()));
  DenseMatrix out(x.rows(), n_targets);
  parallel_for(x.rows(), exec, [&](std::size_t r) {
    for (std::size_t t = 0; t < n_targets; ++t) out(r, t) = predict_row(x.row(r), t);
  });
  return out;
}

// Long double accumulation keeps the average of identical leaf values exact.
double ForestModel::predict_row(std::span<const double> x, std::size_t target) const {
  long double s = 0.0L;
  for (const Tree& tree : trees) s += tree.value[tree.leaf_of(x) * n_targets + target];
  if (kind == ModelKind::kRandomForest) s /= static_cast<long double>(trees.size());
  return static_cast<double>(s + base_score[target]);
}

DenseMatrix ForestModel::predict_per_tree(const DenseMatrix& x, std::size_t target) const {
  if (x.cols() != n_features) throw Error("feature width mismatch");
  DenseMatrix out(trees.size(), x.rows());
  for (std::size_t k = 0; k < trees.size(); ++k)
    for (std::size_t r = 0; r < x.rows(); ++r)
      out(k, r) = trees[k].value[trees[k].leaf_of(x.row(r)) * n_targets + target];
  return out;
}

std::vector<std::size_t> ForestModel::used_features() const {
  std::vector<char> used(n_features, 0);
  for (const Tree& t : trees)
    for (int f : t.feature)
      if (f >= 0) used[f] = 1;
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < n_features; ++f)
    if (used[f]) out.push_back(f);
  return out;
}

nlohmann::json ForestModel::to_json() const {
  nlohmann::json j;
  j["format"] = "graf-forest";
  j["version"] = 1;
  j["kind"] = kind == ModelKind::kRandomForest ? "random_forest" : "boosted";
  j["n_features"] = n_features;
  j["n_targets"] = n_targets;
  j["fingerprint"] = hex64(fingerprint);
  j["base_score"] = base_score;
  j["config"] = config;
  auto arr = nlohmann::json::array();
  for (const Tree& t : trees)
    arr.push_back({{"feature", t.feature},
                   {"threshold", t.threshold},
                   {"left", t.left},
                   {"right", t.right},
                   {"value", t.value}});
  j["trees"] = std::move(arr);
  return j;
}

ForestModel ForestModel::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "graf-forest") throw Error("not a serialized forest");
    if (j.at("version").get<int>() != 1) throw Error("unsupported model version");
    ForestModel m;
    m.kind = j.at("kind") == "boosted" ? ModelKind::kBoosted : ModelKind::kRandomForest;
    m.n_features = j.at("n_features").get<std::size_t>();
    m.n_targets = j.at("n_targets").get<std::size_t>();
    m.fingerprint = std::stoull(j.at("fingerprint").get<std::string>(), nullptr, 16);
    m.base_score = j.at("base_score").get<std::vector<double>>();
    m.config = j.value("config", nlohmann::json::object());
    for (const auto& tj : j.at("trees")) {
      Tree t;
      t.feature = tj.at("feature").get<std::vector<int>>();
      t.threshold = tj.at("threshold").get<std::vector<double>>();
      t.left = tj.at("left").get<std::vector<int>>();
      t.right = tj.at("right").get<std::vector<int>>();
      t.value = tj.at("value").get<std::vector<double>>();
      const std::size_t n = t.feature.size();
      if (n == 0 || t.threshold.size() != n || t.left.size() != n || t.right.size() != n ||
          t.value.size() != n * m.n_targets)
        throw Error("inconsistent tree arrays");
      for (std::size_t i = 0; i < n; ++i) {
        if (t.feature[i] < 0) continue;
        if (t.feature[i] >= static_cast<int>(m.n_features) || t.left[i] <= static_cast<int>(i) ||
            t.right[i] <= static_cast<int>(i) || t.left[i] >= static_cast<int>(n) ||
            t.right[i] >= static_cast<int>(n))
          throw Error("tree node " + std::to_string(i) + " has invalid children");
      }
      m.trees.push_back(std::move(t));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("model JSON: ") + e.what());
  }
}

std::uint64_t column_fingerprint(std::span<const std::string> names) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& n : names) {
    for (unsigned char c : n) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ForestModel fit_forest(const DenseMatrix& x, const DenseMatrix& y, const ForestConfig& cfg,
                       std::uint64_t fingerprint, Exec exec) {
  cfg.check();
  check_training_data(x, y);
  const Prepared data(x);
  const std::size_t n = x.rows();
  TreeParams p;
  p.max_depth = cfg.max_depth ? *cfg.max_depth : -1;
  p.min_samples_split = cfg.min_samples_split;
  p.min_samples_leaf = cfg.min_samples_leaf;
  p.max_features = std::max<std::size_t>(
      1, static_cast<std::size_t>(cfg.feature_fraction * static_cast<double>(x.cols())));

  ForestModel model;
  model.kind = ModelKind::kRandomForest;
  model.n_features = x.cols();
  model.n_targets = y.cols();
  model.base_score.assign(y.cols(), 0.0);
  model.fingerprint = fingerprint;
  model.config = cfg.to_json();
  model.trees.resize(cfg.n_trees);

  parallel_for(static_cast<std::size_t>(cfg.n_trees), exec, [&](std::size_t k) {
    Rng rng(derive_seed(cfg.seed, SeedStream::kTree, k));
    std::vector<int> counts(n, cfg.bootstrap ? 0 : 1);
    if (cfg.bootstrap)
      for (std::size_t i = 0; i < n; ++i) ++counts[rng.below(n)];
    TreeBuilder builder(data, y.data().data(), y.cols(), p, rng);
    model.trees[k] = builder.build(counts);
  });
  return model;
}

ForestModel fit_gbt(const DenseMatrix& x, const DenseMatrix& y, const GbtConfig& cfg,
                    std::uint64_t fingerprint) {
  cfg.check();
  check_training_data(x, y);
  if (y.cols() != 1) throw Error("gradient boosting supports a single target only");
  const Prepared data(x);
  const std::size_t n = x.rows();

  ForestModel model;
  model.kind = ModelKind::kBoosted;
  model.n_features = x.cols();
  model.n_targets = 1;
  model.fingerprint = fingerprint;
  model.config = cfg.to_json();
  double mean = 0.0;
  for (std::size_t r = 0; r < n; ++r) mean += y(r, 0);
  mean /= static_cast<double>(n);
  model.base_score = {mean};

  TreeParams p;
  p.max_depth = cfg.max_depth;
  p.min_samples_leaf = cfg.min_samples_leaf;
  p.max_features = x.cols();
  const std::size_t k = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(cfg.subsample * static_cast<double>(n))));

  std::vector<double> pred(n, mean), residual(n);
  std::vector<int> counts(n);
  for (int round = 0; round < cfg.n_rounds; ++round) {
    Rng rng(derive_seed(cfg.seed, SeedStream::kTree, static_cast<std::uint64_t>(round)));
    if (k >= n) {
      std::fill(counts.begin(), counts.end(), 1);
    } else {
      std::fill(counts.begin(), counts.end(), 0);
      for (std::size_t i : rng.sample_without_replacement(n, k)) counts[i] = 1;
    }
    for (std::size_t r = 0; r < n; ++r) residual[r] = y(r, 0) - pred[r];
    TreeBuilder builder(data, residual.data(), 1, p, rng);
    Tree tree = builder.build(counts);
    for (double& v : tree.value) v *= cfg.learning_rate;
    for (std::size_t r = 0; r < n; ++r) pred[r] += tree.value[tree.leaf_of(x.row(r))];
    model.trees.push_back(std::move(tree));
  }
  return model;
}

}  // namespace graf
