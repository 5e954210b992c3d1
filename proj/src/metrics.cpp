#include "graf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>

#include "graf/common.hpp"

namespace graf {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y, const char* who) {
  if (x.size() != y.size()) throw Error(std::string(who) + ": length mismatch");
  if (x.size() < 2) throw Error(std::string(who) + ": need at least two observations");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw Error(std::string(who) + ": non-finite input");
}

// Sum of t(t-1)/2 over runs of equal values in a sorted sequence.
template <class Eq>
std::int64_t tied_pairs(std::size_t n, Eq&& equal_to_prev) {
  std::int64_t total = 0, run = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (equal_to_prev(i)) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total + run * (run - 1) / 2;
}

// Sorts v ascending and returns the number of inversions removed.
std::int64_t merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                         std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<long>(lo), buf.begin() + static_cast<long>(hi),
            v.begin() + static_cast<long>(lo));
  return swaps;
}

}  // namespace

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, "kendall_tau");
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  const std::int64_t n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const std::int64_t n1 = tied_pairs(n, [&](std::size_t i) { return x[idx[i]] == x[idx[i - 1]]; });
  const std::int64_t n3 = tied_pairs(n, [&](std::size_t i) {
    return x[idx[i]] == x[idx[i - 1]] && y[idx[i]] == y[idx[i - 1]];
  });

  std::vector<double> ys(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[idx[i]];
  const std::int64_t swaps = merge_count(ys, buf, 0, n);
  const std::int64_t n2 = tied_pairs(n, [&](std::size_t i) { return ys[i] == ys[i - 1]; });

  if (n1 == n0 || n2 == n0) throw Error("kendall_tau: undefined for a constant input");
  // Concordant minus discordant pairs.
  const std::int64_t s = n0 - n1 - n2 + n3 - 2 * swaps;
  return static_cast<double>(s) /
         std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
}

std::vector<double> mid_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, "pearson");
  const double mx = mean(x), my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error("correlation undefined for zero variance");
  return sxy / std::sqrt(sxx * syy);
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, "spearman_rho");
  const auto rx = mid_ranks(x), ry = mid_ranks(y);
  return pearson(rx, ry);
}

double GroupedCorrelation::mean_abs_within() const {
  if (groups.empty()) return 0.0;
  double s = 0;
  for (const auto& [k, v] : groups) s += std::abs(v);
  return s / static_cast<double>(groups.size());
}

GroupedCorrelation grouped_rank_correlation(std::span<const double> score,
                                            std::span<const double> target,
                                            std::span<const std::string> group_key) {
  if (score.size() != target.size() || score.size() != group_key.size())
    throw Error("grouped_rank_correlation: length mismatch");
  GroupedCorrelation out;
  out.all_data = spearman_rho(score, target);
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < group_key.size(); ++i) members[group_key[i]].push_back(i);
  for (const auto& [key, idx] : members) {
    if (idx.size() < 2) continue;
    std::vector<double> s, t;
    for (auto i : idx) {
      s.push_back(score[i]);
      t.push_back(target[i]);
    }
    const bool constant = std::all_of(s.begin(), s.end(), [&](double v) { return v == s[0]; }) ||
                          std::all_of(t.begin(), t.end(), [&](double v) { return v == t[0]; });
    if (constant) continue;
    out.groups[key] = spearman_rho(s, t);
    out.group_sizes[key] = idx.size();
  }
  return out;
}

std::vector<FeatureRank> mean_rank(const std::vector<std::map<std::string, double>>& runs) {
  if (runs.empty()) return {};
  std::set<std::string> keys;
  for (const auto& [k, v] : runs.front()) keys.insert(k);
  std::map<std::string, std::vector<double>> ranks;
  for (const auto& run : runs) {
    if (run.size() != keys.size()) throw Error("mean_rank: runs cover different feature sets");
    std::vector<std::pair<std::string, double>> items(run.begin(), run.end());
    for (const auto& [k, v] : items)
      if (!keys.contains(k)) throw Error("mean_rank: runs cover different feature sets");
    // Descending score; map order keeps the sort deterministic.
    std::stable_sort(items.begin(), items.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    for (std::size_t i = 0; i < items.size();) {
      std::size_t j = i;
      while (j + 1 < items.size() && items[j + 1].second == items[i].second) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0;
      for (std::size_t k = i; k <= j; ++k) ranks[items[k].first].push_back(avg);
      i = j + 1;
    }
  }
  std::vector<FeatureRank> out;
  for (const auto& [k, r] : ranks) out.push_back({k, mean(r), sample_std(r)});
  std::stable_sort(out.begin(), out.end(),
                   [](const FeatureRank& a, const FeatureRank& b) { return a.mean_rank < b.mean_rank; });
  return out;
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace graf
