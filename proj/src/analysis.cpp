#include "graf/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

#include "graf/parallel.hpp"
#include "graf/rng.hpp"

namespace graf {

RedundancyResult eliminate_redundant(const DenseMatrix& x, double tolerance) {
  if (x.cols() == 0) throw Error("eliminate_redundant: no columns");
  const auto n = static_cast<Eigen::Index>(x.rows());
  const auto d = static_cast<Eigen::Index>(x.cols());

  // Column 0 is the intercept; it is never removed.
  Eigen::MatrixXd a(n, d + 1);
  a.col(0).setOnes();
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < d; ++c) a(r, c + 1) = x(r, c);

  // Residual norms of least-squares fits only depend on the Gram matrix, so
  // the rows can be compressed to the triangular factor of one QR.
  Eigen::MatrixXd r;
  if (n > d + 1) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    r = qr.matrixQR().topRows(d + 1).triangularView<Eigen::Upper>();
  } else {
    r = a;
  }

  std::vector<char> present(static_cast<std::size_t>(d), 1);
  RedundancyResult out;
  for (Eigen::Index j = 0; j < d; ++j) {
    const Eigen::VectorXd b = r.col(j + 1);
    const double norm = b.norm();
    std::vector<Eigen::Index> cols{0};
    for (Eigen::Index k = 0; k < d; ++k)
      if (k != j && present[k]) cols.push_back(k + 1);
    Eigen::MatrixXd m(r.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) m.col(static_cast<Eigen::Index>(c)) = r.col(cols[c]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> fit(m);
    const double residual = (b - m * fit.solve(b)).norm();
    if (residual <= tolerance * norm) {
      present[j] = 0;
      out.removed.push_back(static_cast<std::size_t>(j));
    }
  }
  for (Eigen::Index j = 0; j < d; ++j)
    if (present[j]) out.kept.push_back(static_cast<std::size_t>(j));
  return out;
}

double negative_mse(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size() || pred.empty()) throw Error("negative_mse: length mismatch");
  double s = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return -s / static_cast<double>(pred.size());
}

std::vector<double> permutation_importance(const ForestModel& model, const DenseMatrix& x,
                                           std::span<const double> y, const ScoreFn& metric,
                                           std::uint64_t seed, int repeats, Exec exec) {
  if (repeats < 1) throw Error("permutation_importance: repeats must be >= 1");
  if (y.size() != x.rows()) throw Error("permutation_importance: row mismatch");
  const auto base_pred = model.predict(x, std::nullopt, Exec::kSerial).column(0);
  const double baseline = metric(base_pred, y);
  std::vector<double> out(x.cols());
  parallel_for(x.cols(), exec, [&](std::size_t j) {
    DenseMatrix shuffled = x;
    std::vector<double> col = x.column(j);
    double total = 0;
    for (int r = 0; r < repeats; ++r) {
      Rng rng(derive_seed(seed, SeedStream::kShuffle, j * static_cast<std::size_t>(repeats) + r));
      std::vector<double> perm = col;
      rng.shuffle(std::span<double>(perm));
      for (std::size_t i = 0; i < x.rows(); ++i) shuffled(i, j) = perm[i];
      total += baseline - metric(model.predict(shuffled, std::nullopt, Exec::kSerial).column(0), y);
    }
    out[j] = total / repeats;
  });
  return out;
}

ShapleyResult shapley_mc(const ForestModel& model, const DenseMatrix& background,
                         std::span<const double> x_row, const ShapleyConfig& cfg, Exec exec) {
  if (cfg.n_samples == 0) throw Error("shapley_mc: n_samples must be > 0");
  if (background.empty()) throw Error("shapley_mc: empty background");
  const std::size_t d = model.n_features;
  if (x_row.size() != d || background.cols() != d) throw Error("shapley_mc: feature width mismatch");
  if (cfg.target >= model.n_targets) throw Error("shapley_mc: target out of range");

  const std::size_t s_count = cfg.n_samples;
  DenseMatrix contrib(s_count, d);
  std::vector<double> start(s_count);
  parallel_for(s_count, exec, [&](std::size_t s) {
    Rng rng(derive_seed(cfg.seed, SeedStream::kShapley, s));
    auto z = background.row(rng.below(background.rows()));
    std::vector<double> v(z.begin(), z.end());
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    double prev = model.predict_row(v, cfg.target);
    start[s] = prev;
    for (std::size_t i : order) {
      if (v[i] == x_row[i]) continue;
      v[i] = x_row[i];
      const double cur = model.predict_row(v, cfg.target);
      contrib(s, i) = cur - prev;
      prev = cur;
    }
  });

  ShapleyResult res;
  res.prediction = model.predict_row(x_row, cfg.target);
  double base = 0;
  for (std::size_t r = 0; r < background.rows(); ++r) base += model.predict_row(background.row(r), cfg.target);
  res.baseline = base / static_cast<double>(background.rows());
  res.contributions.resize(d);
  res.std_error.resize(d);
  const double root = std::sqrt(static_cast<double>(s_count));
  for (std::size_t i = 0; i < d; ++i) {
    const auto col = contrib.column(i);
    res.contributions[i] = mean(col);
    res.std_error[i] = sample_std(col) / root;
  }
  res.sum_std_error = sample_std(start) / root;
  return res;
}

std::vector<double> mean_abs_shapley(const ForestModel& model, const DenseMatrix& background,
                                     const DenseMatrix& rows, const ShapleyConfig& cfg, Exec exec) {
  DenseMatrix per_row(rows.rows(), model.n_features);
  parallel_for(rows.rows(), exec, [&](std::size_t r) {
    ShapleyConfig c = cfg;
    c.seed = derive_seed(cfg.seed, SeedStream::kShapley, 1'000'000 + r);
    const auto res = shapley_mc(model, background, rows.row(r), c, Exec::kSerial);
    for (std::size_t i = 0; i < model.n_features; ++i) per_row(r, i) = std::abs(res.contributions[i]);
  });
  std::vector<double> out(model.n_features, 0.0);
  for (std::size_t r = 0; r < rows.rows(); ++r)
    for (std::size_t i = 0; i < model.n_features; ++i) out[i] += per_row(r, i);
  for (double& v : out) v /= static_cast<double>(std::max<std::size_t>(1, rows.rows()));
  return out;
}

std::vector<FeatureRank> ImportanceReport::top(std::size_t k) const {
  return {ranking.begin(), ranking.begin() + static_cast<long>(std::min(k, ranking.size()))};
}

void ImportanceReport::write_csv(std::ostream& out) const {
  out << "feature,mean_rank,rank_std\n";
  for (const auto& r : ranking) out << '"' << r.feature << "\"," << r.mean_rank << ',' << r.rank_std << '\n';
}

void ImportanceReport::write_table(std::ostream& out, std::size_t k) const {
  std::size_t width = 7;
  const auto rows = top(k);
  for (const auto& r : rows) width = std::max(width, r.feature.size());
  out << std::setw(static_cast<int>(width)) << "feature" << " & mean rank\n";
  for (const auto& r : rows)
    out << std::setw(static_cast<int>(width)) << r.feature << " & " << std::fixed << std::setprecision(2)
        << r.mean_rank << '\n';
}

ImportanceReport importance_report(const std::vector<std::map<std::string, double>>& runs) {
  return ImportanceReport{mean_rank(runs)};
}

}  // namespace graf
