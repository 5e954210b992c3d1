#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "graf/analysis.hpp"
#include "graf/arch_graph.hpp"
#include "graf/features.hpp"
#include "graf/rng.hpp"

using namespace graf;

namespace {

// Rank of the column-centred matrix from singular values.
std::size_t centred_rank(const DenseMatrix& x) {
  Eigen::MatrixXd a(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) a(r, c) = x(r, c);
  a.rowwise() -= a.colwise().mean();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
  const auto& s = svd.singularValues();
  const double cut = s.size() ? s(0) * 1e-9 * std::max(a.rows(), a.cols()) : 0.0;
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) rank += s(i) > cut;
  return rank;
}

DenseMatrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  DenseMatrix x(n, d);
  for (double& v : x.data()) v = rng.normal();
  return x;
}

}  // namespace

TEST_CASE("redundancy removes duplicates, sums and constants") {
  DenseMatrix x = random_matrix(50, 6, 3);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    x(r, 2) = x(r, 0);                  // duplicate
    x(r, 4) = x(r, 1) - 2.0 * x(r, 3);  // combination
    x(r, 5) = 7.0;                      // constant
  }
  // Earlier columns go first while their partners are still present.
  const auto res = eliminate_redundant(x);
  CHECK(res.kept == std::vector<std::size_t>{2, 3, 4});
  CHECK(res.removed == std::vector<std::size_t>{0, 1, 5});
  CHECK(res.kept.size() == centred_rank(x));
}

TEST_CASE("redundancy keeps independent columns and is idempotent") {
  const DenseMatrix x = random_matrix(40, 8, 5);
  CHECK(eliminate_redundant(x).kept.size() == 8);

  DenseMatrix wide = random_matrix(6, 10, 6);
  const auto res = eliminate_redundant(wide);
  CHECK(res.kept.size() == centred_rank(wide));
  CHECK(res.kept.size() == 5);
  const auto again = eliminate_redundant(wide.select_cols(res.kept));
  CHECK(again.kept.size() == res.kept.size());
  CHECK(again.removed.empty());
  CHECK_THROWS_AS(eliminate_redundant(DenseMatrix(4, 0)), Error);
}

TEST_CASE("redundancy on the full GRAF matrix matches the numeric rank") {
  const auto s = builtin_space("nb201_like");
  std::vector<Architecture> archs;
  for (auto& c : enumerate_cells(s, true)) archs.emplace_back(std::vector<CellGraph>{std::move(c)});
  const DenseMatrix x = extract_graf_batch(archs, s, feature_schema(s));
  const auto res = eliminate_redundant(x);
  CHECK(res.kept.size() == 72);
  CHECK(res.kept.size() == centred_rank(x));
}

TEST_CASE("permutation importance") {
  Rng rng(11);
  DenseMatrix x(300, 3);
  std::vector<double> y(300);
  for (std::size_t r = 0; r < 300; ++r) {
    x(r, 0) = rng.uniform();
    x(r, 1) = rng.uniform();
    x(r, 2) = rng.uniform();
    y[r] = x(r, 1);
  }
  ForestConfig cfg;
  cfg.n_trees = 30;
  cfg.seed = 2;
  // A model that never looks at column 2.
  const auto model = fit_forest(x.select_cols(std::vector<std::size_t>{0, 1}), DenseMatrix::from_column(y), cfg);
  const DenseMatrix x2 = x.select_cols(std::vector<std::size_t>{0, 1});
  const auto imp = permutation_importance(model, x2, y, negative_mse, 4, 3);
  CHECK(imp[1] > 10 * std::abs(imp[0]));

  const auto full = fit_forest(x, DenseMatrix::from_column(y), cfg);
  const auto used = full.used_features();
  const auto imp3 = permutation_importance(full, x, y, kendall_score, 4, 3);
  CHECK(imp3[1] > imp3[0]);
  CHECK(imp3[1] > imp3[2]);
  for (std::size_t j = 0; j < 3; ++j)
    if (std::find(used.begin(), used.end(), j) == used.end()) CHECK(imp3[j] == 0.0);

  CHECK(permutation_importance(full, x, y, negative_mse, 4, 3, Exec::kSerial) ==
        permutation_importance(full, x, y, negative_mse, 4, 3, Exec::kParallel));
  CHECK_THROWS_AS(permutation_importance(full, x, y, negative_mse, 4, 0), Error);
}

TEST_CASE("shapley estimates match the closed form of an additive model") {
  // Depth-one boosting is exactly additive: every tree reads one feature.
  Rng rng(21);
  const std::size_t n = 200;
  DenseMatrix x(n, 4);
  DenseMatrix y(n, 1);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < 4; ++c) x(r, c) = std::floor(rng.uniform() * 5);
    y(r, 0) = 2.0 * x(r, 0) - x(r, 1) + 0.5 * x(r, 2);
  }
  GbtConfig g;
  g.n_rounds = 200;
  g.learning_rate = 0.1;
  g.max_depth = 1;
  g.seed = 3;
  const auto model = fit_gbt(x, y, g);

  // Closed form: phi_i = sum over trees on i of t(x) - mean_z t(z).
  const DenseMatrix background = x.select_rows(std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7});
  const auto row = x.row(42);
  std::vector<double> phi(4, 0.0);
  for (const auto& t : model.trees) {
    if (t.feature[0] < 0) continue;
    const double at_x = t.value[static_cast<std::size_t>(t.leaf_of(row))];
    double at_bg = 0;
    for (std::size_t b = 0; b < background.rows(); ++b)
      at_bg += t.value[static_cast<std::size_t>(t.leaf_of(background.row(b)))];
    phi[static_cast<std::size_t>(t.feature[0])] += at_x - at_bg / background.rows();
  }

  ShapleyConfig cfg;
  cfg.n_samples = 4000;
  cfg.seed = 9;
  const auto res = shapley_mc(model, background, row, cfg);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(std::abs(res.contributions[i] - phi[i]) <= 4 * res.std_error[i] + 1e-9);
  }
  CHECK(std::abs(res.contributions[3]) < 1e-9);
  double sum = 0;
  for (double c : res.contributions) sum += c;
  CHECK(std::abs(sum - (res.prediction - res.baseline)) <= 3 * res.sum_std_error + 1e-9);

  // One background row removes all sampling noise.
  const DenseMatrix one = x.select_rows(std::vector<std::size_t>{7});
  const auto exact = shapley_mc(model, one, row, cfg);
  for (std::size_t i = 0; i < 4; ++i) {
    double want = 0;
    for (const auto& t : model.trees)
      if (t.feature[0] == static_cast<int>(i))
        want += t.value[static_cast<std::size_t>(t.leaf_of(row))] -
                t.value[static_cast<std::size_t>(t.leaf_of(one.row(0)))];
    CHECK(exact.contributions[i] == doctest::Approx(want).epsilon(1e-9));
    CHECK(exact.std_error[i] == doctest::Approx(0.0));
  }

  CHECK(shapley_mc(model, background, row, cfg, Exec::kSerial).contributions == res.contributions);
  ShapleyConfig bad = cfg;
  bad.n_samples = 0;
  CHECK_THROWS_AS(shapley_mc(model, background, row, bad), Error);
  CHECK_THROWS_AS(shapley_mc(model, background, std::vector<double>(3, 0.0), cfg), Error);
}

TEST_CASE("importance report") {
  const std::vector<std::map<std::string, double>> runs{
      {{"a", 0.9}, {"b", 0.1}, {"c", 0.5}},
      {{"a", 0.8}, {"b", 0.6}, {"c", 0.2}},
  };
  const auto rep = importance_report(runs);
  REQUIRE(rep.ranking.size() == 3);
  CHECK(rep.ranking[0].feature == "a");
  CHECK(rep.ranking[0].mean_rank == 0.0);
  CHECK(rep.ranking[1].mean_rank == 1.5);
  CHECK(rep.ranking[1].feature == "b");  // tie with c, broken by name
  CHECK(rep.top(1).size() == 1);
  CHECK(rep.top(10).size() == 3);

  std::ostringstream csv;
  rep.write_csv(csv);
  CHECK(csv.str().rfind("feature,mean_rank,rank_std\n\"a\",0,0\n", 0) == 0);
  std::ostringstream table;
  rep.write_table(table, 2);
  CHECK(table.str().find("a & 0.00") != std::string::npos);
}
