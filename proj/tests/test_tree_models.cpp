#include <cmath>

#include "doctest.h"
#include "graf/rng.hpp"
#include "graf/tree_models.hpp"

using namespace graf;

namespace {

struct Data {
  DenseMatrix x, y;
};

// Distinct rows; y depends on the first two columns.
Data make_data(std::size_t n, std::size_t d, std::uint64_t seed, std::size_t targets = 1) {
  Rng rng(seed);
  Data out{DenseMatrix(n, d), DenseMatrix(n, targets)};
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) out.x(r, c) = rng.uniform();
    for (std::size_t t = 0; t < targets; ++t)
      out.y(r, t) = (t + 1) * out.x(r, 0) + std::sin(3 * out.x(r, 1)) + 0.1 * rng.normal();
  }
  return out;
}

ForestConfig exact_tree() {
  ForestConfig c;
  c.n_trees = 1;
  c.bootstrap = false;
  return c;
}

// Partition of training rows induced by a tree: leaf id per row.
std::vector<int> leaves(const Tree& t, const DenseMatrix& x) {
  std::vector<int> out;
  for (std::size_t r = 0; r < x.rows(); ++r) out.push_back(t.leaf_of(x.row(r)));
  return out;
}

}  // namespace

TEST_CASE("constant target predicts the constant") {
  auto d = make_data(50, 3, 1);
  for (std::size_t r = 0; r < 50; ++r) d.y(r, 0) = 4.25;
  const auto m = fit_forest(d.x, d.y, ForestConfig{.n_trees = 10});
  const auto p = m.predict(d.x);
  for (std::size_t r = 0; r < 50; ++r) CHECK(p(r, 0) == 4.25);
  for (const auto& t : m.trees) CHECK(t.num_nodes() == 1);
}

TEST_CASE("single row gives one leaf per tree") {
  DenseMatrix x(1, 2), y(1, 1);
  x(0, 0) = 1;
  x(0, 1) = 2;
  y(0, 0) = 0.3;
  const auto m = fit_forest(x, y, ForestConfig{.n_trees = 5});
  for (const auto& t : m.trees) CHECK(t.num_nodes() == 1);
  DenseMatrix q(3, 2);
  q(1, 0) = 100;
  for (double v : m.predict(q).column(0)) CHECK(v == 0.3);
}

TEST_CASE("one-dimensional step is fitted exactly") {
  DenseMatrix x(6, 1), y(6, 1);
  for (int i = 0; i < 6; ++i) {
    x(i, 0) = i % 2;
    y(i, 0) = i % 2;
  }
  const auto m = fit_forest(x, y, exact_tree());
  REQUIRE(m.trees[0].num_nodes() == 3);
  CHECK(m.trees[0].threshold[0] == 0.5);
  const auto p = m.predict(x);
  for (int i = 0; i < 6; ++i) CHECK(p(i, 0) == y(i, 0));
}

TEST_CASE("unbootstrapped unlimited tree reproduces training targets") {
  const auto d = make_data(300, 5, 2, 2);
  const auto m = fit_forest(d.x, d.y, exact_tree());
  const auto p = m.predict(d.x);
  for (std::size_t r = 0; r < 300; ++r)
    for (std::size_t t = 0; t < 2; ++t) REQUIRE(p(r, t) == d.y(r, t));
}

TEST_CASE("identical trees have zero spread") {
  const auto d = make_data(80, 4, 3);
  ForestConfig c = exact_tree();
  c.n_trees = 4;
  const auto m = fit_forest(d.x, d.y, c);
  const auto per = m.predict_per_tree(d.x);
  for (std::size_t r = 0; r < 80; ++r)
    for (std::size_t t = 1; t < 4; ++t) REQUIRE(per(t, r) == per(0, r));
}

TEST_CASE("row order of prediction inputs is respected") {
  const auto d = make_data(100, 4, 4);
  const auto m = fit_forest(d.x, d.y, ForestConfig{.n_trees = 20, .seed = 9});
  std::vector<std::size_t> perm(100);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(5);
  rng.shuffle(std::span<std::size_t>(perm));
  const auto p = m.predict(d.x);
  const auto q = m.predict(d.x.select_rows(perm));
  for (std::size_t i = 0; i < 100; ++i) REQUIRE(q(i, 0) == p(perm[i], 0));
  for (std::size_t i = 0; i < 100; ++i) REQUIRE(m.predict_row(d.x.row(i)) == p(i, 0));
}

TEST_CASE("models are deterministic across runs and execution modes") {
  const auto d = make_data(200, 6, 6, 2);
  ForestConfig c{.n_trees = 25, .feature_fraction = 0.5, .seed = 123};
  const auto a = fit_forest(d.x, d.y, c, 0, Exec::kParallel);
  const auto b = fit_forest(d.x, d.y, c, 0, Exec::kSerial);
  CHECK(a.serialize() == b.serialize());
  CHECK(a == b);
  CHECK(a.predict(d.x, {}, Exec::kParallel) == b.predict(d.x, {}, Exec::kSerial));
  c.seed = 124;
  CHECK_FALSE(fit_forest(d.x, d.y, c) == a);

  GbtConfig g{.n_rounds = 50, .learning_rate = 0.1, .seed = 3};
  const auto y0 = DenseMatrix::from_column(d.y.column(0));
  CHECK(fit_gbt(d.x, y0, g).serialize() == fit_gbt(d.x, y0, g).serialize());
}

TEST_CASE("serialization round trip and fingerprints") {
  const auto d = make_data(60, 3, 7);
  const std::vector<std::string> cols{"a", "b", "c"};
  const auto fp = column_fingerprint(cols);
  CHECK(fp != column_fingerprint(std::vector<std::string>{"a", "c", "b"}));
  CHECK(fp != column_fingerprint(std::vector<std::string>{"ab", "", "c"}));
  const auto m = fit_forest(d.x, d.y, ForestConfig{.n_trees = 5, .max_depth = 4}, fp);
  const auto back = ForestModel::from_json(nlohmann::json::parse(m.serialize()));
  CHECK(back == m);
  CHECK(back.predict(d.x, fp) == m.predict(d.x, fp));
  CHECK_THROWS_AS(m.predict(d.x, fp + 1), Error);
  CHECK_THROWS_AS(m.predict(DenseMatrix(2, 4)), Error);
  CHECK_THROWS_AS(ForestModel::from_json(nlohmann::json{{"format", "other"}}), Error);
}

TEST_CASE("split structure is invariant under monotone column transforms") {
  const auto d = make_data(150, 3, 8);
  DenseMatrix tx = d.x;
  for (std::size_t r = 0; r < tx.rows(); ++r) {
    tx(r, 0) = std::exp(5 * tx(r, 0));
    tx(r, 2) = 7 * tx(r, 2) - 3;
  }
  // Without bootstrap every row is in-bag, so the induced partitions must match.
  ForestConfig c{.n_trees = 5, .feature_fraction = 0.5, .bootstrap = false, .seed = 4};
  const auto a = fit_forest(d.x, d.y, c), b = fit_forest(tx, d.y, c);
  REQUIRE(a.trees.size() == b.trees.size());
  for (std::size_t k = 0; k < a.trees.size(); ++k) {
    CHECK(a.trees[k].feature == b.trees[k].feature);
    CHECK(a.trees[k].left == b.trees[k].left);
    CHECK(leaves(a.trees[k], d.x) == leaves(b.trees[k], tx));
    CHECK(a.trees[k].value == b.trees[k].value);
  }
}

TEST_CASE("depth and leaf-size limits hold") {
  const auto d = make_data(200, 4, 10);
  const auto m = fit_forest(d.x, d.y, ForestConfig{.n_trees = 3, .max_depth = 3, .min_samples_leaf = 5});
  for (const auto& t : m.trees) {
    std::function<int(int)> depth = [&](int v) {
      return t.feature[v] < 0 ? 0 : 1 + std::max(depth(t.left[v]), depth(t.right[v]));
    };
    CHECK(depth(0) <= 3);
  }
  const auto e = fit_forest(d.x, d.y, ForestConfig{.n_trees = 1, .min_samples_leaf = 20, .bootstrap = false});
  std::map<int, int> count;
  for (int l : leaves(e.trees[0], d.x)) count[l]++;
  for (const auto& [l, c] : count) CHECK(c >= 20);
}

TEST_CASE("config validation") {
  const auto d = make_data(10, 2, 1);
  CHECK_THROWS_AS(fit_forest(d.x, d.y, ForestConfig{.n_trees = 0}), Error);
  CHECK_THROWS_AS(fit_forest(d.x, d.y, ForestConfig{.feature_fraction = 0.0}), Error);
  CHECK_THROWS_AS(fit_forest(d.x, d.y, ForestConfig{.feature_fraction = 1.5}), Error);
  CHECK_THROWS_AS(fit_forest(DenseMatrix(0, 2), DenseMatrix(0, 1), ForestConfig{}), Error);
  CHECK_THROWS_AS(fit_forest(d.x, DenseMatrix(9, 1), ForestConfig{}), Error);
  DenseMatrix bad = d.x;
  bad(3, 1) = std::nan("");
  CHECK_THROWS_AS(fit_forest(bad, d.y, ForestConfig{}), Error);
  CHECK_THROWS_AS(fit_gbt(d.x, d.y, GbtConfig{.learning_rate = 0}), Error);
  CHECK_THROWS_AS(fit_gbt(d.x, d.y, GbtConfig{.subsample = 0}), Error);
  CHECK(ForestConfig::from_json(ForestConfig{.n_trees = 7, .max_depth = 2}.to_json()).n_trees == 7);
}

TEST_CASE("gradient boosting") {
  auto d = make_data(200, 3, 11, 2);
  CHECK_THROWS_AS(fit_gbt(d.x, d.y, GbtConfig{.n_rounds = 5}), Error);

  DenseMatrix y(200, 1);
  double mean_y = 0;
  for (std::size_t r = 0; r < 200; ++r) mean_y += (y(r, 0) = 2 * d.x(r, 0));
  mean_y /= 200;
  const auto base = fit_gbt(d.x, y, GbtConfig{.n_rounds = 0});
  for (double v : base.predict(d.x).column(0)) CHECK(v == doctest::Approx(mean_y).epsilon(1e-14));

  const auto m = fit_gbt(d.x, y, GbtConfig{.n_rounds = 200, .learning_rate = 0.1, .max_depth = 2, .seed = 1});
  const auto p = m.predict(d.x);
  double mse = 0, var = 0;
  for (std::size_t r = 0; r < 200; ++r) {
    mse += (p(r, 0) - y(r, 0)) * (p(r, 0) - y(r, 0));
    var += (y(r, 0) - mean_y) * (y(r, 0) - mean_y);
  }
  CHECK(mse < 0.01 * var);

  DenseMatrix flat(200, 1);
  for (std::size_t r = 0; r < 200; ++r) flat(r, 0) = 1.5;
  for (double v : fit_gbt(d.x, flat, GbtConfig{.n_rounds = 20}).predict(d.x).column(0)) CHECK(v == doctest::Approx(1.5));
}

TEST_CASE("used features") {
  auto d = make_data(100, 4, 12);
  for (std::size_t r = 0; r < 100; ++r) d.y(r, 0) = d.x(r, 2) > 0.5 ? 1.0 : 0.0;
  const auto m = fit_forest(d.x, d.y, ForestConfig{.n_trees = 5, .max_depth = 1});
  CHECK(m.used_features() == std::vector<std::size_t>{2});
}
