#include <cmath>

#include "doctest.h"
#include "graf/metrics.hpp"
#include "oracles.hpp"

using namespace graf;

namespace {

std::vector<double> random_vector(Rng& rng, std::size_t n, int levels) {
  std::vector<double> v(n);
  for (auto& x : v) x = levels > 0 ? static_cast<double>(rng.below(levels)) : rng.normal();
  return v;
}

}  // namespace

TEST_CASE("kendall tau basics") {
  const std::vector<double> a{1, 2, 3, 4, 5};
  const std::vector<double> r{5, 4, 3, 2, 1};
  CHECK(kendall_tau(a, a) == 1.0);
  CHECK(kendall_tau(a, r) == -1.0);
  const std::vector<double> x{1, 2, 2, 3}, y{1, 3, 2, 4};
  CHECK(kendall_tau(x, y) == doctest::Approx(5.0 / std::sqrt(30.0)).epsilon(1e-15));
  CHECK(kendall_tau(x, y) == oracle::kendall_brute(x, y));
  CHECK_THROWS_AS(kendall_tau(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), Error);
  CHECK_THROWS_AS(kendall_tau(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), Error);
  CHECK_THROWS_AS(kendall_tau(std::vector<double>{1}, std::vector<double>{1}), Error);
}

TEST_CASE("fast kendall equals the quadratic oracle exactly") {
  Rng rng(2024);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + rng.below(200);
    const int lx = static_cast<int>(rng.below(6)), ly = static_cast<int>(rng.below(6));
    auto x = random_vector(rng, n, lx == 1 ? 2 : lx);
    auto y = random_vector(rng, n, ly == 1 ? 2 : ly);
    x[0] = -1000.0;  // never all tied
    y[1] = -1000.0;
    const double fast = kendall_tau(x, y);
    REQUIRE(fast == oracle::kendall_brute(x, y));
    REQUIRE(fast == kendall_tau(y, x));
    REQUIRE(std::abs(fast) <= 1.0);
  }
}

TEST_CASE("rank correlations are invariant under increasing transforms") {
  Rng rng(9);
  for (int t = 0; t < 50; ++t) {
    auto x = random_vector(rng, 100, 7);
    x[0] = -50;
    const auto y = random_vector(rng, 100, 0);
    std::vector<double> fx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) fx[i] = std::exp(x[i] / 10.0) * 3 + 1;
    REQUIRE(kendall_tau(x, y) == kendall_tau(fx, y));
    REQUIRE(spearman_rho(x, y) == doctest::Approx(spearman_rho(fx, y)).epsilon(1e-14));
  }
}

TEST_CASE("spearman") {
  const std::vector<double> a{1, 2, 3, 4};
  CHECK(spearman_rho(a, a) == doctest::Approx(1.0));
  CHECK(spearman_rho(a, std::vector<double>{4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman_rho(a, std::vector<double>{1, 3, 2, 4}) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK_THROWS_AS(spearman_rho(a, std::vector<double>{2, 2, 2, 2}), Error);
  CHECK(mid_ranks(std::vector<double>{10, 20, 20, 5}) == std::vector<double>{2, 3.5, 3.5, 1});

  Rng rng(77);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 3 + rng.below(150);
    auto x = random_vector(rng, n, static_cast<int>(rng.below(5)));
    auto y = random_vector(rng, n, static_cast<int>(rng.below(5)));
    x[0] = -100;
    y[0] = 100;
    REQUIRE(std::abs(spearman_rho(x, y) - oracle::spearman(x, y)) <= 1e-12);
  }
}

TEST_CASE("grouped rank correlation") {
  // Simpson construction: inside each group score and target move in
  // opposite directions, across groups both rise together.
  std::vector<double> score, target;
  std::vector<std::string> key;
  for (int g = 0; g < 3; ++g)
    for (int i = 0; i < 5; ++i) {
      score.push_back(10 * g + i);
      target.push_back(10 * g - i);
      key.push_back("g" + std::to_string(g));
    }
  score.push_back(100);
  target.push_back(100);
  key.push_back("lonely");
  const auto res = grouped_rank_correlation(score, target, key);
  CHECK(res.groups.size() == 3);
  CHECK_FALSE(res.groups.contains("lonely"));
  for (const auto& [k, v] : res.groups) CHECK(v == doctest::Approx(-1.0));
  CHECK(res.all_data > 0.5);
  CHECK(res.all_data == doctest::Approx(oracle::spearman(score, target)));
  CHECK(res.mean_abs_within() == doctest::Approx(1.0));

  const auto pos = grouped_rank_correlation(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 2, 5, 6},
                                            std::vector<std::string>{"a", "a", "b", "b"});
  CHECK(pos.groups.at("a") == doctest::Approx(1.0));
  CHECK(pos.groups.at("b") == doctest::Approx(1.0));
}

TEST_CASE("mean rank") {
  const std::map<std::string, double> r1{{"a", 3.0}, {"b", 2.0}, {"c", 1.0}};
  const std::map<std::string, double> r2{{"a", 1.0}, {"b", 2.0}, {"c", 3.0}};
  auto one = mean_rank({r1});
  CHECK(one[0].feature == "a");
  CHECK(one[0].mean_rank == 0.0);
  CHECK(one[2].mean_rank == 2.0);
  auto two = mean_rank({r1, r2});
  for (const auto& f : two)
    if (f.feature == "a") CHECK(f.mean_rank == 1.0);
  const std::map<std::string, double> tie{{"a", 1.0}, {"b", 1.0}, {"c", 0.0}};
  for (const auto& f : mean_rank({tie}))
    if (f.feature != "c") CHECK(f.mean_rank == 0.5);
  CHECK_THROWS_AS(mean_rank({r1, {{"a", 1.0}, {"z", 2.0}, {"c", 0.0}}}), Error);
}

TEST_CASE("mean and sample std") {
  const std::vector<double> v{1, 2, 3, 4};
  CHECK(mean(v) == 2.5);
  CHECK(sample_std(v) == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(sample_std(std::vector<double>{7}) == 0.0);
}
