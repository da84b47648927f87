#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "sgp/analysis.hpp"
#include "sgp/errors.hpp"

using namespace sgp;

namespace {

// Integral of a density sampled on a uniform grid.
double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t k = 1; k < x.size(); ++k) {
    s += 0.5 * (y[k] + y[k - 1]) * (x[k] - x[k - 1]);
  }
  return s;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k) {
    g[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
  }
  return g;
}

double cost(double x, double y, double q) { return std::min(1.0, std::pow(std::abs(x - y), q)); }

} // namespace

TEST_CASE("sorted W1 examples") {
  const std::vector<double> a{0.3, -1.0, 2.0};
  CHECK(wasserstein1_sorted(a, a) == 0.0);
  CHECK(wasserstein1_sorted(std::vector<double>{0.0}, std::vector<double>{1.0}) == 1.0);
  CHECK(wasserstein1_sorted(std::vector<double>{0.0, 1.0}, std::vector<double>{0.5, 1.5}) == doctest::Approx(0.5));
  // Exhaustive two-point assignment oracle.
  const std::vector<double> x{0.0, 1.0}, y{1.5, 0.5};
  const double brute = std::min(std::abs(x[0] - y[0]) + std::abs(x[1] - y[1]),
                                std::abs(x[0] - y[1]) + std::abs(x[1] - y[0])) / 2.0;
  CHECK(wasserstein1_sorted(x, y) == doctest::Approx(brute));
  CHECK_THROWS_AS(wasserstein1_sorted(x, std::vector<double>{1.0}), ConfigError);
  CHECK_THROWS_AS(wasserstein1_sorted(std::vector<double>{}, std::vector<double>{}), ConfigError);
}

TEST_CASE("sorted W1 is a metric") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(20), b(20), c(20);
    for (int k = 0; k < 20; ++k) {
      a[k] = n01(rng);
      b[k] = n01(rng) + 0.5;
      c[k] = 2.0 * n01(rng);
    }
    const double ab = wasserstein1_sorted(a, b), ba = wasserstein1_sorted(b, a);
    CHECK(ab == ba);
    CHECK(ab <= wasserstein1_sorted(a, c) + wasserstein1_sorted(c, b) + 1e-12);
    auto shuffled = a;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(wasserstein1_sorted(a, shuffled) == 0.0);
    CHECK(ab > 0.0);
  }
}

TEST_CASE("truncated Wasserstein examples") {
  const TruncatedMetricSpec q1{1.0};
  const std::vector<double> a{0.1, 0.7, -3.0};
  CHECK(wasserstein_truncated(a, a, q1) == 0.0);
  CHECK(wasserstein_truncated(std::vector<double>{0.0}, std::vector<double>{5.0}, q1) == 1.0);
  CHECK_THROWS_AS(wasserstein_truncated(std::vector<double>(513, 0.0), std::vector<double>(513, 1.0), q1),
                  ConfigError);
  CHECK_THROWS_AS(wasserstein_truncated(a, a, TruncatedMetricSpec{0.0}), ConfigError);
  CHECK_THROWS_AS(wasserstein_truncated(a, a, TruncatedMetricSpec{1.5}), ConfigError);
}

TEST_CASE("truncated Wasserstein equals the brute force over all 8! couplings") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n01;
  for (double q : {0.5, 1.0}) {
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> a(8), b(8);
      for (int k = 0; k < 8; ++k) {
        a[k] = n01(rng);
        b[k] = 1.5 * n01(rng) + 0.3;
      }
      std::vector<int> perm(8);
      std::iota(perm.begin(), perm.end(), 0);
      double best = 1e300;
      do {
        double s = 0.0;
        for (int k = 0; k < 8; ++k) {
          s += cost(a[k], b[perm[k]], q);
        }
        best = std::min(best, s / 8.0);
      } while (std::next_permutation(perm.begin(), perm.end()));
      CHECK(wasserstein_truncated(a, b, TruncatedMetricSpec{q}) == doctest::Approx(best).epsilon(1e-12));
    }
  }
}

TEST_CASE("truncated Wasserstein in several dimensions and under the sorted coupling") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd a(2, 6), b(2, 6);
  for (Eigen::Index j = 0; j < 6; ++j) {
    a.col(j) << n01(rng), n01(rng);
    b.col(j) << n01(rng) + 0.4, n01(rng);
  }
  std::vector<int> perm(6);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  do {
    double s = 0.0;
    for (int k = 0; k < 6; ++k) {
      s += std::min(1.0, std::pow((a.col(k) - b.col(perm[k])).norm(), 0.7));
    }
    best = std::min(best, s / 6.0);
  } while (std::next_permutation(perm.begin(), perm.end()));
  CHECK(wasserstein_truncated(a, b, TruncatedMetricSpec{0.7}) == doctest::Approx(best).epsilon(1e-12));

  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(50), y(50);
    for (int k = 0; k < 50; ++k) {
      x[k] = n01(rng);
      y[k] = 3.0 * n01(rng);
    }
    auto sx = x, sy = y;
    std::sort(sx.begin(), sx.end());
    std::sort(sy.begin(), sy.end());
    double sorted_cost = 0.0;
    for (int k = 0; k < 50; ++k) {
      sorted_cost += cost(sx[k], sy[k], 0.5);
    }
    CHECK(wasserstein_truncated(x, y, TruncatedMetricSpec{0.5}) <= sorted_cost / 50.0 + 1e-12);
  }
}

TEST_CASE("assignment solver") {
  Eigen::MatrixXd c(3, 3);
  c << 4, 1, 3, 2, 0, 5, 3, 2, 2;
  const auto sol = solve_assignment(c);
  CHECK(sol.total_cost == doctest::Approx(5.0));
  CHECK(sol.column_of_row == std::vector<std::size_t>{1, 0, 2});
}

TEST_CASE("column subsampling") {
  Eigen::MatrixXd s(1, 100);
  for (int j = 0; j < 100; ++j) {
    s(0, j) = j;
  }
  const auto a = subsample_columns(s, 10, 42);
  const auto b = subsample_columns(s, 10, 42);
  CHECK(a == b);
  std::vector<double> v(a.data(), a.data() + 10);
  std::sort(v.begin(), v.end());
  CHECK(std::adjacent_find(v.begin(), v.end()) == v.end());
  CHECK(subsample_columns(s, 100, 1).cols() == 100);
  CHECK_THROWS_AS(subsample_columns(s, 101, 1), ConfigError);
}

TEST_CASE("KDE symmetry, normal peak and nonnegativity") {
  std::vector<double> sym;
  for (double d : {0.1, 0.4, 0.5, 1.3, 2.0}) {
    sym.push_back(1.0 + d);
    sym.push_back(1.0 - d);
  }
  std::vector<double> grid;
  for (int k = 0; k <= 40; ++k) {
    grid.push_back(1.0 + 0.1 * k);
    grid.push_back(1.0 - 0.1 * k);
  }
  const auto r = kde(sym, grid);
  for (std::size_t k = 0; k < grid.size(); k += 2) {
    CHECK(std::abs(r.density[k] - r.density[k + 1]) < 1e-12);
  }

  std::mt19937_64 rng(9);
  std::normal_distribution<double> n01;
  std::vector<double> normal(10000);
  for (double& x : normal) {
    x = n01(rng);
  }
  const auto wide = linspace(-8.0, 8.0, 1601);
  const auto nd = kde(normal, wide);
  const double peak = *std::max_element(nd.density.begin(), nd.density.end());
  CHECK(std::abs(peak - 1.0 / std::sqrt(2.0 * M_PI)) < 0.1 / std::sqrt(2.0 * M_PI));
  CHECK(std::abs(trapezoid(wide, nd.density) - 1.0) < 1e-3);
  CHECK(*std::min_element(nd.density.begin(), nd.density.end()) >= 0.0);
  const double sd = std::sqrt(summary_stats(normal).variance);
  CHECK(nd.bandwidth == doctest::Approx(1.06 * sd * std::pow(10000.0, -0.2)));
  CHECK(kde(normal, wide, KdeOptions{0.3, {}}).bandwidth == 0.3);
}

TEST_CASE("KDE reflection conserves mass") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2.0, -1.9);
  std::vector<double> s(2000);
  for (double& x : s) {
    x = u(rng);
  }
  const auto grid = linspace(-2.0, 2.0, 4001);
  const auto r = kde(s, grid, KdeOptions{{}, std::make_pair(-2.0, 2.0)});
  CHECK(std::abs(trapezoid(grid, r.density) - 1.0) < 1e-3);
  const auto outside = kde(s, std::vector<double>{-2.5, 2.5}, KdeOptions{{}, std::make_pair(-2.0, 2.0)});
  CHECK(outside.density == std::vector<double>{0.0, 0.0});
}

TEST_CASE("KDE degenerate input") {
  const std::vector<double> flat{1.0, 1.0, 1.0};
  CHECK_THROWS_AS(kde(flat, std::vector<double>{1.0}), NumericalError);
  CHECK_THROWS_AS(kde(std::vector<double>{1.0}, std::vector<double>{1.0}), ConfigError);
  CHECK_THROWS_AS(kde(std::vector<double>{0.0, 1.0}, std::vector<double>{1.0}, KdeOptions{-1.0, {}}), ConfigError);
}

TEST_CASE("summary statistics") {
  const auto a = summary_stats(std::vector<double>{1, 1, 1});
  CHECK(a.mean == 1.0);
  CHECK(a.variance == 0.0);
  const auto b = summary_stats(std::vector<double>{0, 2});
  CHECK(b.mean == 1.0);
  CHECK(b.variance == 2.0);
  const std::vector<double> c{1, 2, 3, 4};
  // Textbook two-pass formula.
  double m = 0.0;
  for (double x : c) {
    m += x;
  }
  m /= 4.0;
  double ss = 0.0;
  for (double x : c) {
    ss += (x - m) * (x - m);
  }
  const auto sc = summary_stats(c);
  CHECK(sc.mean == doctest::Approx(m));
  CHECK(sc.variance == doctest::Approx(ss / 3.0));
  CHECK(sc.variance == doctest::Approx(5.0 / 3.0));
  CHECK_THROWS_AS(summary_stats(std::vector<double>{1.0}), ConfigError);
}

TEST_CASE("goodness-of-fit helpers") {
  std::vector<double> grid;
  for (int k = 0; k < 100; ++k) {
    grid.push_back((k + 0.5) / 100.0);
  }
  CHECK(ks_statistic(grid, [](double x) { return x; }) == doctest::Approx(0.005));
  CHECK(ks_critical_value(100, 0.05) == doctest::Approx(0.1358).epsilon(1e-3));
  const std::vector<double> counts{10, 20, 30}, probs{1.0 / 6, 2.0 / 6, 3.0 / 6};
  CHECK(chi_square_statistic(counts, probs) == doctest::Approx(0.0));
  CHECK(chi_square_critical_value(2, 0.01) == doctest::Approx(9.2103).epsilon(1e-4));
  CHECK(total_variation(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)) == 1.0);
  const std::vector<double> t{0, 1, 2, 3}, v{1, std::exp(-1.0), std::exp(-2.0), std::exp(-3.0)};
  CHECK(log_linear_slope(t, v) == doctest::Approx(-1.0));
}
