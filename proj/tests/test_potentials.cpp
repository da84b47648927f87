#include <doctest.h>

#include <cmath>
#include <vector>

#include "sgp/errors.hpp"
#include "sgp/potentials.hpp"
#include "sgp/presets.hpp"
#include "sgp/random.hpp"

using namespace sgp;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

namespace {

Vec v1(double x) { return Vec::Constant(1, x); }

// Classical RK4 on d theta/dt = b - A theta, independent of the eigenbasis path.
Vec rk4_quadratic(const Mat& a, const Vec& b, Vec theta, double t, double h) {
  const int n = static_cast<int>(std::ceil(t / h));
  const double dt = t / n;
  auto f = [&](const Vec& x) -> Vec { return b - a * x; };
  for (int k = 0; k < n; ++k) {
    const Vec k1 = f(theta);
    const Vec k2 = f(theta + 0.5 * dt * k1);
    const Vec k3 = f(theta + 0.5 * dt * k2);
    const Vec k4 = f(theta + dt * k3);
    theta += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return theta;
}

Vec random_vec(Rng& rng, Eigen::Index n, double scale = 2.0) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = scale * (2.0 * uniform_open01(rng) - 1.0);
  }
  return v;
}

Mat random_mat(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    m.row(i) = random_vec(rng, c, 1.0).transpose();
  }
  return m;
}

} // namespace

TEST_CASE("member gradients of the three-well problem") {
  const auto ps = presets::toy_three_well();
  CHECK(gradient(ps, 0, v1(-2.0))[0] == 0.0);
  CHECK(gradient(ps, 1, v1(0.0))[0] == doctest::Approx(-1.5));
  // Finite-difference oracle on the potential value.
  const auto& q = ps.quadratic(1);
  const double h = 1e-6;
  CHECK((q.value(v1(h)) - q.value(v1(-h))) / (2 * h) == doctest::Approx(-1.5).epsilon(1e-8));

  const QuadraticPotential<double> id(Mat::Identity(2, 2), Vec::Zero(2));
  const Vec theta = (Vec(2) << 0.3, -4.0).finished();
  CHECK((id.gradient(theta) - theta).norm() == 0.0);

  CHECK_THROWS_AS(gradient(ps, 0, Vec::Zero(2)), ConfigError);
  CHECK_THROWS_AS(gradient(ps, 3, v1(0.0)), ConfigError);
}

TEST_CASE("full gradient is the mean of member gradients") {
  const auto ps = presets::toy_three_well();
  CHECK(std::abs(full_gradient(ps, v1(0.5))[0]) < 1e-15);
  CHECK(full_gradient(ps, v1(-1.5))[0] == doctest::Approx(-2.0));
  const double manual = (gradient(ps, 0, v1(-1.5))[0] + gradient(ps, 1, v1(-1.5))[0] +
                         gradient(ps, 2, v1(-1.5))[0]) / 3.0;
  CHECK(full_gradient(ps, v1(-1.5))[0] == doctest::Approx(manual));

  const auto same = presets::scalar_quadratics<double>({0.7, 0.7, 0.7});
  CHECK(full_gradient(same, v1(3.0))[0] == doctest::Approx(gradient(same, 2, v1(3.0))[0]));
}

TEST_CASE("exact flow of quadratics") {
  const auto ps = presets::toy_three_well();
  const auto& q3 = ps.quadratic(2);
  CHECK(exact_flow(q3, v1(2.0), 5.0)[0] == 2.0);
  CHECK(exact_flow(q3, v1(0.0), std::log(2.0))[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rk4_quadratic(q3.hessian(), q3.linear(), v1(0.0), std::log(2.0), 1e-3)[0] ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(exact_flow(q3, v1(-0.25), 0.0)[0] == -0.25);
  CHECK_THROWS_AS(exact_flow(q3, v1(0.0), -1.0), ConfigError);
}

TEST_CASE("exact flow matches RK4 on the three-well potentials") {
  const auto ps = presets::toy_three_well();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto& q = ps.quadratic(i);
    for (double t : {0.0, 0.5, 1.0, 2.5, 5.0, 10.0}) {
      const Vec exact = exact_flow(q, v1(-1.5), t);
      const Vec rk = rk4_quadratic(q.hessian(), q.linear(), v1(-1.5), t, 1e-3);
      CHECK(std::abs(exact[0] - rk[0]) < 1e-9);
    }
  }
}

TEST_CASE("singular directions drift linearly") {
  const Mat a = (Mat(2, 2) << 1.0, 0.0, 0.0, 0.0).finished();
  const Vec b = (Vec(2) << 1.0, 0.5).finished();
  const QuadraticPotential<double> q(a, b);
  CHECK(q.kappa() == 0.0);
  const Vec theta0 = (Vec(2) << 3.0, -1.0).finished();
  for (double t : {0.1, 1.0, 4.0}) {
    const Vec e = q.flow(theta0, t);
    const Vec r = rk4_quadratic(a, b, theta0, t, 1e-3);
    CHECK((e - r).norm() < 1e-10);
    CHECK(e[1] == doctest::Approx(-1.0 + 0.5 * t));
  }
}

TEST_CASE("flows contract at the strong convexity rate") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat g = random_mat(rng, 5, 3);
    const QuadraticPotential<double> q(g.transpose() * g, g.transpose() * random_vec(rng, 5));
    REQUIRE(q.kappa() > 0.0);
    const Vec x = random_vec(rng, 3, 5.0);
    const Vec y = random_vec(rng, 3, 5.0);
    for (double t : {0.1, 1.0, 10.0}) {
      CHECK((q.flow(x, t) - q.flow(y, t)).norm() <= std::exp(-q.kappa() * t) * (x - y).norm() + 1e-10);
    }
  }
}

TEST_CASE("gradients agree with finite differences of the least-squares objective") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Mat g = random_mat(rng, 4, 3);
    const Vec y = random_vec(rng, 4);
    const auto ps = from_least_squares<double>({{g, y}, {g, y}});
    const Vec theta = random_vec(rng, 3);
    auto objective = [&](const Vec& x) { return 0.5 * (g * x - y).squaredNorm(); };
    const Vec analytic = gradient(ps, 0, theta);
    Vec fd(3);
    const double h = 1e-6;
    for (int k = 0; k < 3; ++k) {
      Vec e = Vec::Zero(3);
      e[k] = h;
      fd[k] = (objective(theta + e) - objective(theta - e)) / (2 * h);
    }
    CHECK((analytic - fd).norm() <= 1e-6 * std::max(1.0, analytic.norm()));
    CHECK(ps.quadratic(0).value(theta) == doctest::Approx(objective(theta)).epsilon(1e-12));
  }
}

TEST_CASE("least-squares construction and convexity regimes") {
  const auto ps = presets::toy_three_well();
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(ps.quadratic(i).kappa() == doctest::Approx(1.0));
  }
  CHECK(ps.regime().all_positive);
  CHECK(ps.regime().kappa_sum_positive);

  const Mat zero_col = (Mat(2, 2) << 1.0, 0.0, 2.0, 0.0).finished();
  const auto rank_def = from_least_squares<double>({{zero_col, Vec::Ones(2)}, {Mat::Identity(2, 2), Vec::Ones(2)}});
  CHECK(rank_def.quadratic(0).kappa() == 0.0);
  CHECK_FALSE(rank_def.regime().all_positive);
  CHECK(rank_def.regime().kappa_sum_positive);

  const Mat g1 = (Mat(1, 2) << 1.0, 0.0).finished();
  const Mat g2 = (Mat(1, 2) << 0.0, 1.0).finished();
  const auto split = from_least_squares<double>({{g1, Vec::Zero(1)}, {g2, Vec::Zero(1)}});
  // Eigenvalue oracle: G^T G = diag(1, 0) and diag(0, 1).
  CHECK(split.quadratic(0).kappa() == 0.0);
  CHECK(split.quadratic(1).kappa() == 0.0);
  CHECK_FALSE(split.regime().kappa_sum_positive);
  CHECK_FALSE(split.regime().all_positive);

  CHECK_THROWS_AS(from_least_squares<double>({{g1, Vec::Zero(1)}, {Mat::Ones(1, 3), Vec::Zero(1)}}), ConfigError);
  CHECK_THROWS_AS(from_least_squares<double>({{g1, Vec::Zero(2)}, {g2, Vec::Zero(1)}}), ConfigError);
}

TEST_CASE("minimiser") {
  CHECK(minimiser(presets::toy_three_well())[0] == doctest::Approx(0.5));

  const Vec v = (Vec(2) << 1.5, -2.0).finished();
  const QuadraticPotential<double> q(Mat::Identity(2, 2), v);
  const PotentialSet<double> single({q, q});
  CHECK((minimiser(single) - v).norm() < 1e-14);

  const Mat g1 = (Mat(2, 2) << 1.0, 0.0, 0.0, 2.0).finished();
  const Mat g2 = (Mat(2, 2) << 3.0, 0.0, 0.0, 1.0).finished();
  const auto diag = from_least_squares<double>({{g1, Vec::Ones(2)}, {g2, (Vec(2) << 2.0, 0.0).finished()}});
  const Mat a = g1.transpose() * g1 + g2.transpose() * g2;
  const Vec b = g1.transpose() * Vec::Ones(2) + g2.transpose() * (Vec(2) << 2.0, 0.0).finished();
  const Vec oracle = a.fullPivLu().solve(b);
  CHECK((minimiser(diag) - oracle).norm() < 1e-14);
  CHECK(minimiser(diag)[0] == doctest::Approx(0.7));
  CHECK(minimiser(diag)[1] == doctest::Approx(0.4));
  CHECK(full_gradient(diag, minimiser(diag)).norm() < 1e-10);

  const Mat g = (Mat(1, 2) << 1.0, 1.0).finished();
  const auto singular = from_least_squares<double>({{g, Vec::Zero(1)}, {g, Vec::Ones(1)}});
  CHECK_THROWS_AS(minimiser(singular), NumericalError);
}

TEST_CASE("minimiser zeroes the full gradient on random problems") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<LeastSquaresBlock<double>> blocks;
    for (int i = 0; i < 4; ++i) {
      blocks.push_back({random_mat(rng, 3, 3), random_vec(rng, 3)});
    }
    const auto ps = from_least_squares(blocks);
    CHECK(full_gradient(ps, minimiser(ps)).norm() < 1e-10);
  }
}

TEST_CASE("matrix validation") {
  const Mat nonsym = (Mat(2, 2) << 1.0, 0.5, 0.0, 1.0).finished();
  CHECK_THROWS_AS(QuadraticPotential<double>(nonsym, Vec::Zero(2)), ConfigError);
  const Mat indefinite = (Mat(2, 2) << 1.0, 0.0, 0.0, -1.0).finished();
  CHECK_THROWS_AS(QuadraticPotential<double>(indefinite, Vec::Zero(2)), ConfigError);
  CHECK_THROWS_AS(QuadraticPotential<double>(Mat::Identity(2, 2), Vec::Zero(3)), ConfigError);
  const QuadraticPotential<double> q(Mat::Identity(1, 1), Vec::Zero(1));
  CHECK_THROWS_AS(PotentialSet<double>({q}), ConfigError);
  const QuadraticPotential<double> q2(Mat::Identity(2, 2), Vec::Zero(2));
  CHECK_THROWS_AS(PotentialSet<double>({q, q2}), ConfigError);
}

TEST_CASE("custom potentials") {
  CustomPotential<double> quartic{1, [](const Vec& x) -> Vec { return x.array().cube().matrix(); }, {}};
  const QuadraticPotential<double> q(Mat::Identity(1, 1), Vec::Zero(1));
  const PotentialSet<double> ps({quartic, q});
  CHECK_FALSE(ps.all_quadratic());
  CHECK(gradient(ps, 0, v1(2.0))[0] == 8.0);
  CHECK(full_gradient(ps, v1(2.0))[0] == 5.0);
  CHECK_THROWS_AS(ps.quadratic(0), ConfigError);
  CHECK_THROWS_AS(ps.regime(), ConfigError);
}

TEST_CASE("population switching field") {
  const std::vector<Mat> zero{Mat::Zero(2, 2), Mat::Zero(2, 2)};
  CHECK(population_field(zero, 1, Vec::Ones(2)).norm() == 0.0);
  const std::vector<Mat> id{Mat::Identity(2, 2), Mat::Identity(2, 2)};
  const Vec theta = (Vec(2) << 1.0, 2.0).finished();
  CHECK(population_field(id, 0, theta) == theta);

  // G = diag(f) + H with zero column sums of H: 1^T G theta = f^T theta.
  const Vec f = (Vec(3) << 0.5, -0.2, 0.1).finished();
  const Mat h = (Mat(3, 3) << -1.0, 0.3, 0.2, 0.6, -0.5, 0.3, 0.4, 0.2, -0.5).finished();
  REQUIRE(h.colwise().sum().cwiseAbs().maxCoeff() < 1e-15);
  const std::vector<Mat> pop{Mat(f.asDiagonal()) + h, Mat(f.asDiagonal())};
  const Vec x = (Vec(3) << 2.0, 1.0, 3.0).finished();
  CHECK(population_field(pop, 0, x).sum() == doctest::Approx(f.dot(x)));
  CHECK(population_field(pop, 0, x).isApprox(pop[0] * x));
  CHECK_THROWS_AS(population_field(pop, 2, x), ConfigError);
  CHECK_THROWS_AS(population_field(pop, 0, Vec::Ones(2)), ConfigError);
}

TEST_CASE_TEMPLATE("scalar types other than double", Scalar, float, long double) {
  const auto ps = presets::toy_three_well<Scalar>();
  using V = VectorX<Scalar>;
  const V theta = V::Constant(1, Scalar(-1.5));
  CHECK(static_cast<double>(full_gradient(ps, theta)[0]) == doctest::Approx(-2.0).epsilon(1e-6));
  CHECK(static_cast<double>(minimiser(ps)[0]) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(static_cast<double>(ps.quadratic(2).flow(V::Zero(1), Scalar(std::log(2.0)))[0]) ==
        doctest::Approx(1.0).epsilon(1e-6));
}
