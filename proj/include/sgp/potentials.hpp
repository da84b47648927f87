#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "sgp/errors.hpp"

namespace sgp {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Phi(theta) = 1/2 theta^T A theta - b^T theta + offset with A symmetric
/// positive semidefinite. For a least-squares block, A = G^T G, b = G^T y and
/// offset = |y|^2 / 2.
///
/// The eigendecomposition of A is computed once; flows are evaluated in the
/// eigenbasis, so singular directions drift linearly instead of failing.
template <typename Scalar>
class QuadraticPotential {
public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;

  QuadraticPotential(Matrix hessian, Vector linear, Scalar offset = Scalar(0))
      : a_(std::move(hessian)), b_(std::move(linear)), offset_(offset) {
    using std::abs;
    if (a_.rows() != a_.cols() || a_.rows() != b_.size() || a_.rows() == 0) {
      throw ConfigError("quadratic potential needs a square matrix matching its vector");
    }
    const Scalar scale = std::max(Scalar(1), a_.cwiseAbs().maxCoeff());
    if ((a_ - a_.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12) * scale) {
      throw ConfigError("quadratic potential matrix is not symmetric");
    }
    a_ = (Scalar(0.5) * (a_ + a_.transpose())).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(a_);
    if (eig.info() != Eigen::Success) {
      throw NumericalError("eigendecomposition of a quadratic potential failed");
    }
    eigenvalues_ = eig.eigenvalues();
    eigenvectors_ = eig.eigenvectors();
    if (eigenvalues_.minCoeff() < -Scalar(1e-12) * scale) {
      throw ConfigError("quadratic potential matrix is not positive semidefinite");
    }
    eigenvalues_ = eigenvalues_.cwiseMax(Scalar(0));
    kappa_ = eigenvalues_.minCoeff();
    b_eigen_ = eigenvectors_.transpose() * b_;
  }

  Eigen::Index dimension() const noexcept { return a_.rows(); }
  const Matrix& hessian() const noexcept { return a_; }
  const Vector& linear() const noexcept { return b_; }
  Scalar offset() const noexcept { return offset_; }
  /// Strong convexity constant: smallest eigenvalue of the Hessian.
  Scalar kappa() const noexcept { return kappa_; }
  const Vector& eigenvalues() const noexcept { return eigenvalues_; }
  const Matrix& eigenvectors() const noexcept { return eigenvectors_; }

  Scalar value(const Vector& theta) const {
    check(theta);
    return Scalar(0.5) * theta.dot(a_ * theta) - b_.dot(theta) + offset_;
  }

  Vector gradient(const Vector& theta) const {
    check(theta);
    return a_ * theta - b_;
  }

  /// Gradient flow phi(theta0, t) solving d theta/dt = b - A theta.
  Vector flow(const Vector& theta0, Scalar t) const {
    check(theta0);
    Vector theta = theta0;
    Vector work(dimension());
    flow_inplace(theta, t, work);
    return theta;
  }

  /// In-place flow for hot loops; `work` must have size dimension().
  ///
  /// In eigen-coordinates z_k' = beta_k - lambda_k z_k, so
  ///   z_k(t) = z_k + (beta_k - lambda_k z_k) (1 - exp(-lambda_k t)) / lambda_k
  /// with the factor reducing to t on the kernel of A.
  void flow_inplace(Vector& theta, Scalar t, Vector& work) const {
    using std::expm1;
    work.noalias() = eigenvectors_.transpose() * theta;
    for (Eigen::Index k = 0; k < work.size(); ++k) {
      const Scalar lam = eigenvalues_[k];
      const Scalar factor = lam > Scalar(0) ? -expm1(-lam * t) / lam : t;
      work[k] += (b_eigen_[k] - lam * work[k]) * factor;
    }
    theta.noalias() = eigenvectors_ * work;
  }

private:
  void check(const Vector& theta) const {
    if (theta.size() != dimension()) {
      throw ConfigError("state dimension " + std::to_string(theta.size()) +
                        " does not match potential dimension " + std::to_string(dimension()));
    }
  }

  Matrix a_;
  Vector b_;
  Scalar offset_;
  Vector eigenvalues_;
  Matrix eigenvectors_;
  Vector b_eigen_;
  Scalar kappa_ = Scalar(0);
};

/// Potential known only through a user-supplied gradient (value optional).
template <typename Scalar>
struct CustomPotential {
  using Vector = VectorX<Scalar>;
  Eigen::Index dimension = 0;
  std::function<Vector(const Vector&)> gradient;
  std::function<Scalar(const Vector&)> value;
};

/// Which strong-convexity regime a family of quadratics satisfies.
struct ConvexityRegime {
  bool kappa_sum_positive = false; ///< kappa_1 + ... + kappa_N > 0
  bool all_positive = false;       ///< every kappa_i > 0
};

/// The N potentials Phi_i whose mean is the target Phi-bar.
template <typename Scalar>
class PotentialSet {
public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;
  using Member = std::variant<QuadraticPotential<Scalar>, CustomPotential<Scalar>>;

  explicit PotentialSet(std::vector<Member> members) : members_(std::move(members)) {
    if (members_.size() < 2) {
      throw ConfigError("a potential set needs at least two members");
    }
    dimension_ = member_dimension(members_.front());
    for (const auto& m : members_) {
      if (member_dimension(m) != dimension_) {
        throw ConfigError("all potentials must share the same dimension");
      }
      if (const auto* c = std::get_if<CustomPotential<Scalar>>(&m); c && !c->gradient) {
        throw ConfigError("custom potential needs a gradient");
      }
    }
  }

  std::size_t size() const noexcept { return members_.size(); }
  Eigen::Index dimension() const noexcept { return dimension_; }
  const Member& member(std::size_t i) const {
    check_index(i);
    return members_[i];
  }

  bool all_quadratic() const noexcept {
    for (const auto& m : members_) {
      if (!std::holds_alternative<QuadraticPotential<Scalar>>(m)) {
        return false;
      }
    }
    return true;
  }

  const QuadraticPotential<Scalar>& quadratic(std::size_t i) const {
    check_index(i);
    const auto* q = std::get_if<QuadraticPotential<Scalar>>(&members_[i]);
    if (q == nullptr) {
      throw ConfigError("potential " + std::to_string(i) + " is not quadratic");
    }
    return *q;
  }

  /// Phi-bar as a single quadratic. Requires all members quadratic.
  QuadraticPotential<Scalar> mean_quadratic() const {
    Matrix a = Matrix::Zero(dimension_, dimension_);
    Vector b = Vector::Zero(dimension_);
    Scalar c(0);
    for (std::size_t i = 0; i < size(); ++i) {
      const auto& q = quadratic(i);
      a += q.hessian();
      b += q.linear();
      c += q.offset();
    }
    const Scalar n = static_cast<Scalar>(size());
    return QuadraticPotential<Scalar>(a / n, b / n, c / n);
  }

  ConvexityRegime regime() const {
    ConvexityRegime r{false, true};
    Scalar sum(0);
    for (std::size_t i = 0; i < size(); ++i) {
      const Scalar k = quadratic(i).kappa();
      sum += k;
      r.all_positive = r.all_positive && k > Scalar(0);
    }
    r.kappa_sum_positive = sum > Scalar(0);
    return r;
  }

private:
  static Eigen::Index member_dimension(const Member& m) {
    return std::visit(
        [](const auto& p) -> Eigen::Index {
          if constexpr (std::is_same_v<std::decay_t<decltype(p)>, CustomPotential<Scalar>>) {
            return p.dimension;
          } else {
            return p.dimension();
          }
        },
        m);
  }

  void check_index(std::size_t i) const {
    if (i >= members_.size()) {
      throw ConfigError("potential index " + std::to_string(i) + " out of range");
    }
  }

  std::vector<Member> members_;
  Eigen::Index dimension_ = 0;
};

template <typename Scalar>
VectorX<Scalar> gradient(const PotentialSet<Scalar>& ps, std::size_t i,
                         const std::type_identity_t<VectorX<Scalar>>& theta) {
  if (theta.size() != ps.dimension()) {
    throw ConfigError("state dimension does not match the potential set");
  }
  return std::visit(
      [&](const auto& p) -> VectorX<Scalar> {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, CustomPotential<Scalar>>) {
          VectorX<Scalar> g = p.gradient(theta);
          if (g.size() != ps.dimension()) {
            throw ConfigError("custom gradient returned the wrong dimension");
          }
          return g;
        } else {
          return p.gradient(theta);
        }
      },
      ps.member(i));
}

/// Gradient of Phi-bar: the mean of the member gradients.
template <typename Scalar>
VectorX<Scalar> full_gradient(const PotentialSet<Scalar>& ps,
                              const std::type_identity_t<VectorX<Scalar>>& theta) {
  VectorX<Scalar> g = VectorX<Scalar>::Zero(ps.dimension());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    g += gradient(ps, i, theta);
  }
  return g / static_cast<Scalar>(ps.size());
}

template <typename Scalar>
VectorX<Scalar> exact_flow(const QuadraticPotential<Scalar>& q,
                           const std::type_identity_t<VectorX<Scalar>>& theta0,
                           std::type_identity_t<Scalar> t) {
  if (t < Scalar(0)) {
    throw ConfigError("flow time must be non-negative");
  }
  return q.flow(theta0, t);
}

/// Least-squares block (G_i, y_i) defining Phi_i = 1/2 |G_i theta - y_i|^2.
template <typename Scalar>
struct LeastSquaresBlock {
  MatrixX<Scalar> g;
  VectorX<Scalar> y;
};

template <typename Scalar>
PotentialSet<Scalar> from_least_squares(const std::vector<LeastSquaresBlock<Scalar>>& blocks) {
  if (blocks.empty()) {
    throw ConfigError("least squares needs at least one block");
  }
  const Eigen::Index k = blocks.front().g.cols();
  std::vector<typename PotentialSet<Scalar>::Member> members;
  members.reserve(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& blk = blocks[i];
    if (blk.g.cols() != k) {
      throw ConfigError("least-squares block " + std::to_string(i) + " has " +
                        std::to_string(blk.g.cols()) + " columns, expected " + std::to_string(k));
    }
    if (blk.g.rows() != blk.y.size()) {
      throw ConfigError("least-squares block " + std::to_string(i) +
                        " has mismatched observation count");
    }
    members.emplace_back(QuadraticPotential<Scalar>(blk.g.transpose() * blk.g,
                                                    blk.g.transpose() * blk.y,
                                                    Scalar(0.5) * blk.y.squaredNorm()));
  }
  return PotentialSet<Scalar>(std::move(members));
}

/// theta* solving (mean A) theta = mean b.
template <typename Scalar>
VectorX<Scalar> minimiser(const PotentialSet<Scalar>& ps) {
  const auto mean = ps.mean_quadratic();
  const Scalar top = std::max(Scalar(1), mean.eigenvalues().maxCoeff());
  if (mean.eigenvalues().minCoeff() <= Scalar(1e-12) * top) {
    throw NumericalError("mean Hessian is singular; the minimiser is not unique");
  }
  return mean.hessian().llt().solve(mean.linear());
}

/// Linear switching field G_i theta.
template <typename Scalar>
VectorX<Scalar> population_field(const std::vector<MatrixX<Scalar>>& matrices, std::size_t i,
                                 const std::type_identity_t<VectorX<Scalar>>& theta) {
  if (i >= matrices.size()) {
    throw ConfigError("switching matrix index out of range");
  }
  const auto& g = matrices[i];
  if (g.rows() != g.cols() || g.cols() != theta.size()) {
    throw ConfigError("switching matrix and state dimensions disagree");
  }
  return g * theta;
}

} // namespace sgp
