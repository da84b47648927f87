#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "sgp/csv.hpp"
#include "sgp/errors.hpp"
#include "sgp/index_process.hpp"
#include "sgp/potentials.hpp"
#include "sgp/random.hpp"
#include "sgp/rates.hpp"

namespace sgp {

struct IntegratorSpec {
  enum class Kind { ExactQuadratic, ExplicitEuler, ImplicitEulerQuadratic, RK4 };
  Kind kind = Kind::ExactQuadratic;
  /// Maximal step for the stepped kinds; segments are split into
  /// ceil(duration / step) equal steps.
  double step = 1e-3;

  static IntegratorSpec exact() { return {Kind::ExactQuadratic, 0.0}; }
  static IntegratorSpec explicit_euler(double h) { return {Kind::ExplicitEuler, h}; }
  static IntegratorSpec implicit_euler(double h) { return {Kind::ImplicitEulerQuadratic, h}; }
  static IntegratorSpec rk4(double h) { return {Kind::RK4, h}; }
};

/// Exact flows when every member is quadratic, else RK4 with step min(0.01, eta/10).
template <typename Scalar>
IntegratorSpec default_integrator(const PotentialSet<Scalar>& ps, double eta) {
  if (ps.all_quadratic()) {
    return IntegratorSpec::exact();
  }
  return IntegratorSpec::rk4(std::min(0.01, eta / 10.0));
}

/// States of a process sampled on an output grid. Column j of `states` is
/// the state at grid[j].
template <typename Scalar>
struct Trajectory {
  std::vector<double> grid;
  MatrixX<Scalar> states;
  std::optional<JumpSkeleton> skeleton;
  std::vector<double> tau;

  VectorX<Scalar> state(std::size_t j) const { return states.col(static_cast<Eigen::Index>(j)); }
  VectorX<Scalar> terminal() const { return states.col(states.cols() - 1); }
};

/// n evenly spaced points from t0 to t1 inclusive.
inline std::vector<double> uniform_grid(double t0, double t1, std::size_t n) {
  if (n < 2) {
    return {t1};
  }
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k) {
    g[k] = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(n - 1);
  }
  g.back() = t1;
  return g;
}

namespace detail {

inline void check_grid(std::span<const double> grid, double t0, double horizon) {
  if (grid.empty()) {
    throw ConfigError("output grid is empty");
  }
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (grid[k] < t0 || grid[k] > horizon) {
      throw ConfigError("output grid point outside [t0, horizon]");
    }
    if (k > 0 && grid[k] < grid[k - 1]) {
      throw ConfigError("output grid must be non-decreasing");
    }
  }
}

/// Fixed-step explicit Euler / RK4 for d theta/dt = field(theta).
template <typename Scalar, typename Field>
void step_field(VectorX<Scalar>& theta, double duration, const IntegratorSpec& spec,
                const Field& field) {
  if (duration <= 0.0) {
    return;
  }
  if (!(spec.step > 0.0)) {
    throw ConfigError("integrator step must be positive");
  }
  const auto n = static_cast<long>(std::max(1.0, std::ceil(duration / spec.step)));
  const Scalar h = static_cast<Scalar>(duration / static_cast<double>(n));
  if (spec.kind == IntegratorSpec::Kind::ExplicitEuler) {
    for (long s = 0; s < n; ++s) {
      theta = theta + h * field(theta);
    }
    return;
  }
  for (long s = 0; s < n; ++s) {
    const VectorX<Scalar> k1 = field(theta);
    const VectorX<Scalar> k2 = field((theta + Scalar(0.5) * h * k1).eval());
    const VectorX<Scalar> k3 = field((theta + Scalar(0.5) * h * k2).eval());
    const VectorX<Scalar> k4 = field((theta + h * k3).eval());
    theta += h / Scalar(6) * (k1 + Scalar(2) * k2 + Scalar(2) * k3 + k4);
  }
}

/// Implicit Euler (stochastic proximal point) on a quadratic:
/// (I + h A) theta_new = theta_old + h b.
template <typename Scalar>
void implicit_euler_quadratic(const QuadraticPotential<Scalar>& q, VectorX<Scalar>& theta,
                              double duration, double step) {
  if (duration <= 0.0) {
    return;
  }
  if (!(step > 0.0)) {
    throw ConfigError("integrator step must be positive");
  }
  const auto n = static_cast<long>(std::max(1.0, std::ceil(duration / step)));
  const Scalar h = static_cast<Scalar>(duration / static_cast<double>(n));
  const MatrixX<Scalar> system =
      MatrixX<Scalar>::Identity(q.dimension(), q.dimension()) + h * q.hessian();
  const Eigen::LDLT<MatrixX<Scalar>> solver(system);
  for (long s = 0; s < n; ++s) {
    theta = solver.solve((theta + h * q.linear()).eval());
  }
}

/// Advances theta along the flow of member i for `duration`.
template <typename Scalar>
class SegmentIntegrator {
public:
  SegmentIntegrator(const PotentialSet<Scalar>& ps, IntegratorSpec spec)
      : ps_(ps), spec_(spec), work_(ps.dimension()) {
    const bool needs_quadratic = spec.kind == IntegratorSpec::Kind::ExactQuadratic ||
                                 spec.kind == IntegratorSpec::Kind::ImplicitEulerQuadratic;
    if (needs_quadratic && !ps.all_quadratic()) {
      throw ConfigError("exact and implicit-Euler integration require quadratic potentials");
    }
  }

  void operator()(std::size_t i, VectorX<Scalar>& theta, double duration) {
    if (duration <= 0.0) {
      return;
    }
    switch (spec_.kind) {
    case IntegratorSpec::Kind::ExactQuadratic:
      ps_.quadratic(i).flow_inplace(theta, static_cast<Scalar>(duration), work_);
      return;
    case IntegratorSpec::Kind::ImplicitEulerQuadratic:
      implicit_euler_quadratic(ps_.quadratic(i), theta, duration, spec_.step);
      return;
    case IntegratorSpec::Kind::ExplicitEuler:
    case IntegratorSpec::Kind::RK4:
      step_field(theta, duration, spec_,
                 [&](const VectorX<Scalar>& x) -> VectorX<Scalar> { return -gradient(ps_, i, x); });
      return;
    }
  }

private:
  const PotentialSet<Scalar>& ps_;
  IntegratorSpec spec_;
  VectorX<Scalar> work_;
};

/// Drives theta through the segments of a skeleton, stopping at every grid
/// point (on_grid(j, theta)) and every jump time (on_jump(t, theta)). The
/// state carried across a jump is the left segment's endpoint unchanged.
template <typename Scalar, typename Advance, typename OnGrid, typename OnJump>
void walk_skeleton(const JumpSkeleton& sk, VectorX<Scalar>& theta, std::span<const double> grid,
                   Advance& advance, OnGrid&& on_grid, OnJump&& on_jump) {
  double now = sk.t0;
  std::size_t next_grid = 0;
  const std::size_t segments = sk.states.size();
  for (std::size_t k = 0; k < segments; ++k) {
    const std::size_t active = sk.states[k];
    const double end = sk.segment_end(k);
    const bool last = k + 1 == segments;
    while (next_grid < grid.size() && (grid[next_grid] < end || (last && grid[next_grid] <= end))) {
      advance(active, theta, grid[next_grid] - now);
      now = std::max(now, grid[next_grid]);
      on_grid(next_grid, theta);
      ++next_grid;
    }
    advance(active, theta, end - now);
    now = end;
    if (!last) {
      on_jump(end, theta);
    }
  }
}

template <typename Scalar, typename Advance>
Trajectory<Scalar> trajectory_on_skeleton(JumpSkeleton sk, const VectorX<Scalar>& theta0,
                                          std::span<const double> grid, Advance& advance) {
  check_grid(grid, sk.t0, sk.horizon);
  Trajectory<Scalar> traj;
  traj.grid.assign(grid.begin(), grid.end());
  traj.states.resize(theta0.size(), static_cast<Eigen::Index>(grid.size()));
  VectorX<Scalar> theta = theta0;
  walk_skeleton(
      sk, theta, grid, advance,
      [&](std::size_t j, const VectorX<Scalar>& x) { traj.states.col(static_cast<Eigen::Index>(j)) = x; },
      [](double, const VectorX<Scalar>&) {});
  traj.skeleton = std::move(sk);
  return traj;
}

inline void check_horizon(double horizon) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ConfigError("horizon must be positive and finite");
  }
}

} // namespace detail

/// State at t_start + duration following -grad Phi_i from theta0.
template <typename Scalar>
VectorX<Scalar> integrate_for(const PotentialSet<Scalar>& ps, std::size_t i,
                              const std::type_identity_t<VectorX<Scalar>>& theta0, double duration,
                              const IntegratorSpec& spec) {
  if (duration < 0.0) {
    throw ConfigError("segment duration must be non-negative");
  }
  if (theta0.size() != ps.dimension()) {
    throw ConfigError("state dimension does not match the potential set");
  }
  detail::SegmentIntegrator<Scalar> advance(ps, spec);
  VectorX<Scalar> theta = theta0;
  advance(i, theta, duration);
  return theta;
}

template <typename Scalar>
VectorX<Scalar> integrate_segment(const PotentialSet<Scalar>& ps, std::size_t i,
                                  const std::type_identity_t<VectorX<Scalar>>& theta0, double t_start, double t_end,
                                  const IntegratorSpec& spec) {
  if (t_end < t_start) {
    throw ConfigError("segment end precedes its start");
  }
  return integrate_for(ps, i, theta0, t_end - t_start, spec);
}

/// Piecewise flow along a given skeleton; the common core of SGPC and SGPD.
template <typename Scalar>
Trajectory<Scalar> simulate_on_skeleton(const PotentialSet<Scalar>& ps, JumpSkeleton skeleton,
                                        const std::type_identity_t<VectorX<Scalar>>& theta0,
                                        std::span<const double> grid, const IntegratorSpec& spec) {
  if (theta0.size() != ps.dimension()) {
    throw ConfigError("initial state dimension does not match the potential set");
  }
  if (skeleton.n_states != ps.size()) {
    throw ConfigError("skeleton state count does not match the potential set");
  }
  detail::SegmentIntegrator<Scalar> advance(ps, spec);
  return detail::trajectory_on_skeleton(std::move(skeleton), theta0, grid, advance);
}

/// Stochastic gradient process with constant learning rate: switching at
/// total rate 1/eta, i.e. lambda = 1/((N-1) eta) per target state.
template <typename Scalar>
Trajectory<Scalar> simulate_sgpc(const PotentialSet<Scalar>& ps, double eta,
                                 const std::type_identity_t<VectorX<Scalar>>& theta0, double horizon,
                                 std::span<const double> grid, const IntegratorSpec& spec, Rng& rng,
                                 const SkeletonOptions& options = {}) {
  detail::check_horizon(horizon);
  auto sk = sample_jump_skeleton(Schedule::constant(eta), ps.size(), 0.0, horizon, rng, options);
  return simulate_on_skeleton(ps, std::move(sk), theta0, grid, spec);
}

/// Stochastic gradient process with decreasing learning rate. `tau` holds
/// the clock variable exp(-t) of the time-homogeneous reformulation.
template <typename Scalar>
Trajectory<Scalar> simulate_sgpd(const PotentialSet<Scalar>& ps, const Schedule& schedule,
                                 const std::type_identity_t<VectorX<Scalar>>& xi0, double horizon,
                                 std::span<const double> grid, const IntegratorSpec& spec, Rng& rng,
                                 const SkeletonOptions& options = {}) {
  detail::check_horizon(horizon);
  validate_schedule(schedule, horizon);
  auto sk = sample_jump_skeleton(schedule, ps.size(), 0.0, horizon, rng, options);
  auto traj = simulate_on_skeleton(ps, std::move(sk), xi0, grid, spec);
  traj.tau.reserve(grid.size());
  for (double t : grid) {
    traj.tau.push_back(std::exp(-t));
  }
  return traj;
}

/// Deterministic flow of Phi-bar. With exact integration each grid value is
/// computed directly from zeta0, so values do not depend on the grid.
template <typename Scalar>
Trajectory<Scalar> simulate_full_flow(const PotentialSet<Scalar>& ps, const std::type_identity_t<VectorX<Scalar>>& zeta0,
                                      double horizon, std::span<const double> grid,
                                      const IntegratorSpec& spec) {
  detail::check_horizon(horizon);
  detail::check_grid(grid, 0.0, horizon);
  if (zeta0.size() != ps.dimension()) {
    throw ConfigError("initial state dimension does not match the potential set");
  }
  Trajectory<Scalar> traj;
  traj.grid.assign(grid.begin(), grid.end());
  traj.states.resize(zeta0.size(), static_cast<Eigen::Index>(grid.size()));
  if (spec.kind == IntegratorSpec::Kind::ExactQuadratic) {
    const auto mean = ps.mean_quadratic();
    for (std::size_t j = 0; j < grid.size(); ++j) {
      traj.states.col(static_cast<Eigen::Index>(j)) = mean.flow(zeta0, static_cast<Scalar>(grid[j]));
    }
    return traj;
  }
  std::optional<QuadraticPotential<Scalar>> mean;
  if (spec.kind == IntegratorSpec::Kind::ImplicitEulerQuadratic) {
    mean.emplace(ps.mean_quadratic());
  }
  VectorX<Scalar> zeta = zeta0;
  double now = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (mean) {
      detail::implicit_euler_quadratic(*mean, zeta, grid[j] - now, spec.step);
    } else {
      detail::step_field(zeta, grid[j] - now, spec,
                         [&](const VectorX<Scalar>& x) -> VectorX<Scalar> { return -full_gradient(ps, x); });
    }
    now = grid[j];
    traj.states.col(static_cast<Eigen::Index>(j)) = zeta;
  }
  return traj;
}

/// Clock of the auxiliary process: tau' = epsilon - tau, tau(0) = 1.
inline double auxiliary_tau(double epsilon, double t) {
  return epsilon + (1.0 - epsilon) * std::exp(-t);
}

/// Learning rate seen by the auxiliary process, eta(-log tau_eps(t)). It
/// decreases to eta(-log eps), which bounds it from below.
inline Schedule auxiliary_schedule(const Schedule& base, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw ConfigError("auxiliary epsilon must lie in (0, 1)");
  }
  auto eta = [base, epsilon](double t) { return eta_at(base, -std::log(auxiliary_tau(epsilon, t))); };
  auto deta = [base, epsilon](double t) {
    const double tau = auxiliary_tau(epsilon, t);
    // d(-log tau)/dt = (tau - eps) / tau
    return eta_derivative_at(base, -std::log(tau)) * (tau - epsilon) / tau;
  };
  return Schedule::custom(eta, deta, eta_at(base, -std::log(epsilon)));
}

/// The auxiliary epsilon-process: SGPD whose clock saturates at -log(eps).
template <typename Scalar>
Trajectory<Scalar> simulate_auxiliary(const PotentialSet<Scalar>& ps, const Schedule& schedule,
                                      double epsilon, const std::type_identity_t<VectorX<Scalar>>& xi0, double horizon,
                                      std::span<const double> grid, const IntegratorSpec& spec,
                                      Rng& rng, const SkeletonOptions& options = {}) {
  detail::check_horizon(horizon);
  const Schedule aux = auxiliary_schedule(schedule, epsilon);
  auto sk = sample_jump_skeleton(aux, ps.size(), 0.0, horizon, rng, options);
  auto traj = simulate_on_skeleton(ps, std::move(sk), xi0, grid, spec);
  traj.tau.reserve(grid.size());
  for (double t : grid) {
    traj.tau.push_back(auxiliary_tau(epsilon, t));
  }
  return traj;
}

/// Rates eta_hat_1..eta_hat_steps with eta_hat_{k+1} = eta(t_hat_k) and
/// t_hat_k the running sum of the previous rates.
inline std::vector<double> sgd_schedule_from_continuous(const Schedule& schedule, std::size_t steps) {
  if (steps < 1) {
    throw ConfigError("need at least one SGD step");
  }
  std::vector<double> etas;
  etas.reserve(steps);
  double t_hat = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    etas.push_back(eta_at(schedule, t_hat));
    t_hat += etas.back();
  }
  return etas;
}

namespace detail {
inline void check_sgd_rates(std::span<const double> etas, std::size_t steps) {
  if (etas.size() < steps) {
    throw ConfigError("learning-rate sequence shorter than the step count");
  }
  for (std::size_t k = 0; k < steps; ++k) {
    if (!(etas[k] >= 0.0)) {
      throw ConfigError("learning rates must be non-negative");
    }
    if (k > 0 && etas[k] > etas[k - 1]) {
      throw ConfigError("learning rates must be non-increasing");
    }
  }
}
} // namespace detail

/// Plain SGD with a prescribed index sequence. Column k of the result is
/// theta_k; column 0 is theta0.
template <typename Scalar>
MatrixX<Scalar> run_sgd_with_indices(const PotentialSet<Scalar>& ps, std::span<const double> etas,
                                     const std::type_identity_t<VectorX<Scalar>>& theta0,
                                     std::span<const std::size_t> indices) {
  detail::check_sgd_rates(etas, indices.size());
  MatrixX<Scalar> iterates(theta0.size(), static_cast<Eigen::Index>(indices.size() + 1));
  VectorX<Scalar> theta = theta0;
  iterates.col(0) = theta;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    theta = theta - static_cast<Scalar>(etas[k]) * gradient(ps, indices[k], theta);
    iterates.col(static_cast<Eigen::Index>(k + 1)) = theta;
  }
  return iterates;
}

/// Index draws i_1..i_steps ~ Unif(I), independently (repeats allowed).
inline std::vector<std::size_t> draw_sgd_indices(std::size_t n_states, std::size_t steps, Rng& rng) {
  std::vector<std::size_t> idx(steps);
  for (auto& i : idx) {
    i = uniform_index(rng, n_states);
  }
  return idx;
}

/// SGD: theta_k = theta_{k-1} - eta_k grad Phi_{i_k}(theta_{k-1}).
template <typename Scalar>
MatrixX<Scalar> run_sgd(const PotentialSet<Scalar>& ps, std::span<const double> etas,
                        const std::type_identity_t<VectorX<Scalar>>& theta0, std::size_t steps, Rng& rng) {
  detail::check_sgd_rates(etas, steps);
  const auto idx = draw_sgd_indices(ps.size(), steps, rng);
  return run_sgd_with_indices(ps, etas, theta0, idx);
}

/// The discretised index process: index indices[k] held for a deterministic
/// time eta_hat_{k+1}, each hold integrated by one explicit Euler step.
/// Column k is the state at t_hat_k.
template <typename Scalar>
MatrixX<Scalar> simulate_sgd_bridge(const PotentialSet<Scalar>& ps, const Schedule& schedule,
                                    const std::type_identity_t<VectorX<Scalar>>& theta0,
                                    std::span<const std::size_t> indices) {
  const auto etas = sgd_schedule_from_continuous(schedule, indices.size());
  MatrixX<Scalar> states(theta0.size(), static_cast<Eigen::Index>(indices.size() + 1));
  VectorX<Scalar> theta = theta0;
  states.col(0) = theta;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    theta = integrate_for(ps, indices[k], theta, etas[k], IntegratorSpec::explicit_euler(etas[k]));
    states.col(static_cast<Eigen::Index>(k + 1)) = theta;
  }
  return states;
}

/// Switched linear system d theta/dt = G_{i(t)} theta over a homogeneous
/// skeleton with rate lambda, integrated by RK4.
template <typename Scalar>
Trajectory<Scalar> simulate_switching_linear(const std::vector<MatrixX<Scalar>>& matrices,
                                             double lambda, const std::type_identity_t<VectorX<Scalar>>& theta0,
                                             double horizon, std::span<const double> grid, Rng& rng,
                                             double rk4_step = 1e-3,
                                             const SkeletonOptions& options = {}) {
  detail::check_horizon(horizon);
  if (matrices.size() < 2) {
    throw ConfigError("switching system needs at least two matrices");
  }
  for (const auto& g : matrices) {
    if (g.rows() != theta0.size() || g.cols() != theta0.size()) {
      throw ConfigError("switching matrices must be square and match the state dimension");
    }
  }
  auto sk = sample_jump_skeleton(lambda, matrices.size(), 0.0, horizon, rng, options);
  const IntegratorSpec spec = IntegratorSpec::rk4(rk4_step);
  auto advance = [&](std::size_t i, VectorX<Scalar>& theta, double duration) {
    detail::step_field(theta, duration, spec, [&](const VectorX<Scalar>& x) -> VectorX<Scalar> {
      return population_field(matrices, i, x);
    });
  };
  return detail::trajectory_on_skeleton(std::move(sk), theta0, grid, advance);
}

/// sup over the grid and all jump times of |theta(t) - zeta(t)| for one
/// SGPC path against the exact full gradient flow. Both sides are piecewise
/// smooth, so the sup over these event times bounds the continuous sup up to
/// the grid resolution. Requires quadratic potentials.
template <typename Scalar>
double sup_distance_to_full_flow(const PotentialSet<Scalar>& ps, double eta,
                                 const std::type_identity_t<VectorX<Scalar>>& theta0, double horizon,
                                 std::span<const double> grid, Rng& rng,
                                 const SkeletonOptions& options = {}) {
  detail::check_horizon(horizon);
  detail::check_grid(grid, 0.0, horizon);
  const auto mean = ps.mean_quadratic();
  auto sk = sample_jump_skeleton(Schedule::constant(eta), ps.size(), 0.0, horizon, rng, options);
  detail::SegmentIntegrator<Scalar> advance(ps, IntegratorSpec::exact());
  VectorX<Scalar> theta = theta0;
  VectorX<Scalar> zeta = theta0;
  VectorX<Scalar> work(theta0.size());
  double worst = 0.0;
  auto gap = [&](double t, const VectorX<Scalar>& x) {
    zeta = theta0;
    mean.flow_inplace(zeta, static_cast<Scalar>(t), work);
    worst = std::max(worst, static_cast<double>((x - zeta).norm()));
  };
  detail::walk_skeleton(
      sk, theta, grid, advance, [&](std::size_t j, const VectorX<Scalar>& x) { gap(grid[j], x); },
      gap);
  return worst;
}

/// Trajectory CSV: t, theta_0..theta_{K-1}, then index when a skeleton is
/// attached and tau when recorded.
template <typename Scalar>
void write_trajectory_csv(std::ostream& os, const Trajectory<Scalar>& traj) {
  os << 't';
  for (Eigen::Index c = 0; c < traj.states.rows(); ++c) {
    os << ",theta_" << c;
  }
  if (traj.skeleton) {
    os << ",index";
  }
  if (!traj.tau.empty()) {
    os << ",tau";
  }
  os << '\n';
  for (std::size_t j = 0; j < traj.grid.size(); ++j) {
    os << csv::format_double(traj.grid[j]);
    for (Eigen::Index c = 0; c < traj.states.rows(); ++c) {
      os << ',' << csv::format_double(static_cast<double>(traj.states(c, static_cast<Eigen::Index>(j))));
    }
    if (traj.skeleton) {
      os << ',' << state_at(*traj.skeleton, traj.grid[j]);
    }
    if (!traj.tau.empty()) {
      os << ',' << csv::format_double(traj.tau[j]);
    }
    os << '\n';
  }
}

} // namespace sgp
