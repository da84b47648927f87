#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sgp/random.hpp"
#include "sgp/rates.hpp"

namespace sgp {

/// One path of the index process on I = {0, ..., N-1}.
///
/// `states[k]` is the active index on [T_k, T_{k+1}) with T_0 = t0 and
/// T_{k+1} = jump_times[k]; the last state is held up to `horizon`.
struct JumpSkeleton {
  double t0 = 0.0;
  double horizon = 0.0;
  std::size_t n_states = 2;
  std::vector<double> jump_times;
  std::vector<std::size_t> states;

  std::size_t jump_count() const noexcept { return jump_times.size(); }
  /// Start of segment k (t0 for k = 0).
  double segment_start(std::size_t k) const noexcept { return k == 0 ? t0 : jump_times[k - 1]; }
  /// End of segment k (horizon for the last segment).
  double segment_end(std::size_t k) const noexcept {
    return k < jump_times.size() ? jump_times[k] : horizon;
  }
};

struct SkeletonOptions {
  std::size_t max_jumps = 10'000'000;
  /// Fixed initial index; drawn from Unif(I) when absent.
  std::optional<std::size_t> initial_state;
};

/// M_t(. | i0) for the homogeneous chain with off-diagonal rate lambda:
/// entry i = (1 - exp(-lambda N t)) / N + exp(-lambda N t) [i == i0].
Eigen::VectorXd kernel_homogeneous(double lambda, std::size_t n_states, double t, std::size_t i0);

/// M'_{t|t0}(. | j0) for the chain with off-diagonal rate
/// mu(u) = 1/((N-1) eta(u)); the homogeneous formula with lambda N t
/// replaced by N int_{t0}^{t} mu(u) du.
Eigen::VectorXd kernel_inhomogeneous(const Schedule& schedule, std::size_t n_states, double t0,
                                     double t, std::size_t j0);

/// Full N x N kernel, row j0 = kernel_inhomogeneous(..., j0). Accepts t < t0
/// (backward extension of the closed form) for finite differencing.
Eigen::MatrixXd kernel_matrix(const Schedule& schedule, std::size_t n_states, double t0, double t);

/// Rate matrix B(t): mu(t) off the diagonal, -(N-1) mu(t) on it.
Eigen::MatrixXd rate_matrix(const Schedule& schedule, std::size_t n_states, double t);

/// Max-norm of dM'/dt - M' B(t) with dM'/dt by central differences of step h.
double forward_equation_residual(const Schedule& schedule, std::size_t n_states, double t0,
                                 double t, double h = 1e-5);

/// Gillespie sampler: alternate holding times with hazard 1/eta(t) and
/// uniform moves to one of the other N-1 states, until `horizon`.
JumpSkeleton sample_jump_skeleton(const Schedule& schedule, std::size_t n_states, double t0,
                                  double horizon, Rng& rng, const SkeletonOptions& options = {});

/// Homogeneous chain with off-diagonal rate lambda, i.e. the constant
/// schedule eta = 1/((N-1) lambda).
JumpSkeleton sample_jump_skeleton(double lambda, std::size_t n_states, double t0, double horizon,
                                  Rng& rng, const SkeletonOptions& options = {});

/// Right-continuous lookup: value at a jump time is the post-jump state.
std::size_t state_at(const JumpSkeleton& skeleton, double t);

/// Empirical distribution of state_at(., t) across skeletons.
Eigen::VectorXd occupancy_histogram(std::span<const JumpSkeleton> skeletons, double t);

/// CSV with header "k,T_k,state_k"; row 0 carries (t0, initial state).
void write_skeleton_csv(std::ostream& os, const JumpSkeleton& skeleton);

} // namespace sgp
