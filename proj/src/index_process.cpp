#include "sgp/index_process.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "sgp/csv.hpp"
#include "sgp/errors.hpp"

namespace sgp {
namespace {

void require_states(std::size_t n) {
  if (n < 2) {
    throw ConfigError("the index process needs at least two states");
  }
}

void require_index(std::size_t i, std::size_t n) {
  if (i >= n) {
    throw ConfigError("state index " + std::to_string(i) + " outside {0, ..., " +
                      std::to_string(n - 1) + "}");
  }
}

Eigen::VectorXd kernel_row(double decay, std::size_t n, std::size_t i0) {
  Eigen::VectorXd row = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n),
                                                  -std::expm1(-decay) / static_cast<double>(n));
  row[static_cast<Eigen::Index>(i0)] += std::exp(-decay);
  return row;
}

// N int_{t0}^{t} mu(u) du = N/(N-1) * cumulative hazard.
double kernel_exponent(const Schedule& s, std::size_t n, double t0, double t) {
  const double nd = static_cast<double>(n);
  return nd / (nd - 1.0) * cumulative_hazard(s, t0, t - t0);
}

} // namespace

Eigen::VectorXd kernel_homogeneous(double lambda, std::size_t n, double t, std::size_t i0) {
  require_states(n);
  require_index(i0, n);
  if (!(lambda > 0.0)) {
    throw ConfigError("switching rate lambda must be positive");
  }
  if (!(t >= 0.0)) {
    throw ConfigError("kernel time must be non-negative");
  }
  return kernel_row(lambda * static_cast<double>(n) * t, n, i0);
}

Eigen::VectorXd kernel_inhomogeneous(const Schedule& s, std::size_t n, double t0, double t,
                                     std::size_t j0) {
  require_states(n);
  require_index(j0, n);
  if (!(t0 >= 0.0)) {
    throw ConfigError("kernel start time must be non-negative");
  }
  if (t < t0) {
    throw ConfigError("kernel end time precedes its start time");
  }
  return kernel_row(kernel_exponent(s, n, t0, t), n, j0);
}

Eigen::MatrixXd kernel_matrix(const Schedule& s, std::size_t n, double t0, double t) {
  require_states(n);
  const double decay = kernel_exponent(s, n, t0, t);
  const auto ni = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(ni, ni, -std::expm1(-decay) / static_cast<double>(n));
  m.diagonal().array() += std::exp(-decay);
  return m;
}

Eigen::MatrixXd rate_matrix(const Schedule& s, std::size_t n, double t) {
  require_states(n);
  const double mu = hazard_at(s, t) / static_cast<double>(n - 1);
  const auto ni = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd b = Eigen::MatrixXd::Constant(ni, ni, mu);
  b.diagonal().setConstant(-static_cast<double>(n - 1) * mu);
  return b;
}

double forward_equation_residual(const Schedule& s, std::size_t n, double t0, double t, double h) {
  if (t < t0) {
    throw ConfigError("forward-equation residual needs t >= t0");
  }
  if (!(h > 0.0)) {
    throw ConfigError("finite-difference step must be positive");
  }
  // The step straddles t0 when t is close to it; kernel_matrix extends
  // smoothly to t < t0. Custom schedules may be undefined before time zero.
  const bool clamp = s.kind() == Schedule::Kind::Custom && t - h < 0.0;
  const double lo = clamp ? 0.0 : t - h;
  const double hi = t + h;
  const Eigen::MatrixXd derivative =
      (kernel_matrix(s, n, t0, hi) - kernel_matrix(s, n, t0, lo)) / (hi - lo);
  const Eigen::MatrixXd generator_term = kernel_matrix(s, n, t0, t) * rate_matrix(s, n, t);
  return (derivative - generator_term).cwiseAbs().maxCoeff();
}

JumpSkeleton sample_jump_skeleton(const Schedule& s, std::size_t n, double t0, double horizon,
                                  Rng& rng, const SkeletonOptions& options) {
  require_states(n);
  if (!(t0 >= 0.0)) {
    throw ConfigError("skeleton start time must be non-negative");
  }
  if (horizon < t0) {
    throw ConfigError("skeleton horizon precedes its start time");
  }
  JumpSkeleton sk;
  sk.t0 = t0;
  sk.horizon = horizon;
  sk.n_states = n;
  std::size_t current = 0;
  if (options.initial_state) {
    require_index(*options.initial_state, n);
    current = *options.initial_state;
  } else {
    current = uniform_index(rng, n);
  }
  sk.states.push_back(current);
  double t = t0;
  while (true) {
    t += draw_holding_time(s, t, rng);
    if (t > horizon) {
      break;
    }
    if (sk.jump_times.size() >= options.max_jumps) {
      throw ExplosionError("jump count exceeded the cap of " + std::to_string(options.max_jumps) +
                           " before time " + std::to_string(horizon) +
                           "; increase the learning rate, shorten the horizon or raise the cap");
    }
    // Uniform over I \ {current}: draw from N-1 slots and skip the current one.
    std::size_t next = uniform_index(rng, n - 1);
    if (next >= current) {
      ++next;
    }
    sk.jump_times.push_back(t);
    sk.states.push_back(next);
    current = next;
  }
  return sk;
}

JumpSkeleton sample_jump_skeleton(double lambda, std::size_t n, double t0, double horizon, Rng& rng,
                                  const SkeletonOptions& options) {
  require_states(n);
  if (!(lambda > 0.0)) {
    throw ConfigError("switching rate lambda must be positive");
  }
  return sample_jump_skeleton(Schedule::constant(1.0 / (static_cast<double>(n - 1) * lambda)), n,
                              t0, horizon, rng, options);
}

std::size_t state_at(const JumpSkeleton& sk, double t) {
  if (t < sk.t0 || t > sk.horizon) {
    throw ConfigError("time outside the skeleton span");
  }
  const auto it = std::upper_bound(sk.jump_times.begin(), sk.jump_times.end(), t);
  return sk.states[static_cast<std::size_t>(it - sk.jump_times.begin())];
}

Eigen::VectorXd occupancy_histogram(std::span<const JumpSkeleton> skeletons, double t) {
  if (skeletons.empty()) {
    throw ConfigError("occupancy histogram needs at least one skeleton");
  }
  const std::size_t n = skeletons.front().n_states;
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (const auto& sk : skeletons) {
    if (sk.n_states != n) {
      throw ConfigError("skeletons disagree on the number of states");
    }
    freq[static_cast<Eigen::Index>(state_at(sk, t))] += 1.0;
  }
  return freq / static_cast<double>(skeletons.size());
}

void write_skeleton_csv(std::ostream& os, const JumpSkeleton& sk) {
  os << "k,T_k,state_k\n";
  for (std::size_t k = 0; k < sk.states.size(); ++k) {
    os << k << ',' << csv::format_double(sk.segment_start(k)) << ',' << sk.states[k] << '\n';
  }
}

} // namespace sgp
