#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "sgp/analysis.hpp"
#include "sgp/dynamics.hpp"
#include "sgp/errors.hpp"
#include "sgp/potentials.hpp"
#include "sgp/random.hpp"
#include "sgp/rates.hpp"

namespace sgp {

enum class ProcessKind { Sgd, Sgpc, Sgpd, FullFlow, Auxiliary, SwitchingLinear };

std::string to_string(ProcessKind kind);

/// 64-bit FNV-1a of `text`, as 16 lowercase hex digits.
std::string digest_hex(const std::string& text);

/// Everything needed to simulate one replicate.
template <typename Scalar>
struct SimulationConfig {
  ProcessKind process = ProcessKind::Sgpc;
  std::shared_ptr<const PotentialSet<Scalar>> potentials;
  /// Only for SwitchingLinear.
  std::vector<MatrixX<Scalar>> switching_matrices;
  /// Sgpc/Sgd use the constant rate; Sgpd/Auxiliary/Sgd accept any schedule.
  Schedule schedule = Schedule::constant(0.1);
  IntegratorSpec integrator = IntegratorSpec::exact();
  VectorX<Scalar> theta0;
  double horizon = 10.0;
  double epsilon = 0.5;
  /// SGD iterations; 0 means the first k with t_hat_k >= horizon.
  std::size_t sgd_steps = 0;
  double rk4_step = 1e-3;
  SkeletonOptions skeleton;
  /// Free-form provenance folded into the digest (e.g. the config file text).
  std::string provenance;

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "process=" << to_string(process) << ";schedule=" << schedule.describe()
       << ";integrator=" << static_cast<int>(integrator.kind) << ':' << integrator.step
       << ";horizon=" << horizon << ";epsilon=" << epsilon << ";sgd_steps=" << sgd_steps
       << ";rk4_step=" << rk4_step << ";max_jumps=" << skeleton.max_jumps << ";theta0=";
    for (Eigen::Index k = 0; k < theta0.size(); ++k) {
      os << (k ? "," : "") << static_cast<double>(theta0[k]);
    }
    os << ";provenance=" << provenance;
    return os.str();
  }
};

template <typename Scalar>
struct EnsembleResult {
  std::size_t replicate_count = 0;
  /// K x n, column r is replicate r at the horizon.
  MatrixX<Scalar> terminal_states;
  /// time -> K x n.
  std::map<double, MatrixX<Scalar>> checkpoint_states;
  std::uint64_t master_seed = 0;
  std::string run_config_digest;
};

/// Runs single replicates of a fixed configuration. Construction validates
/// the configuration and precomputes everything shared between replicates.
template <typename Scalar>
class ReplicateRunner {
public:
  ReplicateRunner(SimulationConfig<Scalar> config, std::vector<double> times)
      : cfg_(std::move(config)), times_(std::move(times)) {
    std::sort(times_.begin(), times_.end());
    detail::check_horizon(cfg_.horizon);
    if (cfg_.process == ProcessKind::SwitchingLinear) {
      if (cfg_.switching_matrices.size() < 2) {
        throw ConfigError("switching_linear needs at least two matrices");
      }
      dimension_ = cfg_.switching_matrices.front().rows();
    } else {
      if (!cfg_.potentials) {
        throw ConfigError("simulation config has no potentials");
      }
      dimension_ = cfg_.potentials->dimension();
    }
    if (cfg_.theta0.size() != dimension_) {
      throw ConfigError("initial state dimension does not match the problem");
    }
    detail::check_grid(times_, 0.0, cfg_.horizon);
    const bool needs_constant =
        cfg_.process == ProcessKind::Sgpc || cfg_.process == ProcessKind::SwitchingLinear;
    if (needs_constant && cfg_.schedule.kind() != Schedule::Kind::Constant) {
      throw ConfigError(to_string(cfg_.process) + " requires a constant learning rate");
    }
    if (cfg_.process == ProcessKind::Auxiliary) {
      aux_ = auxiliary_schedule(cfg_.schedule, cfg_.epsilon);
    }
    if (cfg_.process == ProcessKind::Sgpd) {
      validate_schedule(cfg_.schedule, cfg_.horizon);
    }
    if (cfg_.process == ProcessKind::Sgd) {
      prepare_sgd();
    }
  }

  const std::vector<double>& times() const noexcept { return times_; }
  Eigen::Index dimension() const noexcept { return dimension_; }
  const SimulationConfig<Scalar>& config() const noexcept { return cfg_; }
  /// SGD only: iterate index recorded for each time.
  const std::vector<std::size_t>& sgd_iterate_of_time() const noexcept { return sgd_iterate_; }
  /// SGD only: learning rate of every step up to the horizon.
  const std::vector<double>& sgd_rates() const noexcept { return sgd_etas_; }

  /// K x times().size() states of the replicate seeded with `seed`.
  MatrixX<Scalar> run(std::uint64_t seed) const {
    Rng rng(seed);
    const auto& ps = *cfg_.potentials;
    switch (cfg_.process) {
    case ProcessKind::Sgpc:
      return simulate_sgpc(ps, cfg_.schedule.eta(), cfg_.theta0, cfg_.horizon, times_,
                           cfg_.integrator, rng, cfg_.skeleton)
          .states;
    case ProcessKind::Sgpd:
      return simulate_on_skeleton(
                 ps, sample_jump_skeleton(cfg_.schedule, ps.size(), 0.0, cfg_.horizon, rng, cfg_.skeleton),
                 cfg_.theta0, times_, cfg_.integrator)
          .states;
    case ProcessKind::Auxiliary:
      return simulate_on_skeleton(
                 ps, sample_jump_skeleton(*aux_, ps.size(), 0.0, cfg_.horizon, rng, cfg_.skeleton),
                 cfg_.theta0, times_, cfg_.integrator)
          .states;
    case ProcessKind::FullFlow:
      return simulate_full_flow(ps, cfg_.theta0, cfg_.horizon, times_, cfg_.integrator).states;
    case ProcessKind::SwitchingLinear:
      return simulate_switching_linear(cfg_.switching_matrices,
                                       1.0 / (static_cast<double>(cfg_.switching_matrices.size() - 1) *
                                              cfg_.schedule.eta()),
                                       cfg_.theta0, cfg_.horizon, times_, rng, cfg_.rk4_step,
                                       cfg_.skeleton)
          .states;
    case ProcessKind::Sgd:
      return run_sgd_streaming(ps, rng);
    }
    return {};
  }

private:
  void prepare_sgd() {
    // t_hat_k for k up to the terminal step.
    std::vector<double> t_hat{0.0};
    const std::size_t cap = cfg_.skeleton.max_jumps;
    const double tol = 1e-9 * cfg_.horizon;
    double t = 0.0;
    while (cfg_.sgd_steps ? sgd_etas_.size() < cfg_.sgd_steps : t < cfg_.horizon - tol) {
      if (sgd_etas_.size() >= cap) {
        throw ExplosionError("SGD step count exceeded the cap of " + std::to_string(cap));
      }
      sgd_etas_.push_back(eta_at(cfg_.schedule, t));
      t += sgd_etas_.back();
      t_hat.push_back(t);
    }
    // State at time s is theta_k for the largest k with t_hat_k <= s; the
    // horizon always maps to the final iterate.
    const std::size_t steps = sgd_etas_.size();
    for (double s : times_) {
      std::size_t k = steps;
      if (s < cfg_.horizon - tol) {
        const auto it = std::upper_bound(t_hat.begin(), t_hat.end(), s + tol);
        k = std::min(steps, static_cast<std::size_t>(it - t_hat.begin()) - 1);
      }
      sgd_iterate_.push_back(k);
    }
  }

  MatrixX<Scalar> run_sgd_streaming(const PotentialSet<Scalar>& ps, Rng& rng) const {
    MatrixX<Scalar> out(dimension_, static_cast<Eigen::Index>(times_.size()));
    VectorX<Scalar> theta = cfg_.theta0;
    std::size_t next = 0;
    auto record = [&](std::size_t k) {
      while (next < sgd_iterate_.size() && sgd_iterate_[next] == k) {
        out.col(static_cast<Eigen::Index>(next++)) = theta;
      }
    };
    record(0);
    for (std::size_t k = 0; k < sgd_etas_.size(); ++k) {
      const std::size_t i = uniform_index(rng, ps.size());
      theta = theta - static_cast<Scalar>(sgd_etas_[k]) * gradient(ps, i, theta);
      record(k + 1);
    }
    return out;
  }

  SimulationConfig<Scalar> cfg_;
  std::vector<double> times_;
  Eigen::Index dimension_ = 0;
  std::optional<Schedule> aux_;
  std::vector<double> sgd_etas_;
  std::vector<std::size_t> sgd_iterate_;
};

/// Calls fn(r) for every r in [0, n), split into contiguous blocks over
/// `threads` workers (0 = hardware concurrency). A failure is rethrown in the
/// same error category with the lowest failing replicate index prefixed.
template <typename Fn>
void for_each_replicate(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads == 0) {
    threads = std::max(1u, std::thread::hardware_concurrency());
  }
  threads = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(threads, n)));
  std::vector<std::exception_ptr> errors(n);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      try {
        fn(r);
      } catch (...) {
        errors[r] = std::current_exception();
        return;
      }
    }
  };
  if (threads == 1) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t b = std::min(n, t * chunk);
      pool.emplace_back(work, b, std::min(n, b + chunk));
    }
    for (auto& th : pool) {
      th.join();
    }
  }
  for (std::size_t r = 0; r < n; ++r) {
    if (!errors[r]) {
      continue;
    }
    const std::string where = "replicate " + std::to_string(r) + ": ";
    try {
      std::rethrow_exception(errors[r]);
    } catch (const ExplosionError& e) {
      throw ExplosionError(where + e.what());
    } catch (const NumericalError& e) {
      throw NumericalError(where + e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where + e.what());
    }
  }
}

/// Monte-Carlo ensemble: replicate r is seeded with mix_seed(master_seed, r)
/// and written to slot r, so results do not depend on `threads`
/// (0 = hardware concurrency).
template <typename Scalar>
EnsembleResult<Scalar> run_ensemble(const SimulationConfig<Scalar>& config, std::size_t n,
                                    std::uint64_t master_seed, std::vector<double> checkpoints,
                                    unsigned threads = 1) {
  if (n < 1) {
    throw ConfigError("an ensemble needs at least one replicate");
  }
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
  std::vector<double> times = checkpoints;
  if (times.empty() || times.back() != config.horizon) {
    times.push_back(config.horizon);
  }
  const ReplicateRunner<Scalar> runner(config, times);
  const Eigen::Index k = runner.dimension();
  const std::size_t m = runner.times().size();
  std::vector<MatrixX<Scalar>> per_time(m, MatrixX<Scalar>(k, static_cast<Eigen::Index>(n)));

  for_each_replicate(n, threads, [&](std::size_t r) {
    const MatrixX<Scalar> states = runner.run(mix_seed(master_seed, r));
    for (std::size_t j = 0; j < m; ++j) {
      per_time[j].col(static_cast<Eigen::Index>(r)) = states.col(static_cast<Eigen::Index>(j));
    }
  });

  EnsembleResult<Scalar> out;
  out.replicate_count = n;
  out.master_seed = master_seed;
  out.run_config_digest = digest_hex(config.describe());
  for (std::size_t j = 0; j < m; ++j) {
    const double t = runner.times()[j];
    if (std::binary_search(checkpoints.begin(), checkpoints.end(), t)) {
      out.checkpoint_states[t] = per_time[j];
    }
  }
  out.terminal_states = std::move(per_time.back());
  return out;
}

struct ErrorPoint {
  double time = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
};

/// Per-checkpoint mean and (unbiased) standard deviation of |state - target|.
template <typename Scalar>
std::vector<ErrorPoint> error_curve(const EnsembleResult<Scalar>& result,
                                    const std::type_identity_t<VectorX<Scalar>>& target) {
  if (result.checkpoint_states.empty()) {
    throw ConfigError("error curve needs checkpoints");
  }
  std::vector<ErrorPoint> curve;
  for (const auto& [t, states] : result.checkpoint_states) {
    if (states.rows() != target.size()) {
      throw ConfigError("target dimension does not match the ensemble");
    }
    std::vector<double> d(static_cast<std::size_t>(states.cols()));
    for (Eigen::Index r = 0; r < states.cols(); ++r) {
      d[static_cast<std::size_t>(r)] = static_cast<double>((states.col(r) - target).norm());
    }
    ErrorPoint p{t, 0.0, 0.0};
    if (d.size() >= 2) {
      const auto st = summary_stats(d);
      p.mean = st.mean;
      p.stddev = std::sqrt(st.variance);
    } else {
      p.mean = d.front();
    }
    curve.push_back(p);
  }
  return curve;
}

/// Row `component` of a K x n sample matrix as a std::vector<double>.
template <typename Scalar>
std::vector<double> component_samples(const MatrixX<Scalar>& states, Eigen::Index component = 0) {
  std::vector<double> out(static_cast<std::size_t>(states.cols()));
  for (Eigen::Index r = 0; r < states.cols(); ++r) {
    out[static_cast<std::size_t>(r)] = static_cast<double>(states(component, r));
  }
  return out;
}

} // namespace sgp
