// Acceptance gates. Prints one PASS/FAIL line per criterion (with indented
// detail lines before it) and exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "sgp/analysis.hpp"
#include "sgp/csv.hpp"
#include "sgp/dynamics.hpp"
#include "sgp/ensemble.hpp"
#include "sgp/index_process.hpp"
#include "sgp/presets.hpp"
#include "sgp/rates.hpp"

using namespace sgp;
using Vec = Eigen::VectorXd;

namespace {

int failures = 0;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

void detail(const std::string& line) { std::printf("    %s\n", line.c_str()); }

void verdict(int id, const std::string& title, bool ok, double seconds) {
  failures += !ok;
  std::printf("%s criterion %d: %s (%.1f s)\n", ok ? "PASS" : "FAIL", id, title.c_str(), seconds);
  std::fflush(stdout);
}

class Timer {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::shared_ptr<const PotentialSet<double>> three_well() {
  return std::make_shared<const PotentialSet<double>>(presets::toy_three_well());
}

SimulationConfig<double> sgpc_config(double eta, double theta0) {
  SimulationConfig<double> c;
  c.process = ProcessKind::Sgpc;
  c.potentials = three_well();
  c.schedule = Schedule::constant(eta);
  c.theta0 = Vec::Constant(1, theta0);
  c.horizon = 10.0;
  return c;
}

double terminal_variance(const SimulationConfig<double>& c, std::size_t n, std::uint64_t seed) {
  const auto res = run_ensemble(c, n, seed, {});
  return summary_stats(component_samples(res.terminal_states)).variance;
}

std::vector<double> integers(int from, int to) {
  std::vector<double> t;
  for (int k = from; k <= to; ++k) {
    t.push_back(k);
  }
  return t;
}

bool ratio_within(const std::vector<double>& v, const std::vector<double>& eta, double factor) {
  double lo = 1e300, hi = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    lo = std::min(lo, v[k] / eta[k]);
    hi = std::max(hi, v[k] / eta[k]);
  }
  return hi / lo <= factor;
}

void criterion_table() {
  Timer timer;
  const std::vector<double> etas{0.1, 0.01, 0.001};
  const std::vector<double> sgpc_ref{0.1961, 0.0209, 0.0021};
  const std::vector<double> sgd_ref{0.1695, 0.0157, 0.0016};
  const std::size_t n = 10000;
  bool ok = true;
  std::vector<double> sgpc_var, sgd_var;
  for (std::size_t k = 0; k < etas.size(); ++k) {
    auto c = sgpc_config(etas[k], -1.5);
    sgpc_var.push_back(terminal_variance(c, n, 1001 + k));
    c.process = ProcessKind::Sgd;
    sgd_var.push_back(terminal_variance(c, n, 2001 + k));
    const bool a = std::abs(sgpc_var[k] / sgpc_ref[k] - 1.0) <= 0.2;
    const bool b = std::abs(sgd_var[k] / sgd_ref[k] - 1.0) <= 0.2;
    ok = ok && a && b;
    detail("eta " + fmt(etas[k]) + ": SGPC variance " + fmt(sgpc_var[k]) + " (reference " + fmt(sgpc_ref[k]) +
           (a ? ", ok" : ", off") + "), SGD variance " + fmt(sgd_var[k]) + " (reference " + fmt(sgd_ref[k]) +
           (b ? ", ok" : ", off") + ")");
  }
  const bool linear = ratio_within(sgpc_var, etas, 1.5) && ratio_within(sgd_var, etas, 1.5);
  detail(std::string("variance / eta constant within a factor 1.5: ") + (linear ? "yes" : "no"));
  verdict(1, "terminal variances of SGPC and SGD within 20% of the reference table", ok && linear,
          timer.seconds());
}

void criterion_ode_limit() {
  Timer timer;
  const auto ps = presets::symmetric_pair();
  const auto grid = uniform_grid(0.0, 10.0, 1001);
  const std::size_t n = 1000;
  std::vector<double> means;
  for (double eta : {1.0, 0.1, 0.01, 0.001}) {
    std::vector<double> d(n);
    for_each_replicate(n, 1, [&](std::size_t r) {
      Rng rng(mix_seed(3001, r));
      d[r] = sup_distance_to_full_flow(ps, eta, Vec::Constant(1, -1.5), 10.0, grid, rng);
    });
    const auto st = summary_stats(d);
    means.push_back(st.mean);
    detail("eta " + fmt(eta) + ": mean sup distance " + fmt(st.mean) + " +- " +
           fmt(std::sqrt(st.variance / static_cast<double>(n))));
  }
  bool decreasing = true;
  for (std::size_t k = 1; k < means.size(); ++k) {
    decreasing = decreasing && means[k] < means[k - 1];
  }
  const bool small = means.back() < 0.05;
  detail(std::string("strictly decreasing: ") + (decreasing ? "yes" : "no") + "; below 0.05 at eta 0.001: " +
         (small ? "yes" : "no"));
  verdict(2, "SGPC approaches the full gradient flow as eta decreases", decreasing && small, timer.seconds());
}

void criterion_ergodicity() {
  Timer timer;
  const auto times = integers(1, 10);
  const auto left = run_ensemble(sgpc_config(0.1, -1.5), 10000, 4001, times);
  const auto right = run_ensemble(sgpc_config(0.1, 1.5), 10000, 4002, times);
  std::vector<double> w;
  for (double t : times) {
    w.push_back(wasserstein1_sorted(component_samples(left.checkpoint_states.at(t)),
                                    component_samples(right.checkpoint_states.at(t))));
  }
  std::string row;
  for (std::size_t k = 0; k < w.size(); ++k) {
    row += (k ? ", " : "") + fmt(w[k]);
  }
  detail("W1 at t = 1..10: " + row);
  const double slope = log_linear_slope(times, w);
  detail("fitted slope of log W1 against t: " + fmt(slope));
  verdict(3, "W1 between ensembles from different starts decays exponentially (slope < -0.5)", slope < -0.5,
          timer.seconds());
}

void criterion_sgpd() {
  Timer timer;
  const auto times = integers(1, 10);
  auto curve_for = [&](const Schedule& s, std::uint64_t seed) {
    SimulationConfig<double> c;
    c.process = ProcessKind::Sgpd;
    c.potentials = three_well();
    c.schedule = s;
    c.theta0 = Vec::Constant(1, -1.5);
    c.horizon = 10.0;
    return error_curve(run_ensemble(c, 10000, seed, times), Vec::Constant(1, 0.5));
  };
  auto decreasing = [](const std::vector<ErrorPoint>& c) {
    for (std::size_t k = 1; k < c.size(); ++k) {
      if (!(c[k].mean < c[k - 1].mean)) {
        return false;
      }
    }
    return true;
  };
  auto show = [](const std::vector<ErrorPoint>& c) {
    std::string row;
    for (const auto& p : c) {
      row += (row.empty() ? "" : ", ") + fmt(p.mean);
    }
    return row;
  };
  const auto expo = curve_for(Schedule::exponential(1, 1), 5001);
  const auto rational = curve_for(Schedule::rational(100, 1), 5002);
  detail("exponential rate, mean |xi - 0.5| at t = 1..10: " + show(expo));
  detail("rational rate,    mean |xi - 0.5| at t = 1..10: " + show(rational));
  const bool e_ok = decreasing(expo) && expo.back().mean < 0.05;
  const bool r_ok = decreasing(rational) && rational.back().mean > expo.back().mean;
  detail(std::string("exponential decreasing and below 0.05 at t = 10: ") + (e_ok ? "yes" : "no"));
  detail(std::string("rational decreasing and slower than exponential: ") + (r_ok ? "yes" : "no"));
  verdict(4, "SGPD error curves decrease, exponential rate faster than rational", e_ok && r_ok, timer.seconds());
}

void criterion_stationary() {
  Timer timer;
  // Base rate eta(t) = exp(-3 t) with eps = 0.1 gives eta(-ln eps) = 1e-3.
  SimulationConfig<double> aux;
  aux.process = ProcessKind::Auxiliary;
  aux.potentials = three_well();
  aux.schedule = Schedule::exponential(1, 3);
  aux.epsilon = 0.1;
  aux.theta0 = Vec::Constant(1, -1.5);
  aux.horizon = 10.0;
  detail("saturated auxiliary learning rate " + fmt(eta_at(aux.schedule, -std::log(aux.epsilon))));
  const auto a = component_samples(run_ensemble(aux, 10000, 6001, {}).terminal_states);
  const auto b = component_samples(run_ensemble(sgpc_config(0.001, -1.5), 10000, 6002, {}).terminal_states);
  const auto b2 = component_samples(run_ensemble(sgpc_config(0.001, -1.5), 10000, 6003, {}).terminal_states);
  const double cross = wasserstein1_sorted(a, b);
  const double self = wasserstein1_sorted(b, b2);
  detail("W1(auxiliary, SGPC) = " + fmt(cross) + ", W1(SGPC, SGPC') = " + fmt(self));
  verdict(5, "auxiliary process and SGPC share the terminal law at t = 10 (W1 < 3x noise floor)",
          cross < 3.0 * self, timer.seconds());
}

void criterion_kernel() {
  Timer timer;
  const std::vector<Schedule> schedules{Schedule::constant(0.5), Schedule::rational(1, 1),
                                        Schedule::exponential(1, 1)};
  const std::size_t n_states = 3;
  double residual = 0.0, ck = 0.0;
  bool uniform = true;
  for (std::size_t s = 0; s < schedules.size(); ++s) {
    const auto& sched = schedules[s];
    for (double t0 : {0.0, 0.5, 2.0}) {
      for (double dt : {0.1, 1.0, 3.0}) {
        residual = std::max(residual, forward_equation_residual(sched, n_states, t0, t0 + dt));
        const double mid = t0 + 0.4 * dt;
        const Eigen::MatrixXd lhs = kernel_matrix(sched, n_states, t0, mid) * kernel_matrix(sched, n_states, mid, t0 + dt);
        ck = std::max(ck, (lhs - kernel_matrix(sched, n_states, t0, t0 + dt)).cwiseAbs().maxCoeff());
      }
    }
    const std::size_t m = 10000;
    std::vector<JumpSkeleton> sk(m);
    for (std::size_t r = 0; r < m; ++r) {
      Rng rng(mix_seed(7001 + s, r));
      sk[r] = sample_jump_skeleton(sched, n_states, 0.0, 2.0, rng);
    }
    const Eigen::VectorXd occ = occupancy_histogram(sk, 2.0) * static_cast<double>(m);
    const std::vector<double> counts(occ.data(), occ.data() + occ.size());
    const std::vector<double> probs(n_states, 1.0 / static_cast<double>(n_states));
    const double chi2 = chi_square_statistic(counts, probs);
    const double crit = chi_square_critical_value(n_states - 1, 0.01);
    uniform = uniform && chi2 < crit;
    detail(sched.describe() + ": occupancy chi-square at t = 2 " + fmt(chi2) + " (critical " + fmt(crit) + ")");
  }
  detail("max forward-equation residual " + fmt(residual) + ", max Chapman-Kolmogorov defect " + fmt(ck));
  verdict(6, "index-process kernels: forward equation, Chapman-Kolmogorov, uniform occupancy",
          residual < 1e-6 && ck < 1e-10 && uniform, timer.seconds());
}

void criterion_properties() {
  Timer timer;
  bool all = true;
  auto report = [&](const std::string& name, bool ok, const std::string& value) {
    all = all && ok;
    detail(name + ": " + value + (ok ? " ok" : " FAILED"));
  };

  double round_trip = 0.0;
  for (const auto& sched : {Schedule::constant(0.3), Schedule::rational(2, 1), Schedule::exponential(1, 1)}) {
    for (double t0 : {0.0, 1.0, 4.0}) {
      const WaitingTimeDistribution wt{sched, 3, t0};
      for (double s = 0.01; s < 1.0; s += 0.01) {
        round_trip = std::max(round_trip, std::abs(waiting_time_cdf(wt, waiting_time_quantile(wt, s)) - s));
      }
    }
  }
  report("quantile round trip", round_trip < 1e-10, fmt(round_trip));

  const auto ps = presets::toy_three_well();
  double contraction = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto sk = sample_jump_skeleton(Schedule::constant(0.1), 3, 0.0, 10.0, rng);
    const auto grid = uniform_grid(0.0, 10.0, 101);
    const auto a = simulate_on_skeleton(ps, sk, Vec::Constant(1, -1.5), grid, IntegratorSpec::exact());
    const auto b = simulate_on_skeleton(ps, sk, Vec::Constant(1, 2.5), grid, IntegratorSpec::exact());
    for (std::size_t j = 0; j < grid.size(); ++j) {
      contraction = std::max(contraction, std::abs(std::abs(a.states(0, j) - b.states(0, j)) - 4.0 * std::exp(-grid[j])));
    }
  }
  report("shared-skeleton contraction", contraction < 1e-9, fmt(contraction));

  double flow = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (double t : {0.5, 2.0, 10.0}) {
      const Vec exact = integrate_for(ps, i, Vec::Constant(1, -1.5), t, IntegratorSpec::exact());
      const Vec rk = integrate_for(ps, i, Vec::Constant(1, -1.5), t, IntegratorSpec::rk4(1e-3));
      flow = std::max(flow, (exact - rk).cwiseAbs().maxCoeff());
    }
  }
  report("exact flow against RK4", flow < 1e-9, fmt(flow));

  std::mt19937_64 gen(8001);
  std::normal_distribution<double> n01;
  std::vector<LeastSquaresBlock<double>> blocks;
  for (int b = 0; b < 4; ++b) {
    Eigen::MatrixXd g(3, 3);
    Vec y(3);
    for (int r = 0; r < 3; ++r) {
      y[r] = n01(gen);
      for (int c = 0; c < 3; ++c) {
        g(r, c) = n01(gen);
      }
    }
    blocks.push_back({g, y});
  }
  const auto ls = from_least_squares(blocks);
  double grad = 0.0;
  for (std::size_t i = 0; i < ls.size(); ++i) {
    Vec x(3);
    x << n01(gen), n01(gen), n01(gen);
    const Vec g = gradient(ls, i, x);
    for (int k = 0; k < 3; ++k) {
      const double h = 1e-5;
      Vec xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      const auto& q = ls.quadratic(i);
      const double fd = (q.value(xp) - q.value(xm)) / (2 * h);
      grad = std::max(grad, std::abs(fd - g[k]) / std::max(1.0, std::abs(g[k])));
    }
  }
  report("gradient against finite differences (relative)", grad < 1e-6, fmt(grad));

  bool deterministic = true;
  for (auto kind : {ProcessKind::Sgpc, ProcessKind::Sgpd, ProcessKind::Sgd}) {
    auto c = sgpc_config(0.05, -1.5);
    c.process = kind;
    if (kind != ProcessKind::Sgpc) {
      c.schedule = Schedule::rational(10, 1);
    }
    const auto one = run_ensemble(c, 64, 9001, {2.0, 5.0}, 1);
    for (unsigned threads : {2u, 3u, 8u}) {
      const auto other = run_ensemble(c, 64, 9001, {2.0, 5.0}, threads);
      deterministic = deterministic && one.terminal_states == other.terminal_states &&
                      one.checkpoint_states == other.checkpoint_states;
    }
  }
  report("ensemble bitwise determinism across thread counts", deterministic, deterministic ? "identical" : "differ");

  double assignment = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> a(8), b(8);
    for (int k = 0; k < 8; ++k) {
      a[k] = n01(gen);
      b[k] = 1.2 * n01(gen) + 0.4;
    }
    const double q = trial % 2 ? 1.0 : 0.5;
    std::vector<int> perm(8);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
      double s = 0.0;
      for (int k = 0; k < 8; ++k) {
        s += std::min(1.0, std::pow(std::abs(a[k] - b[perm[k]]), q));
      }
      best = std::min(best, s / 8.0);
    } while (std::next_permutation(perm.begin(), perm.end()));
    assignment = std::max(assignment, std::abs(wasserstein_truncated(a, b, TruncatedMetricSpec{q}) - best));
  }
  report("truncated Wasserstein against 8! brute force", assignment < 1e-12, fmt(assignment));

  verdict(7, "property suites", all, timer.seconds());
}

} // namespace

int main() {
  criterion_table();
  criterion_ode_limit();
  criterion_ergodicity();
  criterion_sgpd();
  criterion_stationary();
  criterion_kernel();
  criterion_properties();
  std::printf("%d of 7 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
