#pragma once

#include <functional>
#include <optional>
#include <string>

#include "sgp/random.hpp"

namespace sgp {

/// Learning-rate function eta(t) > 0, non-increasing on [0, inf).
///
/// The switching hazard between potentials is nu(t) = 1/eta(t); each of the
/// N-1 off-diagonal transition rates is mu(t) = 1/((N-1) eta(t)).
class Schedule {
public:
  enum class Kind { Constant, Rational, Exponential, Custom };

  using Function = std::function<double(double)>;

  /// eta(t) = eta.
  static Schedule constant(double eta);
  /// eta(t) = 1 / (a t + b).
  static Schedule rational(double a, double b);
  /// eta(t) = a exp(-b t).
  static Schedule exponential(double a, double b);
  /// User-supplied eta and its derivative. `eta_infimum`, when given, is a
  /// strictly positive lower bound of eta on [0, inf); waiting times are then
  /// sampled by thinning instead of numeric quantile inversion.
  static Schedule custom(Function eta, Function derivative = {},
                         std::optional<double> eta_infimum = std::nullopt);

  Kind kind() const noexcept { return kind_; }
  double eta() const noexcept { return p0_; }
  double a() const noexcept { return p0_; }
  double b() const noexcept { return p1_; }
  const Function& eta_function() const noexcept { return eta_fn_; }
  const Function& derivative_function() const noexcept { return deta_fn_; }
  std::optional<double> eta_infimum() const noexcept { return eta_inf_; }

  /// Short human-readable form, e.g. "rational(a=100,b=1)".
  std::string describe() const;

private:
  Schedule() = default;

  Kind kind_ = Kind::Constant;
  double p0_ = 1.0;
  double p1_ = 0.0;
  Function eta_fn_;
  Function deta_fn_;
  std::optional<double> eta_inf_;
};

double eta_at(const Schedule& schedule, double t);

/// d eta / dt. Throws ConfigError for a Custom schedule without derivative.
double eta_derivative_at(const Schedule& schedule, double t);

/// nu(t) = 1 / eta(t).
double hazard_at(const Schedule& schedule, double t);

/// Integral of the hazard over [t0, t0 + duration]; analytic for the named
/// variants, adaptive Simpson (tolerance 1e-12) for Custom. Negative
/// durations integrate backwards.
double cumulative_hazard(const Schedule& schedule, double t0, double duration);

/// Largest |d mu/dt| / mu over an evenly spaced grid of `grid_n` points on
/// [0, t_bar]. The ratio equals -eta'(t)/eta(t) and does not depend on N.
double validate_growth_condition(const Schedule& schedule, double t_bar, int grid_n);

/// Checks that eta is positive and non-increasing on a grid over
/// [0, horizon] and that the growth constant is finite. Throws ConfigError.
void validate_schedule(const Schedule& schedule, double horizon, int grid_n = 1001);

/// Law of the holding time in the current state, started at absolute time t0.
/// S(d) = exp(-int_0^d nu(u + t0) du) for d >= 0.
struct WaitingTimeDistribution {
  Schedule schedule;
  int n_states = 2;
  double t0 = 0.0;
};

double waiting_time_cdf(const WaitingTimeDistribution& wt, double duration);

/// Quantile Q(s | t0). Closed form for Constant, Rational and Exponential;
/// bisection on the CDF (tolerance 1e-12, at most 200 iterations) for Custom.
/// Rejects s outside (0, 1 - 1e-15).
double waiting_time_quantile(const WaitingTimeDistribution& wt, double s);

/// Reference inversion by bisection on the CDF, valid for every variant.
/// Used as an oracle against the closed forms.
double waiting_time_quantile_bisection(const WaitingTimeDistribution& wt, double s);

/// One draw from the waiting-time law. Closed-form quantile transform of a
/// uniform variate for the named variants; for Custom, thinning when an
/// eta infimum is known and bisection otherwise.
double sample_waiting_time(const WaitingTimeDistribution& wt, Rng& rng);

} // namespace sgp

namespace sgp {
/// Allocation-free form of sample_waiting_time for the jump samplers.
double draw_holding_time(const Schedule& schedule, double t0, Rng& rng);
} // namespace sgp
