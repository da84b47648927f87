#include "sgp/rates.hpp"

#include <cmath>
#include <sstream>

#include "sgp/errors.hpp"
#include "sgp/numerics.hpp"

namespace sgp {
namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(std::string(what) + " must be a positive finite number");
  }
}

void require_time(double t) {
  if (!(t >= 0.0)) {
    throw ConfigError("time must be non-negative");
  }
}

constexpr double kQuantileCliff = 1.0 - 1e-15;
constexpr long kMaxThinningProposals = 100'000'000;

// Holding time with unit-exponential variate `e` = int nu over the holding
// interval. This is the quantile at s = 1 - exp(-e).
double holding_time_from_exponential(const Schedule& s, double t0, double e);

double custom_holding_time_bisection(const Schedule& s, double t0, double target_cdf) {
  auto g = [&](double d) { return -std::expm1(-cumulative_hazard(s, t0, d)) - target_cdf; };
  double hi = eta_at(s, t0);
  int doublings = 0;
  while (g(hi) < 0.0) {
    hi *= 2.0;
    if (++doublings > 1100 || !std::isfinite(hi)) {
      throw NumericalError("could not bracket the waiting-time quantile");
    }
  }
  return numerics::bisect_increasing(g, 0.0, hi, 1e-12, 200).root;
}

double holding_time_from_exponential(const Schedule& s, double t0, double e) {
  switch (s.kind()) {
  case Schedule::Kind::Constant:
    return e * s.eta();
  case Schedule::Kind::Rational: {
    const double c = s.a() * t0 + s.b();
    // (-c + sqrt(c^2 + 2 a e)) / a, rewritten to avoid cancellation.
    return 2.0 * e / (c + std::sqrt(c * c + 2.0 * s.a() * e));
  }
  case Schedule::Kind::Exponential:
    return std::log1p(s.a() * s.b() * std::exp(-s.b() * t0) * e) / s.b();
  case Schedule::Kind::Custom:
    return custom_holding_time_bisection(s, t0, -std::expm1(-e));
  }
  return 0.0;
}

double thinning_draw(const Schedule& s, double t0, double eta_inf, Rng& rng) {
  const double rate_max = 1.0 / eta_inf;
  double t = t0;
  for (long k = 0; k < kMaxThinningProposals; ++k) {
    t += -std::log(uniform_open01(rng)) / rate_max;
    if (uniform_open01(rng) * eta_at(s, t) <= eta_inf) {
      return t - t0;
    }
  }
  throw NumericalError("thinning sampler exceeded its proposal budget");
}

} // namespace

Schedule Schedule::constant(double eta) {
  require_positive(eta, "constant learning rate eta");
  Schedule s;
  s.kind_ = Kind::Constant;
  s.p0_ = eta;
  return s;
}

Schedule Schedule::rational(double a, double b) {
  require_positive(a, "rational schedule parameter a");
  require_positive(b, "rational schedule parameter b");
  Schedule s;
  s.kind_ = Kind::Rational;
  s.p0_ = a;
  s.p1_ = b;
  return s;
}

Schedule Schedule::exponential(double a, double b) {
  require_positive(a, "exponential schedule parameter a");
  require_positive(b, "exponential schedule parameter b");
  Schedule s;
  s.kind_ = Kind::Exponential;
  s.p0_ = a;
  s.p1_ = b;
  return s;
}

Schedule Schedule::custom(Function eta, Function derivative, std::optional<double> eta_infimum) {
  if (!eta) {
    throw ConfigError("custom schedule requires an eta function");
  }
  if (eta_infimum) {
    require_positive(*eta_infimum, "custom schedule eta infimum");
  }
  Schedule s;
  s.kind_ = Kind::Custom;
  s.eta_fn_ = std::move(eta);
  s.deta_fn_ = std::move(derivative);
  s.eta_inf_ = eta_infimum;
  return s;
}

std::string Schedule::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
  case Kind::Constant:
    os << "constant(eta=" << p0_ << ")";
    break;
  case Kind::Rational:
    os << "rational(a=" << p0_ << ",b=" << p1_ << ")";
    break;
  case Kind::Exponential:
    os << "exponential(a=" << p0_ << ",b=" << p1_ << ")";
    break;
  case Kind::Custom:
    os << "custom";
    break;
  }
  return os.str();
}

double eta_at(const Schedule& s, double t) {
  require_time(t);
  switch (s.kind()) {
  case Schedule::Kind::Constant:
    return s.eta();
  case Schedule::Kind::Rational:
    return 1.0 / (s.a() * t + s.b());
  case Schedule::Kind::Exponential:
    return s.a() * std::exp(-s.b() * t);
  case Schedule::Kind::Custom:
    return s.eta_function()(t);
  }
  return 0.0;
}

double eta_derivative_at(const Schedule& s, double t) {
  require_time(t);
  switch (s.kind()) {
  case Schedule::Kind::Constant:
    return 0.0;
  case Schedule::Kind::Rational: {
    const double c = s.a() * t + s.b();
    return -s.a() / (c * c);
  }
  case Schedule::Kind::Exponential:
    return -s.b() * s.a() * std::exp(-s.b() * t);
  case Schedule::Kind::Custom:
    if (!s.derivative_function()) {
      throw ConfigError("custom schedule has no derivative");
    }
    return s.derivative_function()(t);
  }
  return 0.0;
}

double hazard_at(const Schedule& s, double t) { return 1.0 / eta_at(s, t); }

double cumulative_hazard(const Schedule& s, double t0, double duration) {
  switch (s.kind()) {
  case Schedule::Kind::Constant:
    return duration / s.eta();
  case Schedule::Kind::Rational:
    return s.a() * (t0 * duration + 0.5 * duration * duration) + s.b() * duration;
  case Schedule::Kind::Exponential:
    return std::exp(s.b() * t0) * std::expm1(s.b() * duration) / (s.a() * s.b());
  case Schedule::Kind::Custom: {
    const auto& eta = s.eta_function();
    return numerics::adaptive_simpson([&](double u) { return 1.0 / eta(u); }, t0, t0 + duration,
                                      1e-12);
  }
  }
  return 0.0;
}

double validate_growth_condition(const Schedule& s, double t_bar, int grid_n) {
  if (!(t_bar > 0.0)) {
    throw ConfigError("growth condition horizon must be positive");
  }
  if (grid_n < 2) {
    throw ConfigError("growth condition grid needs at least two points");
  }
  if (s.kind() == Schedule::Kind::Custom && !s.derivative_function()) {
    throw ConfigError("growth condition needs the derivative of a custom schedule");
  }
  double worst = 0.0;
  for (int k = 0; k < grid_n; ++k) {
    const double t = t_bar * static_cast<double>(k) / static_cast<double>(grid_n - 1);
    double ratio = 0.0;
    switch (s.kind()) {
    case Schedule::Kind::Constant:
      ratio = 0.0;
      break;
    case Schedule::Kind::Rational:
      ratio = s.a() / (s.a() * t + s.b());
      break;
    case Schedule::Kind::Exponential:
      ratio = s.b();
      break;
    case Schedule::Kind::Custom:
      ratio = -eta_derivative_at(s, t) / eta_at(s, t);
      break;
    }
    worst = std::max(worst, std::abs(ratio));
  }
  return worst;
}

void validate_schedule(const Schedule& s, double horizon, int grid_n) {
  if (s.kind() != Schedule::Kind::Custom) {
    return; // named variants are positive and non-increasing by construction
  }
  double previous = eta_at(s, 0.0);
  for (int k = 0; k < grid_n; ++k) {
    const double t = horizon * static_cast<double>(k) / static_cast<double>(grid_n - 1);
    const double v = eta_at(s, t);
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError("custom schedule must stay positive");
    }
    if (v > previous * (1.0 + 1e-12)) {
      throw ConfigError("custom schedule must be non-increasing");
    }
    previous = v;
  }
  if (s.derivative_function()) {
    const double c = validate_growth_condition(s, horizon, grid_n);
    if (!std::isfinite(c)) {
      throw ConfigError("custom schedule violates the growth condition");
    }
  }
}

double waiting_time_cdf(const WaitingTimeDistribution& wt, double duration) {
  if (duration <= 0.0) {
    return 0.0;
  }
  return -std::expm1(-cumulative_hazard(wt.schedule, wt.t0, duration));
}

namespace {
void check_quantile_input(const WaitingTimeDistribution& wt, double s) {
  if (!(s > 0.0 && s < kQuantileCliff)) {
    throw ConfigError("quantile level must lie in (0, 1 - 1e-15)");
  }
  require_time(wt.t0);
}
} // namespace

double waiting_time_quantile(const WaitingTimeDistribution& wt, double s) {
  check_quantile_input(wt, s);
  return holding_time_from_exponential(wt.schedule, wt.t0, -std::log1p(-s));
}

double waiting_time_quantile_bisection(const WaitingTimeDistribution& wt, double s) {
  check_quantile_input(wt, s);
  auto g = [&](double d) { return waiting_time_cdf(wt, d) - s; };
  double hi = eta_at(wt.schedule, wt.t0);
  int doublings = 0;
  while (g(hi) < 0.0) {
    hi *= 2.0;
    if (++doublings > 1100) {
      throw NumericalError("could not bracket the waiting-time quantile");
    }
  }
  // Bisect down to bracket collapse rather than a CDF tolerance.
  return numerics::bisect_increasing(g, 0.0, hi, 0.0, 2000).root;
}

double draw_holding_time(const Schedule& s, double t0, Rng& rng) {
  if (s.kind() == Schedule::Kind::Custom && s.eta_infimum()) {
    return thinning_draw(s, t0, *s.eta_infimum(), rng);
  }
  return holding_time_from_exponential(s, t0, -std::log1p(-uniform_open01(rng)));
}

double sample_waiting_time(const WaitingTimeDistribution& wt, Rng& rng) {
  require_time(wt.t0);
  return draw_holding_time(wt.schedule, wt.t0, rng);
}

} // namespace sgp
