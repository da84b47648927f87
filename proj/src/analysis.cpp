#include "sgp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>

#include "sgp/errors.hpp"
#include "sgp/random.hpp"

namespace sgp {
namespace {

void require_equal_sizes(std::size_t a, std::size_t b) {
  if (a != b || a == 0) {
    throw ConfigError("empirical measures must be non-empty and of equal size");
  }
}

double truncated_cost(double distance, double q) { return std::min(1.0, std::pow(distance, q)); }

} // namespace

double wasserstein1_sorted(std::span<const double> a, std::span<const double> b) {
  require_equal_sizes(a.size(), b.size());
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sum += std::abs(x[k] - y[k]);
  }
  return sum / static_cast<double>(x.size());
}

Assignment solve_assignment(const Eigen::MatrixXd& cost) {
  if (cost.rows() != cost.cols() || cost.rows() == 0) {
    throw ConfigError("assignment needs a non-empty square cost matrix");
  }
  // Shortest augmenting paths with row/column potentials; 1-based arrays
  // with column 0 as the virtual source.
  const auto n = static_cast<std::size_t>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> row_of_col(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    row_of_col[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = row_of_col[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) {
          continue;
        }
        const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) -
                           u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[row_of_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of_col[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      row_of_col[j0] = row_of_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  Assignment out;
  out.column_of_row.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) {
    out.column_of_row[row_of_col[j] - 1] = j - 1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.total_cost += cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(out.column_of_row[i]));
  }
  return out;
}

double wasserstein_truncated(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                             const TruncatedMetricSpec& spec) {
  if (!(spec.q > 0.0 && spec.q <= 1.0)) {
    throw ConfigError("metric exponent q must lie in (0, 1]");
  }
  if (a.rows() != b.rows()) {
    throw ConfigError("point clouds must share their dimension");
  }
  require_equal_sizes(static_cast<std::size_t>(a.cols()), static_cast<std::size_t>(b.cols()));
  const auto n = static_cast<std::size_t>(a.cols());
  if (n > kMaxAssignmentSize) {
    throw ConfigError("exact truncated Wasserstein is limited to " +
                      std::to_string(kMaxAssignmentSize) +
                      " points; subsample both clouds (subsample_columns) first");
  }
  Eigen::MatrixXd cost(a.cols(), b.cols());
  for (Eigen::Index i = 0; i < a.cols(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      cost(i, j) = truncated_cost((a.col(i) - b.col(j)).norm(), spec.q);
    }
  }
  return solve_assignment(cost).total_cost / static_cast<double>(n);
}

double wasserstein_truncated(std::span<const double> a, std::span<const double> b,
                             const TruncatedMetricSpec& spec) {
  const Eigen::Map<const Eigen::RowVectorXd> ma(a.data(), static_cast<Eigen::Index>(a.size()));
  const Eigen::Map<const Eigen::RowVectorXd> mb(b.data(), static_cast<Eigen::Index>(b.size()));
  return wasserstein_truncated(Eigen::MatrixXd(ma), Eigen::MatrixXd(mb), spec);
}

Eigen::MatrixXd subsample_columns(const Eigen::MatrixXd& samples, std::size_t m, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(samples.cols());
  if (m > n) {
    throw ConfigError("cannot subsample more columns than available");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  // Partial Fisher-Yates.
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t pick = k + uniform_index(rng, n - k);
    std::swap(order[k], order[pick]);
  }
  Eigen::MatrixXd out(samples.rows(), static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < m; ++k) {
    out.col(static_cast<Eigen::Index>(k)) = samples.col(static_cast<Eigen::Index>(order[k]));
  }
  return out;
}

SummaryStats summary_stats(std::span<const double> samples) {
  if (samples.size() < 2) {
    throw ConfigError("summary statistics need at least two samples");
  }
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : samples) {
    ss += (x - mean) * (x - mean);
  }
  return {mean, ss / (n - 1.0)};
}

double silverman_bandwidth(std::span<const double> samples) {
  const auto st = summary_stats(samples);
  const double sd = std::sqrt(st.variance);
  if (!(sd > 0.0)) {
    throw NumericalError("samples have zero variance; the density is degenerate");
  }
  return 1.06 * sd * std::pow(static_cast<double>(samples.size()), -0.2);
}

KdeResult kde(std::span<const double> samples, std::span<const double> grid, const KdeOptions& options) {
  if (samples.size() < 2) {
    throw ConfigError("kernel density estimation needs at least two samples");
  }
  KdeResult out;
  if (options.bandwidth) {
    if (!(*options.bandwidth > 0.0)) {
      throw ConfigError("bandwidth must be positive");
    }
    out.bandwidth = *options.bandwidth;
  } else {
    out.bandwidth = silverman_bandwidth(samples);
  }
  const double h = out.bandwidth;
  const double norm = 1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  auto kernel = [h](double z) { return std::exp(-0.5 * (z / h) * (z / h)); };
  out.density.reserve(grid.size());
  for (double x : grid) {
    double acc = 0.0;
    if (options.boundary) {
      const auto [lo, hi] = *options.boundary;
      if (x < lo || x > hi) {
        out.density.push_back(0.0);
        continue;
      }
      for (double s : samples) {
        acc += kernel(x - s) + kernel(x - (2.0 * lo - s)) + kernel(x - (2.0 * hi - s));
      }
    } else {
      for (double s : samples) {
        acc += kernel(x - s);
      }
    }
    out.density.push_back(acc * norm);
  }
  return out;
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) {
    throw ConfigError("KS statistic needs samples");
  }
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const double f = cdf(samples[k]);
    d = std::max({d, static_cast<double>(k + 1) / n - f, f - static_cast<double>(k) / n});
  }
  return d;
}

double ks_critical_value(std::size_t n, double alpha) {
  return std::sqrt(-0.5 * std::log(0.5 * alpha)) / std::sqrt(static_cast<double>(n));
}

double chi_square_statistic(std::span<const double> counts, std::span<const double> probabilities) {
  if (counts.size() != probabilities.size() || counts.empty()) {
    throw ConfigError("chi-square needs matching count and probability vectors");
  }
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  double stat = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double expected = total * probabilities[k];
    stat += (counts[k] - expected) * (counts[k] - expected) / expected;
  }
  return stat;
}

double chi_square_critical_value(std::size_t dof, double alpha) {
  const boost::math::chi_squared dist(static_cast<double>(dof));
  return boost::math::quantile(boost::math::complement(dist, alpha));
}

double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) {
    throw ConfigError("distributions must share their support");
  }
  return 0.5 * (p - q).cwiseAbs().sum();
}

double log_linear_slope(std::span<const double> times, std::span<const double> values) {
  if (times.size() != values.size() || times.size() < 2) {
    throw ConfigError("slope fit needs at least two matching points");
  }
  const double n = static_cast<double>(times.size());
  double st = 0.0, sy = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(values[k] > 0.0)) {
      throw NumericalError("log-linear fit needs positive values");
    }
    st += times[k];
    sy += std::log(values[k]);
  }
  const double mt = st / n, my = sy / n;
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    num += (times[k] - mt) * (std::log(values[k]) - my);
    den += (times[k] - mt) * (times[k] - mt);
  }
  return num / den;
}

} // namespace sgp
