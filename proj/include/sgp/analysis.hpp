#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace sgp {

/// Ground cost min{1, |x - y|^q} of the truncated Wasserstein distance.
struct TruncatedMetricSpec {
  double q = 1.0;
};

/// Largest sample count for which the exact assignment is solved.
inline constexpr std::size_t kMaxAssignmentSize = 512;

/// W1 between two equal-size 1D empirical measures via the monotone coupling.
double wasserstein1_sorted(std::span<const double> a, std::span<const double> b);

/// Optimal assignment for a square cost matrix (Hungarian method, O(n^3)).
/// Returns the column assigned to each row together with the total cost.
struct Assignment {
  std::vector<std::size_t> column_of_row;
  double total_cost = 0.0;
};
Assignment solve_assignment(const Eigen::MatrixXd& cost);

/// Exact Wasserstein distance under min{1, |x-y|^q} for point clouds stored
/// column-wise (K x n). Throws beyond kMaxAssignmentSize points; subsample
/// with subsample_columns first.
double wasserstein_truncated(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                             const TruncatedMetricSpec& spec);
double wasserstein_truncated(std::span<const double> a, std::span<const double> b,
                             const TruncatedMetricSpec& spec);

/// m columns drawn without replacement, reproducible from `seed`.
Eigen::MatrixXd subsample_columns(const Eigen::MatrixXd& samples, std::size_t m, std::uint64_t seed);

struct KdeOptions {
  std::optional<double> bandwidth;
  /// Reflect kernels about these endpoints; density is zero outside.
  std::optional<std::pair<double, double>> boundary;
};

struct KdeResult {
  std::vector<double> density;
  double bandwidth = 0.0;
};

/// 1.06 * sample std * n^(-1/5).
double silverman_bandwidth(std::span<const double> samples);

/// Gaussian kernel density estimate of `samples` evaluated at `grid`.
KdeResult kde(std::span<const double> samples, std::span<const double> grid,
              const KdeOptions& options = {});

struct SummaryStats {
  double mean = 0.0;
  double variance = 0.0; ///< unbiased
};
SummaryStats summary_stats(std::span<const double> samples);

/// Kolmogorov-Smirnov statistic sup |F_n - F| against a continuous CDF.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);
/// Asymptotic critical value sqrt(-log(alpha/2) / 2) / sqrt(n).
double ks_critical_value(std::size_t n, double alpha = 0.01);

/// Pearson statistic of `counts` against `probabilities`.
double chi_square_statistic(std::span<const double> counts, std::span<const double> probabilities);
/// Upper-alpha quantile of the chi-square law with `dof` degrees of freedom.
double chi_square_critical_value(std::size_t dof, double alpha = 0.01);

double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

/// Least-squares slope of log(values) against times.
double log_linear_slope(std::span<const double> times, std::span<const double> values);

} // namespace sgp
