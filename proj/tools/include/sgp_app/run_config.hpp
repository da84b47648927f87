#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sgp/dynamics.hpp"
#include "sgp/ensemble.hpp"
#include "sgp/rates.hpp"
#include "sgp_app/config_file.hpp"

namespace sgp::app {

/// A validated experiment description. Built from a ConfigFile; the flags
/// --seed, --replicates, --threads and --out override the matching keys.
struct RunConfig {
  ConfigFile source;

  std::string problem = "three_well";
  std::shared_ptr<const PotentialSet<double>> potentials;
  std::vector<Eigen::MatrixXd> switching_matrices;

  ProcessKind process = ProcessKind::Sgpc;
  double epsilon = 0.01;
  std::size_t sgd_steps = 0;

  Schedule schedule = Schedule::constant(0.1);
  IntegratorSpec integrator = IntegratorSpec::exact();

  Eigen::VectorXd theta0;
  double horizon = 10.0;
  std::vector<double> grid;
  std::vector<double> checkpoints;
  std::size_t replicates = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::size_t max_jumps = 10'000'000;

  std::string output_dir = "out";

  double q = 1.0;
  std::size_t kde_points = 401;
  std::optional<std::pair<double, double>> kde_range;
  std::optional<std::pair<double, double>> boundary;
  std::optional<double> bandwidth;

  std::size_t kernel_states = 3;
  std::vector<double> kernel_times{0.0, 0.5, 1.0, 2.0, 5.0};
  std::size_t kernel_skeletons = 10000;

  std::vector<double> ode_etas{1.0, 0.1, 0.01, 0.001};
  std::vector<double> table_etas{0.1, 0.01, 0.001};
  std::vector<double> density_times{0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 10.0};

  /// Non-fatal notes produced while validating, e.g. coercions.
  std::vector<std::string> warnings;

  SimulationConfig<double> simulation() const;
  /// Same problem and start, with the process and schedule replaced.
  SimulationConfig<double> simulation(ProcessKind process, const Schedule& schedule) const;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicates;
  std::optional<unsigned> threads;
  std::optional<std::string> output_dir;
};

const ConfigFile::Schema& config_schema();
RunConfig build_run_config(ConfigFile file, const Overrides& overrides = {});

/// Rows of g_1..g_K, y; '#' comments and a non-numeric header are skipped.
LeastSquaresBlock<double> load_least_squares_csv(const std::string& path);

} // namespace sgp::app
