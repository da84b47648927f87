#include "sgp_app/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sgp/analysis.hpp"
#include "sgp/csv.hpp"
#include "sgp/dynamics.hpp"
#include "sgp/ensemble.hpp"
#include "sgp/errors.hpp"
#include "sgp/index_process.hpp"

#ifndef SGP_VERSION
#define SGP_VERSION "unknown"
#endif

namespace sgp::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::map<std::string, std::string>& builtins() {
  static const std::map<std::string, std::string> m{
      {"simulate", "[problem]\npreset = three_well\n[process]\nkind = sgpc\n[schedule]\nkind = constant\neta = 0.1\n"
                   "[run]\ntheta0 = -1.5\nhorizon = 10\ngrid = 1001\n"},
      {"ensemble", "[problem]\npreset = three_well\n[process]\nkind = sgpc\n[schedule]\nkind = constant\neta = 0.01\n"
                   "[run]\ntheta0 = -1.5\nhorizon = 10\nreplicates = 10000\n"},
      {"kernel-check", "[schedule]\nkind = constant\neta = 0.5\n[kernel]\nstates = 3\n"
                       "times = 0, 0.25, 0.5, 1, 2, 5\nskeletons = 10000\n"},
      {"ode-limit", "[problem]\npreset = symmetric_pair\n[run]\ntheta0 = -1.5\nhorizon = 10\ngrid = 1001\n"
                    "replicates = 1000\n[ode_limit]\netas = 1, 0.1, 0.01, 0.001\n"},
      {"table1", "[problem]\npreset = three_well\n[run]\ntheta0 = -1.5\nhorizon = 10\nreplicates = 10000\n"
                 "[table1]\netas = 0.1, 0.01, 0.001\n"},
      {"densities", "[problem]\npreset = three_well\n[process]\nkind = sgpd\n[schedule]\nkind = rational\n"
                    "a = 100\nb = 1\n[run]\ntheta0 = -1.5\nhorizon = 10\nreplicates = 10000\n"
                    "[analysis]\nboundary = -2, 2\n[densities]\ntimes = 0.25, 0.5, 1, 2, 4, 8, 10\n"},
      {"error-curves", "[problem]\npreset = three_well\n[process]\nkind = sgpd\n[schedule]\nkind = rational\n"
                       "a = 100\nb = 1\n[run]\ntheta0 = -1.5\nhorizon = 10\nreplicates = 10000\n"
                       "checkpoints = 1, 2, 3, 4, 5, 6, 7, 8, 9, 10\n"},
  };
  return m;
}

/// Collects written files and metadata for one output directory.
class Output {
public:
  Output(const RunConfig& rc, std::string command) : rc_(rc), command_(std::move(command)) {
    fs::create_directories(rc.output_dir);
    meta_["tool"] = "sgp";
    meta_["version"] = SGP_VERSION;
    meta_["command"] = command_;
    meta_["config_origin"] = rc.source.origin();
    meta_["config_text"] = rc.source.text();
    meta_["seed"] = rc.seed;
    meta_["replicates"] = rc.replicates;
    meta_["q"] = rc.q;
    meta_["warnings"] = rc.warnings;
    meta_["regenerate"] = "sgp " + command_ + " --config config.ini --seed " + std::to_string(rc.seed) +
                          " --replicates " + std::to_string(rc.replicates);
    std::ofstream(path("config.ini")) << rc.source.text();
  }

  std::string path(const std::string& name) const { return (fs::path(rc_.output_dir) / name).string(); }

  std::ofstream open(const std::string& name) {
    std::ofstream os(path(name));
    if (!os) {
      throw ConfigError("cannot write '" + path(name) + "'");
    }
    files_.push_back(name);
    return os;
  }

  json& meta() { return meta_; }

  void finish(std::ostream& out) {
    meta_["files"] = files_;
    std::ofstream(path("metadata.json")) << meta_.dump(2) << '\n';
    for (const auto& f : files_) {
      out << "wrote " << path(f) << '\n';
    }
    out << "wrote " << path("metadata.json") << '\n';
  }

private:
  const RunConfig& rc_;
  std::string command_;
  json meta_;
  std::vector<std::string> files_;
};

std::vector<std::string> state_header(const std::string& first, Eigen::Index k) {
  std::vector<std::string> h{first};
  for (Eigen::Index c = 0; c < k; ++c) {
    h.push_back("theta_" + std::to_string(c));
  }
  return h;
}

void write_cloud(std::ostream& os, const Eigen::MatrixXd& states) {
  std::vector<std::vector<double>> rows;
  for (Eigen::Index r = 0; r < states.cols(); ++r) {
    std::vector<double> row{static_cast<double>(r)};
    for (Eigen::Index c = 0; c < states.rows(); ++c) {
      row.push_back(states(c, r));
    }
    rows.push_back(std::move(row));
  }
  const auto header = state_header("replicate", states.rows());
  csv::write_table(os, header, rows);
}

/// Wasserstein distance under min{1, |x - y|^q} from the cloud to a point
/// mass; the only coupling with a Dirac measure is the product one.
double distance_to_point(const Eigen::MatrixXd& states, const Eigen::VectorXd& point, double q) {
  double s = 0.0;
  for (Eigen::Index r = 0; r < states.cols(); ++r) {
    s += std::min(1.0, std::pow((states.col(r) - point).norm(), q));
  }
  return s / static_cast<double>(states.cols());
}

json stats_json(const Eigen::MatrixXd& states) {
  json j = json::array();
  for (Eigen::Index c = 0; c < states.rows(); ++c) {
    const auto samples = component_samples(states, c);
    json s{{"component", c}, {"mean", samples.front()}, {"variance", 0.0}};
    if (samples.size() >= 2) {
      const auto st = summary_stats(samples);
      s["mean"] = st.mean;
      s["variance"] = st.variance;
    }
    j.push_back(s);
  }
  return j;
}

/// KDE of the first component of a cloud; returns the bandwidth used.
double write_kde(std::ostream& os, const RunConfig& rc, const std::vector<double>& samples) {
  KdeOptions opt{rc.bandwidth, rc.boundary};
  double lo = 0.0, hi = 0.0;
  if (rc.kde_range) {
    std::tie(lo, hi) = *rc.kde_range;
  } else if (rc.boundary) {
    std::tie(lo, hi) = *rc.boundary;
  } else {
    const double h = rc.bandwidth ? *rc.bandwidth : silverman_bandwidth(samples);
    const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    lo = *mn - 4.0 * h;
    hi = *mx + 4.0 * h;
  }
  const auto grid = uniform_grid(lo, hi, rc.kde_points);
  const auto res = kde(samples, grid, opt);
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    rows.push_back({grid[k], res.density[k]});
  }
  const std::vector<std::string> header{"x", "density"};
  csv::write_table(os, header, rows);
  return res.bandwidth;
}

ExplosionError with_guidance(const ExplosionError& e) {
  return ExplosionError(std::string(e.what()) +
                        "; shorten [run] horizon, raise [run] max_jumps or use a larger learning rate");
}

void cmd_simulate(const RunConfig& rc, std::ostream& out) {
  Output o(rc, "simulate");
  const auto sim = rc.simulation();
  o.meta()["digest"] = digest_hex(sim.describe());
  o.meta()["seed_used"] = mix_seed(rc.seed, 0);
  Rng rng(mix_seed(rc.seed, 0));
  if (rc.process == ProcessKind::Sgd) {
    const ReplicateRunner<double> runner(sim, {rc.horizon});
    const auto& etas = runner.sgd_rates();
    const auto idx = draw_sgd_indices(rc.potentials->size(), etas.size(), rng);
    const Eigen::MatrixXd it = run_sgd_with_indices(*rc.potentials, etas, rc.theta0, idx);
    auto header = state_header("k", it.rows());
    header.insert(header.begin() + 1, "t");
    header.push_back("index");
    auto os = o.open("iterates.csv");
    csv::write_row(os, header);
    double t = 0.0;
    for (Eigen::Index k = 0; k < it.cols(); ++k) {
      std::vector<std::string> row{std::to_string(k), csv::format_double(t)};
      for (Eigen::Index c = 0; c < it.rows(); ++c) {
        row.push_back(csv::format_double(it(c, k)));
      }
      row.push_back(static_cast<std::size_t>(k) < idx.size() ? std::to_string(idx[static_cast<std::size_t>(k)]) : "");
      csv::write_row(os, row);
      if (static_cast<std::size_t>(k) < etas.size()) {
        t += etas[static_cast<std::size_t>(k)];
      }
    }
    o.finish(out);
    return;
  }
  Trajectory<double> traj;
  const SkeletonOptions skopt{rc.max_jumps, {}};
  switch (rc.process) {
  case ProcessKind::Sgpc:
    traj = simulate_sgpc(*rc.potentials, rc.schedule.eta(), rc.theta0, rc.horizon, rc.grid, rc.integrator, rng, skopt);
    break;
  case ProcessKind::Sgpd:
    traj = simulate_sgpd(*rc.potentials, rc.schedule, rc.theta0, rc.horizon, rc.grid, rc.integrator, rng, skopt);
    break;
  case ProcessKind::Auxiliary:
    traj = simulate_auxiliary(*rc.potentials, rc.schedule, rc.epsilon, rc.theta0, rc.horizon, rc.grid,
                              rc.integrator, rng, skopt);
    break;
  case ProcessKind::FullFlow:
    traj = simulate_full_flow(*rc.potentials, rc.theta0, rc.horizon, rc.grid, rc.integrator);
    break;
  case ProcessKind::SwitchingLinear:
    traj = simulate_switching_linear(
        rc.switching_matrices, 1.0 / (static_cast<double>(rc.switching_matrices.size() - 1) * rc.schedule.eta()),
        rc.theta0, rc.horizon, rc.grid, rng, sim.rk4_step, skopt);
    break;
  case ProcessKind::Sgd:
    break;
  }
  {
    auto os = o.open("trajectory.csv");
    write_trajectory_csv(os, traj);
  }
  if (traj.skeleton) {
    auto os = o.open("skeleton.csv");
    write_skeleton_csv(os, *traj.skeleton);
    o.meta()["jumps"] = traj.skeleton->jump_times.size();
  }
  o.finish(out);
}

void cmd_ensemble(const RunConfig& rc, std::ostream& out) {
  Output o(rc, "ensemble");
  const auto sim = rc.simulation();
  const auto res = run_ensemble(sim, rc.replicates, rc.seed, rc.checkpoints, rc.threads);
  o.meta()["digest"] = res.run_config_digest;
  {
    auto os = o.open("terminal.csv");
    write_cloud(os, res.terminal_states);
  }
  if (!res.checkpoint_states.empty()) {
    auto os = o.open("checkpoints.csv");
    auto header = state_header("t", res.terminal_states.rows());
    header.insert(header.begin() + 1, "replicate");
    csv::write_row(os, header);
    for (const auto& [t, states] : res.checkpoint_states) {
      for (Eigen::Index r = 0; r < states.cols(); ++r) {
        std::vector<std::string> row{csv::format_double(t), std::to_string(r)};
        for (Eigen::Index c = 0; c < states.rows(); ++c) {
          row.push_back(csv::format_double(states(c, r)));
        }
        csv::write_row(os, row);
      }
    }
  }
  json stats{{"replicates", rc.replicates}, {"horizon", rc.horizon}, {"terminal", stats_json(res.terminal_states)}};
  json cps = json::object();
  for (const auto& [t, states] : res.checkpoint_states) {
    cps[csv::format_double(t)] = stats_json(states);
  }
  stats["checkpoints"] = cps;
  if (rc.potentials) {
    try {
      const Eigen::VectorXd target = minimiser(*rc.potentials);
      json d{{"q", rc.q}, {"terminal", distance_to_point(res.terminal_states, target, rc.q)}};
      for (const auto& [t, states] : res.checkpoint_states) {
        d["checkpoints"][csv::format_double(t)] = distance_to_point(states, target, rc.q);
      }
      stats["distance_to_minimiser"] = d;
    } catch (const NumericalError&) {
      // Singular mean Hessian: no unique minimiser to measure against.
    }
  }
  if (res.replicate_count >= 2) {
    try {
      auto os = o.open("kde.csv");
      o.meta()["bandwidth"] = write_kde(os, rc, component_samples(res.terminal_states));
    } catch (const NumericalError& e) {
      o.meta()["warnings"].push_back(std::string("no density estimate: ") + e.what());
    }
  }
  std::ofstream(o.path("stats.json")) << stats.dump(2) << '\n';
  const auto& t0 = stats["terminal"][0];
  out << "terminal mean " << csv::format_double(t0["mean"].get<double>()) << " variance "
      << csv::format_double(t0["variance"].get<double>()) << '\n';
  out << "wrote " << o.path("stats.json") << '\n';
  o.finish(out);
}

void cmd_kernel_check(const RunConfig& rc, std::ostream& out) {
  Output o(rc, "kernel-check");
  const std::size_t n = rc.kernel_states;
  const double horizon = std::max(1e-12, rc.kernel_times.back());
  std::vector<JumpSkeleton> skeletons(rc.kernel_skeletons);
  const SkeletonOptions opt{rc.max_jumps, std::size_t{0}};
  for_each_replicate(rc.kernel_skeletons, rc.threads, [&](std::size_t r) {
    Rng rng(mix_seed(rc.seed, r));
    skeletons[r] = sample_jump_skeleton(rc.schedule, n, 0.0, horizon, rng, opt);
  });
  std::vector<std::string> header{"t", "residual", "tv_gap"};
  for (std::size_t j = 0; j < n; ++j) {
    header.push_back("analytic_" + std::to_string(j));
  }
  for (std::size_t j = 0; j < n; ++j) {
    header.push_back("empirical_" + std::to_string(j));
  }
  std::vector<std::vector<double>> rows;
  double worst_residual = 0.0, worst_gap = 0.0;
  for (double t : rc.kernel_times) {
    const Eigen::VectorXd analytic = kernel_matrix(rc.schedule, n, 0.0, t).row(0).transpose();
    const Eigen::VectorXd empirical = occupancy_histogram(skeletons, t);
    const double residual = forward_equation_residual(rc.schedule, n, 0.0, t);
    const double gap = total_variation(analytic, empirical);
    worst_residual = std::max(worst_residual, residual);
    worst_gap = std::max(worst_gap, gap);
    std::vector<double> row{t, residual, gap};
    row.insert(row.end(), analytic.data(), analytic.data() + n);
    row.insert(row.end(), empirical.data(), empirical.data() + n);
    rows.push_back(std::move(row));
  }
  {
    auto os = o.open("kernel_check.csv");
    csv::write_table(os, header, rows);
  }
  o.meta()["schedule"] = rc.schedule.describe();
  o.meta()["skeletons"] = rc.kernel_skeletons;
  out << "max residual " << csv::format_double(worst_residual) << ", max total-variation gap "
      << csv::format_double(worst_gap) << '\n';
  o.finish(out);
}

void cmd_ode_limit(const RunConfig& rc, std::ostream& out) {
  if (!rc.potentials->all_quadratic()) {
    throw ConfigError("ode-limit needs quadratic potentials");
  }
  Output o(rc, "ode-limit");
  std::vector<std::vector<double>> rows;
  const SkeletonOptions opt{rc.max_jumps, {}};
  for (double eta : rc.ode_etas) {
    std::vector<double> d(rc.replicates);
    try {
      for_each_replicate(rc.replicates, rc.threads, [&](std::size_t r) {
        Rng rng(mix_seed(rc.seed, r));
        d[r] = sup_distance_to_full_flow(*rc.potentials, eta, rc.theta0, rc.horizon, rc.grid, rng, opt);
      });
    } catch (const ExplosionError& e) {
      throw with_guidance(e);
    }
    double mean = 0.0, se = 0.0;
    if (d.size() >= 2) {
      const auto st = summary_stats(d);
      mean = st.mean;
      se = std::sqrt(st.variance / static_cast<double>(d.size()));
    } else {
      mean = d.front();
    }
    rows.push_back({eta, mean, se});
    out << "eta " << csv::format_double(eta) << ": mean sup distance " << csv::format_double(mean) << '\n';
  }
  auto os = o.open("ode_limit.csv");
  const std::vector<std::string> header{"eta", "mean_sup_distance", "stderr"};
  csv::write_table(os, header, rows);
  os.close();
  o.finish(out);
}

void cmd_table1(const RunConfig& rc, std::ostream& out) {
  Output o(rc, "table1");
  std::vector<std::vector<double>> rows;
  json digests = json::object();
  for (double eta : rc.table_etas) {
    std::vector<double> row{eta};
    for (auto kind : {ProcessKind::Sgpc, ProcessKind::Sgd}) {
      auto sim = rc.simulation(kind, Schedule::constant(eta));
      EnsembleResult<double> res;
      try {
        res = run_ensemble(sim, rc.replicates, rc.seed, {}, rc.threads);
      } catch (const ExplosionError& e) {
        throw with_guidance(e);
      }
      const auto samples = component_samples(res.terminal_states);
      const auto st = rc.replicates >= 2 ? summary_stats(samples) : SummaryStats{samples.front(), 0.0};
      row.push_back(st.mean);
      row.push_back(st.variance);
      digests[to_string(kind) + "@" + csv::format_double(eta)] = res.run_config_digest;
    }
    out << "eta " << csv::format_double(eta) << ": sgpc variance " << csv::format_double(row[2])
        << ", sgd variance " << csv::format_double(row[4]) << '\n';
    rows.push_back(std::move(row));
  }
  auto os = o.open("table1.csv");
  const std::vector<std::string> header{"eta", "sgpc_mean", "sgpc_variance", "sgd_mean", "sgd_variance"};
  csv::write_table(os, header, rows);
  os.close();
  o.meta()["digest"] = digests;
  o.finish(out);
}

void cmd_densities(const RunConfig& rc, std::ostream& out) {
  if (rc.replicates < 2) {
    throw ConfigError("densities needs at least two replicates");
  }
  Output o(rc, "densities");
  const auto res = run_ensemble(rc.simulation(), rc.replicates, rc.seed, rc.density_times, rc.threads);
  o.meta()["digest"] = res.run_config_digest;
  json bandwidths = json::object();
  for (const auto& [t, states] : res.checkpoint_states) {
    const std::string name = "density_t" + csv::format_double(t) + ".csv";
    auto os = o.open(name);
    bandwidths[csv::format_double(t)] = write_kde(os, rc, component_samples(states));
  }
  o.meta()["bandwidth"] = bandwidths;
  o.finish(out);
}

void cmd_error_curves(const RunConfig& rc, std::ostream& out) {
  if (!rc.potentials) {
    throw ConfigError("error-curves needs a potential set with a minimiser");
  }
  if (rc.checkpoints.empty()) {
    throw ConfigError(rc.source.origin() + ": error-curves needs [run] checkpoints");
  }
  Output o(rc, "error-curves");
  const Eigen::VectorXd target = minimiser(*rc.potentials);
  const auto res = run_ensemble(rc.simulation(), rc.replicates, rc.seed, rc.checkpoints, rc.threads);
  o.meta()["digest"] = res.run_config_digest;
  o.meta()["target"] = std::vector<double>(target.data(), target.data() + target.size());
  std::vector<std::vector<double>> rows;
  for (const auto& p : error_curve(res, target)) {
    rows.push_back({p.time, p.mean, p.stddev});
  }
  auto os = o.open("error_curve.csv");
  const std::vector<std::string> header{"t", "mean", "std"};
  csv::write_table(os, header, rows);
  os.close();
  o.finish(out);
}

} // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate", "ensemble", "kernel-check", "ode-limit",
                                              "table1", "densities", "error-curves"};
  return names;
}

std::string builtin_config(const std::string& command) { return builtins().at(command); }

void run_command(const std::string& command, const RunConfig& rc, std::ostream& out) {
  if (command == "simulate") {
    cmd_simulate(rc, out);
  } else if (command == "ensemble") {
    cmd_ensemble(rc, out);
  } else if (command == "kernel-check") {
    cmd_kernel_check(rc, out);
  } else if (command == "ode-limit") {
    cmd_ode_limit(rc, out);
  } else if (command == "table1") {
    cmd_table1(rc, out);
  } else if (command == "densities") {
    cmd_densities(rc, out);
  } else if (command == "error-curves") {
    cmd_error_curves(rc, out);
  } else {
    throw ConfigError("unknown command '" + command + "'");
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic gradient processes: simulation and analysis"};
  app.set_version_flag("--version", std::string(SGP_VERSION));
  app.require_subcommand(1);
  std::optional<std::string> config_path;
  Overrides ov;
  std::map<std::string, CLI::App*> subs;
  for (const auto& name : command_names()) {
    auto* sub = app.add_subcommand(name, "run " + name + " (built-in configuration unless --config)");
    sub->add_option("--config", config_path, "configuration file");
    sub->add_option("--seed", ov.seed, "master seed");
    sub->add_option("--replicates", ov.replicates, "number of replicates")->check(CLI::PositiveNumber);
    sub->add_option("--out", ov.output_dir, "output directory");
    sub->add_option("--threads", ov.threads, "worker threads, 0 = all cores");
    subs[name] = sub;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int code = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? 0 : 1;
  }
  std::string command;
  for (const auto& [name, sub] : subs) {
    if (sub->parsed()) {
      command = name;
    }
  }
  try {
    ConfigFile file = config_path ? ConfigFile::load(*config_path)
                                  : ConfigFile::parse(builtin_config(command), "<built-in " + command + ">");
    const RunConfig rc = build_run_config(std::move(file), ov);
    for (const auto& w : rc.warnings) {
      err << "warning: " << w << '\n';
    }
    run_command(command, rc, out);
    return 0;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "configuration error: " << e.what() << '\n';
    return 2;
  }
}

} // namespace sgp::app
