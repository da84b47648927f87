#include "sgp_app/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "sgp/errors.hpp"
#include "sgp/presets.hpp"

namespace sgp::app {

namespace {

std::size_t size_key(const ConfigFile& f, const std::string& s, const std::string& k, std::size_t fallback,
                     std::size_t minimum) {
  const auto v = f.unsigned_integer(s, k);
  if (!v) {
    return fallback;
  }
  if (*v < minimum) {
    f.fail(s, k, "must be at least " + std::to_string(minimum));
  }
  return static_cast<std::size_t>(*v);
}

double positive_key(const ConfigFile& f, const std::string& s, const std::string& k) {
  const auto v = f.real(s, k);
  if (!v) {
    f.fail(s, k, "required");
  }
  if (!(*v > 0.0) || !std::isfinite(*v)) {
    f.fail(s, k, "must be positive and finite");
  }
  return *v;
}

std::pair<double, double> interval_key(const ConfigFile& f, const std::string& s, const std::string& k) {
  const auto v = *f.reals(s, k);
  if (v.size() != 2 || !(v[0] < v[1])) {
    f.fail(s, k, "expected 'lo, hi' with lo < hi");
  }
  return {v[0], v[1]};
}

std::vector<double> positive_list(const ConfigFile& f, const std::string& s, const std::string& k,
                                  std::vector<double> fallback) {
  const auto v = f.reals(s, k);
  if (!v) {
    return fallback;
  }
  for (double x : *v) {
    if (!(x > 0.0)) {
      f.fail(s, k, "all values must be positive");
    }
  }
  return *v;
}

std::vector<double> time_list(const ConfigFile& f, const std::string& s, const std::string& k, double horizon,
                              std::vector<double> fallback) {
  auto v = f.reals(s, k).value_or(std::move(fallback));
  for (double t : v) {
    if (!(t >= 0.0) || t > horizon) {
      f.fail(s, k, "times must lie in [0, horizon]");
    }
  }
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

ProcessKind parse_process(const ConfigFile& f, const Schedule& schedule) {
  const std::string name =
      f.string("process", "kind").value_or(schedule.kind() == Schedule::Kind::Constant ? "sgpc" : "sgpd");
  for (auto kind : {ProcessKind::Sgd, ProcessKind::Sgpc, ProcessKind::Sgpd, ProcessKind::FullFlow,
                    ProcessKind::Auxiliary, ProcessKind::SwitchingLinear}) {
    if (to_string(kind) == name) {
      return kind;
    }
  }
  f.fail("process", "kind", "unknown process '" + name +
                                "' (expected sgd, sgpc, sgpd, full_flow, auxiliary or switching_linear)");
}

Schedule parse_schedule(const ConfigFile& f) {
  const std::string kind = f.string("schedule", "kind").value_or("constant");
  auto forbid = [&](const char* key) {
    if (f.has("schedule", key)) {
      f.fail("schedule", key, "not used by a " + kind + " schedule");
    }
  };
  try {
    if (kind == "constant") {
      forbid("a");
      forbid("b");
      return Schedule::constant(f.has("schedule", "eta") ? positive_key(f, "schedule", "eta") : 0.1);
    }
    if (kind == "rational" || kind == "exponential") {
      forbid("eta");
      const double a = positive_key(f, "schedule", "a");
      const double b = positive_key(f, "schedule", "b");
      return kind == "rational" ? Schedule::rational(a, b) : Schedule::exponential(a, b);
    }
  } catch (const ConfigError& e) {
    if (std::string(e.what()).find(f.origin()) == 0) {
      throw;
    }
    f.fail("schedule", "kind", e.what());
  }
  f.fail("schedule", "kind", "unknown schedule '" + kind + "' (expected constant, rational or exponential)");
}

} // namespace

const ConfigFile::Schema& config_schema() {
  static const ConfigFile::Schema schema{
      {"problem", {"preset", "centres", "least_squares"}},
      {"process", {"kind", "epsilon", "sgd_steps"}},
      {"schedule", {"kind", "eta", "a", "b"}},
      {"integrator", {"kind", "step"}},
      {"run", {"theta0", "horizon", "grid", "checkpoints", "replicates", "seed", "threads", "max_jumps"}},
      {"output", {"dir"}},
      {"analysis", {"q", "kde_points", "kde_range", "boundary", "bandwidth"}},
      {"kernel", {"states", "times", "skeletons"}},
      {"ode_limit", {"etas"}},
      {"table1", {"etas"}},
      {"densities", {"times"}},
  };
  return schema;
}

LeastSquaresBlock<double> load_least_squares_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open least-squares file '" + path + "'");
  }
  std::vector<std::vector<double>> rows;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string content = trim(std::string_view(raw).substr(0, raw.find('#')));
    if (content.empty()) {
      continue;
    }
    std::vector<double> row;
    bool numeric = true;
    for (const auto& token : split(content, ',')) {
      const auto v = parse_real(token);
      numeric = numeric && v.has_value();
      row.push_back(v.value_or(0.0));
    }
    if (!numeric) {
      if (rows.empty()) {
        continue; // header
      }
      throw ConfigError(path + ":" + std::to_string(line) + ": non-numeric field");
    }
    if (row.size() < 2) {
      throw ConfigError(path + ":" + std::to_string(line) + ": need at least one column of G and y");
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ConfigError(path + ":" + std::to_string(line) + ": inconsistent column count");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw ConfigError("least-squares file '" + path + "' has no rows");
  }
  const auto m = static_cast<Eigen::Index>(rows.size());
  const auto k = static_cast<Eigen::Index>(rows.front().size() - 1);
  LeastSquaresBlock<double> block{Eigen::MatrixXd(m, k), Eigen::VectorXd(m)};
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < k; ++c) {
      block.g(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
    block.y[r] = rows[static_cast<std::size_t>(r)].back();
  }
  return block;
}

RunConfig build_run_config(ConfigFile file, const Overrides& overrides) {
  file.check_schema(config_schema());
  RunConfig rc;
  rc.source = std::move(file);
  const ConfigFile& f = rc.source;

  // Problem.
  const int sources = f.has("problem", "preset") + f.has("problem", "centres") + f.has("problem", "least_squares");
  if (sources > 1) {
    f.fail("problem", f.has("problem", "preset") ? "preset" : "centres",
           "give only one of preset, centres, least_squares");
  }
  rc.schedule = parse_schedule(f);
  rc.process = parse_process(f, rc.schedule);
  if (f.has("problem", "centres")) {
    const auto centres = *f.reals("problem", "centres");
    std::vector<LeastSquaresBlock<double>> blocks;
    for (double c : centres) {
      blocks.push_back({Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Constant(1, c)});
    }
    rc.problem = "centres";
    rc.potentials = std::make_shared<const PotentialSet<double>>(from_least_squares(blocks));
  } else if (f.has("problem", "least_squares")) {
    const std::filesystem::path base = std::filesystem::path(f.origin()).parent_path();
    std::vector<LeastSquaresBlock<double>> blocks;
    const auto files = *f.strings("problem", "least_squares");
    for (const auto& p : files) {
      const std::filesystem::path path = std::filesystem::path(p).is_absolute() ? std::filesystem::path(p) : base / p;
      try {
        blocks.push_back(load_least_squares_csv(path.string()));
      } catch (const ConfigError& e) {
        f.fail("problem", "least_squares", e.what());
      }
    }
    rc.problem = "least_squares";
    try {
      rc.potentials = std::make_shared<const PotentialSet<double>>(from_least_squares(blocks));
    } catch (const ConfigError& e) {
      f.fail("problem", "least_squares", e.what());
    }
  } else {
    rc.problem = f.string("problem", "preset").value_or(
        rc.process == ProcessKind::SwitchingLinear ? "population" : "three_well");
    if (rc.problem == "three_well") {
      rc.potentials = std::make_shared<const PotentialSet<double>>(presets::toy_three_well());
    } else if (rc.problem == "symmetric_pair") {
      rc.potentials = std::make_shared<const PotentialSet<double>>(presets::symmetric_pair());
    } else if (rc.problem == "population") {
      rc.switching_matrices = presets::population_switching();
    } else {
      f.fail("problem", "preset",
             "unknown preset '" + rc.problem + "' (expected three_well, symmetric_pair or population)");
    }
  }
  if ((rc.process == ProcessKind::SwitchingLinear) == rc.switching_matrices.empty()) {
    f.fail("problem", "preset", "the population preset goes with process switching_linear and only with it");
  }
  const Eigen::Index dim = rc.potentials ? rc.potentials->dimension() : rc.switching_matrices.front().rows();

  // Process and schedule.
  if (const auto eps = f.real("process", "epsilon")) {
    if (rc.process != ProcessKind::Auxiliary) {
      f.fail("process", "epsilon", "only used by the auxiliary process");
    }
    if (!(*eps > 0.0 && *eps < 1.0)) {
      f.fail("process", "epsilon", "must lie in (0, 1)");
    }
    rc.epsilon = *eps;
  } else if (rc.process == ProcessKind::Auxiliary) {
    f.fail("process", "epsilon", "required by the auxiliary process");
  }
  if (f.has("process", "sgd_steps")) {
    if (rc.process != ProcessKind::Sgd) {
      f.fail("process", "sgd_steps", "only used by sgd");
    }
    rc.sgd_steps = size_key(f, "process", "sgd_steps", 0, 1);
  }
  const bool constant = rc.schedule.kind() == Schedule::Kind::Constant;
  if (!constant && (rc.process == ProcessKind::Sgpc || rc.process == ProcessKind::SwitchingLinear)) {
    f.fail("schedule", "kind", to_string(rc.process) + " requires a constant schedule");
  }
  if (constant && rc.process == ProcessKind::Sgpd) {
    rc.warnings.push_back("sgpd with a constant schedule is the same process as sgpc");
  }

  // Run.
  rc.horizon = f.has("run", "horizon") ? positive_key(f, "run", "horizon") : 10.0;
  if (const auto theta = f.reals("run", "theta0")) {
    if (static_cast<Eigen::Index>(theta->size()) != dim) {
      f.fail("run", "theta0", "expected " + std::to_string(dim) + " components");
    }
    rc.theta0 = Eigen::Map<const Eigen::VectorXd>(theta->data(), dim);
  } else {
    rc.theta0 = Eigen::VectorXd::Constant(dim, rc.process == ProcessKind::SwitchingLinear ? 1.0 : -1.5);
  }
  if (const auto g = f.reals("run", "grid"); g && g->size() > 1) {
    rc.grid = time_list(f, "run", "grid", rc.horizon, {});
  } else {
    const std::size_t n = size_key(f, "run", "grid", 101, 2);
    rc.grid = uniform_grid(0.0, rc.horizon, n);
  }
  rc.checkpoints = time_list(f, "run", "checkpoints", rc.horizon, {});
  rc.replicates = size_key(f, "run", "replicates", rc.replicates, 1);
  rc.seed = f.unsigned_integer("run", "seed").value_or(rc.seed);
  rc.threads = static_cast<unsigned>(size_key(f, "run", "threads", 1, 0));
  rc.max_jumps = size_key(f, "run", "max_jumps", rc.max_jumps, 1);
  rc.output_dir = f.string("output", "dir").value_or(rc.output_dir);

  // Integrator.
  const std::string ikind = f.string("integrator", "kind").value_or("default");
  const double step = f.has("integrator", "step") ? positive_key(f, "integrator", "step") : 1e-3;
  const bool quadratic = rc.potentials && rc.potentials->all_quadratic();
  if (ikind == "default") {
    rc.integrator = rc.potentials ? default_integrator(*rc.potentials, eta_at(rc.schedule, 0.0))
                                  : IntegratorSpec::rk4(step);
  } else if (ikind == "exact" || ikind == "implicit_euler") {
    if (!quadratic) {
      f.fail("integrator", "kind", ikind + " needs quadratic potentials");
    }
    rc.integrator = ikind == "exact" ? IntegratorSpec::exact() : IntegratorSpec::implicit_euler(step);
  } else if (ikind == "explicit_euler") {
    rc.integrator = IntegratorSpec::explicit_euler(step);
  } else if (ikind == "rk4") {
    rc.integrator = IntegratorSpec::rk4(step);
  } else {
    f.fail("integrator", "kind",
           "unknown integrator '" + ikind + "' (expected default, exact, explicit_euler, implicit_euler or rk4)");
  }
  if (rc.process == ProcessKind::SwitchingLinear && ikind != "default" && ikind != "rk4") {
    f.fail("integrator", "kind", "switching_linear always integrates with rk4");
  }

  // Analysis and per-command sections.
  if (const auto q = f.real("analysis", "q")) {
    if (!(*q > 0.0 && *q <= 1.0)) {
      f.fail("analysis", "q", "must lie in (0, 1]");
    }
    rc.q = *q;
  }
  rc.kde_points = size_key(f, "analysis", "kde_points", rc.kde_points, 2);
  if (f.has("analysis", "kde_range")) {
    rc.kde_range = interval_key(f, "analysis", "kde_range");
  }
  if (f.has("analysis", "boundary")) {
    rc.boundary = interval_key(f, "analysis", "boundary");
  }
  if (f.has("analysis", "bandwidth")) {
    rc.bandwidth = positive_key(f, "analysis", "bandwidth");
  }

  rc.kernel_states = size_key(f, "kernel", "states", rc.kernel_states, 2);
  rc.kernel_times = time_list(f, "kernel", "times", std::numeric_limits<double>::max(), rc.kernel_times);
  rc.kernel_skeletons = size_key(f, "kernel", "skeletons", rc.kernel_skeletons, 1);

  rc.ode_etas = positive_list(f, "ode_limit", "etas", rc.ode_etas);
  for (std::size_t k = 1; k < rc.ode_etas.size(); ++k) {
    if (!(rc.ode_etas[k] < rc.ode_etas[k - 1])) {
      f.fail("ode_limit", "etas", "learning rates must be strictly decreasing");
    }
  }
  rc.table_etas = positive_list(f, "table1", "etas", rc.table_etas);
  std::erase_if(rc.density_times, [&](double t) { return t > rc.horizon; });
  rc.density_times = time_list(f, "densities", "times", rc.horizon, rc.density_times);

  // Overrides from the command line.
  if (overrides.seed) {
    rc.seed = *overrides.seed;
  }
  if (overrides.replicates) {
    if (*overrides.replicates < 1) {
      throw ConfigError("--replicates must be at least 1");
    }
    rc.replicates = *overrides.replicates;
  }
  if (overrides.threads) {
    rc.threads = *overrides.threads;
  }
  if (overrides.output_dir) {
    rc.output_dir = *overrides.output_dir;
  }
  return rc;
}

SimulationConfig<double> RunConfig::simulation(ProcessKind kind, const Schedule& sched) const {
  SimulationConfig<double> c;
  c.process = kind;
  c.potentials = potentials;
  c.switching_matrices = switching_matrices;
  c.schedule = sched;
  c.integrator = integrator;
  c.theta0 = theta0;
  c.horizon = horizon;
  c.epsilon = epsilon;
  c.sgd_steps = sgd_steps;
  c.rk4_step = integrator.kind == IntegratorSpec::Kind::RK4 ? integrator.step : 1e-3;
  c.skeleton.max_jumps = max_jumps;
  c.provenance = source.text();
  return c;
}

SimulationConfig<double> RunConfig::simulation() const { return simulation(process, schedule); }

} // namespace sgp::app
