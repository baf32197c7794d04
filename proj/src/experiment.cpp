#include "h2hinf/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <ostream>
#include <sstream>

#include "h2hinf/errors.hpp"
#include "h2hinf/f16.hpp"
#include "h2hinf/gare_solver.hpp"
#include "h2hinf/oracle.hpp"
#include "h2hinf/qlearn.hpp"
#include "h2hinf/simulation.hpp"

namespace h2hinf {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void config_error(const std::string& msg) {
  throw Error(ErrorKind::kConfig, msg);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    config_error("invalid number for " + key + ": '" + v + "'");
  }
}

long parse_long(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long d = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    config_error("invalid integer for " + key + ": '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const unsigned long long d = std::stoull(v, &used);
    if (used != v.size() || v.front() == '-') throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    config_error("invalid seed for " + key + ": '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  config_error("invalid boolean for " + key + ": '" + v + "'");
}

std::string fmt17(double d) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

struct Setup {
  std::optional<SdltiSystem> sys;
  std::optional<CostSpec> cost;
  VectorXd x0;
  std::optional<Reference> reference;
};

Setup build_setup(const ExperimentConfig& cfg, std::ostream& log) {
  Setup s;
  try {
    if (cfg.system == "f16") {
      s.sys = f16_system();
    } else {
      SystemMatrices m;
      m.A1 = read_matrix_file(cfg.A1_file);
      m.A2 = read_matrix_file(cfg.A2_file);
      m.B1 = read_matrix_file(cfg.B1_file);
      m.C1 = read_matrix_file(cfg.C1_file);
      m.C2 = read_matrix_file(cfg.C2_file);
      s.sys = SdltiSystem(std::move(m));
    }
    const int n = s.sys->n();
    MatrixXd Q = cfg.Q_file.empty() ? MatrixXd::Identity(n, n) : read_matrix_file(cfg.Q_file);
    const ValidationReport vr = validate_system(s.sys->matrices(), cfg.gamma, Q);
    if (!vr.valid()) config_error("invalid system: " + vr.violations.front());
    if (!vr.observability_certified) {
      log << "warning: Q is not positive definite; exact observability is not certified\n";
    }
    s.cost = CostSpec(cfg.gamma, Q);
    if (!cfg.x0.empty()) {
      if (static_cast<int>(cfg.x0.size()) != n) config_error("x0 has the wrong length");
      s.x0 = Eigen::Map<const VectorXd>(cfg.x0.data(), n);
    } else {
      s.x0 = cfg.system == "f16" ? f16_initial_state() : VectorXd::Zero(n);
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfig) throw;
    config_error(e.what());
  }

  switch (cfg.reference) {
    case ReferenceSource::kNone: break;
    case ReferenceSource::kPrinted:
      if (cfg.system != "f16") config_error("reference = printed needs system = f16");
      s.reference = f16_reference();
      break;
    case ReferenceSource::kSolved:
      try {
        const SolveReport r = solve_coupled_gare(*s.sys, *s.cost, 1e-12, 100000);
        s.reference = Reference{r.values, r.gains};
      } catch (const Error& e) {
        log << "warning: no model-based reference available (" << e.what() << ")\n";
      }
      break;
  }
  return s;
}

GainPair initial_gains(const ExperimentConfig& cfg, const SdltiSystem& sys) {
  if (!cfg.K1_file.empty() || !cfg.K2_file.empty()) {
    if (cfg.K1_file.empty() || cfg.K2_file.empty()) {
      config_error("K1_file and K2_file must be given together");
    }
    try {
      GainPair g(read_matrix_file(cfg.K1_file), read_matrix_file(cfg.K2_file));
      g.check(sys.dims());
      return g;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kConfig) throw;
      config_error(e.what());
    }
  }
  return cfg.system == "f16" ? f16_initial_gains() : GainPair::zero(sys.dims());
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw Error(ErrorKind::kIo, "cannot open " + p.string() + " for writing");
  return os;
}

void write_gains(const fs::path& p, const GainPair& g) {
  auto os = open_out(p);
  os << "# K1\n";
  write_matrix(os, g.K1);
  os << "# K2\n";
  write_matrix(os, g.K2);
}

void write_values(const fs::path& p, const ValuePair& v) {
  auto os = open_out(p);
  os << "# P1\n";
  write_matrix(os, v.P1);
  os << "# P2\n";
  write_matrix(os, v.P2);
}

void write_manifest(const fs::path& p, const ExperimentConfig& cfg, double wall_s,
                    const std::string& outcome) {
  auto os = open_out(p);
  for (const auto& [k, v] : cfg.to_key_values()) os << k << " = " << v << '\n';
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", wall_s);
  os << "# wall_time_s = " << buf << '\n';
  os << "# outcome = " << outcome << '\n';
}

std::optional<ProbingSchedule> custom_probe(const ExperimentConfig& cfg) {
  if (cfg.algo.noise_case != NoiseCase::kCustom) return std::nullopt;
  if (cfg.probe_u.empty() || cfg.probe_v.empty()) {
    config_error("case = custom needs probe_u and probe_v");
  }
  try {
    return ProbingSchedule::custom(ProbingSchedule::parse_terms(cfg.probe_u),
                                   ProbingSchedule::parse_terms(cfg.probe_v));
  } catch (const Error& e) {
    config_error(e.what());
  }
}

int run_solve(const ExperimentConfig& cfg, const Setup& s, std::ostream& log) {
  const SolveReport r = solve_coupled_gare(*s.sys, *s.cost, cfg.algo.tol, cfg.algo.max_iters);
  const fs::path out(cfg.out);
  write_solve_csv((out / "convergence.csv").string(), r);
  write_gains(out / "gains.txt", r.gains);
  write_values(out / "values.txt", r.values);
  NoiseSource noise(cfg.algo.seed, cfg.algo.distribution);
  write_trajectory_csv((out / "trajectory.csv").string(),
                       simulate_closed_loop(*s.sys, *s.cost, r.gains, s.x0, cfg.steps, noise));
  log << "solve: converged in " << r.iterations << " iterations, residuals "
      << r.residual1 << ", " << r.residual2 << ", ms-stable radius "
      << r.stability_radius << '\n';
  return 0;
}

int run_learning(const ExperimentConfig& cfg, const Setup& s, std::ostream& log) {
  const fs::path out(cfg.out);
  QLearnReport report;
  Trajectory traj;
  if (cfg.command == Command::kVi) {
    report = run_value_iteration(*s.sys, *s.cost, cfg.algo, s.x0, s.reference);
    NoiseSource noise(cfg.algo.seed, cfg.algo.distribution);
    traj = simulate_closed_loop(*s.sys, *s.cost, report.gains, s.x0, cfg.steps, noise);
  } else {
    SimulatedOracle oracle(*s.sys, s.x0, cfg.algo.seed, cfg.algo.distribution);
    QLearnOptions opts;
    opts.reference = s.reference;
    opts.probe = custom_probe(cfg);
    opts.post_steps = static_cast<int>(cfg.steps);
    QLearnReport partial;
    partial.has_reference = s.reference.has_value();
    opts.on_iterate = [&partial](const QLearnIterate& it) { partial.history.push_back(it); };
    try {
      report = run_q_learning(oracle, *s.cost, cfg.algo, initial_gains(cfg, *s.sys), s.x0,
                              opts);
    } catch (const Error&) {
      // Keep whatever was learned before the failure.
      write_convergence_csv((out / "convergence.csv").string(), partial);
      write_trajectory_csv((out / "trajectory.csv").string(), oracle.trajectory(*s.cost));
      write_gains(out / "gains.txt", partial.history.empty() ? initial_gains(cfg, *s.sys)
                                                             : partial.history.back().gains);
      throw;
    }
    traj = oracle.trajectory(*s.cost);
  }
  for (const auto& w : report.warnings) log << "warning: " << w << '\n';
  write_convergence_csv((out / "convergence.csv").string(), report);
  write_trajectory_csv((out / "trajectory.csv").string(), traj);
  write_gains(out / "gains.txt", report.gains);
  write_values(out / "values.txt", report.values);
  const StabilityCertificate cert = closed_loop_stability(*s.sys, report.gains);
  log << to_string(cfg.command) << ": " << report.termination_reason << "; "
      << report.iterations << " iterations; ms-stable radius " << cert.radius << '\n';
  return report.converged ? 0 : 2;
}

int run_simulate(const ExperimentConfig& cfg, const Setup& s, std::ostream& log) {
  GainPair gains;
  if (!cfg.K1_file.empty() || !cfg.K2_file.empty()) {
    gains = initial_gains(cfg, *s.sys);
  } else if (s.reference) {
    gains = s.reference->gains;
  } else {
    gains = solve_coupled_gare(*s.sys, *s.cost, 1e-12, 100000).gains;
  }
  std::optional<ProbingSchedule> probe;
  if (cfg.probe_sim) {
    probe = cfg.algo.noise_case == NoiseCase::kCustom
                ? custom_probe(cfg)
                : ProbingSchedule::for_case(cfg.algo.noise_case);
  }
  NoiseSource noise(cfg.algo.seed, cfg.algo.distribution);
  const Trajectory traj = simulate_closed_loop(*s.sys, *s.cost, gains, s.x0, cfg.steps,
                                               noise, probe ? &*probe : nullptr);
  const fs::path out(cfg.out);
  write_trajectory_csv((out / "trajectory.csv").string(), traj);
  write_gains(out / "gains.txt", gains);
  log << "simulate: " << traj.steps() << " steps, final |x|^2 = "
      << traj.states.back().squaredNorm() << '\n';
  return 0;
}

int run_bench(const ExperimentConfig& cfg, std::ostream& log, std::ostream& err) {
  const NoiseCase cases[] = {NoiseCase::kCase1, NoiseCase::kCase2, NoiseCase::kCase3};
  struct Outcome {
    int status;
    std::string log;
    std::string err;
  };
  std::vector<std::future<Outcome>> futures;
  for (NoiseCase c : cases) {
    ExperimentConfig sub = cfg;
    sub.command = Command::kQlearn;
    sub.algo.noise_case = c;
    sub.out = (fs::path(cfg.out) / (std::string("case") + to_string(c))).string();
    futures.push_back(std::async(std::launch::async, [sub] {
      std::ostringstream l, e;
      const int status = run_experiment(sub, l, e);
      return Outcome{status, l.str(), e.str()};
    }));
  }
  int worst = 0;
  auto summary = open_out(fs::path(cfg.out) / "summary.csv");
  summary << "case,status\n";
  for (std::size_t i = 0; i < futures.size(); ++i) {
    const Outcome o = futures[i].get();
    log << "case " << to_string(cases[i]) << ": " << o.log;
    err << o.err;
    summary << to_string(cases[i]) << ',' << o.status << '\n';
    worst = std::max(worst, o.status);
  }
  return worst;
}

}  // namespace

Command parse_command(const std::string& name) {
  if (name == "solve") return Command::kSolve;
  if (name == "vi") return Command::kVi;
  if (name == "qlearn") return Command::kQlearn;
  if (name == "simulate") return Command::kSimulate;
  if (name == "bench-f16") return Command::kBenchF16;
  config_error("unknown command '" + name + "'");
}

const char* to_string(Command c) {
  switch (c) {
    case Command::kSolve: return "solve";
    case Command::kVi: return "vi";
    case Command::kQlearn: return "qlearn";
    case Command::kSimulate: return "simulate";
    case Command::kBenchF16: return "bench-f16";
  }
  return "?";
}

void ExperimentConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "command") {
    command = parse_command(v);
  } else if (key == "system") {
    if (v != "f16" && v != "file") config_error("system must be f16 or file");
    system = v;
  } else if (key == "A1_file") {
    A1_file = v;
  } else if (key == "A2_file") {
    A2_file = v;
  } else if (key == "B1_file") {
    B1_file = v;
  } else if (key == "C1_file") {
    C1_file = v;
  } else if (key == "C2_file") {
    C2_file = v;
  } else if (key == "Q_file") {
    Q_file = v;
  } else if (key == "K1_file") {
    K1_file = v;
  } else if (key == "K2_file") {
    K2_file = v;
  } else if (key == "gamma") {
    gamma = parse_double(key, v);
  } else if (key == "x0") {
    x0.clear();
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) x0.push_back(parse_double(key, trim(item)));
  } else if (key == "case") {
    if (v == "1") algo.noise_case = NoiseCase::kCase1;
    else if (v == "2") algo.noise_case = NoiseCase::kCase2;
    else if (v == "3") algo.noise_case = NoiseCase::kCase3;
    else if (v == "custom") algo.noise_case = NoiseCase::kCustom;
    else config_error("case must be 1, 2, 3 or custom");
  } else if (key == "seed") {
    algo.seed = parse_u64(key, v);
    seed_set = true;
  } else if (key == "tol") {
    algo.tol = parse_double(key, v);
    if (!(algo.tol > 0.0)) config_error("tol must be positive");
  } else if (key == "max_iters" || key == "max-iters") {
    algo.max_iters = static_cast<int>(parse_long(key, v));
    if (algo.max_iters < 1) config_error("max_iters must be positive");
  } else if (key == "tuples") {
    algo.tuples_per_iter = static_cast<int>(parse_long(key, v));
    if (algo.tuples_per_iter < 1) config_error("tuples must be positive");
  } else if (key == "branches") {
    algo.branches = static_cast<int>(parse_long(key, v));
    if (algo.branches < 1) config_error("branches must be positive");
  } else if (key == "mode") {
    if (v == "analytic") algo.expectation_mode = ExpectationMode::kAnalytic;
    else if (v == "mc") algo.expectation_mode = ExpectationMode::kMonteCarlo;
    else config_error("mode must be analytic or mc");
  } else if (key == "distribution") {
    if (v == "gaussian") algo.distribution = NoiseDistribution::kStandardGaussian;
    else if (v == "rademacher") algo.distribution = NoiseDistribution::kRademacher;
    else config_error("distribution must be gaussian or rademacher");
  } else if (key == "stop_rule") {
    if (v == "q2") algo.stop_rule = StopRule::kQ2Increment;
    else if (v == "q2-q1") algo.stop_rule = StopRule::kQ2MinusQ1;
    else config_error("stop_rule must be q2 or q2-q1");
  } else if (key == "reference") {
    if (v == "none") reference = ReferenceSource::kNone;
    else if (v == "printed") reference = ReferenceSource::kPrinted;
    else if (v == "solved") reference = ReferenceSource::kSolved;
    else config_error("reference must be none, printed or solved");
  } else if (key == "probe_u") {
    probe_u = v;
  } else if (key == "probe_v") {
    probe_v = v;
  } else if (key == "probe") {
    probe_sim = parse_bool(key, v);
  } else if (key == "steps") {
    steps = parse_long(key, v);
    if (steps < 1) config_error("steps must be positive");
  } else if (key == "out") {
    out = v;
  } else {
    config_error("unknown config key '" + key + "'");
  }
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::to_key_values() const {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("command", to_string(command));
  kv.emplace_back("system", system);
  for (const auto& [k, v] : {std::pair{"A1_file", &A1_file}, std::pair{"A2_file", &A2_file},
                             std::pair{"B1_file", &B1_file}, std::pair{"C1_file", &C1_file},
                             std::pair{"C2_file", &C2_file}, std::pair{"Q_file", &Q_file},
                             std::pair{"K1_file", &K1_file}, std::pair{"K2_file", &K2_file}}) {
    if (!v->empty()) kv.emplace_back(k, fs::absolute(*v).string());
  }
  kv.emplace_back("gamma", fmt17(gamma));
  if (!x0.empty()) {
    std::string s;
    for (std::size_t i = 0; i < x0.size(); ++i) s += (i ? "," : "") + fmt17(x0[i]);
    kv.emplace_back("x0", s);
  }
  kv.emplace_back("case", to_string(algo.noise_case));
  kv.emplace_back("seed", std::to_string(algo.seed));
  kv.emplace_back("tol", fmt17(algo.tol));
  kv.emplace_back("max_iters", std::to_string(algo.max_iters));
  kv.emplace_back("tuples", std::to_string(algo.tuples_per_iter));
  kv.emplace_back("branches", std::to_string(algo.branches));
  kv.emplace_back("mode", to_string(algo.expectation_mode));
  kv.emplace_back("distribution", to_string(algo.distribution));
  kv.emplace_back("stop_rule", to_string(algo.stop_rule));
  kv.emplace_back("reference", reference == ReferenceSource::kNone      ? "none"
                               : reference == ReferenceSource::kPrinted ? "printed"
                                                                        : "solved");
  if (!probe_u.empty()) kv.emplace_back("probe_u", probe_u);
  if (!probe_v.empty()) kv.emplace_back("probe_v", probe_v);
  kv.emplace_back("probe", probe_sim ? "on" : "off");
  kv.emplace_back("steps", std::to_string(steps));
  kv.emplace_back("out", out);
  return kv;
}

void load_config_file(const std::string& path, ExperimentConfig& cfg) {
  std::ifstream is(path);
  if (!is) config_error("cannot read config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      config_error(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

MatrixXd read_matrix_file(const std::string& path) {
  if (path.empty()) config_error("matrix file path is empty");
  std::ifstream is(path);
  if (!is) config_error("cannot read matrix file " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::istringstream ss(t);
    std::vector<double> row;
    std::string tok;
    while (ss >> tok) row.push_back(parse_double(path, tok));
    if (!rows.empty() && row.size() != rows.front().size()) {
      config_error("ragged rows in matrix file " + path);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) config_error("matrix file " + path + " is empty");
  MatrixXd M(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
  }
  return M;
}

int exit_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kIo:
    case ErrorKind::kDimensionMismatch:
    case ErrorKind::kNotSymmetric:
    case ErrorKind::kInvalidArgument:
      return 1;
    case ErrorKind::kGammaInfeasible:
      return 3;
    default:
      return 2;
  }
}

int run_experiment(const ExperimentConfig& cfg, std::ostream& log, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  int status = 0;
  std::string outcome = "ok";
  try {
    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    if (ec) config_error("cannot create output directory " + cfg.out + ": " + ec.message());
    if (cfg.command == Command::kBenchF16) {
      if (cfg.system != "f16") config_error("bench-f16 runs the builtin F-16 system only");
      status = run_bench(cfg, log, err);
    } else {
      const Setup setup = build_setup(cfg, log);
      switch (cfg.command) {
        case Command::kSolve: status = run_solve(cfg, setup, log); break;
        case Command::kVi:
        case Command::kQlearn: status = run_learning(cfg, setup, log); break;
        case Command::kSimulate: status = run_simulate(cfg, setup, log); break;
        case Command::kBenchF16: break;
      }
    }
    if (status == 2) outcome = "not converged";
  } catch (const Error& e) {
    status = exit_status(e.kind());
    outcome = std::string(to_string(e.kind())) + ": " + e.what();
    err << "error: " << e.what() << '\n';
  }
  if (status != 1) {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                            .count();
    try {
      write_manifest(fs::path(cfg.out) / "manifest.txt", cfg, wall, outcome);
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return 1;
    }
  }
  return status;
}

}  // namespace h2hinf
