#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "h2hinf/errors.hpp"
#include "h2hinf/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Mixed H2/H-infinity design for stochastic linear systems"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::map<std::string, std::string> flags;
  const std::pair<const char*, const char*> options[] = {
      {"system", "Builtin system name (f16) or 'file'"},
      {"case", "Probing case: 1, 2, 3 or custom"},
      {"seed", "Random seed (falls back to STOCH_H2HINF_SEED)"},
      {"tol", "Convergence tolerance"},
      {"max-iters", "Iteration limit"},
      {"tuples", "Data tuples per iteration"},
      {"branches", "Monte-Carlo branches per tuple"},
      {"mode", "Expectation mode: analytic or mc"},
      {"out", "Output directory"},
      {"gamma", "Attenuation level"},
      {"reference", "Reference solution: none, printed or solved"},
      {"steps", "Simulation horizon"},
  };

  const char* commands[][2] = {
      {"solve", "Solve the coupled Riccati equations by value iteration"},
      {"vi", "Model-based value iteration with the learning report layout"},
      {"qlearn", "Model-free Q-learning on a simulated plant"},
      {"simulate", "Simulate the closed loop"},
      {"bench-f16", "Q-learning on the F-16 model for all three probing cases"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "key = value configuration file");
    for (const auto& [opt, ohelp] : options) {
      sub->add_option(std::string("--") + opt, flags[opt], ohelp);
    }
  }

  CLI11_PARSE(app, argc, argv);

  h2hinf::ExperimentConfig cfg;
  try {
    if (!config_path.empty()) h2hinf::load_config_file(config_path, cfg);
    cfg.command = h2hinf::parse_command(app.get_subcommands().front()->get_name());
    for (const auto& [key, value] : flags) {
      if (value.empty()) continue;
      cfg.set(key == "max-iters" ? "max_iters" : key, value);
    }
    if (!cfg.seed_set) {
      if (const char* env = std::getenv("STOCH_H2HINF_SEED")) cfg.set("seed", env);
    }
  } catch (const h2hinf::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return h2hinf::run_experiment(cfg, std::cout, std::cerr);
}
