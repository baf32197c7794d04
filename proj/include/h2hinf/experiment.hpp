#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "h2hinf/errors.hpp"
#include "h2hinf/types.hpp"

namespace h2hinf {

enum class Command { kSolve, kVi, kQlearn, kSimulate, kBenchF16 };
enum class ReferenceSource { kNone, kPrinted, kSolved };

/// Everything needed to reproduce one run. Populated from a flat
/// `key = value` file and/or command-line overrides through set().
struct ExperimentConfig {
  Command command = Command::kQlearn;
  std::string system = "f16";  // "f16" or "file"
  std::string A1_file, A2_file, B1_file, C1_file, C2_file;
  std::string Q_file;   // empty: identity
  std::string K1_file;  // initial / simulated gains; empty: builtin or solved
  std::string K2_file;
  double gamma = 1.0;
  std::vector<double> x0;  // empty: builtin F-16 state, zeros for file systems
  AlgoConfig algo;
  bool seed_set = false;
  ReferenceSource reference = ReferenceSource::kSolved;
  std::string probe_u, probe_v;  // custom probing term lists
  bool probe_sim = false;        // probe the simulate command
  long steps = 100;              // simulate / post-learning horizon
  std::string out = "out";

  /// Throws Error(kConfig) on unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  /// Replayable key = value lines.
  std::vector<std::pair<std::string, std::string>> to_key_values() const;
};

Command parse_command(const std::string& name);
const char* to_string(Command c);

/// Reads `key = value` lines into cfg; '#' starts a comment. Throws
/// Error(kConfig) for a missing file or malformed line.
void load_config_file(const std::string& path, ExperimentConfig& cfg);

/// Whitespace-separated rows; blank and '#' lines skipped. Throws
/// Error(kConfig) for a missing file or ragged rows.
MatrixXd read_matrix_file(const std::string& path);

/// Runs one experiment, writes its artifacts under cfg.out and returns the
/// process exit status: 0 success, 1 config error, 2 non-convergence or
/// numerical failure, 3 attenuation level infeasible. Diagnostics go to err.
int run_experiment(const ExperimentConfig& cfg, std::ostream& log, std::ostream& err);

/// Exit status for a library error kind.
int exit_status(ErrorKind kind);

}  // namespace h2hinf
