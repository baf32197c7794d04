#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "h2hinf/oracle.hpp"
#include "h2hinf/probing.hpp"
#include "h2hinf/types.hpp"

namespace h2hinf {

/// One data tuple: regression row vech(zz') for z = [x; u; v] and the two
/// Bellman targets.
struct BellmanSample {
  VectorXd row;
  double d1 = 0.0;
  double d2 = 0.0;
  long k = 0;
  VectorXd x;
  VectorXd u;
  VectorXd v;
  /// Set when the oracle could not branch and the single successor sample
  /// was taken by advancing the real trajectory.
  bool advanced = false;
};

/// Targets at the oracle's current state for u = K2 x + e_u, v = K1 x + e_v.
/// The continuation uses the unprobed policy at the successor state.
BellmanSample bellman_targets(TrajectoryOracle& oracle, const CostSpec& cost,
                              const QPair& q, const GainPair& gains,
                              const std::pair<VectorXd, VectorXd>& probe, int branches,
                              ExpectationMode mode);

struct DataBatch {
  Dimensions dims;
  std::vector<BellmanSample> rows;
};

struct Regression {
  MatrixXd X;
  VectorXd Y1;
  VectorXd Y2;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
};

/// Stacks rows in collection order. Throws Error(kInsufficientExcitation)
/// when there are fewer rows than unknowns or sigma_min < 1e-10 sigma_max.
Regression assemble_regression(const DataBatch& batch);

/// Least-squares kernels via column-equilibrated QR, falling back to the
/// normal equations. Throws Error(kSingularMatrix) if both fail.
QPair least_squares_h(const MatrixXd& X, const VectorXd& Y1, const VectorXd& Y2,
                      const Dimensions& dims);

struct TerminationDecision {
  bool stop = false;
  bool h1_converged = false;
  bool h2_converged = false;
  bool admissible = false;
  double dH1 = 0.0;
  double dH2 = 0.0;
  double admissibility_lhs = 0.0;  // Q increment at the probe state
  double admissibility_rhs = 0.0;  // r2 at the probe state
  std::string reason;
};

/// Three-part stopping rule evaluated at probe state x: both kernel
/// increments below tol, and the admissibility inequality on Q2.
TerminationDecision termination(const CostSpec& cost, const QPair& q_prev,
                                const QPair& q_next, const GainPair& gains_prev,
                                const GainPair& gains_next, const VectorXd& x, double tol,
                                StopRule rule = StopRule::kQ2Increment, int iteration = 0);

struct Reference {
  ValuePair values;
  GainPair gains;
};

struct QLearnIterate {
  int iter = 0;
  double dH1 = 0.0;
  double dH2 = 0.0;
  // NaN when no reference was supplied.
  double errK1 = 0.0;
  double errK2 = 0.0;
  double errP1 = 0.0;
  double errP2 = 0.0;
  bool term = false;
  QPair q;
  GainPair gains;
  ValuePair values;  // values_from_q(q, gains)
  double sigma_min = 0.0;
  double sigma_max = 0.0;
};

struct QLearnReport {
  QPair q;
  GainPair gains;
  ValuePair values;
  std::vector<QLearnIterate> history;
  bool converged = false;
  int iterations = 0;
  std::string termination_reason;
  std::uint64_t seed = 0;
  bool has_reference = false;
  std::vector<std::string> warnings;
  /// States of the unprobed closed loop after learning stopped.
  std::vector<VectorXd> post_states;
};

struct QLearnOptions {
  std::optional<Reference> reference;
  /// Overrides the schedule implied by config.noise_case (required for kCustom).
  std::optional<ProbingSchedule> probe;
  int post_steps = 100;
  /// Called after each completed iteration; lets callers keep partial
  /// progress when a later iteration throws.
  std::function<void(const QLearnIterate&)> on_iterate;
};

/// Model-free learning loop driven only through the oracle. Reaching
/// max_iters is reported through converged = false.
QLearnReport run_q_learning(TrajectoryOracle& oracle, const CostSpec& cost,
                            const AlgoConfig& config, const GainPair& initial_gains,
                            const VectorXd& x0, const QLearnOptions& options = {});

/// Model-based value iteration reported in the same shape as run_q_learning.
/// The admissibility condition is checked at probe_state. Throws
/// Error(kNonConvergence) after config.max_iters.
QLearnReport run_value_iteration(const SdltiSystem& sys, const CostSpec& cost,
                                 const AlgoConfig& config, const VectorXd& probe_state,
                                 const std::optional<Reference>& reference = std::nullopt);

void write_convergence_csv(std::ostream& os, const QLearnReport& report);
void write_convergence_csv(const std::string& path, const QLearnReport& report);

/// Row-major, one row per line, %.12e.
void write_matrix(std::ostream& os, const MatrixXd& M);

}  // namespace h2hinf
