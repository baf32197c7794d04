#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "h2hinf/types.hpp"

namespace h2hinf {

/// A(X, Y1, Y2) = (A2 + C2 Y1)' X (A2 + C2 Y1)
///              + (A1 + B1 Y2 + C1 Y1)' X (A1 + B1 Y2 + C1 Y1).
MatrixXd closed_loop_quadratic_map(const SdltiSystem& sys, const MatrixXd& X,
                                   const MatrixXd& Y1, const MatrixXd& Y2);

struct DeltaCheck {
  MatrixXd delta1;  // gamma^2 I + C2' P1 C2 + C1' P1 C1
  MatrixXd delta2;  // I + B1' P2 B1
  bool delta1_pd;
  bool delta2_pd;
};

DeltaCheck delta_check(const SdltiSystem& sys, const CostSpec& cost, const ValuePair& vals);

/// Solves the stacked gain equation for (K1, K2). Throws
/// Error(kGammaInfeasible) if Delta1 is not positive definite,
/// Error(kNotPositiveDefinite) if Delta2 is not, and Error(kSingularMatrix)
/// if the block matrix is singular.
GainPair gains_from_values(const SdltiSystem& sys, const CostSpec& cost,
                           const ValuePair& vals);

/// P-update with the supplied (current) gains.
ValuePair vi_value_update(const SdltiSystem& sys, const CostSpec& cost,
                          const ValuePair& vals, const GainPair& gains);

struct ValueUpdate {
  ValuePair values;
  GainPair gains;
};

/// New gains from vals, then the P-update with those new gains.
ValueUpdate qlearn_value_update(const SdltiSystem& sys, const CostSpec& cost,
                                const ValuePair& vals);

struct Residuals {
  MatrixXd R1;
  MatrixXd R2;
};

/// Left-hand sides of the coupled Riccati equations at (vals, gains).
Residuals gare_residuals(const SdltiSystem& sys, const CostSpec& cost,
                         const ValuePair& vals, const GainPair& gains);

struct StabilityCertificate {
  double radius;
  bool stable;
};

/// Mean-square stability of x+ = Abar1 x + Abar2 x w via the spectral radius
/// of Abar1 (x) Abar1 + Abar2 (x) Abar2.
StabilityCertificate ms_stable(const MatrixXd& Abar1, const MatrixXd& Abar2);

/// ms_stable on (A1 + B1 K2 + C1 K1, A2 + C2 K1).
StabilityCertificate closed_loop_stability(const SdltiSystem& sys, const GainPair& gains);

struct SolveIterate {
  ValuePair values;
  GainPair gains;  // gains used to produce `values`
  double dP1;
  double dP2;
  double res1;
  double res2;
};

struct SolveReport {
  ValuePair values;
  GainPair gains;  // gains_from_values(values)
  int iterations = 0;
  double residual1 = 0.0;
  double residual2 = 0.0;
  std::vector<SolveIterate> history;
  bool stable = false;
  double stability_radius = 0.0;
};

/// Iterates qlearn_value_update from (0, 0) until both Frobenius increments
/// fall below tol. Throws Error(kNonConvergence) after max_iters and
/// Error(kGammaInfeasible) if Delta1 loses positive definiteness.
SolveReport solve_coupled_gare(const SdltiSystem& sys, const CostSpec& cost, double tol,
                               int max_iters);

/// Value sequence of a frozen policy (eta1, eta2) started from zero; element
/// 0 is the zero pair.
std::vector<ValuePair> fixed_policy_value_sequence(const SdltiSystem& sys,
                                                   const CostSpec& cost,
                                                   const MatrixXd& eta1,
                                                   const MatrixXd& eta2, int iters);

void write_solve_csv(std::ostream& os, const SolveReport& report);
void write_solve_csv(const std::string& path, const SolveReport& report);

}  // namespace h2hinf
