#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace h2hinf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Maximum absolute element asymmetry tolerated for matrices that are
/// symmetric by construction.
inline constexpr double kSymmetryTol = 1e-12;

/// Dimensions of the stacked vector z = [x; u; v], with p = n + m1 + m2.
struct Dimensions {
  int n = 0;
  int m1 = 0;
  int m2 = 0;

  int p() const { return n + m1 + m2; }
  /// Number of free entries in a symmetric p x p matrix.
  int unknowns() const { return p() * (p() + 1) / 2; }

  // Offsets of the x, u and v blocks inside z.
  int x_offset() const { return 0; }
  int u_offset() const { return n; }
  int v_offset() const { return n + m1; }

  bool operator==(const Dimensions&) const = default;
};

/// Raw, unvalidated dynamics matrices of
///   x_{k+1} = A1 x + B1 u + C1 v + (A2 x + C2 v) w_k.
struct SystemMatrices {
  MatrixXd A1;  // n x n drift
  MatrixXd A2;  // n x n state-multiplicative noise
  MatrixXd B1;  // n x m1 control
  MatrixXd C1;  // n x m2 disturbance drift
  MatrixXd C2;  // n x m2 disturbance-multiplicative noise
};

/// Validated stochastic discrete LTI system. Immutable after construction.
class SdltiSystem {
 public:
  /// Throws Error(kDimensionMismatch) on inconsistent shapes and
  /// Error(kInvalidArgument) on non-finite entries.
  explicit SdltiSystem(SystemMatrices matrices);

  const MatrixXd& A1() const { return m_.A1; }
  const MatrixXd& A2() const { return m_.A2; }
  const MatrixXd& B1() const { return m_.B1; }
  const MatrixXd& C1() const { return m_.C1; }
  const MatrixXd& C2() const { return m_.C2; }
  const SystemMatrices& matrices() const { return m_; }

  const Dimensions& dims() const { return dims_; }
  int n() const { return dims_.n; }
  int m1() const { return dims_.m1; }
  int m2() const { return dims_.m2; }

 private:
  SystemMatrices m_;
  Dimensions dims_;
};

/// Attenuation level and state weight. The control weight is the identity.
class CostSpec {
 public:
  /// Throws if gamma <= 0, Q is not square, not symmetric within
  /// kSymmetryTol, or not positive semidefinite.
  CostSpec(double gamma, MatrixXd Q);

  double gamma() const { return gamma_; }
  double gamma_sq() const { return gamma_ * gamma_; }
  const MatrixXd& Q() const { return Q_; }
  int n() const { return static_cast<int>(Q_.rows()); }

  /// True iff Q is strictly positive definite, which is sufficient for exact
  /// observability.
  bool observability_certified() const { return observability_certified_; }

 private:
  double gamma_;
  MatrixXd Q_;
  bool observability_certified_;
};

/// The coupled value matrices (P1 for the attenuation game, P2 for the
/// output energy).
struct ValuePair {
  MatrixXd P1;
  MatrixXd P2;

  ValuePair() = default;
  /// Checks shape and symmetry, then stores the symmetrized matrices.
  ValuePair(MatrixXd p1, MatrixXd p2);

  static ValuePair zero(int n);
  int n() const { return static_cast<int>(P1.rows()); }
};

/// Worst-case disturbance gain K1 (m2 x n) and control gain K2 (m1 x n).
struct GainPair {
  MatrixXd K1;
  MatrixXd K2;

  GainPair() = default;
  GainPair(MatrixXd k1, MatrixXd k2);

  static GainPair zero(const Dimensions& dims);
  /// Throws Error(kDimensionMismatch) unless the shapes match dims.
  void check(const Dimensions& dims) const;
};

/// Q-function kernels H1, H2 (p x p) partitioned as (n, m1, m2).
class QPair {
 public:
  QPair() = default;
  QPair(MatrixXd h1, MatrixXd h2, Dimensions dims);

  static QPair zero(const Dimensions& dims);

  const MatrixXd& H1() const { return H1_; }
  const MatrixXd& H2() const { return H2_; }
  const Dimensions& dims() const { return dims_; }

 private:
  MatrixXd H1_;
  MatrixXd H2_;
  Dimensions dims_;
};

enum class NoiseCase { kCase1, kCase2, kCase3, kCustom };
enum class ExpectationMode { kAnalytic, kMonteCarlo };
enum class NoiseDistribution { kStandardGaussian, kRademacher };

/// Left side of the admissibility stopping condition: the Q2 increment
/// Q2(i+1) - Q2(i), or Q2(i+1) - Q1(i).
enum class StopRule { kQ2Increment, kQ2MinusQ1 };

/// Learning-loop settings.
struct AlgoConfig {
  double tol = 1e-3;
  int max_iters = 1000;
  int tuples_per_iter = 20;
  int branches = 100;
  std::uint64_t seed = 7;
  NoiseCase noise_case = NoiseCase::kCase1;
  ExpectationMode expectation_mode = ExpectationMode::kMonteCarlo;
  NoiseDistribution distribution = NoiseDistribution::kStandardGaussian;
  StopRule stop_rule = StopRule::kQ2Increment;

  /// Throws Error(kInvalidArgument) when a field is out of range, including
  /// tuples_per_iter < p(p+1)/2.
  void validate(const Dimensions& dims) const;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool observability_certified = false;

  bool valid() const { return violations.empty(); }
};

/// Report-style check of raw inputs; never throws.
ValidationReport validate_system(const SystemMatrices& sys, double gamma,
                                 const MatrixXd& Q);

// Small matrix helpers shared across modules.
MatrixXd symmetrize(const MatrixXd& M);
double max_asymmetry(const MatrixXd& M);
bool all_finite(const MatrixXd& M);
/// Smallest eigenvalue of the symmetric part of M.
double min_eigenvalue(const MatrixXd& M);
double max_eigenvalue(const MatrixXd& M);

const char* to_string(NoiseCase c);
const char* to_string(ExpectationMode m);
const char* to_string(NoiseDistribution d);
const char* to_string(StopRule r);

}  // namespace h2hinf
