#include "h2hinf/types.hpp"

#include <cmath>
#include <sstream>

#include "h2hinf/errors.hpp"

namespace h2hinf {

namespace {

std::string shape(const MatrixXd& M) {
  std::ostringstream os;
  os << M.rows() << "x" << M.cols();
  return os.str();
}

// Scale used for relative eigenvalue slack.
double eig_slack(const MatrixXd& M) {
  double scale = M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff();
  return 1e-12 * std::max(1.0, scale);
}

std::vector<std::string> dimension_violations(const SystemMatrices& m) {
  std::vector<std::string> out;
  const auto n = m.A1.rows();
  auto expect = [&](const char* name, const MatrixXd& M, Eigen::Index rows,
                    Eigen::Index cols) {
    if (M.rows() != rows || M.cols() != cols) {
      std::ostringstream os;
      os << "dimension mismatch: " << name << " is " << shape(M)
         << ", expected " << rows << "x" << cols;
      out.push_back(os.str());
    }
  };
  if (n == 0) {
    out.push_back("dimension mismatch: A1 is empty");
    return out;
  }
  expect("A1", m.A1, n, n);
  expect("A2", m.A2, n, n);
  if (m.B1.cols() == 0) out.push_back("dimension mismatch: B1 has no columns");
  if (m.C1.cols() == 0) out.push_back("dimension mismatch: C1 has no columns");
  expect("B1", m.B1, n, m.B1.cols());
  expect("C1", m.C1, n, m.C1.cols());
  expect("C2", m.C2, n, m.C1.cols());
  return out;
}

}  // namespace

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimensionMismatch: return "dimension mismatch";
    case ErrorKind::kNotSymmetric: return "not symmetric";
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kSingularMatrix: return "singular matrix";
    case ErrorKind::kNotPositiveDefinite: return "not positive definite";
    case ErrorKind::kGammaInfeasible: return "gamma infeasible";
    case ErrorKind::kNonConvergence: return "non-convergence";
    case ErrorKind::kInsufficientExcitation: return "insufficient excitation";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kZeroDisturbanceEnergy: return "zero disturbance energy";
    case ErrorKind::kOracleFailure: return "oracle failure";
    case ErrorKind::kConfig: return "config error";
    case ErrorKind::kIo: return "io error";
  }
  return "unknown";
}

MatrixXd symmetrize(const MatrixXd& M) {
  return 0.5 * (M + M.transpose());
}

double max_asymmetry(const MatrixXd& M) {
  if (M.rows() != M.cols()) return INFINITY;
  if (M.size() == 0) return 0.0;
  return (M - M.transpose()).cwiseAbs().maxCoeff();
}

bool all_finite(const MatrixXd& M) { return M.allFinite(); }

double min_eigenvalue(const MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(M),
                                             Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_eigenvalue(const MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(M),
                                             Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

SdltiSystem::SdltiSystem(SystemMatrices matrices) : m_(std::move(matrices)) {
  auto violations = dimension_violations(m_);
  if (!violations.empty()) {
    throw Error(ErrorKind::kDimensionMismatch, violations.front());
  }
  for (const MatrixXd* M : {&m_.A1, &m_.A2, &m_.B1, &m_.C1, &m_.C2}) {
    if (!M->allFinite()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "system matrices must have finite entries");
    }
  }
  dims_ = Dimensions{static_cast<int>(m_.A1.rows()),
                     static_cast<int>(m_.B1.cols()),
                     static_cast<int>(m_.C1.cols())};
}

CostSpec::CostSpec(double gamma, MatrixXd Q) : gamma_(gamma), Q_(std::move(Q)) {
  if (!(gamma_ > 0.0) || !std::isfinite(gamma_)) {
    throw Error(ErrorKind::kInvalidArgument, "gamma must be positive");
  }
  if (Q_.rows() != Q_.cols() || Q_.rows() == 0) {
    throw Error(ErrorKind::kDimensionMismatch, "Q must be square, got " + shape(Q_));
  }
  if (!Q_.allFinite()) {
    throw Error(ErrorKind::kInvalidArgument, "Q must have finite entries");
  }
  if (max_asymmetry(Q_) > kSymmetryTol) {
    throw Error(ErrorKind::kNotSymmetric, "Q is not symmetric");
  }
  Q_ = symmetrize(Q_);
  const double lo = min_eigenvalue(Q_);
  if (lo < -eig_slack(Q_)) {
    throw Error(ErrorKind::kNotPositiveDefinite, "Q is not positive semidefinite");
  }
  observability_certified_ = lo > eig_slack(Q_);
}

ValuePair::ValuePair(MatrixXd p1, MatrixXd p2) {
  if (p1.rows() != p1.cols() || p2.rows() != p2.cols() || p1.rows() != p2.rows()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "value matrices must be square and equal-sized");
  }
  if (max_asymmetry(p1) > kSymmetryTol || max_asymmetry(p2) > kSymmetryTol) {
    throw Error(ErrorKind::kNotSymmetric, "value matrices must be symmetric");
  }
  P1 = symmetrize(p1);
  P2 = symmetrize(p2);
}

ValuePair ValuePair::zero(int n) {
  return ValuePair(MatrixXd::Zero(n, n), MatrixXd::Zero(n, n));
}

GainPair::GainPair(MatrixXd k1, MatrixXd k2) : K1(std::move(k1)), K2(std::move(k2)) {
  if (K1.cols() != K2.cols()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "gains K1 and K2 must have the same number of columns");
  }
  if (!K1.allFinite() || !K2.allFinite()) {
    throw Error(ErrorKind::kInvalidArgument, "gains must have finite entries");
  }
}

GainPair GainPair::zero(const Dimensions& dims) {
  return GainPair(MatrixXd::Zero(dims.m2, dims.n), MatrixXd::Zero(dims.m1, dims.n));
}

void GainPair::check(const Dimensions& dims) const {
  if (K1.rows() != dims.m2 || K1.cols() != dims.n || K2.rows() != dims.m1 ||
      K2.cols() != dims.n) {
    throw Error(ErrorKind::kDimensionMismatch,
                "gain shapes K1 " + shape(K1) + ", K2 " + shape(K2) +
                    " do not match the system");
  }
}

QPair::QPair(MatrixXd h1, MatrixXd h2, Dimensions dims) : dims_(dims) {
  const int p = dims.p();
  if (h1.rows() != p || h1.cols() != p || h2.rows() != p || h2.cols() != p) {
    throw Error(ErrorKind::kDimensionMismatch,
                "Q-function kernels must be p x p with p = n + m1 + m2");
  }
  if (max_asymmetry(h1) > kSymmetryTol || max_asymmetry(h2) > kSymmetryTol) {
    throw Error(ErrorKind::kNotSymmetric, "Q-function kernels must be symmetric");
  }
  H1_ = symmetrize(h1);
  H2_ = symmetrize(h2);
}

QPair QPair::zero(const Dimensions& dims) {
  return QPair(MatrixXd::Zero(dims.p(), dims.p()), MatrixXd::Zero(dims.p(), dims.p()),
               dims);
}

void AlgoConfig::validate(const Dimensions& dims) const {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorKind::kInvalidArgument, msg);
  };
  if (!(tol > 0.0)) fail("tol must be positive");
  if (max_iters < 1) fail("max_iters must be positive");
  if (branches < 1) fail("branches must be positive");
  if (tuples_per_iter < dims.unknowns()) {
    fail("tuples_per_iter = " + std::to_string(tuples_per_iter) +
         " is below p(p+1)/2 = " + std::to_string(dims.unknowns()));
  }
}

ValidationReport validate_system(const SystemMatrices& sys, double gamma,
                                 const MatrixXd& Q) {
  ValidationReport report;
  report.violations = dimension_violations(sys);
  for (const MatrixXd* M : {&sys.A1, &sys.A2, &sys.B1, &sys.C1, &sys.C2}) {
    if (!M->allFinite()) {
      report.violations.push_back("non-finite entry in system matrices");
      break;
    }
  }
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    report.violations.push_back("gamma must be positive");
  }
  if (Q.rows() != Q.cols() || Q.rows() != sys.A1.rows()) {
    report.violations.push_back("dimension mismatch: Q is " + shape(Q) +
                                ", expected n x n");
    return report;
  }
  if (!Q.allFinite()) {
    report.violations.push_back("non-finite entry in Q");
    return report;
  }
  if (max_asymmetry(Q) > kSymmetryTol) {
    report.violations.push_back("Q not symmetric");
  }
  const double lo = min_eigenvalue(Q);
  if (lo < -eig_slack(Q)) {
    report.violations.push_back("Q not PSD");
  }
  report.observability_certified = report.violations.empty() && lo > eig_slack(Q);
  return report;
}

const char* to_string(NoiseCase c) {
  switch (c) {
    case NoiseCase::kCase1: return "1";
    case NoiseCase::kCase2: return "2";
    case NoiseCase::kCase3: return "3";
    case NoiseCase::kCustom: return "custom";
  }
  return "?";
}

const char* to_string(ExpectationMode m) {
  return m == ExpectationMode::kAnalytic ? "analytic" : "mc";
}

const char* to_string(NoiseDistribution d) {
  return d == NoiseDistribution::kStandardGaussian ? "gaussian" : "rademacher";
}

const char* to_string(StopRule r) {
  return r == StopRule::kQ2Increment ? "q2" : "q2-q1";
}

}  // namespace h2hinf
