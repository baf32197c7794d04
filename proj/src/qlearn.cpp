#include "h2hinf/qlearn.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

#include "h2hinf/errors.hpp"
#include "h2hinf/gare_solver.hpp"
#include "h2hinf/qfunction.hpp"
#include "h2hinf/simulation.hpp"

namespace h2hinf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

MatrixXd policy_lift(const GainPair& gains, int n) {
  MatrixXd T(n + gains.K2.rows() + gains.K1.rows(), n);
  T << MatrixXd::Identity(n, n), gains.K2, gains.K1;
  return T;
}

std::string fmt_g(double value) {
  if (std::isnan(value)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

void fill_errors(QLearnIterate& it, const std::optional<Reference>& ref) {
  if (!ref) {
    it.errK1 = it.errK2 = it.errP1 = it.errP2 = kNaN;
    return;
  }
  it.errK1 = (it.gains.K1 - ref->gains.K1).norm();
  it.errK2 = (it.gains.K2 - ref->gains.K2).norm();
  it.errP1 = (it.values.P1 - ref->values.P1).norm();
  it.errP2 = (it.values.P2 - ref->values.P2).norm();
}

void require_gamma_feasible(const QPair& q) {
  const MatrixXd d1 = gamma_block(q.H1(), q.dims(), 3, 3);
  if (!(min_eigenvalue(d1) > 0.0)) {
    throw Error(ErrorKind::kGammaInfeasible,
                "estimated disturbance block of H1 is not positive definite; the "
                "attenuation level is too small");
  }
}

}  // namespace

BellmanSample bellman_targets(TrajectoryOracle& oracle, const CostSpec& cost,
                              const QPair& q, const GainPair& gains,
                              const std::pair<VectorXd, VectorXd>& probe, int branches,
                              ExpectationMode mode) {
  const Dimensions d = oracle.dims();
  gains.check(d);
  if (!(q.dims() == d)) {
    throw Error(ErrorKind::kDimensionMismatch, "Q kernels do not match the oracle");
  }
  if (branches < 1) throw Error(ErrorKind::kInvalidArgument, "branches must be positive");

  BellmanSample s;
  s.k = oracle.time();
  s.x = oracle.state();
  s.u = gains.K2 * s.x + probe.first;
  s.v = gains.K1 * s.x + probe.second;
  s.row = vech_outer(stack(s.x, s.u, s.v));
  const StageCosts r = stage_costs(cost, s.x, s.u, s.v);

  const MatrixXd T = policy_lift(gains, d.n);
  double c1 = 0.0;
  double c2 = 0.0;
  if (mode == ExpectationMode::kAnalytic) {
    if (!oracle.has_exact_expectation()) {
      throw Error(ErrorKind::kOracleFailure,
                  "analytic mode needs an oracle with exact expectations");
    }
    c1 = oracle.expected_quadratic(symmetrize(T.transpose() * q.H1() * T), s.u, s.v);
    c2 = oracle.expected_quadratic(symmetrize(T.transpose() * q.H2() * T), s.u, s.v);
  } else {
    std::vector<VectorXd> next;
    if (oracle.can_branch()) {
      next = oracle.branch(s.u, s.v, branches);
    } else {
      if (branches != 1) {
        throw Error(ErrorKind::kOracleFailure,
                    "oracle cannot branch; use a single branch");
      }
      next.push_back(oracle.advance(s.u, s.v));
      s.advanced = true;
    }
    for (const VectorXd& xn : next) {
      if (!xn.allFinite()) {
        throw Error(ErrorKind::kDivergence, "non-finite successor state");
      }
      const VectorXd zn = T * xn;
      c1 += q_value(q.H1(), zn);
      c2 += q_value(q.H2(), zn);
    }
    c1 /= static_cast<double>(next.size());
    c2 /= static_cast<double>(next.size());
  }
  s.d1 = r.r1 + c1;
  s.d2 = r.r2 + c2;
  return s;
}

Regression assemble_regression(const DataBatch& batch) {
  const int unknowns = batch.dims.unknowns();
  const auto N = static_cast<int>(batch.rows.size());
  if (N < unknowns) {
    throw Error(ErrorKind::kInsufficientExcitation,
                "insufficient excitation: " + std::to_string(N) +
                    " tuples for " + std::to_string(unknowns) + " unknowns");
  }
  Regression reg;
  reg.X.resize(N, unknowns);
  reg.Y1.resize(N);
  reg.Y2.resize(N);
  for (int i = 0; i < N; ++i) {
    const BellmanSample& s = batch.rows[i];
    if (s.row.size() != unknowns) {
      throw Error(ErrorKind::kDimensionMismatch, "regression row has the wrong length");
    }
    reg.X.row(i) = s.row.transpose();
    reg.Y1(i) = s.d1;
    reg.Y2(i) = s.d2;
  }
  Eigen::JacobiSVD<MatrixXd> svd(reg.X);
  const VectorXd& sv = svd.singularValues();
  reg.sigma_max = sv(0);
  reg.sigma_min = sv(sv.size() - 1);
  if (!(reg.sigma_min >= 1e-10 * reg.sigma_max) || reg.sigma_max == 0.0) {
    char buf[128];
    std::snprintf(buf, sizeof buf,
                  "insufficient excitation: smallest singular value %.3e vs largest %.3e",
                  reg.sigma_min, reg.sigma_max);
    throw Error(ErrorKind::kInsufficientExcitation, buf);
  }
  return reg;
}

QPair least_squares_h(const MatrixXd& X, const VectorXd& Y1, const VectorXd& Y2,
                      const Dimensions& dims) {
  if (X.cols() != dims.unknowns() || X.rows() != Y1.size() || X.rows() != Y2.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "regression shapes are inconsistent");
  }
  MatrixXd Y(X.rows(), 2);
  Y << Y1, Y2;

  VectorXd scale = X.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < scale.size(); ++j) {
    if (scale(j) == 0.0) scale(j) = 1.0;
  }
  const MatrixXd Xs = X * scale.cwiseInverse().asDiagonal();

  MatrixXd coef;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(Xs);
  if (qr.rank() == Xs.cols()) {
    coef = qr.solve(Y);
  } else {
    const MatrixXd XtX = Xs.transpose() * Xs;
    Eigen::LDLT<MatrixXd> ldlt(XtX);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 0.0) {
      throw Error(ErrorKind::kSingularMatrix, "normal equations are singular");
    }
    coef = ldlt.solve(Xs.transpose() * Y);
  }
  coef = scale.cwiseInverse().asDiagonal() * coef;
  if (!coef.allFinite()) {
    throw Error(ErrorKind::kSingularMatrix, "least-squares solution is not finite");
  }
  return QPair(mat_from_vecs(coef.col(0), dims.p()), mat_from_vecs(coef.col(1), dims.p()),
               dims);
}

TerminationDecision termination(const CostSpec& cost, const QPair& q_prev,
                                const QPair& q_next, const GainPair& gains_prev,
                                const GainPair& gains_next, const VectorXd& x, double tol,
                                StopRule rule, int iteration) {
  TerminationDecision t;
  t.dH1 = (q_next.H1() - q_prev.H1()).norm();
  t.dH2 = (q_next.H2() - q_prev.H2()).norm();
  t.h1_converged = t.dH1 < tol;
  t.h2_converged = t.dH2 < tol;

  const VectorXd u_next = gains_next.K2 * x;
  const VectorXd z_next = stack(x, u_next, gains_next.K1 * x);
  const VectorXd z_prev = stack(x, gains_prev.K2 * x, gains_prev.K1 * x);
  const MatrixXd& H_prev = rule == StopRule::kQ2Increment ? q_prev.H2() : q_prev.H1();
  t.admissibility_lhs = q_value(q_next.H2(), z_next) - q_value(H_prev, z_prev);
  t.admissibility_rhs = x.dot(cost.Q() * x) + u_next.squaredNorm();
  t.admissible = t.admissibility_lhs < t.admissibility_rhs;

  t.stop = t.h1_converged && t.h2_converged && t.admissible;
  if (t.stop) {
    t.reason = "all stopping conditions met at iteration " + std::to_string(iteration);
  }
  return t;
}

QLearnReport run_q_learning(TrajectoryOracle& oracle, const CostSpec& cost,
                            const AlgoConfig& config, const GainPair& initial_gains,
                            const VectorXd& x0, const QLearnOptions& options) {
  const Dimensions d = oracle.dims();
  config.validate(d);
  initial_gains.check(d);
  if (x0.size() != d.n) {
    throw Error(ErrorKind::kDimensionMismatch, "x0 has the wrong length");
  }
  ProbingSchedule probe = options.probe ? *options.probe
                                        : ProbingSchedule::for_case(config.noise_case);

  QLearnReport report;
  report.seed = config.seed;
  report.has_reference = options.reference.has_value();
  if (config.expectation_mode == ExpectationMode::kMonteCarlo && !oracle.can_branch()) {
    report.warnings.push_back(
        "oracle cannot branch; targets use one realized successor and carry full "
        "noise variance");
  }

  oracle.reset(x0, 0);
  QPair q = QPair::zero(d);
  GainPair gains = initial_gains;

  for (int i = 1; i <= config.max_iters; ++i) {
    const VectorXd probe_state = oracle.state();
    DataBatch batch{d, {}};
    batch.rows.reserve(config.tuples_per_iter);
    for (int t = 0; t < config.tuples_per_iter; ++t) {
      BellmanSample s = bellman_targets(oracle, cost, q, gains, probe.at(oracle.time(), d),
                                        config.branches, config.expectation_mode);
      if (!s.advanced) oracle.advance(s.u, s.v);
      batch.rows.push_back(std::move(s));
    }
    const Regression reg = assemble_regression(batch);
    QPair q_next = least_squares_h(reg.X, reg.Y1, reg.Y2, d);
    require_gamma_feasible(q_next);
    GainPair gains_next = gains_from_q(q_next);

    const TerminationDecision dec = termination(cost, q, q_next, gains, gains_next,
                                                probe_state, config.tol, config.stop_rule, i);
    QLearnIterate it;
    it.iter = i;
    it.dH1 = dec.dH1;
    it.dH2 = dec.dH2;
    it.term = dec.stop;
    it.values = values_from_q(q_next, gains_next);
    it.q = q_next;
    it.gains = gains_next;
    it.sigma_min = reg.sigma_min;
    it.sigma_max = reg.sigma_max;
    fill_errors(it, options.reference);
    if (options.on_iterate) options.on_iterate(it);
    report.history.push_back(std::move(it));

    q = std::move(q_next);
    gains = std::move(gains_next);
    report.iterations = i;
    if (dec.stop) {
      report.converged = true;
      report.termination_reason = dec.reason;
      break;
    }
  }
  if (!report.converged) {
    report.termination_reason =
        "max_iters = " + std::to_string(config.max_iters) + " reached";
  }
  report.q = q;
  report.gains = gains;
  report.values = report.history.back().values;

  report.post_states.push_back(oracle.state());
  for (int k = 0; k < options.post_steps; ++k) {
    const VectorXd& x = oracle.state();
    report.post_states.push_back(oracle.advance(gains.K2 * x, gains.K1 * x));
  }
  return report;
}

QLearnReport run_value_iteration(const SdltiSystem& sys, const CostSpec& cost,
                                 const AlgoConfig& config, const VectorXd& probe_state,
                                 const std::optional<Reference>& reference) {
  if (!(config.tol > 0.0) || config.max_iters < 1) {
    throw Error(ErrorKind::kInvalidArgument, "tol and max_iters must be positive");
  }
  if (probe_state.size() != sys.n()) {
    throw Error(ErrorKind::kDimensionMismatch, "probe state has the wrong length");
  }
  QLearnReport report;
  report.seed = config.seed;
  report.has_reference = reference.has_value();

  const Dimensions& d = sys.dims();
  ValuePair vals = ValuePair::zero(d.n);
  QPair q = QPair::zero(d);
  GainPair gains = GainPair::zero(d);
  for (int i = 1; i <= config.max_iters; ++i) {
    // Policy improvement from the current values, then the value update.
    GainPair gains_next = gains_from_values(sys, cost, vals);
    QPair q_next = h_from_values(sys, cost, vals);
    ValuePair vals_next = vi_value_update(sys, cost, vals, gains_next);

    const TerminationDecision dec = termination(cost, q, q_next, gains, gains_next,
                                                probe_state, config.tol, config.stop_rule, i);
    QLearnIterate it;
    it.iter = i;
    it.dH1 = dec.dH1;
    it.dH2 = dec.dH2;
    it.term = dec.stop;
    it.q = q_next;
    it.gains = gains_next;
    it.values = vals_next;
    fill_errors(it, reference);
    report.history.push_back(std::move(it));

    q = std::move(q_next);
    gains = std::move(gains_next);
    vals = std::move(vals_next);
    report.iterations = i;
    if (dec.stop) {
      report.converged = true;
      report.termination_reason = dec.reason;
      report.q = q;
      report.gains = gains;
      report.values = vals;
      return report;
    }
  }
  throw Error(ErrorKind::kNonConvergence,
              "value iteration did not converge in " + std::to_string(config.max_iters) +
                  " iterations");
}

void write_convergence_csv(std::ostream& os, const QLearnReport& report) {
  os << "iter,dH1_fro,dH2_fro,errK1,errK2,errP1,errP2,term_flag\n";
  for (const QLearnIterate& it : report.history) {
    os << it.iter << ',' << fmt_g(it.dH1) << ',' << fmt_g(it.dH2) << ','
       << fmt_g(it.errK1) << ',' << fmt_g(it.errK2) << ',' << fmt_g(it.errP1) << ','
       << fmt_g(it.errP2) << ',' << (it.term ? 1 : 0) << '\n';
  }
}

void write_convergence_csv(const std::string& path, const QLearnReport& report) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::kIo, "cannot open " + path + " for writing");
  write_convergence_csv(os, report);
}

void write_matrix(std::ostream& os, const MatrixXd& M) {
  char buf[40];
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.12e", M(i, j));
      if (j > 0) os << ' ';
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace h2hinf
