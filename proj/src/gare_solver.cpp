#include "h2hinf/gare_solver.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include <unsupported/Eigen/KroneckerProduct>

#include "h2hinf/errors.hpp"

namespace h2hinf {

namespace {

void check_values(const SdltiSystem& sys, const CostSpec& cost, const ValuePair& vals) {
  if (vals.n() != sys.n() || vals.P2.rows() != sys.n() || cost.n() != sys.n()) {
    throw Error(ErrorKind::kDimensionMismatch, "value matrices do not match the system");
  }
}

bool positive_definite(const MatrixXd& M) {
  Eigen::LLT<MatrixXd> llt(symmetrize(M));
  return llt.info() == Eigen::Success && min_eigenvalue(M) > 0.0;
}

std::string fmt(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

}  // namespace

MatrixXd closed_loop_quadratic_map(const SdltiSystem& sys, const MatrixXd& X,
                                   const MatrixXd& Y1, const MatrixXd& Y2) {
  GainPair(Y1, Y2).check(sys.dims());
  if (X.rows() != sys.n() || X.cols() != sys.n()) {
    throw Error(ErrorKind::kDimensionMismatch, "X does not match the system");
  }
  const MatrixXd noise = sys.A2() + sys.C2() * Y1;
  const MatrixXd drift = sys.A1() + sys.B1() * Y2 + sys.C1() * Y1;
  return symmetrize(noise.transpose() * X * noise + drift.transpose() * X * drift);
}

DeltaCheck delta_check(const SdltiSystem& sys, const CostSpec& cost, const ValuePair& vals) {
  check_values(sys, cost, vals);
  DeltaCheck d;
  d.delta1 = cost.gamma_sq() * MatrixXd::Identity(sys.m2(), sys.m2()) +
             sys.C2().transpose() * vals.P1 * sys.C2() +
             sys.C1().transpose() * vals.P1 * sys.C1();
  d.delta2 = MatrixXd::Identity(sys.m1(), sys.m1()) +
             sys.B1().transpose() * vals.P2 * sys.B1();
  d.delta1_pd = positive_definite(d.delta1);
  d.delta2_pd = positive_definite(d.delta2);
  return d;
}

GainPair gains_from_values(const SdltiSystem& sys, const CostSpec& cost,
                           const ValuePair& vals) {
  const DeltaCheck d = delta_check(sys, cost, vals);
  if (!d.delta1_pd) {
    throw Error(ErrorKind::kGammaInfeasible,
                "Delta1 is not positive definite; the attenuation level is too small");
  }
  if (!d.delta2_pd) {
    throw Error(ErrorKind::kNotPositiveDefinite, "Delta2 is not positive definite");
  }
  const int m1 = sys.m1();
  const int m2 = sys.m2();
  MatrixXd block(m1 + m2, m1 + m2);
  block.topLeftCorner(m2, m2) = d.delta1;
  block.topRightCorner(m2, m1) = sys.C1().transpose() * vals.P1 * sys.B1();
  block.bottomLeftCorner(m1, m2) = sys.B1().transpose() * vals.P2 * sys.C1();
  block.bottomRightCorner(m1, m1) = d.delta2;
  MatrixXd rhs(m1 + m2, sys.n());
  rhs.topRows(m2) = sys.C1().transpose() * vals.P1 * sys.A1() +
                    sys.C2().transpose() * vals.P1 * sys.A2();
  rhs.bottomRows(m1) = sys.B1().transpose() * vals.P2 * sys.A1();

  Eigen::FullPivLU<MatrixXd> lu(block);
  if (!block.allFinite() || !lu.isInvertible() || std::abs(lu.rcond()) < 1e-14) {
    throw Error(ErrorKind::kSingularMatrix, "gain block matrix is singular");
  }
  const MatrixXd K = -lu.solve(rhs);
  return GainPair(K.topRows(m2), K.bottomRows(m1));
}

ValuePair vi_value_update(const SdltiSystem& sys, const CostSpec& cost,
                          const ValuePair& vals, const GainPair& gains) {
  check_values(sys, cost, vals);
  gains.check(sys.dims());
  const MatrixXd K2tK2 = gains.K2.transpose() * gains.K2;
  MatrixXd P1 = closed_loop_quadratic_map(sys, vals.P1, gains.K1, gains.K2) - cost.Q() -
                K2tK2 + cost.gamma_sq() * gains.K1.transpose() * gains.K1;
  MatrixXd P2 = closed_loop_quadratic_map(sys, vals.P2, gains.K1, gains.K2) + cost.Q() +
                K2tK2;
  return ValuePair(symmetrize(P1), symmetrize(P2));
}

ValueUpdate qlearn_value_update(const SdltiSystem& sys, const CostSpec& cost,
                                const ValuePair& vals) {
  GainPair next = gains_from_values(sys, cost, vals);
  return ValueUpdate{vi_value_update(sys, cost, vals, next), std::move(next)};
}

Residuals gare_residuals(const SdltiSystem& sys, const CostSpec& cost,
                         const ValuePair& vals, const GainPair& gains) {
  const DeltaCheck d = delta_check(sys, cost, vals);
  gains.check(sys.dims());
  const Eigen::FullPivLU<MatrixXd> lu1(d.delta1);
  const Eigen::FullPivLU<MatrixXd> lu2(d.delta2);
  if (!lu1.isInvertible() || !lu2.isInvertible()) {
    throw Error(ErrorKind::kSingularMatrix, "Delta1 or Delta2 is singular");
  }
  const MatrixXd& P1 = vals.P1;
  const MatrixXd& P2 = vals.P2;
  const MatrixXd F1 = sys.A1() + sys.B1() * gains.K2;
  const MatrixXd G2 = sys.A1() + sys.C1() * gains.K1;
  const MatrixXd N2 = sys.A2() + sys.C2() * gains.K1;
  const MatrixXd M1 = F1.transpose() * P1 * sys.C1() + sys.A2().transpose() * P1 * sys.C2();
  const MatrixXd M2 = G2.transpose() * P2 * sys.B1();

  Residuals r;
  r.R1 = -P1 + F1.transpose() * P1 * F1 - cost.Q() + sys.A2().transpose() * P1 * sys.A2() -
         gains.K2.transpose() * gains.K2 - M1 * lu1.solve(M1.transpose());
  r.R2 = -P2 + G2.transpose() * P2 * G2 + cost.Q() + N2.transpose() * P2 * N2 -
         M2 * lu2.solve(M2.transpose());
  r.R1 = symmetrize(r.R1);
  r.R2 = symmetrize(r.R2);
  return r;
}

StabilityCertificate ms_stable(const MatrixXd& Abar1, const MatrixXd& Abar2) {
  if (Abar1.rows() != Abar1.cols() || Abar1.rows() != Abar2.rows() ||
      Abar1.cols() != Abar2.cols()) {
    throw Error(ErrorKind::kDimensionMismatch, "ms_stable needs equal square matrices");
  }
  const MatrixXd lifted = Eigen::kroneckerProduct(Abar1, Abar1).eval() +
                          Eigen::kroneckerProduct(Abar2, Abar2).eval();
  if (!lifted.allFinite()) return StabilityCertificate{INFINITY, false};
  Eigen::EigenSolver<MatrixXd> es(lifted, false);
  const double radius = es.eigenvalues().cwiseAbs().maxCoeff();
  return StabilityCertificate{radius, radius < 1.0};
}

StabilityCertificate closed_loop_stability(const SdltiSystem& sys, const GainPair& gains) {
  gains.check(sys.dims());
  return ms_stable(sys.A1() + sys.B1() * gains.K2 + sys.C1() * gains.K1,
                   sys.A2() + sys.C2() * gains.K1);
}

SolveReport solve_coupled_gare(const SdltiSystem& sys, const CostSpec& cost, double tol,
                               int max_iters) {
  if (!(tol > 0.0) || max_iters < 1) {
    throw Error(ErrorKind::kInvalidArgument, "tol and max_iters must be positive");
  }
  SolveReport report;
  ValuePair vals = ValuePair::zero(sys.n());
  for (int i = 1; i <= max_iters; ++i) {
    ValueUpdate up = qlearn_value_update(sys, cost, vals);
    const double dP1 = (up.values.P1 - vals.P1).norm();
    const double dP2 = (up.values.P2 - vals.P2).norm();
    if (!std::isfinite(dP1) || !std::isfinite(dP2)) {
      throw Error(ErrorKind::kDivergence, "value iterates became non-finite");
    }
    const Residuals res = gare_residuals(sys, cost, up.values, up.gains);
    report.history.push_back(
        SolveIterate{up.values, up.gains, dP1, dP2, res.R1.norm(), res.R2.norm()});
    vals = std::move(up.values);
    if (dP1 < tol && dP2 < tol) {
      report.iterations = i;
      report.values = vals;
      report.gains = gains_from_values(sys, cost, vals);
      const Residuals fin = gare_residuals(sys, cost, report.values, report.gains);
      report.residual1 = fin.R1.norm();
      report.residual2 = fin.R2.norm();
      const StabilityCertificate cert = closed_loop_stability(sys, report.gains);
      report.stable = cert.stable;
      report.stability_radius = cert.radius;
      return report;
    }
  }
  throw Error(ErrorKind::kNonConvergence,
              "coupled GARE iteration did not converge in " + std::to_string(max_iters) +
                  " iterations");
}

std::vector<ValuePair> fixed_policy_value_sequence(const SdltiSystem& sys,
                                                   const CostSpec& cost,
                                                   const MatrixXd& eta1,
                                                   const MatrixXd& eta2, int iters) {
  const GainPair eta(eta1, eta2);
  eta.check(sys.dims());
  std::vector<ValuePair> seq;
  seq.reserve(iters + 1);
  seq.push_back(ValuePair::zero(sys.n()));
  for (int i = 0; i < iters; ++i) {
    seq.push_back(vi_value_update(sys, cost, seq.back(), eta));
  }
  return seq;
}

void write_solve_csv(std::ostream& os, const SolveReport& report) {
  os << "iter,dP1_fro,dP2_fro,res1_fro,res2_fro\n";
  for (std::size_t i = 0; i < report.history.size(); ++i) {
    const SolveIterate& it = report.history[i];
    os << i + 1 << ',' << fmt(it.dP1) << ',' << fmt(it.dP2) << ',' << fmt(it.res1) << ','
       << fmt(it.res2) << '\n';
  }
}

void write_solve_csv(const std::string& path, const SolveReport& report) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::kIo, "cannot open " + path + " for writing");
  write_solve_csv(os, report);
}

}  // namespace h2hinf
