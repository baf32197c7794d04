#include "h2hinf/qfunction.hpp"

#include <cmath>

#include "h2hinf/errors.hpp"

namespace h2hinf {

namespace {

int block_offset(const Dimensions& d, int b) {
  return b == 1 ? d.x_offset() : b == 2 ? d.u_offset() : d.v_offset();
}

int block_size(const Dimensions& d, int b) {
  return b == 1 ? d.n : b == 2 ? d.m1 : d.m2;
}

void check_symmetric(const MatrixXd& M, const char* name) {
  if (M.rows() != M.cols()) {
    throw Error(ErrorKind::kDimensionMismatch, std::string(name) + " must be square");
  }
  if (max_asymmetry(M) > kSymmetryTol) {
    throw Error(ErrorKind::kNotSymmetric, std::string(name) + " must be symmetric");
  }
}

}  // namespace

Eigen::Block<const MatrixXd> gamma_block(const MatrixXd& H, const Dimensions& dims,
                                         int r, int c) {
  if (r < 1 || r > 3 || c < 1 || c > 3 || H.rows() != dims.p() || H.cols() != dims.p()) {
    throw Error(ErrorKind::kDimensionMismatch, "invalid Gamma block request");
  }
  return H.block(block_offset(dims, r), block_offset(dims, c), block_size(dims, r),
                 block_size(dims, c));
}

QPair h_from_values(const SdltiSystem& sys, const CostSpec& cost, const ValuePair& vals) {
  const Dimensions& d = sys.dims();
  if (vals.n() != d.n || cost.n() != d.n) {
    throw Error(ErrorKind::kDimensionMismatch, "value matrices do not match the system");
  }
  MatrixXd F1(d.n, d.p());
  F1 << sys.A1(), sys.B1(), sys.C1();
  MatrixXd F2 = MatrixXd::Zero(d.n, d.p());
  F2.leftCols(d.n) = sys.A2();
  F2.rightCols(d.m2) = sys.C2();

  MatrixXd W1 = MatrixXd::Zero(d.p(), d.p());
  MatrixXd W2 = MatrixXd::Zero(d.p(), d.p());
  W1.topLeftCorner(d.n, d.n) = -cost.Q();
  W1.block(d.u_offset(), d.u_offset(), d.m1, d.m1) = -MatrixXd::Identity(d.m1, d.m1);
  W1.bottomRightCorner(d.m2, d.m2) = cost.gamma_sq() * MatrixXd::Identity(d.m2, d.m2);
  W2.topLeftCorner(d.n, d.n) = cost.Q();
  W2.block(d.u_offset(), d.u_offset(), d.m1, d.m1) = MatrixXd::Identity(d.m1, d.m1);

  MatrixXd H1 = W1 + F1.transpose() * vals.P1 * F1 + F2.transpose() * vals.P1 * F2;
  MatrixXd H2 = W2 + F1.transpose() * vals.P2 * F1 + F2.transpose() * vals.P2 * F2;
  return QPair(symmetrize(H1), symmetrize(H2), d);
}

GainPair gains_from_q(const QPair& q) {
  const Dimensions& d = q.dims();
  const int m = d.m1 + d.m2;
  // Unknowns stacked as [K1; K2].
  MatrixXd block(m, m);
  block.topLeftCorner(d.m2, d.m2) = gamma_block(q.H1(), d, 3, 3);
  block.topRightCorner(d.m2, d.m1) = gamma_block(q.H1(), d, 2, 3).transpose();
  block.bottomLeftCorner(d.m1, d.m2) = gamma_block(q.H2(), d, 2, 3);
  block.bottomRightCorner(d.m1, d.m1) = gamma_block(q.H2(), d, 2, 2);
  MatrixXd rhs(m, d.n);
  rhs.topRows(d.m2) = gamma_block(q.H1(), d, 1, 3).transpose();
  rhs.bottomRows(d.m1) = gamma_block(q.H2(), d, 1, 2).transpose();

  Eigen::FullPivLU<MatrixXd> lu(block);
  if (!block.allFinite() || !lu.isInvertible() ||
      std::abs(lu.rcond()) < 1e-14) {
    throw Error(ErrorKind::kSingularMatrix, "gain extraction block is singular");
  }
  const MatrixXd K = -lu.solve(rhs);
  return GainPair(K.topRows(d.m2), K.bottomRows(d.m1));
}

ValuePair values_from_q(const QPair& q, const GainPair& gains) {
  const Dimensions& d = q.dims();
  gains.check(d);
  MatrixXd T(d.p(), d.n);
  T << MatrixXd::Identity(d.n, d.n), gains.K2, gains.K1;
  return ValuePair(symmetrize(T.transpose() * q.H1() * T),
                   symmetrize(T.transpose() * q.H2() * T));
}

VectorXd vecs(const MatrixXd& H) {
  check_symmetric(H, "vecs input");
  const auto p = H.rows();
  VectorXd out(p * (p + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i; j < p; ++j) out(k++) = H(i, j);
  }
  return out;
}

VectorXd vech(const MatrixXd& Z) {
  check_symmetric(Z, "vech input");
  const auto p = Z.rows();
  VectorXd out(p * (p + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i; j < p; ++j) out(k++) = i == j ? Z(i, j) : 2.0 * Z(i, j);
  }
  return out;
}

VectorXd vech_outer(const VectorXd& z) {
  const auto p = z.size();
  VectorXd out(p * (p + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i; j < p; ++j) {
      out(k++) = i == j ? z(i) * z(j) : 2.0 * z(i) * z(j);
    }
  }
  return out;
}

MatrixXd mat_from_vecs(const VectorXd& h, int p) {
  if (h.size() != static_cast<Eigen::Index>(p) * (p + 1) / 2) {
    throw Error(ErrorKind::kDimensionMismatch, "vecs length does not match p(p+1)/2");
  }
  MatrixXd H(p, p);
  Eigen::Index k = 0;
  for (int i = 0; i < p; ++i) {
    for (int j = i; j < p; ++j) {
      H(i, j) = h(k);
      H(j, i) = h(k);
      ++k;
    }
  }
  return H;
}

double q_value(const MatrixXd& H, const VectorXd& z) {
  if (H.rows() != z.size() || H.cols() != z.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "q_value shape mismatch");
  }
  return z.dot(H * z);
}

VectorXd stack(const VectorXd& x, const VectorXd& u, const VectorXd& v) {
  VectorXd z(x.size() + u.size() + v.size());
  z << x, u, v;
  return z;
}

}  // namespace h2hinf
