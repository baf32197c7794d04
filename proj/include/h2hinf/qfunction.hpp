#pragma once

#include "h2hinf/types.hpp"

namespace h2hinf {

/// Block (r, c) of H in the (x, u, v) partition, 1-based like the
/// Gamma(r, c) notation: 1 = x, 2 = u, 3 = v.
Eigen::Block<const MatrixXd> gamma_block(const MatrixXd& H, const Dimensions& dims,
                                         int r, int c);

QPair h_from_values(const SdltiSystem& sys, const CostSpec& cost, const ValuePair& vals);

/// Minimax gains read off the Gamma blocks of H1 and H2. Throws
/// Error(kSingularMatrix) when the block system is not invertible.
GainPair gains_from_q(const QPair& q);

/// P = [I; K2; K1]' H [I; K2; K1] for both kernels.
ValuePair values_from_q(const QPair& q, const GainPair& gains);

/// Row-major upper triangle [H11, H12, ..., H1p, H22, ..., Hpp].
VectorXd vecs(const MatrixXd& H);
/// As vecs with off-diagonal entries doubled, so vech(Z).vecs(H) = Tr(ZH).
VectorXd vech(const MatrixXd& Z);
/// vech(z z') without forming the outer product.
VectorXd vech_outer(const VectorXd& z);
MatrixXd mat_from_vecs(const VectorXd& h, int p);

double q_value(const MatrixXd& H, const VectorXd& z);

/// z = [x; u; v].
VectorXd stack(const VectorXd& x, const VectorXd& u, const VectorXd& v);

}  // namespace h2hinf
