#include "h2hinf/f16.hpp"

namespace h2hinf {

namespace {

MatrixXd mat(int rows, int cols, std::initializer_list<double> values) {
  MatrixXd M(rows, cols);
  auto it = values.begin();
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) M(i, j) = *it++;
  }
  return M;
}

}  // namespace

SdltiSystem f16_system() {
  SystemMatrices m;
  m.A1 = mat(3, 3, {0.906488, 0.0816012, -0.0005,
                    0.0741349, 0.90121, -0.000708383,
                    0.0, 0.0, 0.132655});
  m.A2 = mat(3, 3, {0.0072, 0.0026, 0.0001,
                    0.0041, 0.0917, 0.0072,
                    0.0, 0.0, 0.0505});
  m.B1 = mat(3, 1, {-0.00150808, -0.0096, 0.867345});
  m.C1 = mat(3, 1, {0.00951892, 0.00038373, 0.0});
  m.C2 = mat(3, 1, {0.00156, 0.00037, 0.0});
  return SdltiSystem(std::move(m));
}

CostSpec f16_cost() { return CostSpec(1.0, MatrixXd::Identity(3, 3)); }

Reference f16_reference() {
  ValuePair values(mat(3, 3, {-16.3448, -13.4481, 0.0079,
                              -13.4481, -17.2342, 0.0067,
                              0.0079, 0.0067, -1.0101}),
                   mat(3, 3, {16.9864, 14.0870, -0.0082,
                              14.0870, 17.8859, -0.0070,
                              -0.0082, -0.0070, 1.0101}));
  GainPair gains(mat(1, 3, {0.1559, 0.1353, 0.0}), mat(1, 3, {0.0949, 0.1097, -0.0661}));
  return Reference{std::move(values), std::move(gains)};
}

GainPair f16_initial_gains() {
  return GainPair(mat(1, 3, {0.6305, 1.6421, -1.0436}), mat(1, 3, {2.7695, 0.1328, -0.1702}));
}

VectorXd f16_initial_state() {
  VectorXd x(3);
  x << 10.0, 5.0, -2.0;
  return x;
}

}  // namespace h2hinf
