#include "h2hinf/simulation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "h2hinf/errors.hpp"

namespace h2hinf {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::kDimensionMismatch, what);
}

void check_inputs(const Dimensions& d, const VectorXd& x, const VectorXd& u,
                  const VectorXd& v) {
  require(x.size() == d.n, "state has the wrong length");
  require(u.size() == d.m1, "control has the wrong length");
  require(v.size() == d.m2, "disturbance has the wrong length");
}

std::string fmt(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

}  // namespace

VectorXd step(const SdltiSystem& sys, const VectorXd& x, const VectorXd& u,
              const VectorXd& v, double omega) {
  check_inputs(sys.dims(), x, u, v);
  return sys.A1() * x + sys.B1() * u + sys.C1() * v +
         (sys.A2() * x + sys.C2() * v) * omega;
}

StageCosts stage_costs(const CostSpec& cost, const VectorXd& x, const VectorXd& u,
                       const VectorXd& v) {
  require(x.size() == cost.n(), "state has the wrong length");
  const double out = x.dot(cost.Q() * x) + u.squaredNorm();
  return StageCosts{cost.gamma_sq() * v.squaredNorm() - out, out};
}

double expected_next_quadratic(const SdltiSystem& sys, const MatrixXd& P,
                               const VectorXd& x, const VectorXd& u, const VectorXd& v) {
  check_inputs(sys.dims(), x, u, v);
  require(P.rows() == sys.n() && P.cols() == sys.n(), "P has the wrong shape");
  const VectorXd mean = sys.A1() * x + sys.B1() * u + sys.C1() * v;
  const VectorXd spread = sys.A2() * x + sys.C2() * v;
  return mean.dot(P * mean) + spread.dot(P * spread);
}

void check_finite_state(const VectorXd& x, long k) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x(i)) || std::abs(x(i)) > kDivergenceBound) {
      throw DivergenceError(k, "state diverged at step " + std::to_string(k));
    }
  }
}

Trajectory simulate_closed_loop(const SdltiSystem& sys, const CostSpec& cost,
                                const GainPair& gains, const VectorXd& x0, long steps,
                                NoiseSource& noise, const ProbingSchedule* probe,
                                long k0) {
  if (steps < 1) throw Error(ErrorKind::kInvalidArgument, "steps must be at least 1");
  gains.check(sys.dims());
  require(x0.size() == sys.n(), "initial state has the wrong length");

  Trajectory traj;
  traj.k0 = k0;
  traj.states.reserve(steps + 1);
  traj.states.push_back(x0);
  for (long j = 0; j < steps; ++j) {
    const VectorXd& x = traj.states.back();
    VectorXd u = gains.K2 * x;
    VectorXd v = gains.K1 * x;
    if (probe != nullptr && probe->active()) {
      auto [eu, ev] = probe->at(k0 + j, sys.dims());
      u += eu;
      v += ev;
    }
    const double w = noise.next();
    const StageCosts c = stage_costs(cost, x, u, v);
    VectorXd next = step(sys, x, u, v, w);
    check_finite_state(next, k0 + j + 1);
    traj.inputs_u.push_back(std::move(u));
    traj.inputs_v.push_back(std::move(v));
    traj.noises.push_back(w);
    traj.r1.push_back(c.r1);
    traj.r2.push_back(c.r2);
    traj.states.push_back(std::move(next));
  }
  return traj;
}

double empirical_attenuation(const SdltiSystem& sys, const CostSpec& cost,
                             const MatrixXd& K2, const MatrixXd& disturbance,
                             long horizon, int runs, std::uint64_t seed) {
  require(K2.rows() == sys.m1() && K2.cols() == sys.n(), "K2 has the wrong shape");
  require(disturbance.rows() == sys.m2(), "disturbance has the wrong row count");
  if (horizon < 1 || disturbance.cols() < horizon || runs < 1) {
    throw Error(ErrorKind::kInvalidArgument,
                "horizon and runs must be positive and covered by the disturbance");
  }
  const double v_energy = disturbance.leftCols(horizon).squaredNorm();
  if (!(v_energy > 0.0)) {
    throw Error(ErrorKind::kZeroDisturbanceEnergy, "zero disturbance energy");
  }

  double out_energy = 0.0;
  for (int r = 0; r < runs; ++r) {
    NoiseSource noise(derive_seed(seed, 0, static_cast<std::uint64_t>(r)));
    VectorXd x = VectorXd::Zero(sys.n());
    for (long k = 0; k < horizon; ++k) {
      const VectorXd u = K2 * x;
      const VectorXd v = disturbance.col(k);
      out_energy += stage_costs(cost, x, u, v).r2;
      x = step(sys, x, u, v, noise.next());
      check_finite_state(x, k + 1);
    }
  }
  return out_energy / runs / v_energy;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  if (traj.states.empty()) return;
  const auto n = traj.states.front().size();
  const auto m1 = traj.inputs_u.empty() ? 0 : traj.inputs_u.front().size();
  const auto m2 = traj.inputs_v.empty() ? 0 : traj.inputs_v.front().size();
  os << "k";
  for (Eigen::Index i = 1; i <= n; ++i) os << ",x" << i;
  for (Eigen::Index i = 1; i <= m1; ++i) os << ",u" << i;
  for (Eigen::Index i = 1; i <= m2; ++i) os << ",v" << i;
  os << ",omega,r1,r2\n";
  for (std::size_t j = 0; j < traj.states.size(); ++j) {
    os << traj.k0 + static_cast<long>(j);
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << fmt(traj.states[j](i));
    const bool terminal = j == traj.steps();
    for (Eigen::Index i = 0; i < m1; ++i) {
      os << ',';
      if (!terminal) os << fmt(traj.inputs_u[j](i));
    }
    for (Eigen::Index i = 0; i < m2; ++i) {
      os << ',';
      if (!terminal) os << fmt(traj.inputs_v[j](i));
    }
    if (terminal) {
      os << ",,,\n";
    } else {
      os << ',' << fmt(traj.noises[j]) << ',' << fmt(traj.r1[j]) << ','
         << fmt(traj.r2[j]) << '\n';
    }
  }
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::kIo, "cannot open " + path + " for writing");
  write_trajectory_csv(os, traj);
  if (!os) throw Error(ErrorKind::kIo, "failed writing " + path);
}

}  // namespace h2hinf
