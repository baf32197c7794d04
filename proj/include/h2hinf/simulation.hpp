#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "h2hinf/noise.hpp"
#include "h2hinf/probing.hpp"
#include "h2hinf/types.hpp"

namespace h2hinf {

/// States with a component above this magnitude abort the simulation.
inline constexpr double kDivergenceBound = 1e12;

VectorXd step(const SdltiSystem& sys, const VectorXd& x, const VectorXd& u,
              const VectorXd& v, double omega);

struct StageCosts {
  double r1;  // gamma^2 |v|^2 - x'Qx - |u|^2
  double r2;  // x'Qx + |u|^2
};

StageCosts stage_costs(const CostSpec& cost, const VectorXd& x, const VectorXd& u,
                       const VectorXd& v);

/// E[x+' P x+ | x, u, v] under E(w) = 0, E(w^2) = 1.
double expected_next_quadratic(const SdltiSystem& sys, const MatrixXd& P,
                               const VectorXd& x, const VectorXd& u, const VectorXd& v);

/// One realized path. states has one more entry than every other list.
struct Trajectory {
  std::vector<VectorXd> states;
  std::vector<VectorXd> inputs_u;
  std::vector<VectorXd> inputs_v;
  std::vector<double> noises;
  std::vector<double> r1;
  std::vector<double> r2;
  long k0 = 0;

  std::size_t steps() const { return noises.size(); }
};

/// u_k = K2 x_k + e_u(k), v_k = K1 x_k + e_v(k), with the probe evaluated at
/// absolute time k0 + j. Throws DivergenceError on a non-finite or huge state.
Trajectory simulate_closed_loop(const SdltiSystem& sys, const CostSpec& cost,
                                const GainPair& gains, const VectorXd& x0, long steps,
                                NoiseSource& noise,
                                const ProbingSchedule* probe = nullptr, long k0 = 0);

/// Throws DivergenceError if any component of x is non-finite or exceeds
/// kDivergenceBound.
void check_finite_state(const VectorXd& x, long k);

/// Ratio of expected output energy sum(x'Qx + u'u) to disturbance energy
/// sum(v'v) from x0 = 0 under u = K2 x and the given open-loop disturbance
/// (m2 x horizon), averaged over `runs` noise realizations.
double empirical_attenuation(const SdltiSystem& sys, const CostSpec& cost,
                             const MatrixXd& K2, const MatrixXd& disturbance,
                             long horizon, int runs, std::uint64_t seed);

void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

}  // namespace h2hinf
