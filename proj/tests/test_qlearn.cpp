#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "h2hinf/errors.hpp"
#include "h2hinf/f16.hpp"
#include "h2hinf/gare_solver.hpp"
#include "h2hinf/oracle.hpp"
#include "h2hinf/probing.hpp"
#include "h2hinf/qfunction.hpp"
#include "h2hinf/qlearn.hpp"
#include "support/desk_oracle.hpp"
#include "support/random_systems.hpp"

using namespace h2hinf;

namespace {

MatrixXd s(double a) { return MatrixXd::Constant(1, 1, a); }

AlgoConfig analytic_config(NoiseCase c = NoiseCase::kCase1) {
  AlgoConfig cfg;
  cfg.expectation_mode = ExpectationMode::kAnalytic;
  cfg.noise_case = c;
  return cfg;
}

Reference solved_f16() {
  const SolveReport sol = solve_coupled_gare(f16_system(), f16_cost(), 1e-13, 5000);
  return Reference{sol.values, sol.gains};
}

/// Plant that exposes only real-time stepping.
class NoBranchOracle final : public TrajectoryOracle {
 public:
  explicit NoBranchOracle(TrajectoryOracle& inner) : inner_(inner) {}
  Dimensions dims() const override { return inner_.dims(); }
  const VectorXd& state() const override { return inner_.state(); }
  long time() const override { return inner_.time(); }
  VectorXd advance(const VectorXd& u, const VectorXd& v) override { return inner_.advance(u, v); }
  bool can_branch() const override { return false; }
  std::vector<VectorXd> branch(const VectorXd&, const VectorXd&, int) override {
    throw Error(ErrorKind::kOracleFailure, "no branching");
  }
  void reset(const VectorXd& x, long k) override { inner_.reset(x, k); }

 private:
  TrajectoryOracle& inner_;
};

}  // namespace

TEST(ProbingSchedule, CaseValuesAtZero) {
  const Dimensions d{3, 1, 1};
  auto [u1, v1] = ProbingSchedule::for_case(NoiseCase::kCase1).at(0, d);
  EXPECT_DOUBLE_EQ(u1(0), 1.0);
  EXPECT_DOUBLE_EQ(v1(0), 1.0);
  auto [u2, v2] = ProbingSchedule::for_case(NoiseCase::kCase2).at(0, d);
  EXPECT_DOUBLE_EQ(u2(0), 1.0);
  EXPECT_DOUBLE_EQ(v2(0), 1.0);
  auto [u3, v3] = ProbingSchedule::for_case(NoiseCase::kCase3).at(0, d);
  EXPECT_DOUBLE_EQ(u3(0), 2.0);
  EXPECT_DOUBLE_EQ(v3(0), 2.0);
}

TEST(ProbingSchedule, FormulasAtLaterTimes) {
  const Dimensions d{3, 1, 1};
  const double k = 7.0;
  auto [u, v] = ProbingSchedule::for_case(NoiseCase::kCase1).at(7, d);
  EXPECT_DOUBLE_EQ(u(0), std::sin(1.009 * k) + std::pow(std::cos(0.538 * k), 2));
  EXPECT_DOUBLE_EQ(v(0), std::sin(9.7 * k) + std::pow(std::cos(10.2 * k), 2));
  auto [u2, v2] = ProbingSchedule::for_case(NoiseCase::kCase2).at(7, d);
  EXPECT_DOUBLE_EQ(u2(0), std::sin(0.9 * k) + std::cos(100.0 * k));
  EXPECT_DOUBLE_EQ(v2(0), std::sin(10.0 * k) + std::cos(10.0 * k));
}

TEST(ProbingSchedule, InactiveAndBroadcast) {
  auto [u0, v0] = ProbingSchedule().at(3, Dimensions{2, 2, 2});
  EXPECT_TRUE(u0.isZero(0.0));
  EXPECT_TRUE(v0.isZero(0.0));
  const ProbingSchedule p = ProbingSchedule::for_case(NoiseCase::kCase1);
  EXPECT_FALSE(p.deactivated().active());
  auto [u, v] = p.at(0, Dimensions{2, 2, 3});
  ASSERT_EQ(u.size(), 2);
  ASSERT_EQ(v.size(), 3);
  EXPECT_DOUBLE_EQ(u(1), std::sin(1.0) + std::pow(std::cos(1.0), 2));
  EXPECT_DOUBLE_EQ(v(2), std::sin(2.0) + std::pow(std::cos(2.0), 2));
}

TEST(ProbingSchedule, OnlySinusoidsAccepted) {
  EXPECT_THROW(ProbingSchedule::custom({SinusoidTerm{SinusoidTerm::Kind::kCos, 0.0, 1.0, false}},
                                       {SinusoidTerm{}}),
               Error);
  EXPECT_THROW(ProbingSchedule::custom({SinusoidTerm{SinusoidTerm::Kind::kSin, 1.0, 0.0, false}},
                                       {SinusoidTerm{}}),
               Error);
  EXPECT_THROW(ProbingSchedule::custom({}, {SinusoidTerm{}}), Error);
  EXPECT_THROW(ProbingSchedule::parse_terms("white:1"), Error);
  EXPECT_THROW(ProbingSchedule::parse_terms("gaussian"), Error);
  EXPECT_THROW(ProbingSchedule::for_case(NoiseCase::kCustom), Error);
  const auto terms = ProbingSchedule::parse_terms("sin:1.009,cos2:0.538:2");
  ASSERT_EQ(terms.size(), 2u);
  EXPECT_TRUE(terms[1].squared);
  EXPECT_EQ(terms[1].amplitude, 2.0);
}

TEST(BellmanTargets, ZeroKernelsGiveStageCosts) {
  SimulatedOracle oracle(f16_system(), f16_initial_state(), 1);
  const ProbingSchedule p = ProbingSchedule::for_case(NoiseCase::kCase1);
  const BellmanSample smp = bellman_targets(oracle, f16_cost(), QPair::zero(Dimensions{3, 1, 1}),
                                            f16_initial_gains(), p.at(0, Dimensions{3, 1, 1}),
                                            10, ExpectationMode::kMonteCarlo);
  const StageCosts c = stage_costs(f16_cost(), smp.x, smp.u, smp.v);
  EXPECT_EQ(smp.d1, c.r1);
  EXPECT_EQ(smp.d2, c.r2);
  EXPECT_EQ(oracle.time(), 0);
}

TEST(BellmanTargets, OriginWithCaseOneProbe) {
  SimulatedOracle oracle(f16_system(), VectorXd::Zero(3), 1);
  const Dimensions d{3, 1, 1};
  const BellmanSample smp = bellman_targets(
      oracle, f16_cost(), QPair::zero(d), GainPair::zero(d),
      ProbingSchedule::for_case(NoiseCase::kCase1).at(0, d), 5, ExpectationMode::kAnalytic);
  EXPECT_DOUBLE_EQ(smp.d1, 0.0);
  EXPECT_DOUBLE_EQ(smp.d2, 1.0);
}

TEST(BellmanTargets, AnalyticModeMatchesBellmanIdentity) {
  const SdltiSystem sys = f16_system();
  const ValuePair P = solved_f16().values;
  const QPair q = h_from_values(sys, f16_cost(), P);
  const GainPair g = gains_from_q(q);
  SimulatedOracle oracle(sys, f16_initial_state(), 1);
  const Dimensions d = sys.dims();
  const auto probe = ProbingSchedule::for_case(NoiseCase::kCase3).at(4, d);
  const BellmanSample smp =
      bellman_targets(oracle, f16_cost(), q, g, probe, 1, ExpectationMode::kAnalytic);
  MatrixXd T(5, 3);
  T << MatrixXd::Identity(3, 3), g.K2, g.K1;
  const StageCosts c = stage_costs(f16_cost(), smp.x, smp.u, smp.v);
  EXPECT_NEAR(smp.d1,
              c.r1 + expected_next_quadratic(sys, T.transpose() * q.H1() * T, smp.x, smp.u, smp.v),
              1e-10);
  EXPECT_NEAR(smp.d2,
              c.r2 + expected_next_quadratic(sys, T.transpose() * q.H2() * T, smp.x, smp.u, smp.v),
              1e-10);
  EXPECT_TRUE(smp.row == vech_outer(stack(smp.x, smp.u, smp.v)));
}

TEST(AssembleRegression, RankChecks) {
  const Dimensions d{3, 1, 1};
  SimulatedOracle oracle(f16_system(), f16_initial_state(), 3);
  const ProbingSchedule off;
  const ProbingSchedule on = ProbingSchedule::for_case(NoiseCase::kCase1);
  DataBatch unprobed{d, {}}, probed{d, {}};
  for (int k = 0; k < 20; ++k) {
    auto smp = bellman_targets(oracle, f16_cost(), QPair::zero(d), f16_initial_gains(),
                               off.at(k, d), 1, ExpectationMode::kAnalytic);
    oracle.advance(smp.u, smp.v);
    unprobed.rows.push_back(smp);
  }
  try {
    assemble_regression(unprobed);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInsufficientExcitation);
  }
  for (int k = 0; k < 20; ++k) {
    auto smp = bellman_targets(oracle, f16_cost(), QPair::zero(d), f16_initial_gains(),
                               on.at(oracle.time(), d), 1, ExpectationMode::kAnalytic);
    oracle.advance(smp.u, smp.v);
    probed.rows.push_back(smp);
  }
  const Regression reg = assemble_regression(probed);
  EXPECT_EQ(reg.X.rows(), 20);
  EXPECT_EQ(reg.X.cols(), 15);
  EXPECT_GT(reg.sigma_min, 1e-10 * reg.sigma_max);

  DataBatch dup{d, std::vector<BellmanSample>(20, probed.rows.front())};
  EXPECT_THROW(assemble_regression(dup), Error);
  DataBatch few{d, std::vector<BellmanSample>(probed.rows.begin(), probed.rows.begin() + 14)};
  EXPECT_THROW(assemble_regression(few), Error);
}

TEST(LeastSquaresH, RecoversSyntheticKernels) {
  std::mt19937_64 rng(12);
  const Dimensions d{3, 1, 1};
  const MatrixXd H1 = testkit::random_symmetric(rng, 5), H2 = testkit::random_symmetric(rng, 5);
  MatrixXd X(30, 15);
  for (int i = 0; i < 30; ++i) X.row(i) = vech_outer(testkit::random_matrix(rng, 5, 1)).transpose();
  const QPair q = least_squares_h(X, X * vecs(H1), X * vecs(H2), d);
  EXPECT_LT((q.H1() - H1).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((q.H2() - H2).cwiseAbs().maxCoeff(), 1e-10);
  const QPair zero = least_squares_h(X, VectorXd::Zero(30), VectorXd::Zero(30), d);
  EXPECT_TRUE(zero.H1().isZero(0.0));
  EXPECT_THROW(least_squares_h(MatrixXd::Zero(30, 15), VectorXd::Zero(30), VectorXd::Zero(30), d),
               Error);
}

TEST(LeastSquaresH, FirstAnalyticIterationsFollowModelRecursion) {
  // Starting from zero kernels, the first estimate carries the zero value
  // pair and the second carries (-Q, Q).
  const SdltiSystem sys = f16_system();
  SimulatedOracle oracle(sys, f16_initial_state(), 7);
  AlgoConfig cfg = analytic_config();
  cfg.max_iters = 2;
  const QLearnReport rep = run_q_learning(oracle, f16_cost(), cfg, f16_initial_gains(),
                                          f16_initial_state(), {std::nullopt, std::nullopt, 0});
  ASSERT_EQ(rep.history.size(), 2u);
  const QPair h1 = h_from_values(sys, f16_cost(), ValuePair::zero(3));
  const QPair h2 = h_from_values(sys, f16_cost(), ValuePair(-MatrixXd::Identity(3, 3),
                                                            MatrixXd::Identity(3, 3)));
  EXPECT_LT((rep.history[0].q.H1() - h1.H1()).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((rep.history[0].q.H2() - h1.H2()).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((rep.history[1].q.H1() - h2.H1()).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((rep.history[1].q.H2() - h2.H2()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Termination, Rules) {
  const SdltiSystem sys = f16_system();
  const Reference ref = solved_f16();
  const QPair q = h_from_values(sys, f16_cost(), ref.values);
  const VectorXd x = f16_initial_state();
  TerminationDecision t = termination(f16_cost(), q, q, ref.gains, ref.gains, x, 1e-3);
  EXPECT_TRUE(t.stop);
  EXPECT_TRUE(t.admissible);
  EXPECT_FALSE(t.reason.empty());

  MatrixXd bump = MatrixXd::Zero(5, 5);
  bump(0, 0) = 1e-2;
  const QPair moved(q.H1() + bump, q.H2(), q.dims());
  t = termination(f16_cost(), q, moved, ref.gains, ref.gains, x, 1e-3);
  EXPECT_FALSE(t.stop);
  EXPECT_FALSE(t.h1_converged);
  EXPECT_TRUE(t.h2_converged);
  EXPECT_NEAR(t.dH1, 1e-2, 1e-12);

  // Q2 - Q1 at the solution is x'(P2 - P1)x, far above r2.
  t = termination(f16_cost(), q, q, ref.gains, ref.gains, x, 1e-3, StopRule::kQ2MinusQ1);
  EXPECT_FALSE(t.admissible);
  EXPECT_FALSE(t.stop);
}

TEST(RunQLearning, AnalyticF16ConvergesToModelSolution) {
  const Reference ref = solved_f16();
  SimulatedOracle oracle(f16_system(), f16_initial_state(), 7);
  const QLearnReport rep = run_q_learning(oracle, f16_cost(), analytic_config(),
                                          f16_initial_gains(), f16_initial_state(),
                                          {ref, std::nullopt, 100});
  EXPECT_TRUE(rep.converged) << rep.termination_reason;
  EXPECT_EQ(rep.history.size(), static_cast<std::size_t>(rep.iterations));
  EXPECT_LT((rep.gains.K1 - ref.gains.K1).norm(), 2e-3);
  EXPECT_LT((rep.gains.K2 - ref.gains.K2).norm(), 2e-3);
  EXPECT_TRUE(rep.history.back().term);
  EXPECT_TRUE(closed_loop_stability(f16_system(), rep.gains).stable);
  EXPECT_EQ(rep.post_states.size(), 101u);
}

TEST(RunQLearning, AnalyticUnbiasedOnRandomSystems) {
  for (const auto& fc : testkit::random_feasible_systems(77, 5)) {
    const int n = fc.sys.n();
    SimulatedOracle oracle(fc.sys, VectorXd::Ones(n), 3);
    AlgoConfig cfg = analytic_config();
    cfg.tuples_per_iter = fc.sys.dims().unknowns() + 10;
    cfg.max_iters = 30;
    const QLearnReport rep = run_q_learning(oracle, fc.cost, cfg, GainPair::zero(fc.sys.dims()),
                                            VectorXd::Ones(n), {std::nullopt, std::nullopt, 0});
    ValuePair prev = ValuePair::zero(n);
    for (const auto& it : rep.history) {
      const QPair expected = h_from_values(fc.sys, fc.cost, prev);
      EXPECT_LT((it.q.H1() - expected.H1()).norm(), 1e-8) << "iteration " << it.iter;
      EXPECT_LT((it.q.H2() - expected.H2()).norm(), 1e-8) << "iteration " << it.iter;
      prev = it.values;
    }
  }
}

TEST(RunQLearning, GammaInfeasibleSurfaced) {
  SystemMatrices m;
  m.A1 = s(0.95);
  m.A2 = s(0.1);
  m.B1 = s(0.5);
  m.C1 = s(1.0);
  m.C2 = s(0.05);
  const SdltiSystem sys(m);
  const CostSpec cost(0.5, s(1));
  ASSERT_THROW(solve_coupled_gare(sys, cost, 1e-10, 1000), Error);
  SimulatedOracle oracle(sys, s(1), 1);
  AlgoConfig cfg = analytic_config();
  cfg.tuples_per_iter = 10;
  try {
    run_q_learning(oracle, cost, cfg, GainPair::zero(sys.dims()), VectorXd::Ones(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kGammaInfeasible);
  }
}

TEST(RunQLearning, ReplayedOracleReproducesIterates) {
  for (ExpectationMode mode : {ExpectationMode::kAnalytic, ExpectationMode::kMonteCarlo}) {
    AlgoConfig cfg;
    cfg.expectation_mode = mode;
    cfg.max_iters = 3;
    cfg.branches = 20;
    SimulatedOracle sim(f16_system(), f16_initial_state(), 5);
    RecordingOracle rec(sim);
    const QLearnReport a = run_q_learning(rec, f16_cost(), cfg, f16_initial_gains(),
                                          f16_initial_state(), {std::nullopt, std::nullopt, 10});
    ReplayOracle replay(Dimensions{3, 1, 1}, rec.events());
    const QLearnReport b = run_q_learning(replay, f16_cost(), cfg, f16_initial_gains(),
                                          f16_initial_state(), {std::nullopt, std::nullopt, 10});
    EXPECT_TRUE(replay.exhausted());
    ASSERT_EQ(a.history.size(), b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
      EXPECT_TRUE(a.history[i].q.H1() == b.history[i].q.H1());
      EXPECT_TRUE(a.history[i].q.H2() == b.history[i].q.H2());
      EXPECT_TRUE(a.history[i].gains.K1 == b.history[i].gains.K1);
    }
  }
}

TEST(RunQLearning, MonteCarloDeviationShrinksWithBranches) {
  // One regression from the same kernels and states; only N_u varies.
  const SdltiSystem sys = f16_system();
  const Dimensions d = sys.dims();
  const ValuePair P = solve_coupled_gare(sys, f16_cost(), 1e-3, 5000).history[4].values;
  const QPair q = h_from_values(sys, f16_cost(), P);
  const GainPair g = gains_from_q(q);
  const ProbingSchedule probe = ProbingSchedule::for_case(NoiseCase::kCase1);

  auto estimate = [&](std::uint64_t seed, ExpectationMode mode, int branches) {
    SimulatedOracle oracle(sys, f16_initial_state(), seed);
    DataBatch batch{d, {}};
    for (int k = 0; k < 20; ++k) {
      auto smp = bellman_targets(oracle, f16_cost(), q, g, probe.at(k, d), branches, mode);
      oracle.advance(smp.u, smp.v);
      batch.rows.push_back(smp);
    }
    const Regression reg = assemble_regression(batch);
    return least_squares_h(reg.X, reg.Y1, reg.Y2, d);
  };

  std::vector<double> medians;
  for (int branches : {10, 100, 1000}) {
    std::vector<double> dev;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const QPair exact = estimate(seed, ExpectationMode::kAnalytic, 1);
      const QPair mc = estimate(seed, ExpectationMode::kMonteCarlo, branches);
      dev.push_back((mc.H1() - exact.H1()).norm() + (mc.H2() - exact.H2()).norm());
    }
    std::nth_element(dev.begin(), dev.begin() + 10, dev.end());
    medians.push_back(dev[10]);
  }
  EXPECT_GT(medians[0], medians[1]);
  EXPECT_GT(medians[1], medians[2]);
}

TEST(RunQLearning, NonBranchingOracleNeedsSingleBranch) {
  SimulatedOracle sim(f16_system(), f16_initial_state(), 5);
  NoBranchOracle plant(sim);
  AlgoConfig cfg;
  cfg.max_iters = 2;
  EXPECT_THROW(run_q_learning(plant, f16_cost(), cfg, f16_initial_gains(), f16_initial_state()),
               Error);
  cfg.branches = 1;
  const QLearnReport rep =
      run_q_learning(plant, f16_cost(), cfg, f16_initial_gains(), f16_initial_state(),
                     {std::nullopt, std::nullopt, 0});
  EXPECT_EQ(rep.history.size(), 2u);
  EXPECT_FALSE(rep.warnings.empty());
  EXPECT_EQ(sim.time(), 40);
}

TEST(RunQLearning, MaxItersIsNotFatal) {
  SimulatedOracle oracle(f16_system(), f16_initial_state(), 7);
  AlgoConfig cfg = analytic_config();
  cfg.max_iters = 4;
  const QLearnReport rep = run_q_learning(oracle, f16_cost(), cfg, f16_initial_gains(),
                                          f16_initial_state());
  EXPECT_FALSE(rep.converged);
  EXPECT_EQ(rep.iterations, 4);
  EXPECT_NE(rep.termination_reason.find("max_iters"), std::string::npos);
}

TEST(RunValueIteration, F16AndDeadDynamics) {
  const Reference ref = solved_f16();
  AlgoConfig cfg;
  cfg.tol = 1e-9;
  cfg.max_iters = 5000;
  const QLearnReport rep = run_value_iteration(f16_system(), f16_cost(), cfg, f16_initial_state(), ref);
  EXPECT_TRUE(rep.converged);
  EXPECT_LT((rep.gains.K1 - ref.gains.K1).norm(), 1e-6);
  EXPECT_LT((rep.values.P2 - ref.values.P2).norm(), 1e-5);

  SystemMatrices m = f16_system().matrices();
  m.A1.setZero();
  m.A2.setZero();
  const QLearnReport dead = run_value_iteration(SdltiSystem(m), f16_cost(), cfg, f16_initial_state());
  EXPECT_TRUE(dead.values.P1.isApprox(-MatrixXd::Identity(3, 3)));
  EXPECT_TRUE(dead.values.P2.isApprox(MatrixXd::Identity(3, 3)));
  EXPECT_LE(dead.history.size(), 3u);
}

TEST(RunValueIteration, ScalarMatchesDeskOracle) {
  const desk::Scalar sc{0.8, 0.1, 0.5, 0.2, 0.05, 2.0, 1.0};
  const desk::Solution ref = desk::solve(sc, 1e-14, 100000);
  SystemMatrices m;
  m.A1 = s(sc.a1);
  m.A2 = s(sc.a2);
  m.B1 = s(sc.b1);
  m.C1 = s(sc.c1);
  m.C2 = s(sc.c2);
  AlgoConfig cfg;
  cfg.tol = 1e-13;
  cfg.max_iters = 100000;
  const QLearnReport rep =
      run_value_iteration(SdltiSystem(m), CostSpec(sc.gamma, s(sc.q)), cfg, VectorXd::Ones(1));
  EXPECT_NEAR(rep.values.P1(0, 0), ref.p1, 1e-9);
  EXPECT_NEAR(rep.values.P2(0, 0), ref.p2, 1e-9);
  EXPECT_NEAR(rep.gains.K1(0, 0), ref.k1, 1e-9);
  EXPECT_NEAR(rep.gains.K2(0, 0), ref.k2, 1e-9);
}

TEST(ConvergenceCsv, BlankErrorColumnsAndDeterminism) {
  AlgoConfig cfg;
  cfg.max_iters = 3;
  auto run = [&](std::optional<Reference> ref) {
    SimulatedOracle oracle(f16_system(), f16_initial_state(), 11);
    const QLearnReport rep = run_q_learning(oracle, f16_cost(), cfg, f16_initial_gains(),
                                            f16_initial_state(), {ref, std::nullopt, 0});
    std::ostringstream os;
    write_convergence_csv(os, rep);
    return os.str();
  };
  const std::string a = run(std::nullopt);
  EXPECT_EQ(a, run(std::nullopt));
  std::istringstream is(a);
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "iter,dH1_fro,dH2_fro,errK1,errK2,errP1,errP2,term_flag");
  std::getline(is, line);
  EXPECT_NE(line.find(",,,,"), std::string::npos) << line;
  const std::string b = run(solved_f16());
  EXPECT_EQ(b.find(",,,,"), std::string::npos);
}

TEST(WriteMatrix, Format) {
  MatrixXd M(2, 2);
  M << 1.0, -0.5, 0.25, 1e-20;
  std::ostringstream os;
  write_matrix(os, M);
  EXPECT_EQ(os.str(),
            "1.000000000000e+00 -5.000000000000e-01\n2.500000000000e-01 1.000000000000e-20\n");
}
