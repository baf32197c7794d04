#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "h2hinf/noise.hpp"
#include "h2hinf/simulation.hpp"
#include "h2hinf/types.hpp"

namespace h2hinf {

/// Black-box access to a plant. The learning engine sees the plant only
/// through this interface and never reads system matrices.
class TrajectoryOracle {
 public:
  virtual ~TrajectoryOracle() = default;

  virtual Dimensions dims() const = 0;
  virtual const VectorXd& state() const = 0;
  /// Absolute time index of state().
  virtual long time() const = 0;

  /// Applies (u, v) to the real trajectory and returns the new state.
  virtual VectorXd advance(const VectorXd& u, const VectorXd& v) = 0;

  virtual bool can_branch() const = 0;
  /// `count` independent successors of the current state under (u, v). The
  /// real trajectory does not move.
  virtual std::vector<VectorXd> branch(const VectorXd& u, const VectorXd& v, int count) = 0;

  virtual void reset(const VectorXd& x, long k = 0) = 0;

  /// Testing privilege: exact E[x+' P x+ | state, u, v].
  virtual bool has_exact_expectation() const { return false; }
  virtual double expected_quadratic(const MatrixXd& P, const VectorXd& u,
                                    const VectorXd& v) const;
};

/// Oracle backed by an SdltiSystem and a seeded noise stream. Branch j at
/// time k draws its noise from derive_seed(seed, k, j); the real trajectory
/// uses its own stream.
class SimulatedOracle final : public TrajectoryOracle {
 public:
  SimulatedOracle(SdltiSystem sys, const VectorXd& x0, std::uint64_t seed,
                  NoiseDistribution dist = NoiseDistribution::kStandardGaussian);

  Dimensions dims() const override { return sys_.dims(); }
  const VectorXd& state() const override { return x_; }
  long time() const override { return k_; }
  VectorXd advance(const VectorXd& u, const VectorXd& v) override;
  bool can_branch() const override { return true; }
  std::vector<VectorXd> branch(const VectorXd& u, const VectorXd& v, int count) override;
  void reset(const VectorXd& x, long k = 0) override;
  bool has_exact_expectation() const override { return true; }
  double expected_quadratic(const MatrixXd& P, const VectorXd& u,
                            const VectorXd& v) const override;

  /// Realized path since the last reset, with stage costs filled from cost.
  Trajectory trajectory(const CostSpec& cost) const;

 private:
  SdltiSystem sys_;
  std::uint64_t seed_;
  NoiseDistribution dist_;
  NoiseSource main_noise_;
  VectorXd x_;
  long k_ = 0;
  Trajectory log_;
};

/// One call made through an oracle, with its result.
struct OracleEvent {
  enum class Kind { kAdvance, kBranch, kReset, kExpectation };
  Kind kind;
  VectorXd u;
  VectorXd v;
  VectorXd x;                      // reset target, or state before the call
  long k = 0;
  std::vector<VectorXd> results;   // successor(s)
  double expectation = 0.0;
  MatrixXd P;
};

/// Forwards to an inner oracle and logs every interaction.
class RecordingOracle final : public TrajectoryOracle {
 public:
  explicit RecordingOracle(TrajectoryOracle& inner) : inner_(inner) {}

  Dimensions dims() const override { return inner_.dims(); }
  const VectorXd& state() const override { return inner_.state(); }
  long time() const override { return inner_.time(); }
  VectorXd advance(const VectorXd& u, const VectorXd& v) override;
  bool can_branch() const override { return inner_.can_branch(); }
  std::vector<VectorXd> branch(const VectorXd& u, const VectorXd& v, int count) override;
  void reset(const VectorXd& x, long k = 0) override;
  bool has_exact_expectation() const override { return inner_.has_exact_expectation(); }
  double expected_quadratic(const MatrixXd& P, const VectorXd& u,
                            const VectorXd& v) const override;

  const std::vector<OracleEvent>& events() const { return events_; }

 private:
  TrajectoryOracle& inner_;
  mutable std::vector<OracleEvent> events_;
};

/// Serves a recorded event log back in order. Any call that differs from
/// the recording throws Error(kOracleFailure).
class ReplayOracle final : public TrajectoryOracle {
 public:
  ReplayOracle(Dimensions dims, std::vector<OracleEvent> events);

  Dimensions dims() const override { return dims_; }
  const VectorXd& state() const override { return x_; }
  long time() const override { return k_; }
  VectorXd advance(const VectorXd& u, const VectorXd& v) override;
  bool can_branch() const override { return true; }
  std::vector<VectorXd> branch(const VectorXd& u, const VectorXd& v, int count) override;
  void reset(const VectorXd& x, long k = 0) override;
  bool has_exact_expectation() const override { return true; }
  double expected_quadratic(const MatrixXd& P, const VectorXd& u,
                            const VectorXd& v) const override;

  bool exhausted() const { return next_ == events_.size(); }

 private:
  const OracleEvent& expect(OracleEvent::Kind kind, const VectorXd& u,
                            const VectorXd& v) const;

  Dimensions dims_;
  std::vector<OracleEvent> events_;
  mutable std::size_t next_ = 0;
  VectorXd x_;
  long k_ = 0;
};

}  // namespace h2hinf
