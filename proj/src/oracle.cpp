#include "h2hinf/oracle.hpp"

#include <limits>

#include "h2hinf/errors.hpp"

namespace h2hinf {

namespace {

bool same(const MatrixXd& a, const MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

}  // namespace

double TrajectoryOracle::expected_quadratic(const MatrixXd&, const VectorXd&,
                                            const VectorXd&) const {
  throw Error(ErrorKind::kOracleFailure,
              "this oracle cannot evaluate exact conditional expectations");
}

SimulatedOracle::SimulatedOracle(SdltiSystem sys, const VectorXd& x0, std::uint64_t seed,
                                 NoiseDistribution dist)
    : sys_(std::move(sys)),
      seed_(seed),
      dist_(dist),
      main_noise_(derive_seed(seed, std::numeric_limits<std::uint64_t>::max(), 0), dist) {
  reset(x0, 0);
}

VectorXd SimulatedOracle::advance(const VectorXd& u, const VectorXd& v) {
  const double w = main_noise_.next();
  VectorXd next = step(sys_, x_, u, v, w);
  check_finite_state(next, k_ + 1);
  log_.inputs_u.push_back(u);
  log_.inputs_v.push_back(v);
  log_.noises.push_back(w);
  log_.states.push_back(next);
  x_ = next;
  ++k_;
  return next;
}

std::vector<VectorXd> SimulatedOracle::branch(const VectorXd& u, const VectorXd& v,
                                              int count) {
  if (count < 1) throw Error(ErrorKind::kInvalidArgument, "branch count must be positive");
  std::vector<VectorXd> out;
  out.reserve(count);
  for (int j = 0; j < count; ++j) {
    NoiseSource noise(derive_seed(seed_, static_cast<std::uint64_t>(k_),
                                  static_cast<std::uint64_t>(j)),
                      dist_);
    VectorXd next = step(sys_, x_, u, v, noise.next());
    check_finite_state(next, k_ + 1);
    out.push_back(std::move(next));
  }
  return out;
}

void SimulatedOracle::reset(const VectorXd& x, long k) {
  if (x.size() != sys_.n()) {
    throw Error(ErrorKind::kDimensionMismatch, "reset state has the wrong length");
  }
  x_ = x;
  k_ = k;
  log_ = Trajectory{};
  log_.k0 = k;
  log_.states.push_back(x);
}

double SimulatedOracle::expected_quadratic(const MatrixXd& P, const VectorXd& u,
                                           const VectorXd& v) const {
  return expected_next_quadratic(sys_, P, x_, u, v);
}

Trajectory SimulatedOracle::trajectory(const CostSpec& cost) const {
  Trajectory t = log_;
  t.r1.clear();
  t.r2.clear();
  for (std::size_t j = 0; j < t.steps(); ++j) {
    const StageCosts c = stage_costs(cost, t.states[j], t.inputs_u[j], t.inputs_v[j]);
    t.r1.push_back(c.r1);
    t.r2.push_back(c.r2);
  }
  return t;
}

VectorXd RecordingOracle::advance(const VectorXd& u, const VectorXd& v) {
  OracleEvent e{OracleEvent::Kind::kAdvance, u, v, inner_.state(), inner_.time(), {}, 0.0, {}};
  VectorXd next = inner_.advance(u, v);
  e.results.push_back(next);
  events_.push_back(std::move(e));
  return next;
}

std::vector<VectorXd> RecordingOracle::branch(const VectorXd& u, const VectorXd& v,
                                              int count) {
  OracleEvent e{OracleEvent::Kind::kBranch, u, v, inner_.state(), inner_.time(), {}, 0.0, {}};
  e.results = inner_.branch(u, v, count);
  events_.push_back(e);
  return e.results;
}

void RecordingOracle::reset(const VectorXd& x, long k) {
  inner_.reset(x, k);
  events_.push_back(OracleEvent{OracleEvent::Kind::kReset, {}, {}, x, k, {}, 0.0, {}});
}

double RecordingOracle::expected_quadratic(const MatrixXd& P, const VectorXd& u,
                                           const VectorXd& v) const {
  const double value = inner_.expected_quadratic(P, u, v);
  events_.push_back(OracleEvent{OracleEvent::Kind::kExpectation, u, v, inner_.state(),
                                inner_.time(), {}, value, P});
  return value;
}

ReplayOracle::ReplayOracle(Dimensions dims, std::vector<OracleEvent> events)
    : dims_(dims), events_(std::move(events)), x_(VectorXd::Zero(dims.n)) {}

const OracleEvent& ReplayOracle::expect(OracleEvent::Kind kind, const VectorXd& u,
                                        const VectorXd& v) const {
  if (next_ >= events_.size()) {
    throw Error(ErrorKind::kOracleFailure, "replay log exhausted");
  }
  const OracleEvent& e = events_[next_];
  if (e.kind != kind || e.k != k_ || !same(e.u, u) || !same(e.v, v) || !same(e.x, x_)) {
    throw Error(ErrorKind::kOracleFailure,
                "replayed call differs from the recording at event " +
                    std::to_string(next_));
  }
  ++next_;
  return e;
}

VectorXd ReplayOracle::advance(const VectorXd& u, const VectorXd& v) {
  const OracleEvent& e = expect(OracleEvent::Kind::kAdvance, u, v);
  x_ = e.results.front();
  ++k_;
  return x_;
}

std::vector<VectorXd> ReplayOracle::branch(const VectorXd& u, const VectorXd& v,
                                           int count) {
  const OracleEvent& e = expect(OracleEvent::Kind::kBranch, u, v);
  if (static_cast<int>(e.results.size()) != count) {
    throw Error(ErrorKind::kOracleFailure, "replayed branch count differs");
  }
  return e.results;
}

void ReplayOracle::reset(const VectorXd& x, long k) {
  if (next_ >= events_.size() || events_[next_].kind != OracleEvent::Kind::kReset ||
      !same(events_[next_].x, x) || events_[next_].k != k) {
    throw Error(ErrorKind::kOracleFailure, "replayed reset differs from the recording");
  }
  ++next_;
  x_ = x;
  k_ = k;
}

double ReplayOracle::expected_quadratic(const MatrixXd& P, const VectorXd& u,
                                        const VectorXd& v) const {
  const OracleEvent& e = expect(OracleEvent::Kind::kExpectation, u, v);
  if (!same(e.P, P)) {
    throw Error(ErrorKind::kOracleFailure, "replayed expectation kernel differs");
  }
  return e.expectation;
}

}  // namespace h2hinf
