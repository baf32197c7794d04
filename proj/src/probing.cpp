#include "h2hinf/probing.hpp"

#include <cmath>
#include <sstream>

#include "h2hinf/errors.hpp"

namespace h2hinf {

namespace {

using Kind = SinusoidTerm::Kind;

SinusoidTerm term(Kind kind, double w, bool squared) {
  return SinusoidTerm{kind, w, 1.0, squared};
}

std::vector<SinusoidTerm> concat(std::vector<SinusoidTerm> a,
                                 const std::vector<SinusoidTerm>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

void check_terms(const std::vector<SinusoidTerm>& terms, const char* which) {
  if (terms.empty()) {
    throw Error(ErrorKind::kInvalidArgument,
                std::string("probing schedule for ") + which + " has no terms");
  }
  for (const auto& t : terms) {
    if (!std::isfinite(t.frequency) || t.frequency == 0.0) {
      throw Error(ErrorKind::kInvalidArgument,
                  "probing term frequency must be finite and nonzero");
    }
    if (!std::isfinite(t.amplitude) || t.amplitude == 0.0) {
      throw Error(ErrorKind::kInvalidArgument,
                  "probing term amplitude must be finite and nonzero");
    }
  }
}

double sum_terms(const std::vector<SinusoidTerm>& terms, double k, double phase) {
  double s = 0.0;
  for (const auto& t : terms) s += t.eval(k, phase);
  return s;
}

}  // namespace

double SinusoidTerm::eval(double k, double phase) const {
  const double arg = frequency * k + phase;
  const double f = kind == Kind::kSin ? std::sin(arg) : std::cos(arg);
  return amplitude * (squared ? f * f : f);
}

ProbingSchedule::ProbingSchedule(NoiseCase c, std::vector<SinusoidTerm> u,
                                 std::vector<SinusoidTerm> v)
    : case_(c), active_(true), u_terms_(std::move(u)), v_terms_(std::move(v)) {
  check_terms(u_terms_, "u");
  check_terms(v_terms_, "v");
}

ProbingSchedule ProbingSchedule::for_case(NoiseCase c) {
  const std::vector<SinusoidTerm> u1{term(Kind::kSin, 1.009, false),
                                     term(Kind::kCos, 0.538, true)};
  const std::vector<SinusoidTerm> v1{term(Kind::kSin, 9.7, false),
                                     term(Kind::kCos, 10.2, true)};
  const std::vector<SinusoidTerm> u2{term(Kind::kSin, 0.9, false),
                                     term(Kind::kCos, 100.0, false)};
  const std::vector<SinusoidTerm> v2{term(Kind::kSin, 10.0, false),
                                     term(Kind::kCos, 10.0, false)};
  switch (c) {
    case NoiseCase::kCase1: return ProbingSchedule(c, u1, v1);
    case NoiseCase::kCase2: return ProbingSchedule(c, u2, v2);
    case NoiseCase::kCase3: return ProbingSchedule(c, concat(u1, u2), concat(v1, v2));
    case NoiseCase::kCustom: break;
  }
  throw Error(ErrorKind::kInvalidArgument,
              "custom probing needs explicit terms; use ProbingSchedule::custom");
}

ProbingSchedule ProbingSchedule::custom(std::vector<SinusoidTerm> u_terms,
                                        std::vector<SinusoidTerm> v_terms) {
  return ProbingSchedule(NoiseCase::kCustom, std::move(u_terms), std::move(v_terms));
}

std::vector<SinusoidTerm> ProbingSchedule::parse_terms(const std::string& text) {
  std::vector<SinusoidTerm> out;
  std::stringstream list(text);
  std::string item;
  while (std::getline(list, item, ',')) {
    std::stringstream fields(item);
    std::string kind, freq, amp;
    std::getline(fields, kind, ':');
    std::getline(fields, freq, ':');
    std::getline(fields, amp, ':');
    SinusoidTerm t;
    if (kind == "sin" || kind == "sin2") {
      t.kind = Kind::kSin;
    } else if (kind == "cos" || kind == "cos2") {
      t.kind = Kind::kCos;
    } else {
      throw Error(ErrorKind::kInvalidArgument,
                  "unsupported probing term '" + item +
                      "': only sinusoids and squared sinusoids are allowed");
    }
    t.squared = kind.size() == 4;
    try {
      t.frequency = std::stod(freq);
      if (!amp.empty()) t.amplitude = std::stod(amp);
    } catch (const std::exception&) {
      throw Error(ErrorKind::kInvalidArgument, "malformed probing term '" + item + "'");
    }
    out.push_back(t);
  }
  return out;
}

ProbingSchedule ProbingSchedule::deactivated() const {
  ProbingSchedule copy = *this;
  copy.active_ = false;
  return copy;
}

std::pair<VectorXd, VectorXd> ProbingSchedule::at(long k, const Dimensions& dims) const {
  VectorXd eu = VectorXd::Zero(dims.m1);
  VectorXd ev = VectorXd::Zero(dims.m2);
  if (!active_) return {eu, ev};
  const double kk = static_cast<double>(k);
  for (int j = 0; j < dims.m1; ++j) eu(j) = sum_terms(u_terms_, kk, j);
  for (int j = 0; j < dims.m2; ++j) ev(j) = sum_terms(v_terms_, kk, j);
  return {eu, ev};
}

}  // namespace h2hinf
