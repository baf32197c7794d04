#pragma once

#include <string>
#include <utility>
#include <vector>

#include "h2hinf/types.hpp"

namespace h2hinf {

/// a * f(w k + phase), f in {sin, cos}, optionally squared.
struct SinusoidTerm {
  enum class Kind { kSin, kCos };
  Kind kind = Kind::kSin;
  double frequency = 1.0;
  double amplitude = 1.0;
  bool squared = false;

  double eval(double k, double phase) const;
};

/// Persistent-excitation signals added to u and v while learning.
///
/// Only deterministic sinusoidal terms can be expressed; constant offsets and
/// white noise are rejected at construction. For m > 1, component j
/// evaluates every term with its argument shifted by j radians.
class ProbingSchedule {
 public:
  /// Inactive schedule: every evaluation returns zeros.
  ProbingSchedule() = default;

  static ProbingSchedule for_case(NoiseCase c);
  /// Throws Error(kInvalidArgument) on empty term lists, zero frequency or
  /// zero amplitude.
  static ProbingSchedule custom(std::vector<SinusoidTerm> u_terms,
                                std::vector<SinusoidTerm> v_terms);
  /// Parses "sin:1.009,cos2:0.538" style lists; a term is
  /// `{sin|cos|sin2|cos2}:frequency[:amplitude]`. Anything else, including
  /// "white", is rejected.
  static std::vector<SinusoidTerm> parse_terms(const std::string& text);

  bool active() const { return active_; }
  NoiseCase noise_case() const { return case_; }
  ProbingSchedule deactivated() const;

  /// (e_u, e_v) at time index k.
  std::pair<VectorXd, VectorXd> at(long k, const Dimensions& dims) const;

  const std::vector<SinusoidTerm>& u_terms() const { return u_terms_; }
  const std::vector<SinusoidTerm>& v_terms() const { return v_terms_; }

 private:
  ProbingSchedule(NoiseCase c, std::vector<SinusoidTerm> u, std::vector<SinusoidTerm> v);

  NoiseCase case_ = NoiseCase::kCustom;
  bool active_ = false;
  std::vector<SinusoidTerm> u_terms_;
  std::vector<SinusoidTerm> v_terms_;
};

}  // namespace h2hinf
