#pragma once

#include "h2hinf/qlearn.hpp"
#include "h2hinf/types.hpp"

namespace h2hinf {

/// Third-order F-16 model with multiplicative noise, gamma = 1, Q = I.
SdltiSystem f16_system();
CostSpec f16_cost();

/// Reference solution as typed in, rounded to four decimals.
Reference f16_reference();

/// Initial (non-optimal) gains and state used by the benchmark runs.
GainPair f16_initial_gains();
VectorXd f16_initial_state();

}  // namespace h2hinf
