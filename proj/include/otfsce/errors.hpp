// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace otfsce {

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Gain inversion denominator vanished: the candidate (delay, Doppler) pair sits
// on a zero of the Dirichlet response at the tap.
struct GainSingularError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LeakageUndefinedError : std::domain_error {
    using std::domain_error::domain_error;
};

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace otfsce
