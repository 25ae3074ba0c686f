#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lsched {

// Argument outside the mathematical domain of an operation.
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Configuration / command-line / file-format problems (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A policy violating its structural constraints (row sums beyond tolerance).
struct InfeasiblePolicyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Markov chain with two or more closed communicating classes: no unique
// stationary distribution exists.  Carries the offending state sets.
struct ReducibleChainError : std::runtime_error {
    std::vector<std::vector<int>> closed_classes;
    ReducibleChainError(const std::string& msg,
                        std::vector<std::vector<int>> classes)
        : std::runtime_error(msg), closed_classes(std::move(classes)) {}
};

// A distribution that carries no probability mass where some is required
// (e.g. a policy that never schedules has no virtual-user fading law).
struct DegenerateDistributionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The energy integral diverges (channel distribution with mass at zero).
struct DivergentEnergyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failure: residuals above tolerance, singular solves, invariant
// violations of tabulated distributions (CLI exit code 4).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace lsched
