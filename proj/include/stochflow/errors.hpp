#pragma once

#include <stdexcept>
#include <string>

namespace stochflow {

// Scenario space too large to enumerate explicitly.
class CapExceededError : public std::runtime_error {
public:
    explicit CapExceededError(const std::string& msg) : std::runtime_error(msg) {}
};

// File missing, unreadable, or not parseable as the expected format.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// The simplex engine could not certify optimal/infeasible/unbounded
// (iteration budget exhausted or a numerically singular basis).
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

// Problem dimensions exceed the configured desk-scale solver limits.
class ProblemTooLargeError : public SolverError {
public:
    explicit ProblemTooLargeError(const std::string& msg) : SolverError(msg) {}
};

}  // namespace stochflow
