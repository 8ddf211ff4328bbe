#pragma once

#include <stdexcept>
#include <string>

namespace trajmetric {

/// Input violates a documented precondition (bad dimensions, times, probabilities).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The exact solver's state space is larger than the configured cap.
class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failure inside an LP backend.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

[[noreturn]] inline void domain_fail(const std::string& what) { throw DomainError(what); }

inline void require(bool ok, const std::string& what) {
    if (!ok) domain_fail(what);
}

} // namespace detail
} // namespace trajmetric
