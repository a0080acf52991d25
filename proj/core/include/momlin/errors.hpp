#pragma once

#include <stdexcept>
#include <string>

namespace momlin {

// Raised when an input file (MATPOWER, JSON, SDPA) cannot be parsed.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when parsed data violates a structural requirement (duplicate bus
// ids, missing slack, inconsistent dimensions, ...).
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when a numerical routine cannot proceed (factorization breakdown,
// rejection sampler starvation, ...). Solver status codes cover the normal
// "infeasible / unbounded" outcomes; this is for genuine failures.
struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace momlin
