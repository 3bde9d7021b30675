// Error types thrown across the library. Every failure mode carries enough
// context (indices, residuals, witnesses) to diagnose the offending input.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qlump {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Dimensions do not line up: non-square input, mismatched vector/matrix sizes.
class ShapeError : public Error {
public:
    using Error::Error;
};

// State or block index out of range.
class IndexError : public Error {
public:
    using Error::Error;
};

// Iterative solver stopped before reaching the requested tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, double residual)
        : Error(msg), residual(residual) {}
    double residual;
};

// Linear system singular beyond tolerance; typically a reducible chain.
class DegeneracyError : public Error {
public:
    using Error::Error;
};

// A partition is not exactly lumpable; carries the offending witness pair.
class LumpabilityError : public Error {
public:
    LumpabilityError(const std::string& msg, std::size_t block_i, std::size_t block_j,
                     std::size_t state_x, std::size_t state_y)
        : Error(msg), block_i(block_i), block_j(block_j), state_x(state_x), state_y(state_y) {}
    std::size_t block_i;
    std::size_t block_j;
    std::size_t state_x;  // representative state
    std::size_t state_y;  // state whose block mass disagrees with the representative
};

// A block carries (numerically) zero probability mass where conditioning
// on it is required.
class ConditioningError : public Error {
public:
    ConditioningError(const std::string& msg, std::size_t block, long step = -1)
        : Error(msg), block(block), step(step) {}
    std::size_t block;
    long step;  // time index at which the mass vanished, -1 if not applicable
};

// Parameter outside its mathematical domain.
class DomainError : public Error {
public:
    using Error::Error;
};

// Requested perturbation cannot keep the matrix stochastic.
class InfeasibilityError : public Error {
public:
    InfeasibilityError(const std::string& msg, std::size_t row)
        : Error(msg), row(row) {}
    std::size_t row;  // state index of the binding row
};

// Chain file malformed or inconsistent.
class ParseError : public Error {
public:
    using Error::Error;
};

}  // namespace qlump
