#pragma once

#include <stdexcept>
#include <string>

namespace acl {

// Shape/width mismatch between tensors. Messages name both shapes.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Wrong tensor rank for an operation (e.g. backward on a non-scalar).
struct RankError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Operation not valid in the current state (e.g. backward on a consumed record).
struct StateError : std::logic_error {
    using std::logic_error::logic_error;
};

// Bad argument value (empty batch, trajectory too short, ...).
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Inconsistent experiment/training configuration.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input file; message carries the line number where known.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// NaN/Inf produced by a tensor operation (raised in debug-checked builds).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Correlation of a constant series is undefined; raised instead of NaN.
struct UndefinedCorrelation : std::domain_error {
    using std::domain_error::domain_error;
};

}  // namespace acl
