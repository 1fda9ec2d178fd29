#pragma once

#include <stdexcept>
#include <string>

namespace mimic {

/// Malformed input: bad CSV schema, invalid configuration, dimension mismatch.
class SchemaError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A matrix that must be inverted is singular or too badly conditioned.
class SingularityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The optimizer failed to reach a stationary point.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mimic
