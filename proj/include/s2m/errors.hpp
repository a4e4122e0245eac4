#pragma once

#include <stdexcept>
#include <string>

namespace s2m {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape or size of an input does not match what the operation expects.
struct DimensionError : Error {
    using Error::Error;
};

// Geometric or numerical degeneracy (collinear frame points, rank-deficient
// triangulation system, point behind camera).
struct DegenerateError : Error {
    using Error::Error;
};

// Non-finite values where finite ones are required.
struct NumericError : Error {
    using Error::Error;
};

// File format / persistence problems; message names the offending field.
struct IoError : Error {
    using Error::Error;
};

// Bad configuration keys or values.
struct ConfigError : Error {
    using Error::Error;
};

// Template cannot be decomposed (empty bone, patch over MLP capacity).
struct TemplateError : Error {
    using Error::Error;
};

}  // namespace s2m
