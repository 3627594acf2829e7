#pragma once

#include <stdexcept>
#include <string>

namespace cw {

// Bad numeric input (zero vector, parameter out of range).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// An object failed its structural checks.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The grid is too coarse for the requested operation.
class ResolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Memory or work cap exceeded.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed argument (bad schedule, wrong dimension, bad file).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Parameters outside the admissible region.
class ParameterError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cw
