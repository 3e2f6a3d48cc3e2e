#pragma once

#include <stdexcept>
#include <string>

namespace gplab {

/// Violated precondition on a public operation.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or truncated GPF1 payload.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A solve would exceed the configured state-vector memory budget.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative solve stopped before reaching its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Experiment configuration could not be parsed or validated.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gplab
