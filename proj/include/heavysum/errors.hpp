#pragma once

#include <stdexcept>
#include <string>

namespace heavysum {

// Invalid parameters in a model, experiment or function call.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A process model whose recursion or tail condition is not satisfied.
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operation is outside the supported domain (e.g. alpha >= 1 for LePage).
class UnsupportedError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Statistic requested on a path for which it is undefined (all zeros, empty).
class DegenerateError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Monte Carlo extraction produced no usable draws.
class SamplingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Quadrature did not reach its tolerance.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace heavysum
