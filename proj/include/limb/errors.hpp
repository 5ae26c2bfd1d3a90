#pragma once

#include <stdexcept>
#include <string>

namespace limb {

/// Argument outside the mathematical domain of an operation (negative
/// barrier, zeta too close to its pole, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid experiment or run configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed input file (CSV, key-value config).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Not enough data to fit a trend segment.
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace limb
