#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cwmtsne {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or argument combination (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed or unusable input data (CLI exit code 3).
class DataError : public Error {
public:
    using Error::Error;
};

/// Numerical degeneracy: singular covariances, unsupportable points,
/// non-finite iterates (CLI exit code 4).
class DegeneracyError : public Error {
public:
    using Error::Error;
};

/// Raised by the M-step when a component's responsibility mass has collapsed.
/// The EM driver catches it and applies the re-seeding policy.
class EmptyComponentError : public DegeneracyError {
public:
    EmptyComponentError(std::size_t component, double mass)
        : DegeneracyError("component " + std::to_string(component + 1) +
                          " is empty (responsibility mass " + std::to_string(mass) + ")"),
          component_(component) {}

    std::size_t component() const noexcept { return component_; }

private:
    std::size_t component_;
};

} // namespace cwmtsne
