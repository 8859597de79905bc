#pragma once

// Shared matrix aliases and the error hierarchy used across the library.

#include <Eigen/Dense>

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace krod {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Seed   = std::uint64_t;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration, precondition or argument.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A numerical stage could not produce a trustworthy result.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// The requested rank exceeds what the data supports numerically.
class RankDeficiencyError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Filesystem or serialization failure.
class IoError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool condition, const std::string& message)
{
    if (!condition) throw ConfigError(message);
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

// short scientific notation for messages
inline std::string sci(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

} // namespace detail

} // namespace krod
