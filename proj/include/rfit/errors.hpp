/**
 * @file errors.hpp
 * @brief Error types and the CLI exit-code contract.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace rfit {

// Exit codes used by the CLI: 0 success, 2 usage, 3 numerical, 4 schema.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitSchema = 4;

/// Caller broke a precondition (bad arguments, mismatched sizes, ...).
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A computation failed or degenerated (singular fit, unbounded bracket, ...).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An input file violates the instance/report schema.
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Residual requested outside the positive-denominator region.
struct NonpositiveDenominator : std::domain_error {
    explicit NonpositiveDenominator(double value)
        : std::domain_error("residual denominator is nonpositive: " + std::to_string(value)),
          denominator(value) {}
    double denominator;
};

}  // namespace rfit
