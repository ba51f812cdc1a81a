#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aumeta {

/// Domain-level failure: broken invariants, schema violations, shape mismatches.
/// CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filesystem-level failure: missing, unreadable or unwritable paths.
/// CLI maps these to exit code 2.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed file content. Carries the 1-based line number of the offender.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& message, std::size_t line)
        : ValidationError(message + " (line " + std::to_string(line) + ")"), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace aumeta
