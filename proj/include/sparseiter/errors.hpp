#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sparseiter {

// Argument errors are reported as std::invalid_argument throughout.

/// Malformed on-disk data (bad header, short row, non-numeric token).
/// Carries the 1-based line number when one is known.
class format_error : public std::runtime_error {
public:
    explicit format_error(const std::string& msg, std::size_t line = 0)
        : std::runtime_error(line ? msg + " (line " + std::to_string(line) + ")" : msg),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Numerical failure: iteration cap exhausted, singular restricted system.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem-level failure (unreadable/unwritable path).
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace sparseiter
