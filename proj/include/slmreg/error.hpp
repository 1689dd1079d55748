#pragma once

#include <stdexcept>
#include <string>

namespace slmreg {

/// Invalid inputs: bad parameters, malformed files, violated preconditions.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation that was well-posed but could not be completed
/// (rank-deficient design, optimizer failure, too many skipped blocks).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
    if (!condition) {
        throw ValidationError(message);
    }
}

}  // namespace detail
}  // namespace slmreg
