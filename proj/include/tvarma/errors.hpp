#pragma once

#include <stdexcept>
#include <string>

namespace tvarma {

/// Raised when an input violates a documented precondition (bad sizes,
/// invalid orders, malformed files). Maps to CLI exit code 1.
class usage_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical routine fails to converge or a matrix is singular.
/// Maps to CLI exit code 2.
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message)
{
    if (!condition) throw usage_error(message);
}

} // namespace detail
} // namespace tvarma
