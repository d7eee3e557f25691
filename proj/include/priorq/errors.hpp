#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace priorq {

/// Thrown when an input violates a documented precondition or schema.
struct validation_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Thrown when an iterative numerical procedure cannot reach its target
/// accuracy. `achieved` carries the tolerance actually reached (NaN when
/// no meaningful figure exists, e.g. a missing sign change).
struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& what,
                             double achieved_tol = std::numeric_limits<double>::quiet_NaN())
        : std::runtime_error(what), achieved(achieved_tol) {}

    double achieved;
};

} // namespace priorq
