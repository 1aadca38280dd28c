#pragma once

#include <stdexcept>
#include <string>

namespace uwamod {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when an equalizer matrix is singular or numerically unusable.
struct SingularMatrixError : Error {
    explicit SingularMatrixError(const std::string& msg) : Error(msg) {}
};

}  // namespace uwamod
