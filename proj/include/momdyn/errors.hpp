#pragma once

#include <stdexcept>
#include <string>

namespace momdyn {

// Raised when a computation is well-posed but fails numerically
// (divergence, non-finite values, solver breakdown).
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace momdyn
