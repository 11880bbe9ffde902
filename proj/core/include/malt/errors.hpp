#pragma once

#include <stdexcept>
#include <string>

namespace malt {

/// Thrown when an iterative routine fails to converge or a computation
/// produces non-finite values. The CLI maps this to exit code 3; all other
/// exceptions are treated as configuration errors (exit code 2).
class NumericError : public std::runtime_error {
  public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace malt
