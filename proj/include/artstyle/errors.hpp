#pragma once

#include <stdexcept>
#include <string>

namespace artstyle {

// Bad user input: malformed manifests, unknown labels, out-of-range config.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Numeric failure during an optimization (divergence, non-finite values).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace artstyle
