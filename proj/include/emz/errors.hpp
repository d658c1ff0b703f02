#pragma once

#include <stdexcept>
#include <string>

namespace emz {

// Invalid or inconsistent user input (config keys, file formats, parameters).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computation ran but could not produce a trustworthy result
// (non-convergence, blow-up, non-PSD covariance, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A configured resource limit (polynomial degree cap, storage) was exceeded.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace emz
