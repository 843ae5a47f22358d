// Apache License, Version 2.0, refer to LICENSE

#pragma once

#include <stdexcept>
#include <string>

namespace cviat {

/// Malformed or inconsistent input data (corpus files, checkpoints).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A quantity that must be finite became NaN or infinite.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad command-line or configuration input.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cviat
