#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dol {

// Invalid configuration or inconsistent model setup.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data (ragged rows, unparsable cells, duplicate dates...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// State corruption or an unrecoverable numerical condition.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Recoverable numerical event (clamped variance, PSD projection, ridge
// jitter). Operations append to a caller-owned log when one is given.
struct NumericalWarning {
  std::string where;
  std::string what;
};

using WarningLog = std::vector<NumericalWarning>;

inline void warn(WarningLog* log, std::string where, std::string what) {
  if (log != nullptr) {
    log->push_back({std::move(where), std::move(what)});
  }
}

}  // namespace dol
