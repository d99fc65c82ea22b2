#pragma once

#include <stdexcept>
#include <string>

namespace dimer {

// Exit codes used by the CLI front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalError = 3;

// Invalid parameters, ranges, or configuration input.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A computation failed: factorization broke down, residual or physicality
// tolerances were exceeded, an iteration did not converge.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// The stationary problem is degenerate (no strictly dissipative channel, so
// the steady state is not unique). Distinct from a numerical breakdown.
class DegenerateSteadyState : public NumericalError {
 public:
  explicit DegenerateSteadyState(const std::string& what) : NumericalError(what) {}
};

}  // namespace dimer
