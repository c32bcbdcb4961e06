#pragma once

#include <stdexcept>
#include <string>

namespace tandem {

enum class Errc {
  invalid_argument,
  conditioning_on_null,
  unsupported,
  unstable,
  unsupported_arrival,
  no_feasible_theta,
  dimension_mismatch,
  too_large,
  grid_mismatch,
};

inline const char* to_string(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::conditioning_on_null: return "ConditioningOnNull";
    case Errc::unsupported: return "Unsupported";
    case Errc::unstable: return "Unstable";
    case Errc::unsupported_arrival: return "UnsupportedArrival";
    case Errc::no_feasible_theta: return "NoFeasibleTheta";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::too_large: return "TooLarge";
    case Errc::grid_mismatch: return "GridMismatch";
  }
  return "Unknown";
}

/// Single exception type for the library; `code()` tells callers which
/// contract was broken (the CLI maps it onto exit codes).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace tandem
