#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace confflow {

enum class ErrorKind {
  invalid_domain,
  degenerate_metric,
  singularity,
  divergent_potential,
  precondition,
  flow_degeneracy,
  invalid_input,
  invalid_time,
  insufficient_horizon,
  not_a_solution,
  out_of_chart,
  invalid_range,
  config,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_domain: return "invalid-domain";
    case ErrorKind::degenerate_metric: return "degenerate-metric";
    case ErrorKind::singularity: return "singularity";
    case ErrorKind::divergent_potential: return "divergent-potential";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::flow_degeneracy: return "flow-degeneracy";
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::invalid_time: return "invalid-time";
    case ErrorKind::insufficient_horizon: return "insufficient-horizon";
    case ErrorKind::not_a_solution: return "not-a-solution";
    case ErrorKind::out_of_chart: return "out-of-chart";
    case ErrorKind::invalid_range: return "invalid-range";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), message_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// what() without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) throw Error(kind, what);
}

}  // namespace confflow
