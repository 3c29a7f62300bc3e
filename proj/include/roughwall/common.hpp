#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace roughwall {

inline constexpr double kPi = std::numbers::pi;

/// Invalid input or configuration, detected before any numerical work starts.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of a kernel or formula.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Iterative solver failed; carries the last residual it reached.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double last_residual)
      : std::runtime_error(what + " (last residual " + std::to_string(last_residual) + ")"),
        last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

struct Point2 {
  double x1 = 0.0;
  double x2 = 0.0;
};

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x1 - b.x1, a.x2 - b.x2); }

}  // namespace roughwall
