#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace cartan {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Bad user input: unparseable expressions, malformed JSON, points outside
/// the declared domain, non-SPD metrics, inconsistent dimensions.
struct invalid_input : std::runtime_error {
  explicit invalid_input(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: ODE step-size collapse, Newton divergence,
/// rank decisions without a usable gap, loss of frame invertibility.
struct numerical_error : std::runtime_error {
  explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A trajectory left the chart's validity region. Carries the parameter
/// time at which containment first failed.
struct domain_exit : numerical_error {
  double exit_time;
  domain_exit(const std::string& msg, double t)
      : numerical_error(msg), exit_time(t) {}
};

inline double rel_err(double got, double want, double floor = 1.0) {
  return std::abs(got - want) / std::max(std::abs(want), floor);
}

inline double rel_err(const Vec& got, const Vec& want, double floor = 1.0) {
  return (got - want).norm() / std::max(want.norm(), floor);
}

}  // namespace cartan
