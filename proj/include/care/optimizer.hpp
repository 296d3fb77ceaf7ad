#pragma once

#include <functional>
#include <string>
#include <vector>

#include "care/kernels.hpp"

namespace care {

struct OptimOptions {
  double gradient_tolerance = 1e-8;  // on the infinity norm
  int max_iterations = 500;
  double armijo_slope = 1e-4;
  double backtrack_factor = 0.5;
  double initial_step = 1.0;
  bool record_trace = true;

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
};

struct OptimResult {
  Vector minimizer;
  double objective_value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // objective after each accepted iterate
  std::string message;
};

using ObjectiveFn = std::function<double(const Vector&)>;
using GradientFn = std::function<Vector(const Vector&)>;
/// Returns the objective and writes the gradient.
using ValueGradientFn = std::function<double(const Vector&, Vector&)>;

/// BFGS with Armijo backtracking. The inverse Hessian starts at
/// I / (1 + ||g_0||) and skips updates with s^T y <= 1e-12 ||s|| ||y||.
OptimResult minimize_bfgs(const ObjectiveFn& objective, const GradientFn& gradient,
                          const Vector& init, const OptimOptions& options = {});

/// Same algorithm; `objective` is used for line-search trials and
/// `value_and_gradient` at accepted points.
OptimResult minimize_bfgs(const ObjectiveFn& objective,
                          const ValueGradientFn& value_and_gradient,
                          const Vector& init, const OptimOptions& options = {});

/// Same algorithm started from a caller-supplied symmetric positive definite
/// inverse Hessian, which also replaces the default on resets.
OptimResult minimize_bfgs(const ObjectiveFn& objective,
                          const ValueGradientFn& value_and_gradient,
                          const Vector& init, const Matrix& initial_inverse_hessian,
                          const OptimOptions& options = {});

}  // namespace care
