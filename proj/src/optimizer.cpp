#include "care/optimizer.hpp"

#include <cmath>

#include "care/error.hpp"

namespace care {

void OptimOptions::validate() const {
  auto fail = [](const std::string& field) {
    throw Error(ErrorKind::InvalidArgument, "optimizer option out of range: " + field);
  };
  if (!(gradient_tolerance > 0.0)) fail("gradient_tolerance");
  if (max_iterations < 0) fail("max_iterations");
  if (!(armijo_slope > 0.0 && armijo_slope < 1.0)) fail("armijo_slope");
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) fail("backtrack_factor");
  if (!(initial_step > 0.0) || !std::isfinite(initial_step)) fail("initial_step");
}

OptimResult minimize_bfgs(const ObjectiveFn& objective, const GradientFn& gradient,
                          const Vector& init, const OptimOptions& options) {
  return minimize_bfgs(
      objective,
      [&](const Vector& x, Vector& g) {
        g = gradient(x);
        return objective(x);
      },
      init, options);
}

namespace {

OptimResult run_bfgs(const ObjectiveFn& objective, const ValueGradientFn& value_and_gradient,
                     const Vector& init, const Matrix* h0, const OptimOptions& options) {
  options.validate();
  if (!init.allFinite()) {
    throw Error(ErrorKind::NonFinite, "optimizer start point is not finite");
  }
  constexpr int kMaxHalvings = 60;
  const Eigen::Index dim = init.size();

  OptimResult result;
  Vector x = init;
  Vector g;
  double fx = value_and_gradient(x, g);
  if (!std::isfinite(fx) || !g.allFinite()) {
    throw Error(ErrorKind::NonFinite, "objective is not finite at the start point");
  }
  if (options.record_trace) result.trace.push_back(fx);

  if (h0 && (h0->rows() != dim || h0->cols() != dim)) {
    throw Error(ErrorKind::DimensionMismatch, "initial inverse Hessian has the wrong size");
  }
  auto reset_inverse_hessian = [&](Matrix& h) {
    if (h0) h = *h0;
    else h = Matrix::Identity(dim, dim) / (1.0 + g.norm());
  };
  Matrix h;
  reset_inverse_hessian(h);

  Vector direction(dim), trial(dim), g_next(dim), s(dim), y(dim), hy(dim);
  int iter = 0;
  bool stalled = false;
  while (dim > 0 && g.lpNorm<Eigen::Infinity>() > options.gradient_tolerance &&
         iter < options.max_iterations) {
    direction.noalias() = -(h * g);
    double slope = g.dot(direction);
    if (!(slope < 0.0)) {
      reset_inverse_hessian(h);
      direction = -(h * g);
      slope = g.dot(direction);
    }

    double step = options.initial_step;
    double f_trial = fx;
    bool accepted = false;
    for (int k = 0; k <= kMaxHalvings; ++k) {
      trial.noalias() = x + step * direction;
      f_trial = objective(trial);
      if (std::isfinite(f_trial) && f_trial <= fx + options.armijo_slope * step * slope) {
        accepted = true;
        break;
      }
      step *= options.backtrack_factor;
    }
    if (!accepted || !(f_trial < fx)) {
      stalled = true;
      result.message = "line search failed to find sufficient decrease";
      break;
    }

    const double f_next = value_and_gradient(trial, g_next);
    s.noalias() = trial - x;
    y.noalias() = g_next - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      hy.noalias() = h * y;
      const double yhy = y.dot(hy);
      // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
      h.noalias() -= rho * (hy * s.transpose() + s * hy.transpose());
      h.noalias() += (rho * rho * yhy + rho) * (s * s.transpose());
    }
    x.swap(trial);
    g.swap(g_next);
    fx = f_next;
    ++iter;
    if (options.record_trace) result.trace.push_back(fx);
  }

  result.minimizer = std::move(x);
  result.objective_value = fx;
  result.gradient_norm = dim > 0 ? g.lpNorm<Eigen::Infinity>() : 0.0;
  result.iterations = iter;
  result.converged = result.gradient_norm <= options.gradient_tolerance;
  if (!result.converged && !stalled) result.message = "iteration limit reached";
  return result;
}

}  // namespace

OptimResult minimize_bfgs(const ObjectiveFn& objective,
                          const ValueGradientFn& value_and_gradient,
                          const Vector& init, const OptimOptions& options) {
  return run_bfgs(objective, value_and_gradient, init, nullptr, options);
}

OptimResult minimize_bfgs(const ObjectiveFn& objective,
                          const ValueGradientFn& value_and_gradient,
                          const Vector& init, const Matrix& initial_inverse_hessian,
                          const OptimOptions& options) {
  return run_bfgs(objective, value_and_gradient, init, &initial_inverse_hessian, options);
}

}  // namespace care
