#include "care/estimators.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <sstream>

#include "care/error.hpp"

namespace care {

namespace {

FitDiagnostics diagnostics_from(const OptimResult& r) {
  FitDiagnostics d;
  d.converged = r.converged;
  d.gradient_norm = r.gradient_norm;
  d.iterations = r.iterations;
  d.objective = r.objective_value;
  d.trace = r.trace;
  if (!r.converged) d.warnings.push_back("optimizer did not converge: " + r.message);
  return d;
}

void check_gamma(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw Error(ErrorKind::InvalidArgument, "gamma must be positive and finite");
  }
}

}  // namespace

namespace {

Matrix inverse_or_scaled_identity(const Matrix& approx) {
  const Eigen::Index m = approx.rows();
  Eigen::LLT<Matrix> llt(approx);
  if (llt.info() != Eigen::Success) {
    return Matrix::Identity(m, m) / (1.0 + approx.diagonal().cwiseAbs().maxCoeff());
  }
  Matrix inv = llt.solve(Matrix::Identity(m, m));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace

Matrix initial_inverse_hessian(const RepresenterContext& ctx, double gamma) {
  return inverse_or_scaled_identity(ctx.baseline_curvature() + 2.0 * gamma * ctx.penalty());
}

Matrix initial_inverse_hessian(const FeatureMapContext& ctx, double gamma) {
  const Vector& m = ctx.feature_means();
  const double c2 = ctx.constant() * ctx.constant();
  Matrix penalty = Matrix::Identity(m.size(), m.size()) + (m * m.transpose()) / c2;
  return inverse_or_scaled_identity(ctx.baseline_curvature() + 2.0 * gamma * penalty);
}

KernelEstimator::KernelEstimator(KernelConfig kernel, PointMatrix basis_points,
                                 Vector beta, Vector kbar_at_basis, double gamma,
                                 FitDiagnostics diagnostics)
    : kernel_(std::move(kernel)),
      basis_points_(std::move(basis_points)),
      beta_(std::move(beta)),
      kbar_at_basis_(std::move(kbar_at_basis)),
      gamma_(gamma),
      offset_(0.0),
      diagnostics_(std::move(diagnostics)) {
  if (beta_.size() != basis_points_.rows() || kbar_at_basis_.size() != beta_.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "basis points, coefficients and kbar values differ in length");
  }
  if (!beta_.allFinite() || !kbar_at_basis_.allFinite() || !basis_points_.allFinite()) {
    throw Error(ErrorKind::NonFinite, "kernel estimator fields must be finite");
  }
  offset_ = kbar_at_basis_.dot(beta_);
}

double KernelEstimator::predict(Point x) const {
  double total = 0.0;
  for (Eigen::Index j = 0; j < beta_.size(); ++j) {
    total += eval_kernel(kernel_, x, row_of(basis_points_, j)) * beta_[j];
  }
  return total - offset_;
}

Vector KernelEstimator::predict(const PointMatrix& points) const {
  if (beta_.size() == 0) return Vector::Zero(points.rows());
  if (static_cast<std::size_t>(points.cols()) != dimension()) {
    throw Error(ErrorKind::DimensionMismatch, "prediction points have the wrong dimension");
  }
  return (cross_kernel_matrix(kernel_, points, basis_points_) * beta_).array() - offset_;
}

KernelEstimator fit_kernel_estimator(const RepresenterContext& ctx, double gamma,
                                     const OptimOptions& options,
                                     const std::optional<Vector>& warm) {
  check_gamma(gamma);
  const Eigen::Index m = ctx.basis_size();
  Vector start = Vector::Zero(m);
  if (warm && warm->size() == m) start = *warm;
  else if (warm && warm->size() != m) {
    throw Error(ErrorKind::DimensionMismatch, "warm start does not match the basis size");
  }

  const OptimResult r = minimize_bfgs(
      [&](const Vector& b) { return penalized_objective(b, ctx, gamma); },
      [&](const Vector& b, Vector& g) {
        return penalized_objective_and_gradient(b, ctx, gamma, g);
      },
      start, initial_inverse_hessian(ctx, gamma), options);

  FitDiagnostics diag = diagnostics_from(r);
  if (!ctx.has_events()) {
    diag.warnings.push_back("no observed events: objective is pure penalty");
  }

  const auto& basis = ctx.basis();
  PointMatrix points(m, static_cast<Eigen::Index>(ctx.data().dimension()));
  Vector kbar(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::Index b = basis[static_cast<std::size_t>(j)];
    points.row(j) = ctx.data().covariates().row(b);
    kbar[j] = ctx.kbar()[b];
  }
  return KernelEstimator(ctx.kernel(), std::move(points), r.minimizer, std::move(kbar),
                         gamma, std::move(diag));
}

KernelEstimator fit_kernel_estimator(const SurvivalDataset& train,
                                     const KernelConfig& kernel, double gamma,
                                     const OptimOptions& options,
                                     const std::optional<Vector>& warm) {
  check_gamma(gamma);
  const RepresenterContext ctx(train, kernel);
  return fit_kernel_estimator(ctx, gamma, options, warm);
}

FeatureMapContext::FeatureMapContext(SurvivalDataset data, KernelConfig kernel,
                                     std::size_t max_features)
    : data_(std::move(data)),
      kernel_(std::move(kernel)),
      map_(kernel_, data_.dimension(), max_features) {
  const Matrix phi = map_.non_constant(data_.covariates());
  means_ = phi.colwise().mean().transpose();
  centered_ = phi.rowwise() - means_.transpose();
  const Vector w = baseline_hazard_weights(data_);
  curvature_.noalias() = centered_.transpose() * w.asDiagonal() * centered_;
  curvature_ = (0.5 * (curvature_ + curvature_.transpose())).eval();
}

double feature_map_penalty(const Vector& alpha, const FeatureMapContext& ctx) {
  const double cross = alpha.dot(ctx.feature_means()) / ctx.constant();
  return alpha.squaredNorm() + cross * cross;
}

namespace {

void check_alpha(const Vector& alpha, const FeatureMapContext& ctx, double gamma) {
  check_gamma(gamma);
  if (alpha.size() != ctx.centered_features().cols()) {
    throw Error(ErrorKind::DimensionMismatch, "alpha does not match the feature count");
  }
  if (!alpha.allFinite()) throw Error(ErrorKind::NonFinite, "alpha must be finite");
}

}  // namespace

double feature_map_objective(const Vector& alpha, const FeatureMapContext& ctx,
                             double gamma) {
  check_alpha(alpha, ctx, gamma);
  const Vector f = ctx.centered_features() * alpha;
  return neg_log_partial_likelihood(f, ctx.data()) +
         gamma * feature_map_penalty(alpha, ctx);
}

double feature_map_objective_and_gradient(const Vector& alpha,
                                          const FeatureMapContext& ctx, double gamma,
                                          Vector& grad) {
  check_alpha(alpha, ctx, gamma);
  const Vector f = ctx.centered_features() * alpha;
  Vector grad_f;
  const double loss = neg_log_partial_likelihood(f, ctx.data(), grad_f);
  const double c = ctx.constant();
  const double cross = alpha.dot(ctx.feature_means()) / c;
  grad.noalias() = ctx.centered_features().transpose() * grad_f;
  grad += 2.0 * gamma * (alpha + (cross / c) * ctx.feature_means());
  return loss + gamma * (alpha.squaredNorm() + cross * cross);
}

FeatureMapEstimator::FeatureMapEstimator(KernelConfig kernel, std::size_t dimension,
                                         Vector alpha, Vector feature_means,
                                         double gamma, FitDiagnostics diagnostics)
    : kernel_(std::move(kernel)),
      map_(kernel_, dimension),
      alpha_(std::move(alpha)),
      means_(std::move(feature_means)),
      gamma_(gamma),
      diagnostics_(std::move(diagnostics)) {
  const auto q = static_cast<Eigen::Index>(map_.size());
  if (alpha_.size() != q || means_.size() != q) {
    throw Error(ErrorKind::DimensionMismatch,
                "alpha and feature means must match the feature count");
  }
  if (!alpha_.allFinite() || !means_.allFinite()) {
    throw Error(ErrorKind::NonFinite, "feature-map estimator fields must be finite");
  }
}

double FeatureMapEstimator::predict(Point x) const {
  const Vector phi = map_(x);
  return alpha_.dot(phi.head(alpha_.size()) - means_);
}

Vector FeatureMapEstimator::predict(const PointMatrix& points) const {
  if (static_cast<std::size_t>(points.cols()) != dimension()) {
    throw Error(ErrorKind::DimensionMismatch, "prediction points have the wrong dimension");
  }
  const Matrix phi = map_.non_constant(points);
  return (phi * alpha_).array() - means_.dot(alpha_);
}

FeatureMapEstimator fit_feature_map_estimator(const FeatureMapContext& ctx,
                                              double gamma, const OptimOptions& options,
                                              const std::optional<Vector>& warm) {
  check_gamma(gamma);
  const auto q = ctx.centered_features().cols();
  Vector start = Vector::Zero(q);
  if (warm) {
    if (warm->size() != q) {
      throw Error(ErrorKind::DimensionMismatch, "warm start does not match the feature count");
    }
    start = *warm;
  }
  const OptimResult r = minimize_bfgs(
      [&](const Vector& a) { return feature_map_objective(a, ctx, gamma); },
      [&](const Vector& a, Vector& g) {
        return feature_map_objective_and_gradient(a, ctx, gamma, g);
      },
      start, initial_inverse_hessian(ctx, gamma), options);
  FitDiagnostics diag = diagnostics_from(r);
  if (ctx.data().event_count() == 0) {
    diag.warnings.push_back("no observed events: objective is pure penalty");
  }
  return FeatureMapEstimator(ctx.kernel(), ctx.data().dimension(), r.minimizer,
                             ctx.feature_means(), gamma, std::move(diag));
}

FeatureMapEstimator fit_feature_map_estimator(const SurvivalDataset& train,
                                              const KernelConfig& kernel, double gamma,
                                              const OptimOptions& options) {
  const FeatureMapContext ctx(train, kernel);
  return fit_feature_map_estimator(ctx, gamma, options);
}

ExternalPredictor ExternalPredictor::closed_form(std::string name,
                                                 std::function<double(Point)> fn) {
  if (!fn) throw Error(ErrorKind::InvalidArgument, "external predictor without a function");
  ExternalPredictor p;
  p.name_ = std::move(name);
  p.fn_ = std::move(fn);
  return p;
}

ExternalPredictor ExternalPredictor::table(std::string name, Vector train_predictions,
                                           Vector validation_predictions) {
  ExternalPredictor p;
  p.name_ = std::move(name);
  p.train_ = std::move(train_predictions);
  p.validation_ = std::move(validation_predictions);
  return p;
}

double ExternalPredictor::operator()(Point x) const {
  if (!fn_) {
    throw Error(ErrorKind::InvalidArgument,
                "external predictor '" + name_ + "' is a table and has no pointwise form");
  }
  return fn_(x);
}

Vector ExternalPredictor::evaluate(const SurvivalDataset& data, SampleRole role) const {
  Vector out;
  if (fn_) {
    out.resize(data.size());
    for (Eigen::Index i = 0; i < data.size(); ++i) out[i] = fn_(data.covariate(i));
  } else {
    const auto& table = role == SampleRole::Train ? train_ : validation_;
    if (!table || table->size() != data.size()) {
      throw Error(ErrorKind::DimensionMismatch,
                  "prediction table for '" + name_ + "' does not match the " +
                      (role == SampleRole::Train ? "training" : "validation") +
                      " row count");
    }
    out = *table;
  }
  if (!out.allFinite()) {
    throw Error(ErrorKind::NonFinite,
                "external predictor '" + name_ + "' returned a non-finite value");
  }
  return out;
}

CenteredExternal::CenteredExternal(ExternalPredictor raw, double training_mean,
                                   std::vector<std::string> warnings)
    : raw_(std::move(raw)), training_mean_(training_mean), warnings_(std::move(warnings)) {}

CenteredExternal center_external(const ExternalPredictor& raw,
                                 const SurvivalDataset& train, double bound) {
  const Vector values = raw.evaluate(train, SampleRole::Train);
  std::vector<std::string> warnings;
  const double sup = values.cwiseAbs().maxCoeff();
  if (sup > bound) {
    std::ostringstream msg;
    msg << "external predictor '" << raw.name() << "' reaches |f| = " << sup
        << " on the training sample, above the bound " << bound;
    warnings.push_back(msg.str());
  }
  return CenteredExternal(raw, values.mean(), std::move(warnings));
}

}  // namespace care
