#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "care/kernels.hpp"
#include "care/optimizer.hpp"
#include "care/partial_likelihood.hpp"
#include "care/survival_data.hpp"

namespace care {

struct FitDiagnostics {
  bool converged = false;
  double gradient_norm = 0.0;
  int iterations = 0;
  double objective = 0.0;
  std::vector<double> trace;
  std::vector<std::string> warnings;
};

/// f(x) = sum_j (k(x, X_j) - kbar(X_j)) beta_j over the basis points.
class KernelEstimator {
 public:
  KernelEstimator(KernelConfig kernel, PointMatrix basis_points, Vector beta,
                  Vector kbar_at_basis, double gamma, FitDiagnostics diagnostics = {});

  const KernelConfig& kernel() const { return kernel_; }
  const PointMatrix& basis_points() const { return basis_points_; }
  const Vector& beta() const { return beta_; }
  const Vector& kbar_at_basis() const { return kbar_at_basis_; }
  double gamma() const { return gamma_; }
  const FitDiagnostics& diagnostics() const { return diagnostics_; }
  /// sum_j kbar(X_j) beta_j, subtracted from every prediction.
  double centering_offset() const { return offset_; }
  std::size_t dimension() const { return static_cast<std::size_t>(basis_points_.cols()); }

  double predict(Point x) const;
  Vector predict(const PointMatrix& points) const;

 private:
  KernelConfig kernel_;
  PointMatrix basis_points_;
  Vector beta_;
  Vector kbar_at_basis_;
  double gamma_;
  double offset_;
  FitDiagnostics diagnostics_;
};

/// Inverse of (baseline curvature + 2 gamma Khat): the optimizer's starting
/// inverse Hessian for representer fits.
Matrix initial_inverse_hessian(const RepresenterContext& ctx, double gamma);

/// Minimises the penalised objective over the representer coefficients,
/// starting from `warm` (or zero).
KernelEstimator fit_kernel_estimator(const RepresenterContext& ctx, double gamma,
                                     const OptimOptions& options = {},
                                     const std::optional<Vector>& warm = std::nullopt);

KernelEstimator fit_kernel_estimator(const SurvivalDataset& train,
                                     const KernelConfig& kernel, double gamma,
                                     const OptimOptions& options = {},
                                     const std::optional<Vector>& warm = std::nullopt);

/// Training-sample quantities for the primal (feature-map) formulation.
class FeatureMapContext {
 public:
  FeatureMapContext(SurvivalDataset data, KernelConfig kernel,
                    std::size_t max_features = kDefaultMaxFeatures);

  const SurvivalDataset& data() const { return data_; }
  const KernelConfig& kernel() const { return kernel_; }
  const PolynomialFeatureMap& map() const { return map_; }
  /// n x q centred features phi_j(X_i) - P_n(phi_j).
  const Matrix& centered_features() const { return centered_; }
  const Vector& feature_means() const { return means_; }
  double constant() const { return map_.constant(); }
  /// Centred features weighted by baseline_hazard_weights, as a q x q
  /// matrix; preconditions the optimizer.
  const Matrix& baseline_curvature() const { return curvature_; }

 private:
  SurvivalDataset data_;
  KernelConfig kernel_;
  PolynomialFeatureMap map_;
  Matrix centered_;
  Vector means_;
  Matrix curvature_;
};

/// Inverse of (baseline curvature + 2 gamma * penalty Hessian) in alpha.
Matrix initial_inverse_hessian(const FeatureMapContext& ctx, double gamma);

/// sum alpha_j^2 + (c^{-1} sum_j alpha_j P_n(phi_j))^2 = ||f_alpha||_H^2.
double feature_map_penalty(const Vector& alpha, const FeatureMapContext& ctx);

/// l_n(f_alpha) + gamma * feature_map_penalty(alpha).
double feature_map_objective(const Vector& alpha, const FeatureMapContext& ctx,
                             double gamma);
double feature_map_objective_and_gradient(const Vector& alpha,
                                          const FeatureMapContext& ctx, double gamma,
                                          Vector& grad);

/// f(x) = alpha^T (phi(x)_{1..q} - feature_means).
class FeatureMapEstimator {
 public:
  FeatureMapEstimator(KernelConfig kernel, std::size_t dimension, Vector alpha,
                      Vector feature_means, double gamma,
                      FitDiagnostics diagnostics = {});

  const KernelConfig& kernel() const { return kernel_; }
  const Vector& alpha() const { return alpha_; }
  const Vector& feature_means() const { return means_; }
  double constant() const { return map_.constant(); }
  double gamma() const { return gamma_; }
  std::size_t dimension() const { return map_.dimension(); }
  const FitDiagnostics& diagnostics() const { return diagnostics_; }

  double predict(Point x) const;
  Vector predict(const PointMatrix& points) const;

 private:
  KernelConfig kernel_;
  PolynomialFeatureMap map_;
  Vector alpha_;
  Vector means_;
  double gamma_;
  FitDiagnostics diagnostics_;
};

FeatureMapEstimator fit_feature_map_estimator(
    const FeatureMapContext& ctx, double gamma, const OptimOptions& options = {},
    const std::optional<Vector>& warm = std::nullopt);

FeatureMapEstimator fit_feature_map_estimator(const SurvivalDataset& train,
                                              const KernelConfig& kernel, double gamma,
                                              const OptimOptions& options = {});

enum class SampleRole { Train, Validation };

/// A pre-trained risk model queried pointwise. Either a closed-form function
/// of the covariates or a table of predictions aligned with the training and
/// validation rows.
class ExternalPredictor {
 public:
  static ExternalPredictor closed_form(std::string name,
                                       std::function<double(Point)> fn);
  static ExternalPredictor table(std::string name, Vector train_predictions,
                                 Vector validation_predictions);

  const std::string& name() const { return name_; }
  bool has_closed_form() const { return static_cast<bool>(fn_); }
  const std::optional<Vector>& train_table() const { return train_; }
  const std::optional<Vector>& validation_table() const { return validation_; }

  /// Throws InvalidArgument for table-backed predictors.
  double operator()(Point x) const;
  /// Predictions for every record of `data`, which plays `role`.
  Vector evaluate(const SurvivalDataset& data, SampleRole role) const;

 private:
  std::string name_;
  std::function<double(Point)> fn_;
  std::optional<Vector> train_;
  std::optional<Vector> validation_;
};

inline constexpr double kDefaultExternalBound = 100.0;

/// External predictor shifted to have zero mean over the training sample.
class CenteredExternal {
 public:
  CenteredExternal(ExternalPredictor raw, double training_mean,
                   std::vector<std::string> warnings = {});

  const ExternalPredictor& raw() const { return raw_; }
  double training_mean() const { return training_mean_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  double predict(Point x) const { return raw_(x) - training_mean_; }
  Vector evaluate(const SurvivalDataset& data, SampleRole role) const {
    return raw_.evaluate(data, role).array() - training_mean_;
  }

 private:
  ExternalPredictor raw_;
  double training_mean_;
  std::vector<std::string> warnings_;
};

/// Centres on the training sample; warns when |raw| exceeds `bound` there.
CenteredExternal center_external(const ExternalPredictor& raw,
                                 const SurvivalDataset& train,
                                 double bound = kDefaultExternalBound);

}  // namespace care
