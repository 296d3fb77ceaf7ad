#pragma once

#include <vector>

#include "care/kernels.hpp"
#include "care/survival_data.hpp"

namespace care {

/// Negative log-partial likelihood
///   (1/n) sum_{events i} [log S_n(f, T_i) - f(X_i)],
///   S_n(f, t) = (1/n) sum_j 1{T_j >= t} exp(f(X_j)),
/// evaluated with a running log-sum-exp over risk sets.
double neg_log_partial_likelihood(const Vector& fvalues, const SurvivalDataset& data);

/// Same value; also writes d(loss)/d f(X_k) into `grad_f`.
double neg_log_partial_likelihood(const Vector& fvalues, const SurvivalDataset& data,
                                  Vector& grad_f);

/// Pivot columns of the bordered matrix [[c, 1^T], [1, K]] under Gaussian
/// elimination, shifted down by one and restricted to the K block. Indices
/// are 0-based and ascending.
std::vector<Eigen::Index> build_representer_basis(const GramMatrix& gram,
                                                  double constant_norm_sq);

/// (1/n) times the Nelson-Aalen cumulative hazard at each record's time:
/// the diagonal of the loss Hessian in f at f = 0.
Vector baseline_hazard_weights(const SurvivalDataset& data);

/// Everything the representer objective needs for one training sample and
/// kernel; independent of gamma, so one context serves a whole grid.
class RepresenterContext {
 public:
  RepresenterContext(SurvivalDataset data, KernelConfig kernel);

  const SurvivalDataset& data() const { return data_; }
  const KernelConfig& kernel() const { return kernel_; }
  const GramMatrix& gram() const { return gram_; }
  double constant_norm_sq() const { return constant_norm_sq_; }
  const std::vector<Eigen::Index>& basis() const { return basis_; }
  Eigen::Index basis_size() const { return static_cast<Eigen::Index>(basis_.size()); }

  /// kbar(X_j) = (1/n) sum_i k(X_i, X_j) for every training point.
  const Vector& kbar() const { return kbar_; }
  /// n x |A|: k(X_i, X_j) - kbar(X_j) for j in the basis.
  const Matrix& design() const { return design_; }
  /// |A| x |A|: k - kbar(x) - kbar(y) + kbar(x) kbar(y) ||1||^2 on the basis.
  const Matrix& penalty() const { return penalty_; }

  /// design^T D design with D_kk = (1/n) * (Nelson-Aalen cumulative hazard at
  /// T_k): the diagonal part of the loss Hessian at f = 0, pulled back to
  /// beta. Used to precondition the optimizer.
  const Matrix& baseline_curvature() const { return curvature_; }

  /// f_beta(X_i) for every training point.
  Vector fitted_values(const Vector& beta) const;

  bool has_events() const { return data_.event_count() > 0; }

 private:
  SurvivalDataset data_;
  KernelConfig kernel_;
  GramMatrix gram_;
  double constant_norm_sq_;
  std::vector<Eigen::Index> basis_;
  Vector kbar_;
  Matrix design_;
  Matrix penalty_;
  Matrix curvature_;
};

/// l_n(f_beta) + gamma * beta^T Khat beta.
double penalized_objective(const Vector& beta, const RepresenterContext& ctx,
                           double gamma);

Vector penalized_gradient(const Vector& beta, const RepresenterContext& ctx,
                          double gamma);

/// Value and gradient with a single pass over the design matrix.
double penalized_objective_and_gradient(const Vector& beta,
                                        const RepresenterContext& ctx, double gamma,
                                        Vector& grad);

}  // namespace care
