#include "care/partial_likelihood.hpp"

#include <cmath>
#include <limits>

#include "care/error.hpp"

namespace care {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Running log(sum exp(v)) that rescales when a larger term arrives.
struct LogSumExp {
  double max = kNegInf;
  double scaled_sum = 0.0;

  void add(double v) {
    if (v == kNegInf) return;
    if (v <= max) {
      scaled_sum += std::exp(v - max);
    } else {
      scaled_sum = scaled_sum * std::exp(max - v) + 1.0;
      max = v;
    }
  }
  double value() const { return max == kNegInf ? kNegInf : max + std::log(scaled_sum); }
};

void check_inputs(const Vector& fvalues, const SurvivalDataset& data) {
  if (fvalues.size() != data.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "fitted values and dataset differ in length");
  }
  if (!fvalues.allFinite()) {
    throw Error(ErrorKind::NonFinite, "fitted values must be finite");
  }
}

// Shared pass: log of the unnormalised risk-set sum per tie group, walking
// the sorted times from the largest down.
double likelihood_pass(const Vector& f, const SurvivalDataset& data, Vector* grad_f) {
  const auto& order = data.event_order();
  const Eigen::Index n = data.size();
  const double log_n = std::log(static_cast<double>(n));

  // Tie groups in ascending time: [group_start[g], group_start[g+1]).
  std::vector<std::size_t> group_start;
  group_start.reserve(order.size() + 1);
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k == 0 || data.time(order[k]) != data.time(order[k - 1])) group_start.push_back(k);
  }
  const std::size_t groups = group_start.size();
  group_start.push_back(order.size());

  std::vector<double> log_risk(groups);
  std::vector<int> events_in_group(groups, 0);
  LogSumExp risk;
  double total = 0.0;
  for (std::size_t g = groups; g-- > 0;) {
    for (std::size_t k = group_start[g]; k < group_start[g + 1]; ++k) risk.add(f[order[k]]);
    log_risk[g] = risk.value();
    for (std::size_t k = group_start[g]; k < group_start[g + 1]; ++k) {
      const Eigen::Index i = order[k];
      if (data.event(i)) {
        ++events_in_group[g];
        total += log_risk[g] - log_n - f[i];
      }
    }
  }

  if (grad_f != nullptr) {
    grad_f->resize(n);
    // Cumulative log sum over events at or before each time of 1/risk-sum.
    LogSumExp inverse_risk;
    for (std::size_t g = 0; g < groups; ++g) {
      if (events_in_group[g] > 0) {
        inverse_risk.add(std::log(static_cast<double>(events_in_group[g])) - log_risk[g]);
      }
      const double c = inverse_risk.value();
      for (std::size_t k = group_start[g]; k < group_start[g + 1]; ++k) {
        const Eigen::Index i = order[k];
        const double share = c == kNegInf ? 0.0 : std::exp(f[i] + c);
        (*grad_f)[i] = (share - (data.event(i) ? 1.0 : 0.0)) / static_cast<double>(n);
      }
    }
  }
  return total / static_cast<double>(n);
}

}  // namespace

double neg_log_partial_likelihood(const Vector& fvalues, const SurvivalDataset& data) {
  check_inputs(fvalues, data);
  return likelihood_pass(fvalues, data, nullptr);
}

double neg_log_partial_likelihood(const Vector& fvalues, const SurvivalDataset& data,
                                  Vector& grad_f) {
  check_inputs(fvalues, data);
  return likelihood_pass(fvalues, data, &grad_f);
}

std::vector<Eigen::Index> build_representer_basis(const GramMatrix& gram,
                                                  double constant_norm_sq) {
  if (!(constant_norm_sq > 0.0) || !std::isfinite(constant_norm_sq)) {
    throw Error(ErrorKind::NotInSpace,
                "representer basis needs a finite positive ||1_X||^2");
  }
  const Eigen::Index n = gram.size();
  Matrix m(n + 1, n + 1);
  m(0, 0) = constant_norm_sq;
  m.row(0).tail(n).setOnes();
  m.col(0).tail(n).setOnes();
  m.bottomRightCorner(n, n) = gram.entries;

  const double tol = 1e-10 * m.cwiseAbs().maxCoeff();
  std::vector<Eigen::Index> basis;
  Eigen::Index row = 0;
  for (Eigen::Index col = 0; col <= n && row <= n; ++col) {
    Eigen::Index pivot;
    const double best = m.col(col).tail(n + 1 - row).cwiseAbs().maxCoeff(&pivot);
    pivot += row;
    if (best < tol) continue;
    if (pivot != row) m.row(pivot).swap(m.row(row));
    const Eigen::Index rest = n - col;
    if (row < n && rest > 0) {
      const Vector factors = m.col(col).tail(n - row) / m(row, col);
      m.bottomRightCorner(n - row, rest).noalias() -=
          factors * m.row(row).tail(rest);
    }
    m.col(col).tail(n - row).setZero();
    if (col > 0) basis.push_back(col - 1);
    ++row;
  }
  return basis;
}

Vector baseline_hazard_weights(const SurvivalDataset& data) {
  const Eigen::Index n = data.size();
  Vector weight = Vector::Zero(n);
  const auto& order = data.event_order();
  double hazard = 0.0;
  for (Eigen::Index pos = 0; pos < n;) {
    const double t = data.time(order[static_cast<std::size_t>(pos)]);
    Eigen::Index end = pos;
    int events = 0;
    while (end < n && data.time(order[static_cast<std::size_t>(end)]) == t) {
      if (data.event(order[static_cast<std::size_t>(end)])) ++events;
      ++end;
    }
    hazard += static_cast<double>(events) / static_cast<double>(n - pos);
    for (Eigen::Index k = pos; k < end; ++k) weight[order[static_cast<std::size_t>(k)]] = hazard;
    pos = end;
  }
  return weight / static_cast<double>(n);
}

RepresenterContext::RepresenterContext(SurvivalDataset data, KernelConfig kernel)
    : data_(std::move(data)),
      kernel_(std::move(kernel)),
      gram_(gram_matrix(kernel_, data_.covariates())),
      constant_norm_sq_(require_constant_norm_squared(kernel_)) {
  basis_ = build_representer_basis(gram_, constant_norm_sq_);
  const Eigen::Index n = data_.size();
  const Eigen::Index m = basis_size();
  kbar_ = gram_.entries.colwise().mean().transpose();

  design_.resize(n, m);
  Vector kbar_basis(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::Index b = basis_[static_cast<std::size_t>(j)];
    design_.col(j) = gram_.entries.col(b).array() - kbar_[b];
    kbar_basis[j] = kbar_[b];
  }
  penalty_.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const Eigen::Index bi = basis_[static_cast<std::size_t>(i)];
      const Eigen::Index bj = basis_[static_cast<std::size_t>(j)];
      penalty_(i, j) = gram_.entries(bi, bj) - kbar_basis[i] - kbar_basis[j] +
                       kbar_basis[i] * kbar_basis[j] * constant_norm_sq_;
    }
  }
  // Exact symmetry keeps beta^T Khat beta free of ordering noise.
  penalty_ = (0.5 * (penalty_ + penalty_.transpose())).eval();

  const Vector weight = baseline_hazard_weights(data_);
  curvature_.noalias() = design_.transpose() * weight.asDiagonal() * design_;
  curvature_ = (0.5 * (curvature_ + curvature_.transpose())).eval();
}

Vector RepresenterContext::fitted_values(const Vector& beta) const {
  if (beta.size() != basis_size()) {
    throw Error(ErrorKind::DimensionMismatch, "beta does not match the basis size");
  }
  return design_ * beta;
}

namespace {

void check_objective_args(const Vector& beta, const RepresenterContext& ctx, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw Error(ErrorKind::InvalidArgument, "gamma must be positive and finite");
  }
  if (beta.size() != ctx.basis_size()) {
    throw Error(ErrorKind::DimensionMismatch, "beta does not match the basis size");
  }
  if (!beta.allFinite()) throw Error(ErrorKind::NonFinite, "beta must be finite");
}

}  // namespace

double penalized_objective(const Vector& beta, const RepresenterContext& ctx,
                           double gamma) {
  check_objective_args(beta, ctx, gamma);
  const Vector f = ctx.design() * beta;
  return neg_log_partial_likelihood(f, ctx.data()) +
         gamma * beta.dot(ctx.penalty() * beta);
}

double penalized_objective_and_gradient(const Vector& beta,
                                        const RepresenterContext& ctx, double gamma,
                                        Vector& grad) {
  check_objective_args(beta, ctx, gamma);
  const Vector f = ctx.design() * beta;
  Vector grad_f;
  const double loss = neg_log_partial_likelihood(f, ctx.data(), grad_f);
  const Vector kb = ctx.penalty() * beta;
  grad.noalias() = ctx.design().transpose() * grad_f;
  grad += 2.0 * gamma * kb;
  return loss + gamma * beta.dot(kb);
}

Vector penalized_gradient(const Vector& beta, const RepresenterContext& ctx,
                          double gamma) {
  Vector grad;
  penalized_objective_and_gradient(beta, ctx, gamma, grad);
  return grad;
}

}  // namespace care
