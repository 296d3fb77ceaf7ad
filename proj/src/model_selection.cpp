#include "care/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "care/error.hpp"

namespace care {

GammaGrid::GammaGrid(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw Error(ErrorKind::InvalidArgument, "gamma grid is empty");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!(values_[i] > 0.0) || !std::isfinite(values_[i])) {
      throw Error(ErrorKind::InvalidArgument, "gamma values must be positive and finite");
    }
    if (i > 0 && !(values_[i] > values_[i - 1])) {
      throw Error(ErrorKind::InvalidArgument, "gamma grid must be strictly increasing");
    }
  }
}

GammaGrid GammaGrid::spaced(double min, double max, int count, bool geometric) {
  if (count < 1) throw Error(ErrorKind::InvalidArgument, "gamma grid count must be >= 1");
  if (!(min > 0.0) || !(max >= min) || !std::isfinite(max)) {
    throw Error(ErrorKind::InvalidArgument, "gamma grid needs 0 < min <= max");
  }
  if (count == 1) return GammaGrid({min});
  std::vector<double> v(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / (count - 1);
    v[static_cast<std::size_t>(i)] =
        geometric ? std::exp(std::log(min) + t * (std::log(max) - std::log(min)))
                  : min + t * (max - min);
  }
  v.front() = min;
  v.back() = max;
  return GammaGrid(std::move(v));
}

namespace {

void enumerate_lattice(std::size_t m, int remaining, int resolution,
                       std::vector<double>& current, std::size_t pos, ThetaGrid& out) {
  if (pos == m) {
    out.points.push_back(current);
    return;
  }
  for (int k = 0; k <= remaining; ++k) {
    current[pos] = static_cast<double>(k) / resolution;
    enumerate_lattice(m, remaining - k, resolution, current, pos + 1, out);
  }
}

}  // namespace

ThetaGrid theta_grid(std::size_t num_externals, int resolution) {
  if (num_externals < 1) {
    throw Error(ErrorKind::InvalidArgument, "theta grid needs at least one external");
  }
  if (resolution < 1) {
    throw Error(ErrorKind::InvalidArgument, "theta resolution must be >= 1");
  }
  // C(resolution + M, M) lattice points.
  double count = 1.0;
  for (std::size_t k = 1; k <= num_externals; ++k) {
    count = count * (resolution + static_cast<double>(k)) / static_cast<double>(k);
    if (count > static_cast<double>(kMaxThetaPoints)) {
      throw Error(ErrorKind::InvalidArgument,
                  "theta grid would exceed " + std::to_string(kMaxThetaPoints) + " points");
    }
  }
  ThetaGrid grid;
  grid.num_externals = num_externals;
  grid.points.reserve(static_cast<std::size_t>(std::llround(count)));
  std::vector<double> current(num_externals, 0.0);
  enumerate_lattice(num_externals, resolution, resolution, current, 0, grid);
  return grid;
}

ThetaGrid empty_theta_grid() {
  ThetaGrid grid;
  grid.points.push_back({});
  return grid;
}

double validation_loss(const Vector& predicted, const SurvivalDataset& valid) {
  return neg_log_partial_likelihood(predicted, valid);
}

std::vector<KernelEstimator> fit_gamma_path(const RepresenterContext& ctx,
                                            const GammaGrid& grid,
                                            const OptimOptions& options,
                                            bool warm_start) {
  std::vector<std::optional<KernelEstimator>> fits(grid.size());
  std::optional<Vector> warm;
  for (std::size_t k = grid.size(); k-- > 0;) {
    fits[k] = fit_kernel_estimator(ctx, grid[k], options, warm_start ? warm : std::nullopt);
    if (warm_start) warm = fits[k]->beta();
  }
  std::vector<KernelEstimator> out;
  out.reserve(fits.size());
  for (auto& f : fits) out.push_back(std::move(*f));
  return out;
}

CvReport select_gamma(const std::vector<KernelEstimator>& fits,
                      const RepresenterContext& ctx, const SurvivalDataset& valid) {
  CvReport report;
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < fits.size(); ++k) {
    const auto& fit = fits[k];
    GammaRow row;
    row.gamma = fit.gamma();
    row.converged = fit.diagnostics().converged;
    row.iterations = fit.diagnostics().iterations;
    row.gradient_norm = fit.diagnostics().gradient_norm;
    row.train_loss = neg_log_partial_likelihood(ctx.fitted_values(fit.beta()), ctx.data());
    row.valid_loss = validation_loss(fit.predict(valid.covariates()), valid);
    // sargmin: strict improvement only, so ties keep the smaller gamma.
    if (row.converged && std::isfinite(row.valid_loss) &&
        (!best || row.valid_loss < report.rows[*best].valid_loss)) {
      best = k;
    }
    report.rows.push_back(row);
  }
  if (!best) {
    throw Error(ErrorKind::AllFitsFailed, "no gamma value produced a converged fit");
  }
  report.selected_gamma = *best;
  report.gamma_hat = report.rows[*best].gamma;
  return report;
}

Vector combine_predictions(const Vector& kernel, const std::vector<Vector>& externals,
                           const std::vector<double>& theta) {
  if (externals.size() != theta.size()) {
    throw Error(ErrorKind::DimensionMismatch, "theta and externals differ in length");
  }
  double total = 0.0;
  for (double t : theta) total += t;
  Vector out = (1.0 - total) * kernel;
  for (std::size_t m = 0; m < theta.size(); ++m) {
    if (theta[m] != 0.0) out += theta[m] * externals[m];
  }
  return out;
}

void select_care(const std::vector<KernelEstimator>& fits, const SurvivalDataset& valid,
                 const std::vector<CenteredExternal>& externals, const ThetaGrid& thetas,
                 CvReport& report) {
  if (thetas.num_externals != externals.size()) {
    throw Error(ErrorKind::DimensionMismatch, "theta grid does not match the externals");
  }
  if (report.rows.size() != fits.size()) {
    throw Error(ErrorKind::InvalidArgument, "report and fits differ in length");
  }
  std::vector<Vector> ext_valid;
  for (const auto& e : externals) ext_valid.push_back(e.evaluate(valid, SampleRole::Validation));

  const double nan = std::numeric_limits<double>::quiet_NaN();
  report.thetas = thetas;
  report.care_valid_loss = Matrix::Constant(static_cast<Eigen::Index>(fits.size()),
                                            static_cast<Eigen::Index>(thetas.size()), nan);
  report.best_theta.assign(fits.size(), std::nullopt);
  report.care_gamma.reset();
  report.care_theta.reset();

  double best_loss = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < fits.size(); ++k) {
    if (!report.rows[k].converged) continue;
    const Vector kernel_valid = fits[k].predict(valid.covariates());
    std::optional<std::size_t> best_t;
    for (std::size_t t = 0; t < thetas.size(); ++t) {
      const double loss = validation_loss(
          combine_predictions(kernel_valid, ext_valid, thetas.points[t]), valid);
      report.care_valid_loss(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t)) = loss;
      if (std::isfinite(loss) &&
          (!best_t || loss < report.care_valid_loss(static_cast<Eigen::Index>(k),
                                                    static_cast<Eigen::Index>(*best_t)))) {
        best_t = t;
      }
    }
    report.best_theta[k] = best_t;
    if (best_t) {
      const double loss = report.care_valid_loss(static_cast<Eigen::Index>(k),
                                                 static_cast<Eigen::Index>(*best_t));
      if (loss < best_loss) {
        best_loss = loss;
        report.care_gamma = k;
        report.care_theta = best_t;
      }
    }
  }
  if (!report.care_gamma) {
    throw Error(ErrorKind::AllFitsFailed, "no converged fit available for aggregation");
  }
}

CvResult cross_validate_gamma(const SurvivalDataset& train, const SurvivalDataset& valid,
                              const KernelConfig& kernel, const GammaGrid& grid,
                              const OptimOptions& options, bool warm_start) {
  if (train.dimension() != valid.dimension()) {
    throw Error(ErrorKind::DimensionMismatch,
                "training and validation covariates differ in dimension");
  }
  const RepresenterContext ctx(train, kernel);
  CvResult result;
  result.fits = fit_gamma_path(ctx, grid, options, warm_start);
  result.report = select_gamma(result.fits, ctx, valid);
  result.gamma_hat = result.report.gamma_hat;
  return result;
}

CareEstimator::CareEstimator(KernelEstimator kernel, std::vector<CenteredExternal> externals,
                             std::vector<double> theta, double gamma)
    : kernel_(std::move(kernel)),
      externals_(std::move(externals)),
      theta_(std::move(theta)),
      gamma_(gamma) {
  if (theta_.size() != externals_.size()) {
    throw Error(ErrorKind::DimensionMismatch, "theta and externals differ in length");
  }
  double total = 0.0;
  for (double t : theta_) {
    if (!(t >= 0.0)) throw Error(ErrorKind::InvalidArgument, "theta must be non-negative");
    total += t;
  }
  if (total > 1.0 + 1e-12) {
    throw Error(ErrorKind::InvalidArgument, "theta weights must sum to at most 1");
  }
}

double CareEstimator::kernel_weight() const {
  double total = 0.0;
  for (double t : theta_) total += t;
  return 1.0 - total;
}

double CareEstimator::predict(Point x) const {
  double out = kernel_weight() * kernel_.predict(x);
  for (std::size_t m = 0; m < theta_.size(); ++m) {
    if (theta_[m] != 0.0) out += theta_[m] * externals_[m].predict(x);
  }
  return out;
}

Vector CareEstimator::predict(const SurvivalDataset& data, SampleRole role) const {
  std::vector<Vector> ext;
  for (const auto& e : externals_) ext.push_back(e.evaluate(data, role));
  return combine_predictions(kernel_.predict(data.covariates()), ext, theta_);
}

CareResult fit_care(const SurvivalDataset& train, const SurvivalDataset& valid,
                    const KernelConfig& kernel, const GammaGrid& gammas,
                    const std::vector<ExternalPredictor>& externals,
                    const ThetaGrid& thetas, const OptimOptions& options) {
  if (train.dimension() != valid.dimension()) {
    throw Error(ErrorKind::DimensionMismatch,
                "training and validation covariates differ in dimension");
  }
  std::vector<CenteredExternal> centered;
  for (const auto& e : externals) centered.push_back(center_external(e, train));

  const RepresenterContext ctx(train, kernel);
  auto fits = fit_gamma_path(ctx, gammas, options, true);
  CvReport report = select_gamma(fits, ctx, valid);
  const ThetaGrid grid = externals.empty() ? empty_theta_grid() : thetas;
  select_care(fits, valid, centered, grid, report);

  const std::size_t g = *report.care_gamma;
  CareEstimator est(fits[g], centered, grid.points[*report.care_theta], fits[g].gamma());
  return CareResult{std::move(est), std::move(report), std::move(fits)};
}

}  // namespace care
