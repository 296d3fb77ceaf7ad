#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "care/estimators.hpp"

namespace care {

/// Strictly increasing, positive, finite regularisation values.
class GammaGrid {
 public:
  explicit GammaGrid(std::vector<double> values);
  /// `count` values from `min` to `max`, geometric or evenly spaced.
  static GammaGrid spaced(double min, double max, int count, bool geometric = true);

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
};

/// Weight vectors in the simplex {theta >= 0, sum theta <= 1}, stored in
/// ascending lexicographic order.
struct ThetaGrid {
  std::size_t num_externals = 0;
  std::vector<std::vector<double>> points;

  std::size_t size() const { return points.size(); }
};

inline constexpr std::size_t kMaxThetaPoints = 1000000;

/// Every theta with theta_m = k_m / resolution, k_m >= 0, sum k_m <= resolution.
ThetaGrid theta_grid(std::size_t num_externals, int resolution);

/// Grid holding only the empty weight vector (no externals).
ThetaGrid empty_theta_grid();

struct GammaRow {
  double gamma = 0.0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
};

struct CvReport {
  std::vector<GammaRow> rows;  // ascending gamma
  std::size_t selected_gamma = 0;
  double gamma_hat = 0.0;

  // Aggregation search; empty when no externals were given.
  ThetaGrid thetas;
  Matrix care_valid_loss;  // |gamma| x |theta|; NaN for excluded fits
  std::vector<std::optional<std::size_t>> best_theta;  // per gamma
  std::optional<std::size_t> care_gamma;
  std::optional<std::size_t> care_theta;

  bool has_care() const { return care_gamma.has_value(); }
};

/// l~_n: the negative log-partial likelihood on the validation sample.
double validation_loss(const Vector& predicted, const SurvivalDataset& valid);

/// Fits every grid value in decreasing order. With `warm_start`, each fit
/// starts at the previous solution; otherwise from zero. Result is in grid
/// (ascending) order.
std::vector<KernelEstimator> fit_gamma_path(const RepresenterContext& ctx,
                                            const GammaGrid& grid,
                                            const OptimOptions& options = {},
                                            bool warm_start = true);

/// Records training/validation losses and selects the smallest gamma with
/// minimal validation loss among converged fits. Throws AllFitsFailed.
CvReport select_gamma(const std::vector<KernelEstimator>& fits,
                      const RepresenterContext& ctx, const SurvivalDataset& valid);

/// Scans the theta grid per gamma using cached validation predictions and
/// fills the aggregation fields of `report`.
void select_care(const std::vector<KernelEstimator>& fits, const SurvivalDataset& valid,
                 const std::vector<CenteredExternal>& externals, const ThetaGrid& thetas,
                 CvReport& report);

struct CvResult {
  double gamma_hat = 0.0;
  CvReport report;
  std::vector<KernelEstimator> fits;  // aligned with the grid

  const KernelEstimator& selected() const { return fits[report.selected_gamma]; }
};

CvResult cross_validate_gamma(const SurvivalDataset& train, const SurvivalDataset& valid,
                              const KernelConfig& kernel, const GammaGrid& grid,
                              const OptimOptions& options = {}, bool warm_start = true);

/// (1 - sum theta) * kernel + sum theta_m * centred external m.
class CareEstimator {
 public:
  CareEstimator(KernelEstimator kernel, std::vector<CenteredExternal> externals,
                std::vector<double> theta, double gamma);

  const KernelEstimator& kernel_component() const { return kernel_; }
  const std::vector<CenteredExternal>& externals() const { return externals_; }
  const std::vector<double>& theta() const { return theta_; }
  double gamma() const { return gamma_; }
  double kernel_weight() const;

  double predict(Point x) const;
  /// Combination at every record, with externals evaluated for `role`.
  Vector predict(const SurvivalDataset& data, SampleRole role) const;

 private:
  KernelEstimator kernel_;
  std::vector<CenteredExternal> externals_;
  std::vector<double> theta_;
  double gamma_;
};

/// Pointwise combination of component predictions.
Vector combine_predictions(const Vector& kernel, const std::vector<Vector>& externals,
                           const std::vector<double>& theta);

struct CareResult {
  CareEstimator estimator;
  CvReport report;
  std::vector<KernelEstimator> fits;
};

CareResult fit_care(const SurvivalDataset& train, const SurvivalDataset& valid,
                    const KernelConfig& kernel, const GammaGrid& gammas,
                    const std::vector<ExternalPredictor>& externals,
                    const ThetaGrid& thetas, const OptimOptions& options = {});

}  // namespace care
