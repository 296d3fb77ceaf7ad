#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "care/evaluation.hpp"
#include "care/kernels.hpp"
#include "care/survival_data.hpp"

namespace care {

enum class DgpVariant { Univariate, MultivariateD10 };

/// Proportional-hazards design with baseline hazard 6 on [0, 1] and
/// censoring T_C ~ U[1/5, 2] clamped at 1.
struct DgpConfig {
  DgpVariant variant = DgpVariant::Univariate;

  static constexpr double kBaselineRate = 6.0;
  static constexpr double kCensorLow = 0.2;
  static constexpr double kCensorHigh = 2.0;

  std::size_t dimension() const { return variant == DgpVariant::Univariate ? 1 : 10; }
  std::string name() const;
  static DgpConfig parse(const std::string& name);
};

/// 2 sin(2x) - 2 sin^2(1), summed over the first five coordinates in the
/// multivariate design.
double true_f0(const DgpConfig& config, Point x);

/// Univariate: 2 sin(3x/2) - (8/3) sin^2(3/4).
/// Multivariate: sum_{j<=4} (sin 2 - cos 2 - 1)(6 x_j - 3).
double external_predictor(const DgpConfig& config, Point x);

/// Uniform covariates on the unit cube of the design's dimension.
CovariateSampler covariate_sampler(const DgpConfig& config);

/// Quantities hidden from the estimators.
struct SimulationTruth {
  DgpConfig config;
  Vector f0;              // f0 at each record
  Vector survival_times;  // T_S before censoring
  Vector censor_times;    // T_C after clamping

  double f0_at(Point x) const { return true_f0(config, x); }
};

struct SimulatedData {
  SurvivalDataset data;
  SimulationTruth truth;
};

/// Record i uses streams keyed by (seed, i): covariates, U ~ (0, 1], T_C.
SimulatedData simulate_dataset(const DgpConfig& config, std::size_t n, std::uint64_t seed);

/// Uncensored T_S draws for fresh covariates, for survival-curve oracles.
std::vector<double> sample_survival_times(const DgpConfig& config, std::size_t count,
                                          std::uint64_t seed);

}  // namespace care
