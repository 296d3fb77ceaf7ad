#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "care/kernels.hpp"
#include "care/random.hpp"
#include "care/survival_data.hpp"

namespace care {

/// Right-continuous step function: 1 before times.front(), values[k] on
/// [times[k], times[k+1]).
struct StepSurvival {
  std::vector<double> times;   // strictly increasing jump times
  std::vector<double> values;  // survival after each jump

  double at(double t) const;
};

/// exp(-sum over event times s <= t of d(s) / R(s)), R(s) = #{j : T_j >= s}.
/// All events sharing a time use the same risk-set count.
StepSurvival breslow_survival(const SurvivalDataset& data);

/// Fraction of comparable pairs (T_i > T_j, j observed) with f_i < f_j.
/// Ties in predictions never count as concordant. O(n log n).
double concordance_index(const Vector& predictions, const SurvivalDataset& data);

/// Direct double loop over all ordered pairs.
double concordance_index_reference(const Vector& predictions, const SurvivalDataset& data);

using CovariateSampler = std::function<std::vector<double>(KeyedStream&)>;
using PointFunction = std::function<double(Point)>;

/// sqrt(mean (predict - truth)^2) over n_mc covariates drawn by `sampler`;
/// draw i uses KeyedStream(seed, stream, i).
double l2_error_mc(const PointFunction& predict, const PointFunction& truth,
                   const CovariateSampler& sampler, std::size_t n_mc, std::uint64_t seed);

/// Same integral with the sample points fixed in advance.
double l2_error_on(const Vector& predicted, const Vector& truth);

/// n_mc covariates from `sampler`, one row per draw.
PointMatrix sample_points(const CovariateSampler& sampler, std::size_t n_mc,
                          std::uint64_t seed);

}  // namespace care
