#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "care/kernels.hpp"

namespace care {

/// One observation. `censored` is the internal indicator I: true when the
/// censoring time came first and no event was observed.
struct SurvivalRecord {
  std::vector<double> covariates;
  double time = 0.0;
  bool censored = false;
};

/// Immutable censored survival sample with times normalised to (0, 1].
class SurvivalDataset {
 public:
  /// Validates and takes ownership. Times must already lie in (0, 1].
  SurvivalDataset(PointMatrix covariates, Vector times,
                  std::vector<std::uint8_t> censored, double time_scale = 1.0);

  static SurvivalDataset from_records(const std::vector<SurvivalRecord>& records,
                                      double time_scale = 1.0);

  Eigen::Index size() const { return times_.size(); }
  std::size_t dimension() const { return static_cast<std::size_t>(covariates_.cols()); }

  const PointMatrix& covariates() const { return covariates_; }
  Point covariate(Eigen::Index i) const { return row_of(covariates_, i); }
  const Vector& times() const { return times_; }
  double time(Eigen::Index i) const { return times_[i]; }
  bool censored(Eigen::Index i) const { return censored_[static_cast<std::size_t>(i)] != 0; }
  bool event(Eigen::Index i) const { return !censored(i); }
  const std::vector<std::uint8_t>& censoring() const { return censored_; }
  double time_scale() const { return time_scale_; }

  /// Indices sorted by time ascending, ties by original position.
  const std::vector<Eigen::Index>& event_order() const { return event_order_; }

  Eigen::Index event_count() const;

  /// R_i(t) = 1{T_i >= t}.
  bool at_risk(Eigen::Index i, double t) const { return times_[i] >= t; }
  /// N_i(t) = 1{T_i <= t, I_i = 0}.
  bool counted(Eigen::Index i, double t) const { return times_[i] <= t && event(i); }

  SurvivalRecord record(Eigen::Index i) const;
  /// Sub-sample in the given order, sharing this dataset's time scale.
  SurvivalDataset subset(const std::vector<Eigen::Index>& rows) const;

 private:
  PointMatrix covariates_;
  Vector times_;
  std::vector<std::uint8_t> censored_;
  double time_scale_;
  std::vector<Eigen::Index> event_order_;
};

/// Column names of the CSV layout `x1,...,xd,time,event`.
struct CsvSchema {
  std::vector<std::string> covariate_columns;
  std::string time_column = "time";
  std::string event_column = "event";

  /// x1..xd plus the default time/event names.
  static CsvSchema standard(std::size_t dimension);
};

/// Reads a CSV where event = 1 marks an observed event. Times are divided by
/// `time_scale` when given, otherwise by the largest time in the file.
SurvivalDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema,
                         std::optional<double> time_scale = std::nullopt);

/// Reads the covariate columns from the header (every column other than time
/// and event) and honours a JSON sidecar when one is present.
SurvivalDataset load_dataset(const std::filesystem::path& path);

/// Writes the standard CSV in original time units plus `<path>.json` with
/// the time scale and dimension.
void write_csv(const SurvivalDataset& data, const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

/// Seeded shuffle then equal halves; training takes the extra record.
std::pair<SurvivalDataset, SurvivalDataset> split_train_validation(
    const SurvivalDataset& data, std::uint64_t seed);

}  // namespace care
