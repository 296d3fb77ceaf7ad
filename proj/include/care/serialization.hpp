#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "care/estimators.hpp"
#include "care/evaluation.hpp"
#include "care/model_selection.hpp"
#include "care/optimizer.hpp"
#include "care/simulation.hpp"

namespace care {

using Json = nlohmann::json;

/// Throws Config unless `obj` is an object whose keys all appear in `allowed`.
void check_keys(const Json& obj, const std::vector<std::string>& allowed,
                const std::string& where);

Json to_json(const KernelConfig& kernel);
KernelConfig kernel_from_json(const Json& j);

Json to_json(const OptimOptions& options);
/// Missing fields keep their defaults.
OptimOptions optim_options_from_json(const Json& j);

/// {"min", "max", "count", "geometric"} or {"values": [...]}.
GammaGrid gamma_grid_from_json(const Json& j);

Json to_json(const KernelEstimator& est);
KernelEstimator kernel_estimator_from_json(const Json& j);

Json to_json(const FeatureMapEstimator& est);
FeatureMapEstimator feature_map_estimator_from_json(const Json& j);

/// Closed-form externals are stored by name ("builtin:<dgp>"); tables are
/// stored inline.
ExternalPredictor builtin_external(const DgpConfig& config);
Json to_json(const CenteredExternal& ext);
CenteredExternal centered_external_from_json(const Json& j);

Json to_json(const CareEstimator& est);
CareEstimator care_estimator_from_json(const Json& j);

/// One row per (gamma, theta) pair; without externals one row per gamma.
void write_cv_report_csv(const CvReport& report, const std::filesystem::path& path);
struct CvReportRow {
  double gamma = 0.0;
  std::vector<double> theta;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  bool converged = false;
};
std::vector<CvReportRow> read_cv_report_csv(const std::filesystem::path& path);
Json cv_summary_json(const CvReport& report);

void write_survival_csv(const StepSurvival& curve, const std::filesystem::path& path);
StepSurvival read_survival_csv(const std::filesystem::path& path);

/// x1..xd,f0 for every record.
void write_truth_csv(const SurvivalDataset& data, const SimulationTruth& truth,
                     const std::filesystem::path& path);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const Json& j, const std::filesystem::path& path);

}  // namespace care
