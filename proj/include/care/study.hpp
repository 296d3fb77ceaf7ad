#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "care/model_selection.hpp"
#include "care/simulation.hpp"

namespace care {

struct StudyConfig {
  DgpConfig dgp;
  KernelConfig kernel = KernelConfig::sobolev1(1.0);
  GammaGrid gammas = GammaGrid::spaced(1e-5, 10.0, 50, true);
  /// Aggregate with the design's external predictor when set.
  std::optional<int> theta_resolution;
  std::vector<std::size_t> n_values{50, 100, 200};
  std::size_t replications = 20;
  std::uint64_t master_seed = 1;
  std::size_t n_mc = 500;
  OptimOptions optimizer;
};

/// One tidy output row.
struct StudyRow {
  std::size_t n = 0;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  std::string estimator;  // cv_kernel, oracle_kernel, care, external
  bool ok = false;
  double l2_error = 0.0;
  double gamma_hat = 0.0;     // NaN when not applicable
  std::vector<double> theta;  // one entry per external; NaN when not applicable
  std::string message;
};

struct StudySummaryRow {
  std::size_t n = 0;
  std::string estimator;
  std::size_t count = 0;
  double mean = 0.0;
  double sd = 0.0;
  double lower = 0.0;  // mean - 2 sd / sqrt(count)
  double upper = 0.0;
};

struct StudyResult {
  std::vector<StudyRow> rows;  // ordered by (n, rep, estimator)
  std::vector<StudySummaryRow> summary;
  std::size_t replications_run = 0;
  std::size_t replications_ok = 0;

  double success_rate() const {
    return replications_run == 0 ? 0.0
                                 : static_cast<double>(replications_ok) / replications_run;
  }
};

/// Seed of replication `rep` at sample size `n`.
std::uint64_t replication_seed(std::uint64_t master, std::size_t n, std::size_t rep);

std::vector<std::string> study_estimators(const StudyConfig& config);

/// Rows for one replication: simulate 2n records (first half trains, second
/// half validates), fit the gamma path once and score every estimator.
std::vector<StudyRow> run_replication(const StudyConfig& config, std::size_t n, std::size_t rep);

/// Runs every (n, rep) job on `workers` threads; output does not depend on
/// the worker count.
StudyResult run_study(const StudyConfig& config, std::size_t workers = 1);

std::vector<StudySummaryRow> summarize(const std::vector<StudyRow>& rows);

void write_study_csv(const StudyResult& result, std::size_t num_externals,
                     const std::filesystem::path& path);
void write_study_summary_csv(const StudyResult& result, const std::filesystem::path& path);
std::vector<StudyRow> read_study_csv(const std::filesystem::path& path);

}  // namespace care
