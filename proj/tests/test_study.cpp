#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"

#include "care/study.hpp"

using namespace care;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("study rows and summary") {
  StudyConfig cfg;
  cfg.n_values = {50, 100, 200};
  cfg.replications = 20;
  const auto result = run_study(cfg, 1);
  const auto names = study_estimators(cfg);
  CHECK(names.size() == 2);
  CHECK(result.rows.size() == 3 * 20 * names.size());
  CHECK(result.success_rate() >= 0.9);
  for (const auto& r : result.rows) {
    if (!r.ok) continue;
    CHECK(r.l2_error >= 0.0);
    CHECK(cfg.gammas.values().end() !=
          std::find(cfg.gammas.values().begin(), cfg.gammas.values().end(), r.gamma_hat));
  }
  // oracle never loses to the selected gamma on the same replication
  for (std::size_t i = 0; i + 1 < result.rows.size(); i += 2) {
    const auto& cv = result.rows[i];
    const auto& oracle = result.rows[i + 1];
    REQUIRE(cv.estimator == "cv_kernel");
    REQUIRE(oracle.estimator == "oracle_kernel");
    CHECK(cv.rep == oracle.rep);
    if (cv.ok && oracle.ok) CHECK(oracle.l2_error <= cv.l2_error);
  }
  CHECK(result.summary.size() == 3 * names.size());
  for (const auto& s : result.summary) {
    CHECK(s.lower <= s.mean);
    CHECK(s.upper >= s.mean);
  }

  const auto dir = fixtures::scratch_dir("study");
  write_study_csv(result, 0, dir / "rows.csv");
  const auto back = read_study_csv(dir / "rows.csv");
  REQUIRE(back.size() == result.rows.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].n == result.rows[i].n);
    CHECK(back[i].seed == result.rows[i].seed);
    CHECK(back[i].estimator == result.rows[i].estimator);
    CHECK(back[i].l2_error == result.rows[i].l2_error);
    CHECK(back[i].gamma_hat == result.rows[i].gamma_hat);
  }
}

TEST_CASE("study output does not depend on the worker count") {
  StudyConfig cfg;
  cfg.n_values = {30, 60};
  cfg.replications = 4;
  cfg.gammas = GammaGrid::spaced(1e-3, 1.0, 8);
  cfg.theta_resolution = 5;
  cfg.master_seed = 99;
  CHECK(study_estimators(cfg).size() == 4);
  const auto dir = fixtures::scratch_dir("study_workers");
  const auto one = run_study(cfg, 1);
  const auto three = run_study(cfg, 3);
  write_study_csv(one, 1, dir / "one.csv");
  write_study_csv(three, 1, dir / "three.csv");
  write_study_summary_csv(one, dir / "one_summary.csv");
  write_study_summary_csv(three, dir / "three_summary.csv");
  CHECK(slurp(dir / "one.csv") == slurp(dir / "three.csv"));
  CHECK(slurp(dir / "one_summary.csv") == slurp(dir / "three_summary.csv"));
  CHECK(replication_seed(99, 30, 0) != replication_seed(99, 30, 1));
  CHECK(replication_seed(99, 30, 0) != replication_seed(99, 60, 0));
}
