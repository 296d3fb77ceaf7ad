#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fixtures.hpp"

#include "care/error.hpp"
#include "care/model_selection.hpp"
#include "care/simulation.hpp"

using namespace care;

namespace {

const DgpConfig kUni{};

/// First n records train, the next n validate.
std::pair<SurvivalDataset, SurvivalDataset> halves(std::size_t n, std::uint64_t seed) {
  const auto sim = simulate_dataset(kUni, 2 * n, seed);
  std::vector<Eigen::Index> a(n), b(n);
  std::iota(a.begin(), a.end(), 0);
  std::iota(b.begin(), b.end(), static_cast<Eigen::Index>(n));
  return {sim.data.subset(a), sim.data.subset(b)};
}

ExternalPredictor paper_external() {
  return ExternalPredictor::closed_form("ext", [](Point x) { return external_predictor(kUni, x); });
}

}  // namespace

TEST_CASE("gamma grids") {
  const auto g = GammaGrid::spaced(1e-5, 10.0, 50);
  CHECK(g.size() == 50);
  CHECK(g[0] == 1e-5);
  CHECK(g[49] == 10.0);
  CHECK(g[1] / g[0] == doctest::Approx(g[40] / g[39]).epsilon(1e-10));
  const auto lin = GammaGrid::spaced(1.0, 2.0, 3, false);
  CHECK(lin[1] == doctest::Approx(1.5));
  CHECK(GammaGrid::spaced(0.3, 0.3, 1).values() == std::vector<double>{0.3});
  CHECK_THROWS_AS(GammaGrid(std::vector<double>{}), Error);
  CHECK_THROWS_AS(GammaGrid({1.0, 1.0}), Error);
  CHECK_THROWS_AS(GammaGrid({0.0, 1.0}), Error);
  CHECK_THROWS_AS(GammaGrid::spaced(1.0, 2.0, 0), Error);
}

TEST_CASE("theta grids") {
  const auto one = theta_grid(1, 20);
  REQUIRE(one.size() == 21);
  for (std::size_t k = 0; k <= 20; ++k) CHECK(one.points[k][0] == doctest::Approx(k / 20.0));
  const auto two = theta_grid(2, 1);
  CHECK(two.points == std::vector<std::vector<double>>{{0, 0}, {0, 1}, {1, 0}});
  CHECK(theta_grid(2, 2).size() == 6);
  const auto three = theta_grid(3, 7);
  CHECK(three.size() == 120);
  CHECK(std::is_sorted(three.points.begin(), three.points.end()));
  for (const auto& p : three.points) {
    double s = 0.0;
    for (double v : p) {
      CHECK(v >= 0.0);
      s += v;
    }
    CHECK(s <= 1.0 + 1e-12);
  }
  // vertices are present
  for (std::size_t m = 0; m < 3; ++m) {
    std::vector<double> e(3, 0.0);
    e[m] = 1.0;
    CHECK(std::find(three.points.begin(), three.points.end(), e) != three.points.end());
  }
  CHECK_THROWS_AS(theta_grid(0, 5), Error);
  CHECK_THROWS_AS(theta_grid(2, 0), Error);
  CHECK_THROWS_AS(theta_grid(6, 100), Error);
}

TEST_CASE("validation loss") {
  const auto [train, valid] = halves(30, 2);
  CHECK(validation_loss(Vector::Constant(30, 2.5), valid) ==
        doctest::Approx(validation_loss(Vector::Zero(30), valid)).epsilon(1e-13));
  const Vector f = fixtures::random_vector(30, 4);
  CHECK(validation_loss(f, valid) == neg_log_partial_likelihood(f, valid));
  PointMatrix x(1, 1);
  x << 0.3;
  Vector t(1);
  t << 0.5;
  CHECK(validation_loss(Vector::Constant(1, 4.0), SurvivalDataset(x, t, {0})) == 0.0);
}

TEST_CASE("cross validation selection") {
  const auto [train, valid] = halves(100, 11);
  const KernelConfig k = KernelConfig::sobolev1(1.0);

  const auto single = cross_validate_gamma(train, valid, k, GammaGrid({0.02}));
  CHECK(single.gamma_hat == 0.02);

  const auto grid = GammaGrid::spaced(1e-5, 10.0, 20);
  const auto cv = cross_validate_gamma(train, valid, k, grid);
  const auto& rows = cv.report.rows;
  REQUIRE(rows.size() == 20);
  double best = INFINITY;
  for (const auto& r : rows) {
    if (r.converged) best = std::min(best, r.valid_loss);
  }
  CHECK(rows[cv.report.selected_gamma].valid_loss == best);
  for (std::size_t k2 = 0; k2 < cv.report.selected_gamma; ++k2) {
    CHECK((!rows[k2].converged || rows[k2].valid_loss > best));
  }
  CHECK(cv.gamma_hat == grid[cv.report.selected_gamma]);
  CHECK(validation_loss(cv.selected().predict(valid.covariates()), valid) ==
        doctest::Approx(best).epsilon(1e-12));
  CHECK(rows[cv.report.selected_gamma].train_loss ==
        doctest::Approx(neg_log_partial_likelihood(cv.selected().predict(train.covariates()), train))
            .epsilon(1e-12));

  const RepresenterContext ctx(train, k);
  const auto again = select_gamma(cv.fits, ctx, valid);
  CHECK(again.selected_gamma == cv.report.selected_gamma);

  CHECK_THROWS_AS(cross_validate_gamma(train, fixtures::random_dataset(20, 2, 1), k, grid), Error);
}

TEST_CASE("all failed fits raise") {
  const auto [train, valid] = halves(40, 3);
  OptimOptions opts;
  opts.max_iterations = 1;
  opts.gradient_tolerance = 1e-300;
  try {
    cross_validate_gamma(train, valid, KernelConfig::sobolev1(1.0), GammaGrid({0.01, 0.1}), opts);
    FAIL("expected AllFitsFailed");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::AllFitsFailed);
  }
}

TEST_CASE("warm and cold starts select the same gamma") {
  const auto grid = GammaGrid::spaced(1e-5, 10.0, 50);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto [train, valid] = halves(100, seed);
    const auto warm = cross_validate_gamma(train, valid, KernelConfig::sobolev1(1.0), grid, {}, true);
    const auto cold = cross_validate_gamma(train, valid, KernelConfig::sobolev1(1.0), grid, {}, false);
    CHECK(warm.gamma_hat == cold.gamma_hat);
  }
}

TEST_CASE("validation curve has an interior minimum") {
  const auto grid = GammaGrid::spaced(1e-5, 10.0, 50);
  int interior = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto [train, valid] = halves(200, 1000 + seed);
    const auto cv = cross_validate_gamma(train, valid, KernelConfig::sobolev1(1.0), grid);
    const auto s = cv.report.selected_gamma;
    if (s != 0 && s != grid.size() - 1) ++interior;
  }
  MESSAGE("interior minima: " << interior << "/20");
  CHECK(interior >= 16);
}

TEST_CASE("care aggregation") {
  const auto [train, valid] = halves(100, 7);
  const KernelConfig k = KernelConfig::sobolev1(1.0);
  const auto grid = GammaGrid::spaced(1e-4, 1.0, 12);

  SUBCASE("no externals matches plain cross validation") {
    const auto care = fit_care(train, valid, k, grid, {}, theta_grid(1, 20));
    const auto cv = cross_validate_gamma(train, valid, k, grid);
    CHECK(care.report.selected_gamma == cv.report.selected_gamma);
    CHECK(*care.report.care_gamma == cv.report.selected_gamma);
    CHECK(care.estimator.theta().empty());
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(care.fits[i].beta() == cv.fits[i].beta());
  }

  SUBCASE("selection dominates the vertices") {
    const auto care = fit_care(train, valid, k, grid, {paper_external()}, theta_grid(1, 20));
    const auto& rep = care.report;
    REQUIRE(rep.has_care());
    const auto g = static_cast<Eigen::Index>(*rep.care_gamma);
    const auto t = static_cast<Eigen::Index>(*rep.care_theta);
    const double chosen = rep.care_valid_loss(g, t);
    // minimum of the recorded table
    for (Eigen::Index i = 0; i < rep.care_valid_loss.rows(); ++i) {
      for (Eigen::Index j = 0; j < rep.care_valid_loss.cols(); ++j) {
        const double v = rep.care_valid_loss(i, j);
        if (std::isnan(v)) continue;
        CHECK(chosen <= v);
        if (v == chosen) CHECK((i > g || (i == g && j >= t)));
      }
    }
    CHECK(chosen <= rep.rows[rep.selected_gamma].valid_loss);
    const auto centered = center_external(paper_external(), train);
    CHECK(chosen <= validation_loss(centered.evaluate(valid, SampleRole::Validation), valid));
    // re-evaluation reproduces the table entry
    CHECK(validation_loss(care.estimator.predict(valid, SampleRole::Validation), valid) ==
          doctest::Approx(chosen).epsilon(1e-12));

    // a superset of theta points cannot do worse
    const auto finer = fit_care(train, valid, k, grid, {paper_external()}, theta_grid(1, 40));
    const auto fg = static_cast<Eigen::Index>(*finer.report.care_gamma);
    const auto ft = static_cast<Eigen::Index>(*finer.report.care_theta);
    CHECK(finer.report.care_valid_loss(fg, ft) <= chosen);

    // rerunning selection on the same fits yields the same choice
    CvReport copy = care.report;
    select_care(care.fits, valid, {centered}, theta_grid(1, 20), copy);
    CHECK(copy.care_gamma == rep.care_gamma);
    CHECK(copy.care_theta == rep.care_theta);
  }
}

TEST_CASE("care predictions") {
  const auto [train, valid] = halves(60, 12);
  const auto kernel = fit_kernel_estimator(train, KernelConfig::sobolev1(1.0), 0.05);
  const auto ext = center_external(paper_external(), train);
  const CareEstimator none(kernel, {ext}, {0.0}, 0.05);
  const CareEstimator only(kernel, {ext}, {1.0}, 0.05);
  const CareEstimator mid(kernel, {ext}, {0.3}, 0.05);
  for (Eigen::Index i = 0; i < valid.size(); ++i) {
    const Point x = valid.covariate(i);
    CHECK(none.predict(x) == kernel.predict(x));
    CHECK(only.predict(x) == doctest::Approx(ext.predict(x)).epsilon(1e-14));
    const double lo = std::min(kernel.predict(x), ext.predict(x));
    const double hi = std::max(kernel.predict(x), ext.predict(x));
    CHECK(mid.predict(x) >= lo - 1e-14);
    CHECK(mid.predict(x) <= hi + 1e-14);
  }
  const Vector batch = mid.predict(valid, SampleRole::Validation);
  CHECK(batch[3] == doctest::Approx(mid.predict(valid.covariate(3))).epsilon(1e-14));
  CHECK_THROWS_AS(CareEstimator(kernel, {ext}, {1.2}, 0.05), Error);
  CHECK_THROWS_AS(CareEstimator(kernel, {ext}, {-0.1}, 0.05), Error);
  CHECK_THROWS_AS(CareEstimator(kernel, {ext}, {0.1, 0.1}, 0.05), Error);
}
