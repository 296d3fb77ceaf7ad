#include <cmath>

#include <Eigen/LU>

#include "doctest.h"
#include "fixtures.hpp"

#include "care/error.hpp"
#include "care/estimators.hpp"
#include "care/model_selection.hpp"
#include "care/simulation.hpp"

using namespace care;

namespace {

const DgpConfig kUni{};

/// ||f||_H^2 for f in span{k(., z_i)} via interpolation at unisolvent points.
double interpolated_norm_sq(const KernelConfig& k, const PointMatrix& z, const Vector& fz) {
  const Matrix gram = gram_matrix(k, z).entries;
  return fz.dot(gram.fullPivLu().solve(fz));
}

}  // namespace

TEST_CASE("single record gives the zero function") {
  PointMatrix x(1, 1);
  x << 0.5;
  Vector t(1);
  t << 0.3;
  const SurvivalDataset one(x, t, {0});
  const auto est = fit_kernel_estimator(one, KernelConfig::sobolev1(1.0), 0.1);
  CHECK(est.diagnostics().converged);
  for (double v : {0.0, 0.25, 0.5, 1.0}) CHECK(std::abs(est.predict(Point{&v, 1})) <= 1e-12);
}

TEST_CASE("heavy penalty flattens the fit") {
  const auto sim = simulate_dataset(kUni, 100, 3);
  const auto est = fit_kernel_estimator(sim.data, KernelConfig::sobolev1(1.0), 1e6);
  CHECK(est.diagnostics().converged);
  CHECK(est.predict(sim.data.covariates()).cwiseAbs().maxCoeff() <= 1e-3);
}

TEST_CASE("kernel estimator predictions and centring") {
  const auto sim = simulate_dataset(kUni, 200, 5);
  const RepresenterContext ctx(sim.data, KernelConfig::sobolev1(1.0));
  const auto est = fit_kernel_estimator(ctx, 0.01);
  CHECK(est.diagnostics().converged);
  CHECK(penalized_objective(est.beta(), ctx, 0.01) <=
        penalized_objective(Vector::Zero(ctx.basis_size()), ctx, 0.01));
  const Vector pred = est.predict(sim.data.covariates());
  CHECK((pred - ctx.fitted_values(est.beta())).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(std::abs(pred.mean()) <= 1e-8);
  for (Eigen::Index i = 0; i < 10; ++i) {
    CHECK(est.predict(sim.data.covariate(i)) == doctest::Approx(pred[i]).epsilon(1e-12));
  }

  const KernelEstimator zero(est.kernel(), est.basis_points(), Vector::Zero(est.beta().size()),
                             est.kbar_at_basis(), 1.0);
  CHECK(zero.predict(sim.data.covariates()).cwiseAbs().maxCoeff() == 0.0);

  PointMatrix wrong(2, 2);
  wrong.setConstant(0.5);
  CHECK_THROWS_AS(est.predict(wrong), Error);
  CHECK_THROWS_AS(fit_kernel_estimator(ctx, 0.01, {}, Vector::Zero(3)), Error);
  CHECK_THROWS_AS(fit_kernel_estimator(ctx, -1.0), Error);
  CHECK_THROWS_AS(fit_kernel_estimator(sim.data, KernelConfig::polynomial(2, 0.0), 1.0), Error);
}

TEST_CASE("centring holds for every kernel family") {
  for (std::size_t d : {1u, 2u}) {
    for (const auto& k : fixtures::kernel_zoo(d)) {
      const auto data = fixtures::random_dataset(40, d, 60 + d);
      for (double gamma : {1e-3, 1.0}) {
        const auto est = fit_kernel_estimator(data, k, gamma);
        CHECK(std::abs(est.predict(data.covariates()).mean()) <= 1e-8);
      }
    }
  }
}

TEST_CASE("fits from different warm starts agree") {
  const auto sim = simulate_dataset(kUni, 80, 8);
  const RepresenterContext ctx(sim.data, KernelConfig::sobolev2(1.0));
  const auto a = fit_kernel_estimator(ctx, 0.05);
  const auto b = fit_kernel_estimator(ctx, 0.05, {}, fixtures::random_vector(ctx.basis_size(), 1, 2.0));
  REQUIRE(a.diagnostics().converged);
  REQUIRE(b.diagnostics().converged);
  CHECK(std::abs(a.diagnostics().objective - b.diagnostics().objective) <= 1e-9);
  CHECK((a.predict(sim.data.covariates()) - b.predict(sim.data.covariates())).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("norm shrinks as gamma grows") {
  const auto sim = simulate_dataset(kUni, 100, 21);
  const RepresenterContext ctx(sim.data, KernelConfig::sobolev1(1.0));
  const auto grid = GammaGrid::spaced(1e-5, 10.0, 50);
  const auto fits = fit_gamma_path(ctx, grid);
  double prev = INFINITY;
  int checked = 0;
  for (const auto& f : fits) {
    if (!f.diagnostics().converged) continue;
    const double norm = f.beta().dot(ctx.penalty() * f.beta());
    CHECK(norm <= prev * (1.0 + 1e-6) + 1e-12);
    prev = norm;
    ++checked;
  }
  CHECK(checked >= 45);
}

TEST_CASE("feature map and representer paths agree") {
  const KernelConfig poly = KernelConfig::polynomial(2, 1.0);
  for (std::uint64_t seed : {1u, 2u}) {
    const auto sim = simulate_dataset(kUni, 50, seed);
    const RepresenterContext rctx(sim.data, poly);
    const FeatureMapContext fctx(sim.data, poly);
    for (double gamma : {1e-2, 1.0, 10.0}) {
      const auto rep = fit_kernel_estimator(rctx, gamma);
      const auto fm = fit_feature_map_estimator(fctx, gamma);
      CHECK(rep.diagnostics().converged);
      CHECK(fm.diagnostics().converged);
      const Vector a = rep.predict(sim.data.covariates());
      const Vector b = fm.predict(sim.data.covariates());
      CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-5);
      CHECK(std::abs(b.mean()) <= 1e-8);
    }
  }
  const auto data = fixtures::random_dataset(30, 2, 4);
  const auto rep = fit_kernel_estimator(data, poly, 0.1);
  const auto fm = fit_feature_map_estimator(data, poly, 0.1);
  CHECK((rep.predict(data.covariates()) - fm.predict(data.covariates())).cwiseAbs().maxCoeff() <= 1e-5);
}

TEST_CASE("feature map norm identity") {
  for (std::size_t d : {1u, 2u}) {
    for (int p : {1, 2, 3}) {
      const KernelConfig poly = KernelConfig::polynomial(p, 0.7);
      const auto data = fixtures::random_dataset(25, d, 30 + p);
      const FeatureMapContext ctx(data, poly);
      const auto q = ctx.centered_features().cols();
      const PointMatrix z = fixtures::uniform_points(static_cast<std::size_t>(q + 1), d, 99 + p);
      for (std::uint64_t s = 0; s < 5; ++s) {
        const Vector alpha = fixtures::random_vector(q, s + 10);
        const FeatureMapEstimator est(poly, d, alpha, ctx.feature_means(), 1.0);
        const double expected = interpolated_norm_sq(poly, z, est.predict(z));
        CHECK(feature_map_penalty(alpha, ctx) == doctest::Approx(expected).epsilon(1e-8));
        CHECK(std::abs(est.predict(data.covariates()).mean()) <= 1e-10);
      }
      const FeatureMapEstimator zero(poly, d, Vector::Zero(q), ctx.feature_means(), 1.0);
      CHECK(zero.predict(data.covariates()).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("feature map gradient matches central differences") {
  const auto data = fixtures::random_dataset(20, 2, 14);
  const FeatureMapContext ctx(data, KernelConfig::polynomial(3, 1.0));
  const Vector alpha = fixtures::random_vector(ctx.centered_features().cols(), 6);
  Vector g;
  feature_map_objective_and_gradient(alpha, ctx, 0.2, g);
  for (Eigen::Index j = 0; j < alpha.size(); ++j) {
    Vector up = alpha, dn = alpha;
    up[j] += 1e-6;
    dn[j] -= 1e-6;
    const double fd = (feature_map_objective(up, ctx, 0.2) - feature_map_objective(dn, ctx, 0.2)) / 2e-6;
    CHECK(std::abs(fd - g[j]) / std::max(std::abs(g[j]), 1.0) <= 1e-6);
  }
}

TEST_CASE("external centring") {
  const auto sim = simulate_dataset(kUni, 400, 9);
  const auto seven = ExternalPredictor::closed_form("seven", [](Point) { return 7.0; });
  const auto c7 = center_external(seven, sim.data);
  CHECK(c7.training_mean() == 7.0);
  CHECK(c7.evaluate(sim.data, SampleRole::Train).cwiseAbs().maxCoeff() == 0.0);
  CHECK(c7.warnings().empty());

  const auto truth = ExternalPredictor::closed_form("f0", [](Point x) { return true_f0(kUni, x); });
  const auto ct = center_external(truth, sim.data);
  CHECK(std::abs(ct.training_mean()) <= 3.0 / std::sqrt(400.0));
  CHECK(std::abs(ct.evaluate(sim.data, SampleRole::Train).mean()) <= 1e-12);

  const auto again = ExternalPredictor::closed_form("again", [&](Point x) { return ct.predict(x); });
  CHECK(std::abs(center_external(again, sim.data).training_mean()) <= 1e-12);

  const auto big = ExternalPredictor::closed_form("big", [](Point) { return 500.0; });
  CHECK(center_external(big, sim.data).warnings().size() == 1);

  const auto table = ExternalPredictor::table("tab", Vector::Ones(3), Vector::Ones(3));
  CHECK_THROWS_AS(center_external(table, sim.data), Error);
  CHECK_THROWS_AS(table(sim.data.covariate(0)), Error);
  const auto bad = ExternalPredictor::closed_form("nan", [](Point) { return std::nan(""); });
  CHECK_THROWS_AS(center_external(bad, sim.data), Error);
}
