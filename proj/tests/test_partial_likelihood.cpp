#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"

#include "care/error.hpp"
#include "care/partial_likelihood.hpp"

using namespace care;

namespace {

SurvivalDataset make(std::vector<double> times, std::vector<std::uint8_t> censored) {
  const auto n = static_cast<Eigen::Index>(times.size());
  PointMatrix x(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) x(i, 0) = (i + 0.5) / static_cast<double>(n);
  return SurvivalDataset(std::move(x), Eigen::Map<Vector>(times.data(), n), std::move(censored));
}

/// ||f_beta||_H^2 through the bordered Gram form over all n points.
double bordered_penalty(const RepresenterContext& ctx, const Vector& beta) {
  const Eigen::Index n = ctx.data().size();
  Matrix bordered(n + 1, n + 1);
  bordered(0, 0) = ctx.constant_norm_sq();
  bordered.block(0, 1, 1, n).setOnes();
  bordered.block(1, 0, n, 1).setOnes();
  bordered.block(1, 1, n, n) = ctx.gram().entries;
  Vector delta = Vector::Zero(n + 1);
  double kbar_beta = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const auto b = ctx.basis()[static_cast<std::size_t>(j)];
    delta[b + 1] = beta[j];
    kbar_beta += ctx.kbar()[b] * beta[j];
  }
  delta[0] = -kbar_beta;
  return delta.dot(bordered * delta);
}

}  // namespace

TEST_CASE("likelihood of tiny samples") {
  const auto one = make({0.4}, {0});
  Vector f(1);
  f << 3.7;
  CHECK(std::abs(neg_log_partial_likelihood(f, one)) < 1e-15);

  const auto two = make({0.3, 0.6}, {0, 0});
  CHECK(neg_log_partial_likelihood(Vector::Zero(2), two) ==
        doctest::Approx(-std::log(2.0) / 2.0).epsilon(1e-15));
}

TEST_CASE("likelihood and gradient with tied times") {
  // Reference values from the brute-force oracle (tests/oracle/oracle.py).
  const auto data = make({0.5, 0.2, 0.5, 0.9, 0.2, 0.7}, {0, 1, 0, 0, 0, 1});
  Vector f(6);
  f << 0.3, -1.2, 0.5, 2.0, -0.4, 0.0;
  Vector grad;
  const double value = neg_log_partial_likelihood(f, data, grad);
  CHECK(value == doctest::Approx(-0.03126412004549443).epsilon(1e-13));
  const double expected[] = {-0.1089510274360217, 0.004061689873324781, -0.09617262541894434,
                             0.3159323749141185, -0.1576272096182052, 0.042756797546950054};
  for (int k = 0; k < 6; ++k) CHECK(grad[k] == doctest::Approx(expected[k]).epsilon(1e-7));
  CHECK(grad.sum() == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
}

TEST_CASE("likelihood is shift invariant and stable for large f") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto data = fixtures::random_dataset(10 + 3 * s, 2, s);
    const Vector f = fixtures::random_vector(data.size(), s, 5.0);
    const double c = 40.0 * (static_cast<double>(s) / 50.0 - 0.5);
    CHECK(std::abs(neg_log_partial_likelihood(f.array() + c, data) -
                   neg_log_partial_likelihood(f, data)) <= 1e-12);
  }
  const auto data = fixtures::random_dataset(30, 1, 1);
  const Vector big = fixtures::random_vector(30, 2, 700.0);
  CHECK(std::isfinite(neg_log_partial_likelihood(big, data)));
  Vector bad = Vector::Zero(30);
  bad[3] = std::nan("");
  CHECK_THROWS_AS(neg_log_partial_likelihood(bad, data), Error);
  CHECK_THROWS_AS(neg_log_partial_likelihood(Vector::Zero(29), data), Error);
}

TEST_CASE("representer basis") {
  const KernelConfig g = KernelConfig::gaussian(std::vector<double>{1.0}, 1.0);
  PointMatrix x(2, 1);
  x << 0.1, 0.7;
  CHECK(build_representer_basis(gram_matrix(g, x), 1.0) == std::vector<Eigen::Index>{0, 1});
  x << 0.4, 0.4;
  CHECK(build_representer_basis(gram_matrix(g, x), 1.0) == std::vector<Eigen::Index>{0});
  PointMatrix p(3, 1);
  p << 1.0, 2.0, 3.0;
  CHECK(build_representer_basis(gram_matrix(KernelConfig::polynomial(1, 1.0), p), 1.0) ==
        std::vector<Eigen::Index>{0});
  p << 0.2, 0.5, 0.9;
  CHECK(build_representer_basis(gram_matrix(KernelConfig::sobolev1(1.0), p), 1.0) ==
        std::vector<Eigen::Index>{0, 1, 2});
}

TEST_CASE("context centring and penalty forms") {
  for (std::size_t d : {1u, 2u}) {
    for (const auto& k : fixtures::kernel_zoo(d)) {
      const auto data = fixtures::random_dataset(30, d, 7 * d);
      const RepresenterContext ctx(data, k);
      REQUIRE(ctx.basis_size() >= 1);
      const Matrix& kt = ctx.design();
      CHECK(kt.colwise().mean().cwiseAbs().maxCoeff() <= 1e-10);
      CHECK(ctx.penalty() == ctx.penalty().transpose());
      for (std::uint64_t s = 0; s < 5; ++s) {
        const Vector beta = fixtures::random_vector(ctx.basis_size(), 100 + s);
        const double quad = beta.dot(ctx.penalty() * beta);
        CHECK(quad == doctest::Approx(bordered_penalty(ctx, beta)).epsilon(1e-9));
        CHECK(std::abs(ctx.fitted_values(beta).mean()) <= 1e-10);
        const double gamma = 0.3;
        CHECK(penalized_objective(beta, ctx, gamma) ==
              doctest::Approx(neg_log_partial_likelihood(ctx.fitted_values(beta), data) +
                              gamma * bordered_penalty(ctx, beta))
                  .epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("objective special cases") {
  const auto data = fixtures::random_dataset(20, 1, 3);
  const RepresenterContext ctx(data, KernelConfig::sobolev1(1.0));
  const Vector zero = Vector::Zero(ctx.basis_size());
  CHECK(penalized_objective(zero, ctx, 0.5) == neg_log_partial_likelihood(Vector::Zero(20), data));
  CHECK_THROWS_AS(penalized_objective(zero, ctx, 0.0), Error);
  CHECK_THROWS_AS(penalized_objective(Vector::Zero(3), ctx, 1.0), Error);

  const SurvivalDataset censored(data.covariates(), data.times(), std::vector<std::uint8_t>(20, 1));
  const RepresenterContext cctx(censored, KernelConfig::sobolev1(1.0));
  CHECK_FALSE(cctx.has_events());
  const Vector beta = fixtures::random_vector(cctx.basis_size(), 5);
  CHECK(penalized_objective(beta, cctx, 0.7) == doctest::Approx(0.7 * beta.dot(cctx.penalty() * beta)).epsilon(1e-14));
  const Vector g = penalized_gradient(beta, cctx, 0.7);
  CHECK((g - 1.4 * cctx.penalty() * beta).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("gradient matches central differences") {
  for (std::size_t d : {1u, 2u}) {
    for (const auto& k : fixtures::kernel_zoo(d)) {
      const auto data = fixtures::random_dataset(20, d, 40 + d);
      const RepresenterContext ctx(data, k);
      for (double gamma : {1e-3, 1e-1, 10.0}) {
        const Vector beta = fixtures::random_vector(ctx.basis_size(), 9);
        Vector g;
        const double v = penalized_objective_and_gradient(beta, ctx, gamma, g);
        CHECK(v == penalized_objective(beta, ctx, gamma));
        CHECK(g == penalized_gradient(beta, ctx, gamma));
        for (Eigen::Index j = 0; j < beta.size(); ++j) {
          Vector up = beta, dn = beta;
          up[j] += 1e-6;
          dn[j] -= 1e-6;
          const double fd = (penalized_objective(up, ctx, gamma) - penalized_objective(dn, ctx, gamma)) / 2e-6;
          CHECK(std::abs(fd - g[j]) / std::max(std::abs(g[j]), 1.0) <= 1e-6);
        }
      }
    }
  }
}

TEST_CASE("objective is convex along segments") {
  const auto data = fixtures::random_dataset(25, 1, 12);
  const RepresenterContext ctx(data, KernelConfig::sobolev2(1.0));
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Vector a = fixtures::random_vector(ctx.basis_size(), 2 * s, 3.0);
    const Vector b = fixtures::random_vector(ctx.basis_size(), 2 * s + 1, 3.0);
    const double mid = penalized_objective(0.5 * (a + b), ctx, 0.01);
    CHECK(mid <= 0.5 * (penalized_objective(a, ctx, 0.01) + penalized_objective(b, ctx, 0.01)) + 1e-10);
  }
}
