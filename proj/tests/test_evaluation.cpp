#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"

#include "care/error.hpp"
#include "care/evaluation.hpp"
#include "care/simulation.hpp"

using namespace care;

namespace {

SurvivalDataset small(std::vector<double> t, std::vector<std::uint8_t> c) {
  const auto n = static_cast<Eigen::Index>(t.size());
  PointMatrix x = PointMatrix::Constant(n, 1, 0.5);
  return SurvivalDataset(std::move(x), Eigen::Map<Vector>(t.data(), n), std::move(c));
}

CovariateSampler unit_interval() {
  return [](KeyedStream& rng) { return std::vector<double>{rng.uniform()}; };
}

}  // namespace

TEST_CASE("breslow hand examples") {
  const auto two = breslow_survival(small({0.3, 0.7}, {0, 0}));
  CHECK(two.at(0.1) == 1.0);
  CHECK(two.at(0.3) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  CHECK(two.at(0.5) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  CHECK(two.at(0.7) == doctest::Approx(std::exp(-1.5)).epsilon(1e-15));
  CHECK(two.at(1.0) == doctest::Approx(std::exp(-1.5)).epsilon(1e-15));

  const auto none = breslow_survival(small({0.3, 0.7, 0.9}, {1, 1, 1}));
  CHECK(none.times.empty());
  CHECK(none.at(0.95) == 1.0);

  // two events tied at 0.4 with four at risk: exp(-2/4)
  const auto tied = breslow_survival(small({0.4, 0.4, 0.6, 0.8}, {0, 0, 1, 0}));
  REQUIRE(tied.times.size() == 2);
  CHECK(tied.at(0.4) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  CHECK(tied.at(0.8) == doctest::Approx(std::exp(-1.5)).epsilon(1e-15));
}

TEST_CASE("breslow is a valid survival curve") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto curve = breslow_survival(fixtures::random_dataset(50, 1, s));
    CHECK(std::is_sorted(curve.times.begin(), curve.times.end()));
    for (std::size_t k = 0; k < curve.values.size(); ++k) {
      CHECK(curve.values[k] > 0.0);
      CHECK(curve.values[k] <= 1.0);
      if (k > 0) CHECK(curve.values[k] <= curve.values[k - 1]);
    }
  }
}

TEST_CASE("breslow tracks the simulated survival law") {
  const DgpConfig uni{};
  const auto sim = simulate_dataset(uni, 2000, 77);
  const auto curve = breslow_survival(sim.data);
  std::vector<double> draws = sample_survival_times(uni, 100000, 78);
  std::sort(draws.begin(), draws.end());
  const auto mc = [&](double t) {
    return static_cast<double>(draws.end() - std::upper_bound(draws.begin(), draws.end(), t)) /
           static_cast<double>(draws.size());
  };
  double sup = 0.0;
  for (std::size_t k = 0; k < curve.times.size(); ++k) {
    sup = std::max(sup, std::abs(curve.values[k] - mc(curve.times[k])));
    const double before = k == 0 ? 1.0 : curve.values[k - 1];
    sup = std::max(sup, std::abs(before - mc(std::nextafter(curve.times[k], 0.0))));
  }
  MESSAGE("breslow sup distance " << sup);
  CHECK(sup <= 0.05);
}

TEST_CASE("concordance examples") {
  const auto data = small({0.2, 0.5, 0.9}, {0, 1, 0});
  Vector f(3);
  f << 3.0, 1.0, 2.0;
  CHECK(concordance_index(f, data) == 1.0);
  CHECK(concordance_index_reference(f, data) == 1.0);
  CHECK(concordance_index(Vector::Constant(3, 0.4), data) == 0.0);

  const auto all = small({0.1, 0.4, 0.6, 0.8}, {0, 0, 0, 0});
  Vector minus_t(4);
  minus_t << -0.1, -0.4, -0.6, -0.8;
  CHECK(concordance_index(minus_t, all) == 1.0);
  CHECK(concordance_index(-minus_t, all) == 0.0);

  CHECK_THROWS_AS(concordance_index(Vector::Zero(2), small({0.3, 0.5}, {1, 1})), Error);
  CHECK_THROWS_AS(concordance_index_reference(Vector::Zero(2), small({0.3, 0.5}, {1, 1})), Error);
  CHECK_THROWS_AS(concordance_index(Vector::Zero(2), all), Error);
}

TEST_CASE("fast concordance equals the double loop") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto data = fixtures::random_dataset(5 + 3 * s, 1, 500 + s, s % 2 == 0);
    Vector f = fixtures::random_vector(data.size(), s);
    // coarse rounding forces tied predictions
    if (s % 3 == 0) f = (f.array() * 3.0).round();
    const double fast = concordance_index(f, data);
    CHECK(fast == concordance_index_reference(f, data));
    CHECK(fast >= 0.0);
    CHECK(fast <= 1.0);
    // scalar exp keeps tied inputs tied
    const Vector g = f.unaryExpr([](double v) { return 2.0 * std::exp(v) + 1.0; });
    CHECK(concordance_index(g, data) == fast);
  }
}

TEST_CASE("true risk beats the zero predictor") {
  const DgpConfig uni{};
  const auto sim = simulate_dataset(uni, 2000, 5);
  const double truth = concordance_index(sim.truth.f0, sim.data);
  const double zero = concordance_index(Vector::Zero(2000), sim.data);
  CHECK(truth - zero >= 0.1);
}

TEST_CASE("monte carlo l2 error") {
  const PointFunction identity = [](Point x) { return x[0]; };
  const PointFunction zero = [](Point) { return 0.0; };
  const PointFunction shifted = [](Point x) { return x[0] + 0.25; };
  CHECK(l2_error_mc(identity, identity, unit_interval(), 500, 3) == 0.0);
  CHECK(l2_error_mc(shifted, identity, unit_interval(), 500, 3) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(std::abs(l2_error_mc(identity, zero, unit_interval(), 1000000, 3) - std::sqrt(1.0 / 3.0)) <= 0.002);
  CHECK(l2_error_mc(identity, zero, unit_interval(), 500, 9) ==
        l2_error_mc(identity, zero, unit_interval(), 500, 9));
  CHECK_THROWS_AS(l2_error_mc(identity, zero, unit_interval(), 0, 1), Error);
  const PointFunction bad = [](Point) { return std::nan(""); };
  CHECK_THROWS_AS(l2_error_mc(bad, zero, unit_interval(), 10, 1), Error);

  const PointMatrix pts = sample_points(unit_interval(), 500, 3);
  Vector id(500);
  for (Eigen::Index i = 0; i < 500; ++i) id[i] = pts(i, 0);
  CHECK(l2_error_on(id, Vector::Zero(500)) ==
        doctest::Approx(l2_error_mc(identity, zero, unit_interval(), 500, 3)).epsilon(1e-14));
}
