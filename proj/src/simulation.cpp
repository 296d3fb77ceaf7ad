#include "care/simulation.hpp"

#include <algorithm>
#include <cmath>

#include "care/error.hpp"
#include "care/random.hpp"

namespace care {

namespace {

constexpr std::uint32_t kCovariateStream = 1;
constexpr std::uint32_t kUniformStream = 2;
constexpr std::uint32_t kCensorStream = 3;
constexpr std::uint32_t kOracleStream = 4;

void check_point(const DgpConfig& config, Point x) {
  if (x.size() != config.dimension()) {
    throw Error(ErrorKind::DimensionMismatch,
                config.name() + " design expects " + std::to_string(config.dimension()) +
                    " covariates");
  }
  for (double v : x) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorKind::DomainError, "covariates must lie in [0, 1]");
    }
  }
}

std::vector<double> draw_covariates(const DgpConfig& config, KeyedStream& rng) {
  std::vector<double> x(config.dimension());
  for (double& v : x) v = rng.uniform();
  return x;
}

// T_S = Lambda^{-1}(-e^{-f} log U), redrawing U in the measure-zero case T_S = 0.
double draw_survival_time(double f, KeyedStream& rng) {
  double t = 0.0;
  while (!(t > 0.0)) {
    const double u = rng.uniform_open_closed();
    t = -std::exp(-f) * std::log(u) / DgpConfig::kBaselineRate;
  }
  return t;
}

}  // namespace

std::string DgpConfig::name() const {
  return variant == DgpVariant::Univariate ? "univariate" : "multivariate_d10";
}

DgpConfig DgpConfig::parse(const std::string& name) {
  if (name == "univariate") return {DgpVariant::Univariate};
  if (name == "multivariate_d10") return {DgpVariant::MultivariateD10};
  throw Error(ErrorKind::Config, "unknown DGP '" + name + "'");
}

double true_f0(const DgpConfig& config, Point x) {
  check_point(config, x);
  const double s1 = std::sin(1.0);
  const std::size_t terms = config.variant == DgpVariant::Univariate ? 1 : 5;
  double total = 0.0;
  for (std::size_t j = 0; j < terms; ++j) total += 2.0 * std::sin(2.0 * x[j]) - 2.0 * s1 * s1;
  return total;
}

double external_predictor(const DgpConfig& config, Point x) {
  check_point(config, x);
  if (config.variant == DgpVariant::Univariate) {
    const double s = std::sin(0.75);
    return 2.0 * std::sin(1.5 * x[0]) - (8.0 / 3.0) * s * s;
  }
  const double slope = std::sin(2.0) - std::cos(2.0) - 1.0;
  double total = 0.0;
  for (std::size_t j = 0; j < 4; ++j) total += slope * (6.0 * x[j] - 3.0);
  return total;
}

CovariateSampler covariate_sampler(const DgpConfig& config) {
  return [config](KeyedStream& rng) { return draw_covariates(config, rng); };
}

SimulatedData simulate_dataset(const DgpConfig& config, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "n must be >= 1");
  const auto rows = static_cast<Eigen::Index>(n);
  const auto d = static_cast<Eigen::Index>(config.dimension());
  PointMatrix x(rows, d);
  Vector times(rows);
  std::vector<std::uint8_t> censored(n);
  SimulationTruth truth{config, Vector(rows), Vector(rows), Vector(rows)};

  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto index = static_cast<std::uint64_t>(i);
    KeyedStream cov_rng(seed, kCovariateStream, index);
    const std::vector<double> xi = draw_covariates(config, cov_rng);
    for (Eigen::Index c = 0; c < d; ++c) x(i, c) = xi[static_cast<std::size_t>(c)];
    const double f = true_f0(config, xi);

    KeyedStream u_rng(seed, kUniformStream, index);
    const double ts = draw_survival_time(f, u_rng);
    KeyedStream c_rng(seed, kCensorStream, index);
    const double tc =
        std::min(1.0, c_rng.uniform(DgpConfig::kCensorLow, DgpConfig::kCensorHigh));

    times[i] = std::min(ts, tc);
    censored[static_cast<std::size_t>(i)] = tc < ts ? 1 : 0;
    truth.f0[i] = f;
    truth.survival_times[i] = ts;
    truth.censor_times[i] = tc;
  }
  return SimulatedData{SurvivalDataset(std::move(x), std::move(times), std::move(censored)),
                       std::move(truth)};
}

std::vector<double> sample_survival_times(const DgpConfig& config, std::size_t count,
                                          std::uint64_t seed) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    KeyedStream rng(seed, kOracleStream, i);
    const std::vector<double> xi = draw_covariates(config, rng);
    out[i] = draw_survival_time(true_f0(config, xi), rng);
  }
  return out;
}

}  // namespace care
