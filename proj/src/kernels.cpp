#include "care/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "care/error.hpp"

namespace care {

namespace {

void check_shift(double shift) {
  if (!std::isfinite(shift) || shift < 0.0) {
    throw Error(ErrorKind::InvalidArgument,
                "kernel shift must be finite and non-negative, got " +
                    std::to_string(shift));
  }
}

void check_unit_interval(double v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw Error(ErrorKind::DomainError,
                "Sobolev kernels require coordinates in [0,1], got " +
                    std::to_string(v));
  }
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

KernelConfig KernelConfig::gaussian(std::vector<double> lengthscales,
                                    double shift) {
  check_shift(shift);
  if (lengthscales.empty()) {
    throw Error(ErrorKind::InvalidArgument,
                "Gaussian kernel needs at least one lengthscale");
  }
  const auto d = static_cast<Eigen::Index>(lengthscales.size());
  GaussianKernel g;
  g.sigma = Matrix::Zero(d, d);
  g.sigma_inverse = Matrix::Zero(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double l = lengthscales[static_cast<std::size_t>(j)];
    if (!std::isfinite(l) || l <= 0.0) {
      throw Error(ErrorKind::InvalidArgument,
                  "Gaussian lengthscales must be positive");
    }
    g.sigma(j, j) = l * l;
    g.sigma_inverse(j, j) = 1.0 / (l * l);
  }
  g.lengthscales = std::move(lengthscales);
  g.shift = shift;
  return KernelConfig(std::move(g));
}

KernelConfig KernelConfig::gaussian(const Matrix& sigma, double shift) {
  check_shift(shift);
  if (sigma.rows() == 0 || sigma.rows() != sigma.cols()) {
    throw Error(ErrorKind::InvalidArgument,
                "Gaussian Sigma must be a nonempty square matrix");
  }
  if (!sigma.allFinite() ||
      (sigma - sigma.transpose()).cwiseAbs().maxCoeff() >
          1e-12 * std::max(1.0, sigma.cwiseAbs().maxCoeff())) {
    throw Error(ErrorKind::InvalidArgument, "Gaussian Sigma must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() <= 0.0) {
    throw Error(ErrorKind::InvalidArgument,
                "Gaussian Sigma must be positive definite");
  }
  GaussianKernel g;
  g.sigma = sigma;
  g.sigma_inverse = sigma.llt().solve(Matrix::Identity(sigma.rows(), sigma.cols()));
  g.shift = shift;
  return KernelConfig(std::move(g));
}

KernelConfig KernelConfig::polynomial(int degree, double shift) {
  check_shift(shift);
  if (degree < 1) {
    throw Error(ErrorKind::InvalidArgument, "polynomial degree must be >= 1");
  }
  return KernelConfig(PolynomialKernel{degree, shift});
}

KernelConfig KernelConfig::sobolev1(double shift) {
  check_shift(shift);
  return KernelConfig(Sobolev1Kernel{shift});
}

KernelConfig KernelConfig::sobolev2(double shift) {
  check_shift(shift);
  return KernelConfig(Sobolev2Kernel{shift});
}

KernelConfig KernelConfig::additive(std::vector<std::size_t> coords,
                                    std::vector<KernelConfig> kernels) {
  if (coords.empty() || coords.size() != kernels.size()) {
    throw Error(ErrorKind::InvalidArgument,
                "additive kernel needs one or more (coord, kernel) summands");
  }
  std::set<std::size_t> seen(coords.begin(), coords.end());
  if (seen.size() != coords.size()) {
    throw Error(ErrorKind::InvalidArgument,
                "additive kernel coordinates must be distinct");
  }
  for (const auto& k : kernels) {
    if (std::holds_alternative<AdditiveKernel>(k.variant())) {
      throw Error(ErrorKind::InvalidArgument,
                  "additive summands must be one-dimensional kernels");
    }
    if (auto fixed = k.fixed_dimension(); fixed && *fixed != 1) {
      throw Error(ErrorKind::InvalidArgument,
                  "additive summands must be one-dimensional kernels");
    }
  }
  return KernelConfig(AdditiveKernel{std::move(coords), std::move(kernels)});
}

const char* KernelConfig::name() const {
  return std::visit(
      overloaded{[](const GaussianKernel&) { return "gaussian"; },
                 [](const PolynomialKernel&) { return "polynomial"; },
                 [](const Sobolev1Kernel&) { return "sobolev1"; },
                 [](const Sobolev2Kernel&) { return "sobolev2"; },
                 [](const AdditiveKernel&) { return "additive"; }},
      variant_);
}

std::optional<std::size_t> KernelConfig::fixed_dimension() const {
  return std::visit(
      overloaded{
          [](const GaussianKernel& g) -> std::optional<std::size_t> {
            return static_cast<std::size_t>(g.sigma.rows());
          },
          [](const PolynomialKernel&) -> std::optional<std::size_t> {
            return std::nullopt;
          },
          [](const Sobolev1Kernel&) -> std::optional<std::size_t> { return 1; },
          [](const Sobolev2Kernel&) -> std::optional<std::size_t> { return 1; },
          [](const AdditiveKernel&) -> std::optional<std::size_t> {
            return std::nullopt;
          }},
      variant_);
}

std::size_t KernelConfig::min_dimension() const {
  if (auto fixed = fixed_dimension()) return *fixed;
  if (const auto* add = std::get_if<AdditiveKernel>(&variant_)) {
    return *std::max_element(add->coords.begin(), add->coords.end()) + 1;
  }
  return 1;
}

void KernelConfig::check_dimension(std::size_t d) const {
  const auto fixed = fixed_dimension();
  if ((fixed && d != *fixed) || d < min_dimension()) {
    throw Error(ErrorKind::DimensionMismatch,
                std::string(name()) + " kernel cannot take points of dimension " +
                    std::to_string(d));
  }
}

KernelConfig KernelConfig::with_shift(double shift) const {
  check_shift(shift);
  return std::visit(
      overloaded{[&](GaussianKernel g) {
                   g.shift = shift;
                   return KernelConfig(std::move(g));
                 },
                 [&](PolynomialKernel p) {
                   p.shift = shift;
                   return KernelConfig(p);
                 },
                 [&](Sobolev1Kernel s) {
                   s.shift = shift;
                   return KernelConfig(s);
                 },
                 [&](Sobolev2Kernel s) {
                   s.shift = shift;
                   return KernelConfig(s);
                 },
                 [&](AdditiveKernel a) {
                   for (auto& k : a.kernels) k = k.with_shift(shift);
                   return KernelConfig(std::move(a));
                 }},
      variant_);
}

namespace {

double eval_unchecked(const KernelConfig& config, Point x, Point y) {
  return std::visit(
      overloaded{
          [&](const GaussianKernel& g) {
            const auto d = static_cast<Eigen::Index>(x.size());
            Eigen::Map<const Vector> xv(x.data(), d), yv(y.data(), d);
            const Vector diff = xv - yv;
            double q;
            if (!g.lengthscales.empty()) {
              q = 0.0;
              for (Eigen::Index j = 0; j < d; ++j) {
                q += diff[j] * diff[j] * g.sigma_inverse(j, j);
              }
            } else {
              q = diff.dot(g.sigma_inverse * diff);
            }
            return g.shift + std::exp(-q);
          },
          [&](const PolynomialKernel& p) {
            double dot = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) dot += x[j] * y[j];
            return std::pow(dot + p.shift, p.degree);
          },
          [&](const Sobolev1Kernel& s) {
            check_unit_interval(x[0]);
            check_unit_interval(y[0]);
            return s.shift + std::min(x[0], y[0]);
          },
          [&](const Sobolev2Kernel& s) {
            const double a = x[0], b = y[0];
            check_unit_interval(a);
            check_unit_interval(b);
            const double m = std::min(a, b);
            return s.shift + m * a * b - m * m * (a + b) / 2.0 + m * m * m / 3.0;
          },
          [&](const AdditiveKernel& add) {
            double total = 0.0;
            for (std::size_t t = 0; t < add.coords.size(); ++t) {
              const std::size_t c = add.coords[t];
              total += eval_unchecked(add.kernels[t], x.subspan(c, 1),
                                      y.subspan(c, 1));
            }
            return total;
          }},
      config.variant());
}

}  // namespace

double eval_kernel(const KernelConfig& config, Point x, Point y) {
  if (x.size() != y.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "kernel arguments have different dimensions");
  }
  config.check_dimension(x.size());
  return eval_unchecked(config, x, y);
}

GramMatrix gram_matrix(const KernelConfig& config, const PointMatrix& points) {
  if (points.rows() == 0) {
    throw Error(ErrorKind::InvalidArgument, "Gram matrix of an empty point set");
  }
  config.check_dimension(static_cast<std::size_t>(points.cols()));
  const Eigen::Index n = points.rows();
  GramMatrix gram{Matrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = eval_unchecked(config, row_of(points, i), row_of(points, j));
      gram.entries(i, j) = v;
      gram.entries(j, i) = v;
    }
  }
  return gram;
}

Matrix cross_kernel_matrix(const KernelConfig& config, const PointMatrix& a,
                           const PointMatrix& b) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorKind::DimensionMismatch,
                "point sets have different dimensions");
  }
  config.check_dimension(static_cast<std::size_t>(a.cols()));
  Matrix out(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      out(i, j) = eval_unchecked(config, row_of(a, i), row_of(b, j));
    }
  }
  return out;
}

double kappa_matrix(const Matrix& a) {
  if (a.rows() == 0 || a.rows() != a.cols()) {
    throw Error(ErrorKind::InvalidArgument, "kappa needs a nonempty square matrix");
  }
  if (!a.allFinite()) {
    throw Error(ErrorKind::NonFinite, "kappa input has non-finite entries");
  }
  const double scale = std::max(a.cwiseAbs().maxCoeff(),
                                std::numeric_limits<double>::min());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw Error(ErrorKind::InvalidArgument, "kappa input is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  const Vector& lambda = eig.eigenvalues();
  const double largest = lambda.cwiseAbs().maxCoeff();
  if (lambda.minCoeff() < -1e-8 * largest) {
    throw Error(ErrorKind::InvalidArgument,
                "kappa input has a negative eigenvalue beyond tolerance");
  }
  const auto n = static_cast<double>(a.rows());
  const Vector coeffs = eig.eigenvectors().transpose() * Vector::Ones(a.rows());
  const double cutoff = 1e-10 * largest;

  double null_sq = 0.0;
  double quad = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] <= cutoff) {
      null_sq += coeffs[i] * coeffs[i];
    } else {
      quad += coeffs[i] * coeffs[i] / lambda[i];
    }
  }
  // When 1 lies in the range, its weight on eigenvalues below the cutoff is
  // at most cutoff * 1^T A^+ 1; anything well beyond that is a null direction.
  if (quad == 0.0 || null_sq > 10.0 * cutoff * quad + 1e-20 * n) return 0.0;
  return 1.0 / quad;
}

std::optional<double> constant_norm_squared(const KernelConfig& config) {
  // Weight c of the constant part: k - c stays positive definite, and
  // ||1_X||^2 = 1 / c. Summands of an additive kernel add their weights.
  auto weight = [](const auto& self, const KernelConfig& k) -> double {
    return std::visit(
        overloaded{[](const GaussianKernel& g) { return g.shift; },
                   [](const PolynomialKernel& p) {
                     return std::pow(p.shift, p.degree);
                   },
                   [](const Sobolev1Kernel& s) { return s.shift; },
                   [](const Sobolev2Kernel& s) { return s.shift; },
                   [&](const AdditiveKernel& add) {
                     double total = 0.0;
                     for (const auto& term : add.kernels) total += self(self, term);
                     return total;
                   }},
        k.variant());
  };
  const double c = weight(weight, config);
  if (!(c > 0.0)) return std::nullopt;
  return 1.0 / c;
}

double require_constant_norm_squared(const KernelConfig& config) {
  auto c = constant_norm_squared(config);
  if (!c) {
    throw Error(ErrorKind::NotInSpace,
                std::string("constant function is not in the RKHS of this ") +
                    config.name() + " kernel (shift is zero)");
  }
  return *c;
}

std::optional<std::size_t> polynomial_feature_count(std::size_t dimension,
                                                    int degree) {
  // C(d + p, p) computed incrementally; each partial product is an integer.
  unsigned long long count = 1;
  for (int k = 1; k <= degree; ++k) {
    const unsigned long long num = dimension + static_cast<unsigned long long>(k);
    if (count > std::numeric_limits<unsigned long long>::max() / num) {
      return std::nullopt;
    }
    count = count * num / static_cast<unsigned long long>(k);
  }
  if (count > std::numeric_limits<std::size_t>::max()) return std::nullopt;
  return static_cast<std::size_t>(count);
}

namespace {

// Exponent vectors of total degree `degree` over `d` variables, in
// lexicographic order with x_1 highest first.
void monomials_of_degree(std::size_t d, int degree, std::vector<int>& current,
                         std::size_t pos, std::vector<std::vector<int>>& out) {
  if (pos + 1 == d) {
    current[pos] = degree;
    out.push_back(current);
    current[pos] = 0;
    return;
  }
  for (int e = degree; e >= 0; --e) {
    current[pos] = e;
    monomials_of_degree(d, degree - e, current, pos + 1, out);
  }
  current[pos] = 0;
}

double log_factorial(int k) { return std::lgamma(static_cast<double>(k) + 1.0); }

}  // namespace

PolynomialFeatureMap::PolynomialFeatureMap(const KernelConfig& config,
                                           std::size_t dimension,
                                           std::size_t max_features)
    : dimension_(dimension) {
  const auto* poly = std::get_if<PolynomialKernel>(&config.variant());
  if (poly == nullptr) {
    throw Error(ErrorKind::InvalidArgument,
                "feature maps are only available for polynomial kernels");
  }
  if (dimension == 0) {
    throw Error(ErrorKind::DimensionMismatch, "feature map of dimension 0");
  }
  if (!(poly->shift > 0.0)) {
    throw Error(ErrorKind::NotInSpace,
                "polynomial feature map needs a positive shift");
  }
  const auto count = polynomial_feature_count(dimension, poly->degree);
  if (!count || *count > max_features) {
    throw Error(ErrorKind::FeatureOverflow,
                "polynomial feature count exceeds the configured limit");
  }
  const int p = poly->degree;
  const double a = poly->shift;
  std::vector<int> current(dimension, 0);
  for (int s = 1; s <= p; ++s) {
    const std::size_t begin = exponents_.size();
    monomials_of_degree(dimension, s, current, 0, exponents_);
    for (std::size_t m = begin; m < exponents_.size(); ++m) {
      // p! / ((p - s)! prod_j alpha_j!) * a^(p - s)
      double log_w = log_factorial(p) - log_factorial(p - s) +
                     static_cast<double>(p - s) * std::log(a);
      for (int e : exponents_[m]) log_w -= log_factorial(e);
      weights_.push_back(std::exp(0.5 * log_w));
    }
  }
  constant_ = std::pow(a, 0.5 * p);
}

Vector PolynomialFeatureMap::operator()(Point x) const {
  if (x.size() != dimension_) {
    throw Error(ErrorKind::DimensionMismatch,
                "feature map input has the wrong dimension");
  }
  Vector phi(static_cast<Eigen::Index>(weights_.size() + 1));
  for (std::size_t m = 0; m < weights_.size(); ++m) {
    double v = weights_[m];
    for (std::size_t j = 0; j < dimension_; ++j) {
      for (int e = 0; e < exponents_[m][j]; ++e) v *= x[j];
    }
    phi[static_cast<Eigen::Index>(m)] = v;
  }
  phi[static_cast<Eigen::Index>(weights_.size())] = constant_;
  return phi;
}

Matrix PolynomialFeatureMap::non_constant(const PointMatrix& points) const {
  const auto q = static_cast<Eigen::Index>(size());
  Matrix out(points.rows(), q);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    out.row(i) = (*this)(row_of(points, i)).head(q).transpose();
  }
  return out;
}

Vector feature_map(const KernelConfig& config, Point x, std::size_t max_features) {
  return PolynomialFeatureMap(config, x.size(), max_features)(x);
}

}  // namespace care
