#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace care {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// Covariates, one point per row. Row-major so a row is a contiguous span.
using PointMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Point = std::span<const double>;

inline Point row_of(const PointMatrix& points, Eigen::Index i) {
  return {points.data() + i * points.cols(),
          static_cast<std::size_t>(points.cols())};
}

/// a + exp(-(x-y)^T Sigma^{-1} (x-y)). Per-dimension lengthscales l_j mean
/// Sigma = diag(l_j^2).
struct GaussianKernel {
  Matrix sigma;
  Matrix sigma_inverse;
  std::vector<double> lengthscales;  // empty when a full Sigma was given
  double shift = 0.0;
};

/// (x^T y + a)^p
struct PolynomialKernel {
  int degree = 1;
  double shift = 0.0;
};

/// a + min(x, y) on [0, 1].
struct Sobolev1Kernel {
  double shift = 0.0;
};

/// a + int_0^{min(x,y)} (x - z)(y - z) dz on [0, 1].
struct Sobolev2Kernel {
  double shift = 0.0;
};

class KernelConfig;

/// sum_j k_j(x_{c_j}, y_{c_j}) over distinct coordinates c_j.
struct AdditiveKernel {
  std::vector<std::size_t> coords;
  std::vector<KernelConfig> kernels;
};

class KernelConfig {
 public:
  using Variant = std::variant<GaussianKernel, PolynomialKernel, Sobolev1Kernel,
                               Sobolev2Kernel, AdditiveKernel>;

  static KernelConfig gaussian(std::vector<double> lengthscales, double shift);
  static KernelConfig gaussian(const Matrix& sigma, double shift);
  static KernelConfig polynomial(int degree, double shift);
  static KernelConfig sobolev1(double shift);
  static KernelConfig sobolev2(double shift);
  static KernelConfig additive(std::vector<std::size_t> coords,
                               std::vector<KernelConfig> kernels);

  const Variant& variant() const { return variant_; }
  const char* name() const;

  /// Exact input dimension when the kernel fixes it (Gaussian, Sobolev).
  std::optional<std::size_t> fixed_dimension() const;
  /// Smallest admissible input dimension.
  std::size_t min_dimension() const;
  /// Throws DimensionMismatch unless a point of dimension `d` is accepted.
  void check_dimension(std::size_t d) const;

  /// Same kernel with every shift replaced by `shift` (summands included).
  KernelConfig with_shift(double shift) const;

  bool is_polynomial() const {
    return std::holds_alternative<PolynomialKernel>(variant_);
  }

 private:
  explicit KernelConfig(Variant v) : variant_(std::move(v)) {}
  Variant variant_;
};

/// k(x, y). Throws DimensionMismatch or DomainError (Sobolev outside [0,1]).
double eval_kernel(const KernelConfig& config, Point x, Point y);

struct GramMatrix {
  Matrix entries;
  Eigen::Index size() const { return entries.rows(); }
};

GramMatrix gram_matrix(const KernelConfig& config, const PointMatrix& points);

/// Rectangular matrix k(a_i, b_j).
Matrix cross_kernel_matrix(const KernelConfig& config, const PointMatrix& a,
                           const PointMatrix& b);

/// kappa(A) = lim_{delta -> 0} 1 / (1^T (A + delta I)^{-1} 1) for a symmetric
/// PSD matrix: 0 when 1 has a component in the null space, otherwise
/// 1 / (1^T A^+ 1).
double kappa_matrix(const Matrix& a);

/// ||1_X||_H^2, or nullopt when the constant function is not in H (zero
/// shift).
std::optional<double> constant_norm_squared(const KernelConfig& config);

/// Throws NotInSpace when constant_norm_squared is nullopt.
double require_constant_norm_squared(const KernelConfig& config);

inline constexpr std::size_t kDefaultMaxFeatures = 100000;

/// Explicit feature map of the polynomial kernel: monomials of degree
/// 1..p in graded lexicographic order, weighted so that
/// phi(x)^T phi(y) = (x^T y + a)^p, followed by the constant a^{p/2}.
class PolynomialFeatureMap {
 public:
  PolynomialFeatureMap(const KernelConfig& config, std::size_t dimension,
                       std::size_t max_features = kDefaultMaxFeatures);

  /// Number of non-constant features q; the full map has q + 1 entries.
  std::size_t size() const { return weights_.size(); }
  std::size_t dimension() const { return dimension_; }
  double constant() const { return constant_; }

  Vector operator()(Point x) const;
  /// Rows are phi(x_i) without the constant coordinate (n x q).
  Matrix non_constant(const PointMatrix& points) const;

  const std::vector<std::vector<int>>& exponents() const { return exponents_; }

 private:
  std::size_t dimension_;
  std::vector<std::vector<int>> exponents_;
  std::vector<double> weights_;
  double constant_;
};

/// C(d + p, p), the full feature count including the constant, or nullopt on
/// overflow.
std::optional<std::size_t> polynomial_feature_count(std::size_t dimension,
                                                    int degree);

Vector feature_map(const KernelConfig& config, Point x,
                   std::size_t max_features = kDefaultMaxFeatures);

}  // namespace care
