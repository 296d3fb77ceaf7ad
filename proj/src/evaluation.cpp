#include "care/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "care/error.hpp"

namespace care {

namespace {
constexpr std::uint32_t kMonteCarloStream = 11;
}

double StepSurvival::at(double t) const {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 1.0;
  return values[static_cast<std::size_t>(it - times.begin()) - 1];
}

StepSurvival breslow_survival(const SurvivalDataset& data) {
  StepSurvival out;
  const auto& order = data.event_order();
  const auto n = static_cast<std::size_t>(data.size());
  double cumulative = 0.0;
  std::size_t pos = 0;
  while (pos < n) {
    const double t = data.time(order[pos]);
    std::size_t end = pos;
    int events = 0;
    while (end < n && data.time(order[end]) == t) {
      if (data.event(order[end])) ++events;
      ++end;
    }
    if (events > 0) {
      cumulative += static_cast<double>(events) / static_cast<double>(n - pos);
      out.times.push_back(t);
      out.values.push_back(std::exp(-cumulative));
    }
    pos = end;
  }
  return out;
}

namespace {

void check_predictions(const Vector& predictions, const SurvivalDataset& data) {
  if (predictions.size() != data.size()) {
    throw Error(ErrorKind::DimensionMismatch, "predictions and data differ in length");
  }
  if (!predictions.allFinite()) {
    throw Error(ErrorKind::NonFinite, "predictions must be finite");
  }
}

class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}
  void add(std::size_t i) {
    for (++i; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
  }
  /// Count of inserted positions < i.
  std::uint64_t prefix(std::size_t i) const {
    std::uint64_t s = 0;
    for (; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

 private:
  std::vector<std::uint64_t> tree_;
};

}  // namespace

double concordance_index(const Vector& predictions, const SurvivalDataset& data) {
  check_predictions(predictions, data);
  const auto n = static_cast<std::size_t>(data.size());

  // Dense ranks of the predictions so "f_i < f_j" becomes a prefix count.
  std::vector<double> sorted(predictions.data(), predictions.data() + n);
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    rank[i] = static_cast<std::size_t>(
        std::lower_bound(sorted.begin(), sorted.end(), predictions[static_cast<Eigen::Index>(i)]) -
        sorted.begin());
  }

  // Walk times from largest to smallest; the tree holds every record with a
  // strictly larger time than the current group.
  const auto& order = data.event_order();
  Fenwick tree(sorted.size());
  std::uint64_t numerator = 0, denominator = 0, inserted = 0;
  std::size_t end = n;
  while (end > 0) {
    const double t = data.time(order[end - 1]);
    std::size_t begin = end;
    while (begin > 0 && data.time(order[begin - 1]) == t) --begin;
    for (std::size_t k = begin; k < end; ++k) {
      const auto j = order[k];
      if (!data.event(j)) continue;
      denominator += inserted;
      numerator += tree.prefix(rank[static_cast<std::size_t>(j)]);
    }
    for (std::size_t k = begin; k < end; ++k) {
      tree.add(rank[static_cast<std::size_t>(order[k])]);
      ++inserted;
    }
    end = begin;
  }
  if (denominator == 0) {
    throw Error(ErrorKind::NoComparablePairs, "no comparable pairs for the concordance index");
  }
  return static_cast<double>(numerator) / static_cast<double>(denominator);
}

double concordance_index_reference(const Vector& predictions, const SurvivalDataset& data) {
  check_predictions(predictions, data);
  std::uint64_t numerator = 0, denominator = 0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < data.size(); ++j) {
      if (data.time(i) > data.time(j) && data.event(j)) {
        ++denominator;
        if (predictions[i] < predictions[j]) ++numerator;
      }
    }
  }
  if (denominator == 0) {
    throw Error(ErrorKind::NoComparablePairs, "no comparable pairs for the concordance index");
  }
  return static_cast<double>(numerator) / static_cast<double>(denominator);
}

PointMatrix sample_points(const CovariateSampler& sampler, std::size_t n_mc,
                          std::uint64_t seed) {
  if (n_mc < 1) throw Error(ErrorKind::InvalidArgument, "n_mc must be >= 1");
  PointMatrix points;
  for (std::size_t i = 0; i < n_mc; ++i) {
    KeyedStream rng(seed, kMonteCarloStream, i);
    const std::vector<double> x = sampler(rng);
    if (i == 0) points.resize(static_cast<Eigen::Index>(n_mc), static_cast<Eigen::Index>(x.size()));
    if (static_cast<Eigen::Index>(x.size()) != points.cols()) {
      throw Error(ErrorKind::DimensionMismatch, "sampler returned points of varying dimension");
    }
    for (std::size_t c = 0; c < x.size(); ++c) {
      points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = x[c];
    }
  }
  return points;
}

double l2_error_on(const Vector& predicted, const Vector& truth) {
  if (predicted.size() != truth.size() || predicted.size() == 0) {
    throw Error(ErrorKind::DimensionMismatch, "L2 error needs equal, nonempty vectors");
  }
  if (!predicted.allFinite() || !truth.allFinite()) {
    throw Error(ErrorKind::NonFinite, "L2 error integrand is not finite");
  }
  return std::sqrt((predicted - truth).squaredNorm() / static_cast<double>(predicted.size()));
}

double l2_error_mc(const PointFunction& predict, const PointFunction& truth,
                   const CovariateSampler& sampler, std::size_t n_mc, std::uint64_t seed) {
  if (n_mc < 1) throw Error(ErrorKind::InvalidArgument, "n_mc must be >= 1");
  double total = 0.0;
  for (std::size_t i = 0; i < n_mc; ++i) {
    KeyedStream rng(seed, kMonteCarloStream, i);
    const std::vector<double> x = sampler(rng);
    const double diff = predict(Point(x)) - truth(Point(x));
    if (!std::isfinite(diff)) throw Error(ErrorKind::NonFinite, "L2 error integrand is not finite");
    total += diff * diff;
  }
  return std::sqrt(total / static_cast<double>(n_mc));
}

}  // namespace care
