#include "care/survival_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "care/csv.hpp"
#include "care/error.hpp"
#include "care/random.hpp"

namespace care {

SurvivalDataset::SurvivalDataset(PointMatrix covariates, Vector times,
                                 std::vector<std::uint8_t> censored, double time_scale)
    : covariates_(std::move(covariates)),
      times_(std::move(times)),
      censored_(std::move(censored)),
      time_scale_(time_scale) {
  const Eigen::Index n = times_.size();
  if (n == 0) {
    throw Error(ErrorKind::InvalidArgument, "a survival dataset needs at least one record");
  }
  if (covariates_.rows() != n || static_cast<Eigen::Index>(censored_.size()) != n) {
    throw Error(ErrorKind::DimensionMismatch,
                "covariates, times and censoring flags differ in length");
  }
  if (covariates_.cols() == 0) {
    throw Error(ErrorKind::DimensionMismatch, "records need at least one covariate");
  }
  if (!covariates_.allFinite()) {
    throw Error(ErrorKind::NonFinite, "covariates must be finite");
  }
  if (!std::isfinite(time_scale_) || time_scale_ <= 0.0) {
    throw Error(ErrorKind::InvalidArgument, "time scale must be positive");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(times_[i] > 0.0)) {
      throw Error(ErrorKind::NonPositiveTime,
                  "record " + std::to_string(i) + " has a non-positive time");
    }
    if (!(times_[i] <= 1.0)) {
      throw Error(ErrorKind::DomainError,
                  "record " + std::to_string(i) + " has a normalised time above 1");
    }
  }
  event_order_.resize(static_cast<std::size_t>(n));
  std::iota(event_order_.begin(), event_order_.end(), Eigen::Index{0});
  std::stable_sort(event_order_.begin(), event_order_.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return times_[a] < times_[b]; });
}

SurvivalDataset SurvivalDataset::from_records(const std::vector<SurvivalRecord>& records,
                                              double time_scale) {
  if (records.empty()) {
    throw Error(ErrorKind::InvalidArgument, "a survival dataset needs at least one record");
  }
  const auto n = static_cast<Eigen::Index>(records.size());
  const auto d = static_cast<Eigen::Index>(records.front().covariates.size());
  PointMatrix x(n, d);
  Vector t(n);
  std::vector<std::uint8_t> c(records.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(r.covariates.size()) != d) {
      throw Error(ErrorKind::DimensionMismatch, "records have inconsistent dimensions");
    }
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = r.covariates[static_cast<std::size_t>(j)];
    t[i] = r.time;
    c[static_cast<std::size_t>(i)] = r.censored ? 1 : 0;
  }
  return SurvivalDataset(std::move(x), std::move(t), std::move(c), time_scale);
}

Eigen::Index SurvivalDataset::event_count() const {
  return static_cast<Eigen::Index>(
      std::count(censored_.begin(), censored_.end(), std::uint8_t{0}));
}

SurvivalRecord SurvivalDataset::record(Eigen::Index i) const {
  const auto x = covariate(i);
  return {std::vector<double>(x.begin(), x.end()), times_[i], censored(i)};
}

SurvivalDataset SurvivalDataset::subset(const std::vector<Eigen::Index>& rows) const {
  const auto m = static_cast<Eigen::Index>(rows.size());
  PointMatrix x(m, covariates_.cols());
  Vector t(m);
  std::vector<std::uint8_t> c(rows.size());
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::Index i = rows[static_cast<std::size_t>(k)];
    if (i < 0 || i >= size()) {
      throw Error(ErrorKind::InvalidArgument, "subset row out of range");
    }
    x.row(k) = covariates_.row(i);
    t[k] = times_[i];
    c[static_cast<std::size_t>(k)] = censored_[static_cast<std::size_t>(i)];
  }
  return SurvivalDataset(std::move(x), std::move(t), std::move(c), time_scale_);
}

CsvSchema CsvSchema::standard(std::size_t dimension) {
  CsvSchema s;
  for (std::size_t j = 0; j < dimension; ++j) {
    s.covariate_columns.push_back("x" + std::to_string(j + 1));
  }
  return s;
}

namespace {

SurvivalDataset dataset_from_table(const csv::Table& table, const CsvSchema& schema,
                                   std::optional<double> time_scale,
                                   const std::string& source) {
  auto require = [&](const std::string& name) {
    const int idx = table.column(name);
    if (idx < 0) {
      throw Error(ErrorKind::MissingColumn, source + ": missing column '" + name + "'");
    }
    return static_cast<std::size_t>(idx);
  };
  std::vector<std::size_t> cov_idx;
  for (const auto& name : schema.covariate_columns) cov_idx.push_back(require(name));
  const std::size_t time_idx = require(schema.time_column);
  const std::size_t event_idx = require(schema.event_column);
  if (cov_idx.empty()) {
    throw Error(ErrorKind::MissingColumn, source + ": no covariate columns");
  }
  if (table.rows.empty()) {
    throw Error(ErrorKind::InvalidArgument, source + ": no data rows");
  }

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  const auto d = static_cast<Eigen::Index>(cov_idx.size());
  PointMatrix x(n, d);
  Vector t(n);
  std::vector<std::uint8_t> censored(table.rows.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    const std::string where = source + " row " + std::to_string(i + 1);
    for (Eigen::Index j = 0; j < d; ++j) {
      x(i, j) = csv::parse_double(row[cov_idx[static_cast<std::size_t>(j)]], where);
    }
    t[i] = csv::parse_double(row[time_idx], where);
    if (!(t[i] > 0.0)) {
      throw Error(ErrorKind::NonPositiveTime, where + ": time must be positive");
    }
    const double ev = csv::parse_double(row[event_idx], where);
    if (ev != 0.0 && ev != 1.0) {
      throw Error(ErrorKind::BadEventFlag, where + ": event flag must be 0 or 1");
    }
    censored[static_cast<std::size_t>(i)] = ev == 1.0 ? 0 : 1;
  }
  const double scale = time_scale ? *time_scale : t.maxCoeff();
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorKind::InvalidArgument, source + ": invalid time scale");
  }
  if (scale != 1.0) t /= scale;
  return SurvivalDataset(std::move(x), std::move(t), std::move(censored), scale);
}

}  // namespace

SurvivalDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema,
                         std::optional<double> time_scale) {
  return dataset_from_table(csv::read_table(path), schema, time_scale, path.string());
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p += ".json";
  return p;
}

SurvivalDataset load_dataset(const std::filesystem::path& path) {
  const auto table = csv::read_table(path);
  CsvSchema schema;
  for (const auto& name : table.header) {
    if (name != schema.time_column && name != schema.event_column) {
      schema.covariate_columns.push_back(name);
    }
  }
  std::optional<double> scale;
  const auto side = sidecar_path(path);
  if (std::filesystem::exists(side)) {
    std::ifstream in(side);
    nlohmann::json meta;
    try {
      in >> meta;
      scale = meta.at("time_scale").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::ParseError, side.string() + ": " + e.what());
    }
  }
  return dataset_from_table(table, schema, scale, path.string());
}

void write_csv(const SurvivalDataset& data, const std::filesystem::path& path) {
  auto out = csv::open_output(path);
  const std::size_t d = data.dimension();
  for (std::size_t j = 0; j < d; ++j) out << 'x' << (j + 1) << ',';
  out << "time,event\n";
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const auto x = data.covariate(i);
    for (std::size_t j = 0; j < d; ++j) out << csv::format_double(x[j]) << ',';
    out << csv::format_double(data.time(i) * data.time_scale()) << ','
        << (data.event(i) ? 1 : 0) << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());

  auto side = csv::open_output(sidecar_path(path));
  nlohmann::json meta = {{"time_scale", data.time_scale()}, {"d", d}};
  side << meta.dump(2) << '\n';
  if (!side) throw Error(ErrorKind::Io, "failed writing " + sidecar_path(path).string());
}

std::pair<SurvivalDataset, SurvivalDataset> split_train_validation(
    const SurvivalDataset& data, std::uint64_t seed) {
  const Eigen::Index n = data.size();
  if (n < 2) {
    throw Error(ErrorKind::InvalidArgument, "splitting needs at least two records");
  }
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  KeyedStream rng(seed, /*stream=*/0x5u, /*index=*/0);
  for (std::size_t i = perm.size() - 1; i > 0; --i) {
    std::swap(perm[i], perm[rng.below(i + 1)]);
  }
  const auto n_train = static_cast<std::size_t>((n + 1) / 2);
  std::vector<Eigen::Index> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<Eigen::Index> valid(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  return {data.subset(train), data.subset(valid)};
}

}  // namespace care
