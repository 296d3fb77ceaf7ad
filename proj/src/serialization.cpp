#include "care/serialization.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "care/csv.hpp"
#include "care/error.hpp"

namespace care {

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::Config, msg); }

const Json& field(const Json& obj, const std::string& key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) config_error(where + ": missing field '" + key + "'");
  return *it;
}

double number(const Json& j, const std::string& what) {
  if (!j.is_number()) config_error(what + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) config_error(what + " must be finite");
  return v;
}

long long integer(const Json& j, const std::string& what) {
  if (!j.is_number_integer()) config_error(what + " must be an integer");
  return j.get<long long>();
}

bool boolean(const Json& j, const std::string& what) {
  if (!j.is_boolean()) config_error(what + " must be true or false");
  return j.get<bool>();
}

std::vector<double> numbers(const Json& j, const std::string& what) {
  if (!j.is_array()) config_error(what + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(number(v, what));
  return out;
}

Vector vector_from(const Json& j, const std::string& what) {
  const auto v = numbers(j, what);
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Json vector_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Json rows_json(const PointMatrix& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const Point r = row_of(m, i);
    out.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return out;
}

PointMatrix rows_from(const Json& j, std::size_t cols, const std::string& what) {
  if (!j.is_array()) config_error(what + " must be an array of rows");
  PointMatrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto row = numbers(j[i], what);
    if (row.size() != cols) config_error(what + ": rows must have " + std::to_string(cols) + " entries");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
    }
  }
  return m;
}

Json diagnostics_json(const FitDiagnostics& d) {
  return Json{{"converged", d.converged},
              {"gradient_norm", d.gradient_norm},
              {"iterations", d.iterations},
              {"objective", d.objective},
              {"warnings", d.warnings}};
}

FitDiagnostics diagnostics_from(const Json& j) {
  check_keys(j, {"converged", "gradient_norm", "iterations", "objective", "warnings"},
             "diagnostics");
  FitDiagnostics d;
  d.converged = boolean(field(j, "converged", "diagnostics"), "converged");
  d.gradient_norm = number(field(j, "gradient_norm", "diagnostics"), "gradient_norm");
  d.iterations = static_cast<int>(integer(field(j, "iterations", "diagnostics"), "iterations"));
  d.objective = number(field(j, "objective", "diagnostics"), "objective");
  if (j.contains("warnings")) {
    for (const auto& w : j["warnings"]) {
      if (!w.is_string()) config_error("diagnostics warnings must be strings");
      d.warnings.push_back(w.get<std::string>());
    }
  }
  return d;
}

template <typename Fn>
auto rethrow_as_config(Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Json::exception& e) {
    config_error(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

void check_keys(const Json& obj, const std::vector<std::string>& allowed,
                const std::string& where) {
  if (!obj.is_object()) config_error(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      config_error(where + ": unknown key '" + key + "'");
    }
  }
}

Json to_json(const KernelConfig& kernel) {
  return std::visit(
      [](const auto& k) -> Json {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, GaussianKernel>) {
          Json j{{"variant", "gaussian"}, {"shift", k.shift}};
          if (!k.lengthscales.empty()) {
            j["lengthscales"] = k.lengthscales;
          } else {
            Json rows = Json::array();
            for (Eigen::Index r = 0; r < k.sigma.rows(); ++r) {
              std::vector<double> row(static_cast<std::size_t>(k.sigma.cols()));
              for (Eigen::Index c = 0; c < k.sigma.cols(); ++c) row[static_cast<std::size_t>(c)] = k.sigma(r, c);
              rows.push_back(row);
            }
            j["sigma"] = rows;
          }
          return j;
        } else if constexpr (std::is_same_v<K, PolynomialKernel>) {
          return Json{{"variant", "polynomial"}, {"degree", k.degree}, {"shift", k.shift}};
        } else if constexpr (std::is_same_v<K, Sobolev1Kernel>) {
          return Json{{"variant", "sobolev1"}, {"shift", k.shift}};
        } else if constexpr (std::is_same_v<K, Sobolev2Kernel>) {
          return Json{{"variant", "sobolev2"}, {"shift", k.shift}};
        } else {
          Json summands = Json::array();
          for (std::size_t i = 0; i < k.coords.size(); ++i) {
            summands.push_back(Json{{"coord", k.coords[i]}, {"kernel", to_json(k.kernels[i])}});
          }
          return Json{{"variant", "additive"}, {"summands", summands}};
        }
      },
      kernel.variant());
}

KernelConfig kernel_from_json(const Json& j) {
  return rethrow_as_config([&] {
    if (!j.is_object()) config_error("kernel must be a JSON object");
    const Json& variant = field(j, "variant", "kernel");
    if (!variant.is_string()) config_error("kernel variant must be a string");
    const std::string name = variant.get<std::string>();
    try {
      if (name == "sobolev1" || name == "sobolev2") {
        check_keys(j, {"variant", "shift"}, "kernel");
        const double a = number(field(j, "shift", "kernel"), "kernel shift");
        return name == "sobolev1" ? KernelConfig::sobolev1(a) : KernelConfig::sobolev2(a);
      }
      if (name == "polynomial") {
        check_keys(j, {"variant", "degree", "shift"}, "kernel");
        return KernelConfig::polynomial(
            static_cast<int>(integer(field(j, "degree", "kernel"), "kernel degree")),
            number(field(j, "shift", "kernel"), "kernel shift"));
      }
      if (name == "gaussian") {
        check_keys(j, {"variant", "lengthscales", "sigma", "shift"}, "kernel");
        const double a = number(field(j, "shift", "kernel"), "kernel shift");
        if (j.contains("lengthscales") == j.contains("sigma")) {
          config_error("gaussian kernel needs exactly one of 'lengthscales' or 'sigma'");
        }
        if (j.contains("lengthscales")) {
          return KernelConfig::gaussian(numbers(j["lengthscales"], "lengthscales"), a);
        }
        const Json& rows = j["sigma"];
        if (!rows.is_array() || rows.empty()) config_error("sigma must be a nonempty matrix");
        const PointMatrix s = rows_from(rows, rows[0].size(), "sigma");
        return KernelConfig::gaussian(Matrix(s), a);
      }
      if (name == "additive") {
        check_keys(j, {"variant", "summands"}, "kernel");
        const Json& summands = field(j, "summands", "kernel");
        if (!summands.is_array()) config_error("additive summands must be an array");
        std::vector<std::size_t> coords;
        std::vector<KernelConfig> kernels;
        for (const auto& s : summands) {
          check_keys(s, {"coord", "kernel"}, "additive summand");
          const long long c = integer(field(s, "coord", "additive summand"), "summand coord");
          if (c < 0) config_error("summand coord must be non-negative");
          coords.push_back(static_cast<std::size_t>(c));
          kernels.push_back(kernel_from_json(field(s, "kernel", "additive summand")));
        }
        return KernelConfig::additive(std::move(coords), std::move(kernels));
      }
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Config) throw;
      config_error(std::string("kernel: ") + e.what());
    }
    config_error("unknown kernel variant '" + name + "'");
  });
}

Json to_json(const OptimOptions& o) {
  return Json{{"gradient_tolerance", o.gradient_tolerance},
              {"max_iterations", o.max_iterations},
              {"armijo_slope", o.armijo_slope},
              {"backtrack_factor", o.backtrack_factor},
              {"initial_step", o.initial_step},
              {"record_trace", o.record_trace}};
}

OptimOptions optim_options_from_json(const Json& j) {
  return rethrow_as_config([&] {
    check_keys(j, {"gradient_tolerance", "max_iterations", "armijo_slope", "backtrack_factor",
                   "initial_step", "record_trace"},
               "optimizer");
    OptimOptions o;
    if (j.contains("gradient_tolerance")) o.gradient_tolerance = number(j["gradient_tolerance"], "gradient_tolerance");
    if (j.contains("max_iterations")) o.max_iterations = static_cast<int>(integer(j["max_iterations"], "max_iterations"));
    if (j.contains("armijo_slope")) o.armijo_slope = number(j["armijo_slope"], "armijo_slope");
    if (j.contains("backtrack_factor")) o.backtrack_factor = number(j["backtrack_factor"], "backtrack_factor");
    if (j.contains("initial_step")) o.initial_step = number(j["initial_step"], "initial_step");
    if (j.contains("record_trace")) o.record_trace = boolean(j["record_trace"], "record_trace");
    try {
      o.validate();
    } catch (const Error& e) {
      config_error(e.what());
    }
    return o;
  });
}

GammaGrid gamma_grid_from_json(const Json& j) {
  return rethrow_as_config([&] {
    try {
      if (j.is_object() && j.contains("values")) {
        check_keys(j, {"values"}, "gamma grid");
        return GammaGrid(numbers(j["values"], "gamma grid values"));
      }
      check_keys(j, {"min", "max", "count", "geometric"}, "gamma grid");
      const bool geometric = j.contains("geometric") ? boolean(j["geometric"], "geometric") : true;
      return GammaGrid::spaced(number(field(j, "min", "gamma grid"), "gamma grid min"),
                               number(field(j, "max", "gamma grid"), "gamma grid max"),
                               static_cast<int>(integer(field(j, "count", "gamma grid"), "gamma grid count")),
                               geometric);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Config) throw;
      config_error(std::string("gamma grid: ") + e.what());
    }
  });
}

Json to_json(const KernelEstimator& est) {
  return Json{{"type", "kernel"},
              {"kernel", to_json(est.kernel())},
              {"gamma", est.gamma()},
              {"dimension", est.dimension()},
              {"basis_points", rows_json(est.basis_points())},
              {"beta", vector_json(est.beta())},
              {"kbar", vector_json(est.kbar_at_basis())},
              {"diagnostics", diagnostics_json(est.diagnostics())}};
}

KernelEstimator kernel_estimator_from_json(const Json& j) {
  return rethrow_as_config([&] {
    const std::string w = "kernel estimator";
    check_keys(j, {"type", "kernel", "gamma", "dimension", "basis_points", "beta", "kbar", "diagnostics"}, w);
    if (field(j, "type", w) != "kernel") config_error(w + ": type must be 'kernel'");
    const auto dim = integer(field(j, "dimension", w), "dimension");
    if (dim < 0) config_error("dimension must be non-negative");
    FitDiagnostics diag;
    if (j.contains("diagnostics")) diag = diagnostics_from(j["diagnostics"]);
    return KernelEstimator(kernel_from_json(field(j, "kernel", w)),
                           rows_from(field(j, "basis_points", w), static_cast<std::size_t>(dim), "basis_points"),
                           vector_from(field(j, "beta", w), "beta"),
                           vector_from(field(j, "kbar", w), "kbar"),
                           number(field(j, "gamma", w), "gamma"), std::move(diag));
  });
}

Json to_json(const FeatureMapEstimator& est) {
  return Json{{"type", "feature_map"},
              {"kernel", to_json(est.kernel())},
              {"gamma", est.gamma()},
              {"dimension", est.dimension()},
              {"alpha", vector_json(est.alpha())},
              {"feature_means", vector_json(est.feature_means())},
              {"constant", est.constant()},
              {"diagnostics", diagnostics_json(est.diagnostics())}};
}

FeatureMapEstimator feature_map_estimator_from_json(const Json& j) {
  return rethrow_as_config([&] {
    const std::string w = "feature-map estimator";
    check_keys(j, {"type", "kernel", "gamma", "dimension", "alpha", "feature_means", "constant", "diagnostics"}, w);
    if (field(j, "type", w) != "feature_map") config_error(w + ": type must be 'feature_map'");
    const auto dim = integer(field(j, "dimension", w), "dimension");
    if (dim < 1) config_error("dimension must be positive");
    FitDiagnostics diag;
    if (j.contains("diagnostics")) diag = diagnostics_from(j["diagnostics"]);
    FeatureMapEstimator est(kernel_from_json(field(j, "kernel", w)), static_cast<std::size_t>(dim),
                            vector_from(field(j, "alpha", w), "alpha"),
                            vector_from(field(j, "feature_means", w), "feature_means"),
                            number(field(j, "gamma", w), "gamma"), std::move(diag));
    if (j.contains("constant") &&
        std::abs(number(j["constant"], "constant") - est.constant()) > 1e-12 * std::max(1.0, est.constant())) {
      config_error(w + ": stored constant does not match the kernel");
    }
    return est;
  });
}

ExternalPredictor builtin_external(const DgpConfig& config) {
  return ExternalPredictor::closed_form("builtin:" + config.name(),
                                        [config](Point x) { return external_predictor(config, x); });
}

Json to_json(const CenteredExternal& ext) {
  Json j{{"name", ext.raw().name()}, {"training_mean", ext.training_mean()}};
  if (ext.raw().has_closed_form()) {
    if (ext.raw().name().rfind("builtin:", 0) != 0) {
      throw Error(ErrorKind::InvalidArgument,
                  "closed-form external '" + ext.raw().name() + "' cannot be serialized");
    }
    j["source"] = "builtin";
  } else {
    j["source"] = "table";
    j["train"] = vector_json(*ext.raw().train_table());
    j["validation"] = vector_json(*ext.raw().validation_table());
  }
  return j;
}

CenteredExternal centered_external_from_json(const Json& j) {
  return rethrow_as_config([&] {
    const std::string w = "external";
    check_keys(j, {"name", "training_mean", "source", "train", "validation"}, w);
    const Json& name_j = field(j, "name", w);
    if (!name_j.is_string()) config_error("external name must be a string");
    const std::string name = name_j.get<std::string>();
    const double mean = number(field(j, "training_mean", w), "training_mean");
    const std::string source = field(j, "source", w).get<std::string>();
    if (source == "builtin") {
      if (name.rfind("builtin:", 0) != 0) config_error("builtin external names start with 'builtin:'");
      return CenteredExternal(builtin_external(DgpConfig::parse(name.substr(8))), mean);
    }
    if (source == "table") {
      return CenteredExternal(ExternalPredictor::table(name, vector_from(field(j, "train", w), "train"),
                                                       vector_from(field(j, "validation", w), "validation")),
                              mean);
    }
    config_error("external source must be 'builtin' or 'table'");
  });
}

Json to_json(const CareEstimator& est) {
  Json externals = Json::array();
  for (const auto& e : est.externals()) externals.push_back(to_json(e));
  return Json{{"type", "care"},
              {"gamma", est.gamma()},
              {"theta", est.theta()},
              {"kernel_estimator", to_json(est.kernel_component())},
              {"externals", externals}};
}

CareEstimator care_estimator_from_json(const Json& j) {
  return rethrow_as_config([&] {
    const std::string w = "CARE estimator";
    check_keys(j, {"type", "gamma", "theta", "kernel_estimator", "externals"}, w);
    if (field(j, "type", w) != "care") config_error(w + ": type must be 'care'");
    std::vector<CenteredExternal> externals;
    const Json& ext = field(j, "externals", w);
    if (!ext.is_array()) config_error("externals must be an array");
    for (const auto& e : ext) externals.push_back(centered_external_from_json(e));
    try {
      return CareEstimator(kernel_estimator_from_json(field(j, "kernel_estimator", w)),
                           std::move(externals), numbers(field(j, "theta", w), "theta"),
                           number(field(j, "gamma", w), "gamma"));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Config) throw;
      config_error(w + ": " + e.what());
    }
  });
}

void write_cv_report_csv(const CvReport& report, const std::filesystem::path& path) {
  auto out = csv::open_output(path);
  const std::size_t m = report.has_care() ? report.thetas.num_externals : 0;
  out << "gamma";
  for (std::size_t k = 0; k < m; ++k) out << ",theta" << (k + 1);
  out << ",train_loss,valid_loss,converged\n";
  for (std::size_t g = 0; g < report.rows.size(); ++g) {
    const auto& row = report.rows[g];
    const std::size_t count = report.has_care() ? report.thetas.size() : 1;
    for (std::size_t t = 0; t < count; ++t) {
      out << csv::format_double(row.gamma);
      for (std::size_t k = 0; k < m; ++k) out << ',' << csv::format_double(report.thetas.points[t][k]);
      const double valid =
          report.has_care() ? report.care_valid_loss(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(t))
                            : row.valid_loss;
      out << ',' << csv::format_double(row.train_loss) << ',' << csv::format_double(valid) << ','
          << (row.converged ? 1 : 0) << '\n';
    }
  }
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

std::vector<CvReportRow> read_cv_report_csv(const std::filesystem::path& path) {
  const auto table = csv::read_table(path);
  const int g = table.column("gamma"), tl = table.column("train_loss"),
            vl = table.column("valid_loss"), cv = table.column("converged");
  if (g < 0 || tl < 0 || vl < 0 || cv < 0) {
    throw Error(ErrorKind::MissingColumn, path.string() + ": not a CV report");
  }
  std::vector<int> theta_cols;
  for (std::size_t k = 1;; ++k) {
    const int c = table.column("theta" + std::to_string(k));
    if (c < 0) break;
    theta_cols.push_back(c);
  }
  std::vector<CvReportRow> rows;
  for (const auto& r : table.rows) {
    CvReportRow row;
    row.gamma = csv::parse_double(r[static_cast<std::size_t>(g)], "gamma");
    for (int c : theta_cols) row.theta.push_back(csv::parse_double(r[static_cast<std::size_t>(c)], "theta"));
    row.train_loss = csv::parse_double_or_special(r[static_cast<std::size_t>(tl)], "train_loss");
    row.valid_loss = csv::parse_double_or_special(r[static_cast<std::size_t>(vl)], "valid_loss");
    const auto& flag = r[static_cast<std::size_t>(cv)];
    if (flag != "0" && flag != "1") throw Error(ErrorKind::ParseError, "converged must be 0 or 1");
    row.converged = flag == "1";
    rows.push_back(std::move(row));
  }
  return rows;
}

Json cv_summary_json(const CvReport& report) {
  Json grid = Json::array();
  for (const auto& r : report.rows) grid.push_back(r.gamma);
  Json j{{"gamma_grid", grid},
         {"selected_gamma_index", report.selected_gamma},
         {"gamma_hat", report.gamma_hat},
         {"valid_loss", report.rows.empty() ? 0.0 : report.rows[report.selected_gamma].valid_loss}};
  std::size_t converged = 0;
  for (const auto& r : report.rows) converged += r.converged ? 1 : 0;
  j["converged_fits"] = converged;
  if (report.has_care()) {
    const auto g = *report.care_gamma, t = *report.care_theta;
    j["care"] = Json{{"gamma_index", g},
                     {"gamma", report.rows[g].gamma},
                     {"theta", report.thetas.points[t]},
                     {"valid_loss", report.care_valid_loss(static_cast<Eigen::Index>(g),
                                                           static_cast<Eigen::Index>(t))}};
  } else {
    j["care"] = nullptr;
  }
  return j;
}

void write_survival_csv(const StepSurvival& curve, const std::filesystem::path& path) {
  auto out = csv::open_output(path);
  out << "t,survival\n";
  for (std::size_t k = 0; k < curve.times.size(); ++k) {
    out << csv::format_double(curve.times[k]) << ',' << csv::format_double(curve.values[k]) << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

StepSurvival read_survival_csv(const std::filesystem::path& path) {
  const auto table = csv::read_table(path);
  const int t = table.column("t"), s = table.column("survival");
  if (t < 0 || s < 0) throw Error(ErrorKind::MissingColumn, path.string() + ": needs t,survival");
  StepSurvival curve;
  for (const auto& r : table.rows) {
    curve.times.push_back(csv::parse_double(r[static_cast<std::size_t>(t)], "t"));
    curve.values.push_back(csv::parse_double(r[static_cast<std::size_t>(s)], "survival"));
  }
  return curve;
}

void write_truth_csv(const SurvivalDataset& data, const SimulationTruth& truth,
                     const std::filesystem::path& path) {
  auto out = csv::open_output(path);
  for (std::size_t c = 0; c < data.dimension(); ++c) out << 'x' << (c + 1) << ',';
  out << "f0\n";
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (double v : data.covariate(i)) out << csv::format_double(v) << ',';
    out << csv::format_double(truth.f0[i]) << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Config, path.string() + ": " + e.what());
  }
}

void write_json_file(const Json& j, const std::filesystem::path& path) {
  auto out = csv::open_output(path);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

}  // namespace care
