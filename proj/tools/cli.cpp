#include "cli.hpp"

#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "care/csv.hpp"
#include "care/error.hpp"
#include "care/evaluation.hpp"
#include "care/model_selection.hpp"
#include "care/serialization.hpp"
#include "care/simulation.hpp"
#include "care/study.hpp"

namespace care::cli {

namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "care";
  bool quiet = false;
  std::size_t workers = 1;
};

struct Io {
  std::ostream& out;
  std::ostream& err;
  bool quiet;
  Json outputs = Json::array();

  void wrote(const fs::path& p) {
    outputs.push_back(p.string());
    if (!quiet) err << "wrote " << p.string() << '\n';
  }
  void warn(const std::string& msg) { err << "warning: " << msg << '\n'; }
  void finish(Json extra = Json::object()) {
    extra["outputs"] = outputs;
    out << extra.dump() << '\n';
  }
};

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::Config, msg); }

const Json& require(const Json& j, const std::string& key) {
  if (!j.contains(key)) config_error("config: missing field '" + key + "'");
  return j[key];
}

std::string string_field(const Json& j, const std::string& key) {
  const Json& v = require(j, key);
  if (!v.is_string()) config_error("config: '" + key + "' must be a string");
  return v.get<std::string>();
}

long long int_field(const Json& j, const std::string& key) {
  const Json& v = require(j, key);
  if (!v.is_number_integer()) config_error("config: '" + key + "' must be an integer");
  return v.get<long long>();
}

double number_field(const Json& j, const std::string& key) {
  const Json& v = require(j, key);
  if (!v.is_number()) config_error("config: '" + key + "' must be a number");
  return v.get<double>();
}

std::uint64_t seed_field(const Json& j, const Flags& flags, std::uint64_t fallback = 1) {
  if (flags.seed) return *flags.seed;
  if (!j.contains("seed")) return fallback;
  const long long s = int_field(j, "seed");
  if (s < 0) config_error("config: 'seed' must be non-negative");
  return static_cast<std::uint64_t>(s);
}

OptimOptions optimizer_field(const Json& j) {
  return j.contains("optimizer") ? optim_options_from_json(j["optimizer"]) : OptimOptions{};
}

fs::path output(const Flags& flags, const std::string& suffix) {
  return fs::path(flags.out + suffix);
}

void print_warnings(Io& io, const FitDiagnostics& d, double gamma) {
  for (const auto& w : d.warnings) {
    io.warn("gamma " + csv::format_double(gamma) + ": " + w);
  }
}

/// Training and validation samples from either {"train","valid"} paths or a
/// single {"data"} path split with the seed.
std::pair<SurvivalDataset, SurvivalDataset> load_samples(const Json& j, const Flags& flags) {
  if (j.contains("data")) {
    if (j.contains("train") || j.contains("valid")) {
      config_error("config: give either 'data' or 'train'/'valid', not both");
    }
    return split_train_validation(load_dataset(string_field(j, "data")), seed_field(j, flags));
  }
  return {load_dataset(string_field(j, "train")), load_dataset(string_field(j, "valid"))};
}

Vector read_prediction_column(const fs::path& path) {
  const auto table = csv::read_table(path);
  const int c = table.column("prediction");
  if (c < 0) throw Error(ErrorKind::MissingColumn, path.string() + ": missing column 'prediction'");
  Vector v(static_cast<Eigen::Index>(table.rows.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] =
        csv::parse_double(table.rows[i][static_cast<std::size_t>(c)], path.string());
  }
  return v;
}

std::vector<ExternalPredictor> externals_field(const Json& j) {
  std::vector<ExternalPredictor> out;
  if (!j.contains("externals")) return out;
  if (!j["externals"].is_array()) config_error("config: 'externals' must be an array");
  for (const auto& e : j["externals"]) {
    if (e.is_string()) {
      const std::string name = e.get<std::string>();
      if (name.rfind("builtin:", 0) != 0) {
        config_error("config: external '" + name + "' must be 'builtin:<dgp>' or a table");
      }
      out.push_back(builtin_external(DgpConfig::parse(name.substr(8))));
    } else {
      check_keys(e, {"name", "train", "valid"}, "external table");
      out.push_back(ExternalPredictor::table(string_field(e, "name"),
                                             read_prediction_column(string_field(e, "train")),
                                             read_prediction_column(string_field(e, "valid"))));
    }
  }
  return out;
}

void write_predictions(const fs::path& path, const std::vector<std::pair<std::string, Vector>>& sets) {
  auto out = csv::open_output(path);
  out << "set,row,prediction\n";
  for (const auto& [name, values] : sets) {
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      out << name << ',' << i << ',' << csv::format_double(values[i]) << '\n';
    }
  }
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

// ---- commands ----

int cmd_simulate(const Json& j, const Flags& flags, Io& io) {
  check_keys(j, {"dgp", "n", "seed"}, "simulate config");
  const DgpConfig dgp = DgpConfig::parse(string_field(j, "dgp"));
  const long long n = int_field(j, "n");
  if (n < 1) config_error("config: 'n' must be >= 1 (got " + std::to_string(n) + ")");
  const SimulatedData sim = simulate_dataset(dgp, static_cast<std::size_t>(n), seed_field(j, flags));
  const fs::path data = output(flags, "_data.csv"), truth = output(flags, "_truth.csv");
  write_csv(sim.data, data);
  io.wrote(data);
  write_truth_csv(sim.data, sim.truth, truth);
  io.wrote(truth);
  io.finish({{"n", n}, {"events", sim.data.event_count()}});
  return kOk;
}

int cmd_fit(const Json& j, const Flags& flags, Io& io) {
  check_keys(j, {"train", "kernel", "gamma", "method", "optimizer"}, "fit config");
  const SurvivalDataset train = load_dataset(string_field(j, "train"));
  const KernelConfig kernel = kernel_from_json(require(j, "kernel"));
  const double gamma = number_field(j, "gamma");
  if (!(gamma > 0.0)) config_error("config: 'gamma' must be positive");
  const std::string method = j.contains("method") ? string_field(j, "method") : "representer";
  const OptimOptions opts = optimizer_field(j);
  Json est_json;
  Vector fitted;
  FitDiagnostics diag;
  if (method == "representer") {
    const RepresenterContext ctx(train, kernel);
    const KernelEstimator est = fit_kernel_estimator(ctx, gamma, opts);
    est_json = to_json(est);
    fitted = est.predict(train.covariates());
    diag = est.diagnostics();
  } else if (method == "feature_map") {
    const FeatureMapEstimator est = fit_feature_map_estimator(train, kernel, gamma, opts);
    est_json = to_json(est);
    fitted = est.predict(train.covariates());
    diag = est.diagnostics();
  } else {
    config_error("config: 'method' must be 'representer' or 'feature_map'");
  }
  print_warnings(io, diag, gamma);
  const fs::path est_path = output(flags, "_estimator.json"), pred = output(flags, "_predictions.csv");
  write_json_file(est_json, est_path);
  io.wrote(est_path);
  write_predictions(pred, {{"train", fitted}});
  io.wrote(pred);
  io.finish({{"converged", diag.converged}, {"objective", diag.objective}});
  return kOk;
}

int cmd_cv(const Json& j, const Flags& flags, Io& io) {
  check_keys(j, {"train", "valid", "data", "seed", "kernel", "gamma_grid", "optimizer", "warm_start"},
             "cv config");
  const auto [train, valid] = load_samples(j, flags);
  const KernelConfig kernel = kernel_from_json(require(j, "kernel"));
  const GammaGrid grid = gamma_grid_from_json(require(j, "gamma_grid"));
  bool warm = true;
  if (j.contains("warm_start")) {
    if (!j["warm_start"].is_boolean()) config_error("config: 'warm_start' must be true or false");
    warm = j["warm_start"].get<bool>();
  }
  const CvResult cv = cross_validate_gamma(train, valid, kernel, grid, optimizer_field(j), warm);
  for (const auto& f : cv.fits) print_warnings(io, f.diagnostics(), f.gamma());

  const fs::path report = output(flags, "_cv_report.csv"), sel = output(flags, "_selection.json"),
                 est = output(flags, "_estimator.json"), pred = output(flags, "_predictions.csv");
  write_cv_report_csv(cv.report, report);
  io.wrote(report);
  const Json summary = cv_summary_json(cv.report);
  write_json_file(summary, sel);
  io.wrote(sel);
  write_json_file(to_json(cv.selected()), est);
  io.wrote(est);
  write_predictions(pred, {{"train", cv.selected().predict(train.covariates())},
                           {"valid", cv.selected().predict(valid.covariates())}});
  io.wrote(pred);
  io.finish({{"gamma_hat", cv.gamma_hat}});
  return kOk;
}

int cmd_care(const Json& j, const Flags& flags, Io& io) {
  check_keys(j, {"train", "valid", "data", "seed", "kernel", "gamma_grid", "optimizer",
                 "theta_resolution", "externals"},
             "care config");
  const auto [train, valid] = load_samples(j, flags);
  const KernelConfig kernel = kernel_from_json(require(j, "kernel"));
  const GammaGrid grid = gamma_grid_from_json(require(j, "gamma_grid"));
  const auto externals = externals_field(j);
  ThetaGrid thetas = empty_theta_grid();
  if (!externals.empty()) {
    const long long res = j.contains("theta_resolution") ? int_field(j, "theta_resolution") : 20;
    if (res < 1) config_error("config: 'theta_resolution' must be >= 1");
    thetas = theta_grid(externals.size(), static_cast<int>(res));
  }
  const CareResult result = fit_care(train, valid, kernel, grid, externals, thetas, optimizer_field(j));
  for (const auto& f : result.fits) print_warnings(io, f.diagnostics(), f.gamma());
  for (const auto& e : result.estimator.externals()) {
    for (const auto& w : e.warnings()) io.warn(w);
  }

  const fs::path report = output(flags, "_cv_report.csv"), sel = output(flags, "_selection.json"),
                 est = output(flags, "_care_estimator.json"), pred = output(flags, "_predictions.csv");
  write_cv_report_csv(result.report, report);
  io.wrote(report);
  const Json summary = cv_summary_json(result.report);
  write_json_file(summary, sel);
  io.wrote(sel);
  write_json_file(to_json(result.estimator), est);
  io.wrote(est);
  write_predictions(pred, {{"train", result.estimator.predict(train, SampleRole::Train)},
                           {"valid", result.estimator.predict(valid, SampleRole::Validation)}});
  io.wrote(pred);
  io.finish({{"gamma", result.estimator.gamma()}, {"theta", result.estimator.theta()}});
  return kOk;
}

Vector predict_from_json(const Json& est, const SurvivalDataset& data, SampleRole role) {
  if (!est.is_object() || !est.contains("type")) config_error("estimator JSON has no 'type'");
  const std::string type = est["type"].get<std::string>();
  if (type == "kernel") return kernel_estimator_from_json(est).predict(data.covariates());
  if (type == "feature_map") return feature_map_estimator_from_json(est).predict(data.covariates());
  if (type == "care") return care_estimator_from_json(est).predict(data, role);
  config_error("unknown estimator type '" + type + "'");
}

int cmd_evaluate(const Json& j, const Flags& flags, Io& io) {
  check_keys(j, {"data", "estimator", "role", "dgp", "n_mc", "seed"}, "evaluate config");
  const SurvivalDataset data = load_dataset(string_field(j, "data"));
  Json metrics = Json::object();
  metrics["n"] = data.size();
  metrics["events"] = data.event_count();

  const fs::path surv = output(flags, "_survival.csv");
  write_survival_csv(breslow_survival(data), surv);
  io.wrote(surv);

  if (j.contains("estimator")) {
    const Json est = read_json_file(string_field(j, "estimator"));
    SampleRole role = SampleRole::Validation;
    if (j.contains("role")) {
      const std::string r = string_field(j, "role");
      if (r == "train") role = SampleRole::Train;
      else if (r != "validation") config_error("config: 'role' must be 'train' or 'validation'");
    }
    const Vector pred = predict_from_json(est, data, role);
    metrics["concordance"] = concordance_index(pred, data);
    if (j.contains("dgp")) {
      const DgpConfig dgp = DgpConfig::parse(string_field(j, "dgp"));
      long long n_mc = j.contains("n_mc") ? int_field(j, "n_mc") : 500;
      if (n_mc < 1) config_error("config: 'n_mc' must be >= 1");
      const PointMatrix mc = sample_points(covariate_sampler(dgp), static_cast<std::size_t>(n_mc),
                                           seed_field(j, flags));
      Vector truth(mc.rows());
      for (Eigen::Index i = 0; i < mc.rows(); ++i) truth[i] = true_f0(dgp, row_of(mc, i));
      if (est["type"] == "care") {
        const CareEstimator care = care_estimator_from_json(est);
        Vector p(mc.rows());
        for (Eigen::Index i = 0; i < mc.rows(); ++i) p[i] = care.predict(row_of(mc, i));
        metrics["l2_error"] = l2_error_on(p, truth);
      } else {
        const SurvivalDataset dummy(mc, Vector::Ones(mc.rows()),
                                    std::vector<std::uint8_t>(static_cast<std::size_t>(mc.rows()), 1));
        metrics["l2_error"] = l2_error_on(predict_from_json(est, dummy, role), truth);
      }
    }
  }
  const fs::path mpath = output(flags, "_metrics.json");
  write_json_file(metrics, mpath);
  io.wrote(mpath);
  io.finish(metrics);
  return kOk;
}

int cmd_study(const Json& j, const Flags& flags, Io& io) {
  check_keys(j, {"dgp", "kernel", "gamma_grid", "theta_resolution", "n_values", "replications",
                 "seed", "n_mc", "optimizer"},
             "study config");
  StudyConfig cfg;
  if (j.contains("dgp")) cfg.dgp = DgpConfig::parse(string_field(j, "dgp"));
  if (j.contains("kernel")) cfg.kernel = kernel_from_json(j["kernel"]);
  if (j.contains("gamma_grid")) cfg.gammas = gamma_grid_from_json(j["gamma_grid"]);
  if (j.contains("theta_resolution") && !j["theta_resolution"].is_null()) {
    const long long res = int_field(j, "theta_resolution");
    if (res < 1) config_error("config: 'theta_resolution' must be >= 1");
    cfg.theta_resolution = static_cast<int>(res);
  }
  if (j.contains("n_values")) {
    if (!j["n_values"].is_array() || j["n_values"].empty()) {
      config_error("config: 'n_values' must be a nonempty array");
    }
    cfg.n_values.clear();
    for (const auto& v : j["n_values"]) {
      if (!v.is_number_integer() || v.get<long long>() < 2) {
        config_error("config: 'n_values' entries must be integers >= 2");
      }
      cfg.n_values.push_back(v.get<std::size_t>());
    }
  }
  if (j.contains("replications")) {
    const long long r = int_field(j, "replications");
    if (r < 1) config_error("config: 'replications' must be >= 1");
    cfg.replications = static_cast<std::size_t>(r);
  }
  if (j.contains("n_mc")) {
    const long long m = int_field(j, "n_mc");
    if (m < 1) config_error("config: 'n_mc' must be >= 1");
    cfg.n_mc = static_cast<std::size_t>(m);
  }
  cfg.master_seed = seed_field(j, flags);
  cfg.optimizer = optimizer_field(j);
  cfg.optimizer.record_trace = false;

  const StudyResult result = run_study(cfg, flags.workers);
  for (const auto& r : result.rows) {
    if (!r.ok && r.estimator == "cv_kernel") {
      io.warn("n=" + std::to_string(r.n) + " rep=" + std::to_string(r.rep) + " failed: " + r.message);
    }
  }
  const fs::path rows = output(flags, "_study.csv"), summary = output(flags, "_summary.csv");
  write_study_csv(result, cfg.theta_resolution ? 1 : 0, rows);
  io.wrote(rows);
  write_study_summary_csv(result, summary);
  io.wrote(summary);
  io.finish({{"replications", result.replications_run},
             {"succeeded", result.replications_ok}});
  if (result.success_rate() < 0.9) {
    io.err << "error: only " << result.replications_ok << " of " << result.replications_run
           << " replications succeeded\n";
    return kStudyFailed;
  }
  return kOk;
}

int status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return kIoError;
    case ErrorKind::AllFitsFailed: return kAllFitsFailed;
    default: return kConfigError;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kernel relative-risk estimation with cross-validation and aggregation"};
  app.require_subcommand(1);
  Flags flags;
  using Command = int (*)(const Json&, const Flags&, Io&);
  const std::vector<std::pair<std::string, std::pair<std::string, Command>>> commands{
      {"simulate", {"Simulate a censored dataset and its truth table", cmd_simulate}},
      {"fit", {"Fit the kernel estimator at one gamma", cmd_fit}},
      {"cv", {"Cross-validate gamma over a grid", cmd_cv}},
      {"care", {"Cross-validate and aggregate with external predictors", cmd_care}},
      {"evaluate", {"Breslow curve, concordance and L2 error", cmd_evaluate}},
      {"study", {"Run the replication study", cmd_study}},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, info] : commands) {
    CLI::App* sub = app.add_subcommand(name, info.first);
    sub->add_option("--config", flags.config, "JSON config file")->required();
    sub->add_option("--seed", flags.seed, "Seed, overriding the config");
    sub->add_option("--out", flags.out, "Output path prefix");
    sub->add_flag("--quiet", flags.quiet, "Only machine output on stdout");
    sub->add_option("--workers", flags.workers, "Worker threads for study")
        ->check(CLI::PositiveNumber);
    subs.push_back(sub);
  }

  std::vector<const char*> argv{"care"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  Io io{out, err, flags.quiet};
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    try {
      const Json config = read_json_file(flags.config);
      return commands[i].second.second(config, flags, io);
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return status_for(e.kind());
    } catch (const Json::exception& e) {
      err << "error: malformed config: " << e.what() << '\n';
      return kConfigError;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kUnexpected;
    }
  }
  return kConfigError;
}

}  // namespace care::cli
