#include "care/study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <thread>

#include "care/csv.hpp"
#include "care/error.hpp"
#include "care/evaluation.hpp"
#include "care/random.hpp"
#include "care/serialization.hpp"

namespace care {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kMonteCarloLabel = 7;

}  // namespace

std::uint64_t replication_seed(std::uint64_t master, std::size_t n, std::size_t rep) {
  return derive_seed(derive_seed(master, n), rep);
}

std::vector<std::string> study_estimators(const StudyConfig& config) {
  if (config.theta_resolution) return {"cv_kernel", "oracle_kernel", "care", "external"};
  return {"cv_kernel", "oracle_kernel"};
}

std::vector<StudyRow> run_replication(const StudyConfig& config, std::size_t n, std::size_t rep) {
  const std::uint64_t seed = replication_seed(config.master_seed, n, rep);
  const auto names = study_estimators(config);
  const std::size_t m = config.theta_resolution ? 1 : 0;
  std::vector<StudyRow> rows;
  for (const auto& name : names) {
    StudyRow r;
    r.n = n;
    r.rep = rep;
    r.seed = seed;
    r.estimator = name;
    r.l2_error = kNaN;
    r.gamma_hat = kNaN;
    r.theta.assign(m, kNaN);
    rows.push_back(std::move(r));
  }

  try {
    const SimulatedData sim = simulate_dataset(config.dgp, 2 * n, seed);
    std::vector<Eigen::Index> first(n), second(n);
    for (std::size_t i = 0; i < n; ++i) {
      first[i] = static_cast<Eigen::Index>(i);
      second[i] = static_cast<Eigen::Index>(n + i);
    }
    const SurvivalDataset train = sim.data.subset(first);
    const SurvivalDataset valid = sim.data.subset(second);

    const PointMatrix mc = sample_points(covariate_sampler(config.dgp), config.n_mc,
                                         derive_seed(seed, kMonteCarloLabel));
    Vector truth(mc.rows());
    for (Eigen::Index i = 0; i < mc.rows(); ++i) truth[i] = true_f0(config.dgp, row_of(mc, i));

    const RepresenterContext ctx(train, config.kernel);
    const auto fits = fit_gamma_path(ctx, config.gammas, config.optimizer, true);
    CvReport report = select_gamma(fits, ctx, valid);

    std::vector<Vector> mc_pred(fits.size());
    std::optional<std::size_t> oracle;
    double oracle_err = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < fits.size(); ++k) {
      if (!report.rows[k].converged) continue;
      mc_pred[k] = fits[k].predict(mc);
      const double err = l2_error_on(mc_pred[k], truth);
      if (err < oracle_err) {
        oracle_err = err;
        oracle = k;
      }
    }

    const std::size_t sel = report.selected_gamma;
    rows[0].l2_error = l2_error_on(mc_pred[sel], truth);
    rows[0].gamma_hat = report.gamma_hat;
    rows[0].ok = true;
    rows[1].l2_error = oracle_err;
    rows[1].gamma_hat = fits[*oracle].gamma();
    rows[1].ok = true;

    if (config.theta_resolution) {
      const CenteredExternal ext = center_external(builtin_external(config.dgp), train);
      select_care(fits, valid, {ext}, theta_grid(1, *config.theta_resolution), report);
      const std::size_t g = *report.care_gamma;
      const auto& theta = report.thetas.points[*report.care_theta];
      Vector ext_mc(mc.rows());
      for (Eigen::Index i = 0; i < mc.rows(); ++i) ext_mc[i] = ext.predict(row_of(mc, i));
      const Vector care_mc = combine_predictions(mc_pred[g], {ext_mc}, theta);
      rows[2].l2_error = l2_error_on(care_mc, truth);
      rows[2].gamma_hat = fits[g].gamma();
      rows[2].theta = theta;
      rows[2].ok = true;
      rows[3].l2_error = l2_error_on(ext_mc, truth);
      rows[3].ok = true;
    }
  } catch (const std::exception& e) {
    for (auto& r : rows) {
      r.ok = false;
      r.message = e.what();
    }
  }
  return rows;
}

StudyResult run_study(const StudyConfig& config, std::size_t workers) {
  if (config.n_values.empty()) throw Error(ErrorKind::Config, "study needs at least one n value");
  if (config.replications < 1) throw Error(ErrorKind::Config, "replications must be >= 1");
  for (std::size_t n : config.n_values) {
    if (n < 2) throw Error(ErrorKind::Config, "study n values must be >= 2");
  }
  if (config.n_mc < 1) throw Error(ErrorKind::Config, "n_mc must be >= 1");

  struct Job {
    std::size_t n, rep;
  };
  std::vector<Job> jobs;
  for (std::size_t n : config.n_values) {
    for (std::size_t rep = 0; rep < config.replications; ++rep) jobs.push_back({n, rep});
  }
  std::vector<std::vector<StudyRow>> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      results[j] = run_replication(config, jobs[j].n, jobs[j].rep);
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  StudyResult out;
  for (auto& r : results) {
    ++out.replications_run;
    const bool ok = std::all_of(r.begin(), r.end(), [](const StudyRow& row) { return row.ok; });
    if (ok) ++out.replications_ok;
    for (auto& row : r) out.rows.push_back(std::move(row));
  }
  out.summary = summarize(out.rows);
  return out;
}

std::vector<StudySummaryRow> summarize(const std::vector<StudyRow>& rows) {
  std::vector<StudySummaryRow> out;
  std::map<std::pair<std::size_t, std::string>, std::vector<double>> groups;
  std::vector<std::pair<std::size_t, std::string>> order;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.n, r.estimator);
    if (!groups.count(key)) order.push_back(key);
    auto& g = groups[key];
    if (r.ok) g.push_back(r.l2_error);
  }
  for (const auto& key : order) {
    const auto& v = groups[key];
    StudySummaryRow s;
    s.n = key.first;
    s.estimator = key.second;
    s.count = v.size();
    if (v.empty()) {
      s.mean = s.sd = s.lower = s.upper = kNaN;
    } else {
      double sum = 0.0;
      for (double x : v) sum += x;
      s.mean = sum / static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - s.mean) * (x - s.mean);
      s.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
      const double half = 2.0 * s.sd / std::sqrt(static_cast<double>(v.size()));
      s.lower = s.mean - half;
      s.upper = s.mean + half;
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_study_csv(const StudyResult& result, std::size_t num_externals,
                     const std::filesystem::path& path) {
  auto out = csv::open_output(path);
  out << "n,rep,seed,estimator,status,l2_error,gamma_hat";
  for (std::size_t k = 0; k < num_externals; ++k) out << ",theta" << (k + 1);
  out << '\n';
  for (const auto& r : result.rows) {
    out << r.n << ',' << r.rep << ',' << r.seed << ',' << r.estimator << ','
        << (r.ok ? "ok" : "failed") << ',' << csv::format_double(r.l2_error) << ','
        << csv::format_double(r.gamma_hat);
    for (std::size_t k = 0; k < num_externals; ++k) {
      out << ',' << csv::format_double(k < r.theta.size() ? r.theta[k] : kNaN);
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

void write_study_summary_csv(const StudyResult& result, const std::filesystem::path& path) {
  auto out = csv::open_output(path);
  out << "n,estimator,count,mean,sd,lower,upper\n";
  for (const auto& s : result.summary) {
    out << s.n << ',' << s.estimator << ',' << s.count << ',' << csv::format_double(s.mean) << ','
        << csv::format_double(s.sd) << ',' << csv::format_double(s.lower) << ','
        << csv::format_double(s.upper) << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

std::vector<StudyRow> read_study_csv(const std::filesystem::path& path) {
  const auto table = csv::read_table(path);
  const std::vector<std::string> required{"n", "rep", "seed", "estimator", "status", "l2_error", "gamma_hat"};
  std::vector<std::size_t> col;
  for (const auto& name : required) {
    const int c = table.column(name);
    if (c < 0) throw Error(ErrorKind::MissingColumn, path.string() + ": missing column " + name);
    col.push_back(static_cast<std::size_t>(c));
  }
  std::vector<std::size_t> theta_cols;
  for (std::size_t k = 1;; ++k) {
    const int c = table.column("theta" + std::to_string(k));
    if (c < 0) break;
    theta_cols.push_back(static_cast<std::size_t>(c));
  }
  auto to_uint = [&](const std::string& s, const char* what) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw Error(ErrorKind::ParseError, path.string() + ": bad " + what + " '" + s + "'");
    }
    return v;
  };
  std::vector<StudyRow> rows;
  for (const auto& r : table.rows) {
    StudyRow row;
    row.n = to_uint(r[col[0]], "n");
    row.rep = to_uint(r[col[1]], "rep");
    row.seed = to_uint(r[col[2]], "seed");
    row.estimator = r[col[3]];
    if (r[col[4]] != "ok" && r[col[4]] != "failed") {
      throw Error(ErrorKind::ParseError, path.string() + ": status must be ok or failed");
    }
    row.ok = r[col[4]] == "ok";
    row.l2_error = csv::parse_double_or_special(r[col[5]], "l2_error");
    row.gamma_hat = csv::parse_double_or_special(r[col[6]], "gamma_hat");
    for (std::size_t c : theta_cols) row.theta.push_back(csv::parse_double_or_special(r[c], "theta"));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace care
