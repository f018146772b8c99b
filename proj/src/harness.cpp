#include "tgrf/harness.hpp"

#include "tgrf/errors.hpp"
#include "tgrf/io.hpp"
#include "tgrf/rng.hpp"

#include <Eigen/Core>
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <json.hpp>
#include <limits>
#include <sstream>

namespace tgrf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool wants(const ExperimentConfig& cfg, const char* name) {
  return std::find(cfg.estimators.begin(), cfg.estimators.end(), name) !=
         cfg.estimators.end();
}

OptimizeOptions base_options(const ExperimentConfig& cfg, std::uint64_t key) {
  OptimizeOptions o;
  o.multistarts = cfg.multistarts;
  o.grad_tol = cfg.grad_tol;
  o.max_iter = cfg.max_iter;
  o.seed = cfg.seed;
  o.replicate = key;
  return o;
}

EstimateRow row_from(const EstimationResult& r, const std::string& label,
                     int rep, Eigen::Index n, Vector theta) {
  EstimateRow row;
  row.replicate = rep;
  row.n = n;
  row.estimator = label;
  row.theta = std::move(theta);
  row.criterion = r.criterion_value;
  row.converged = r.converged;
  row.at_boundary = r.at_boundary;
  row.jitter_events = r.jitter_events;
  row.multistart_spread = r.multistart_spread;
  return row;
}

// Embeds psi into a full theta with the variance coordinate unset.
Vector psi_to_theta(const CovarianceModel& model, const Vector& psi) {
  Vector t = model.join(1.0, psi);
  t(*model.variance_index()) = kNaN;
  return t;
}

Vector sigma2_to_theta(const CovarianceModel& model, double sigma2) {
  Vector t = Vector::Constant(model.param_count(), kNaN);
  t(*model.variance_index()) = sigma2;
  return t;
}

bool in_filter(const ExperimentConfig& cfg, const Vector& psi) {
  if (psi.size() != cfg.filter_lower.size()) return true;
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    if (psi(i) < cfg.filter_lower(i) || psi(i) > cfg.filter_upper(i)) return false;
  }
  return true;
}

EstimateRow failed_row(const std::string& label, int rep, Eigen::Index n, int p) {
  EstimateRow row;
  row.replicate = rep;
  row.n = n;
  row.estimator = label;
  row.theta = Vector::Constant(p, kNaN);
  row.criterion = kNaN;
  row.converged = false;
  row.status = "failed";
  return row;
}

std::string csv_double(double x) { return std::isnan(x) ? "" : format_double(x); }

}  // namespace

// ---------------------------------------------------------------- setup

ExperimentSetup make_setup(const ExperimentConfig& cfg) {
  auto family = make_family(cfg.family);
  if (family->param_count() != cfg.theta0.size()) {
    throw Error(ErrorCode::ConfigError,
                "family '" + cfg.family + "' takes " +
                    std::to_string(family->param_count()) + " parameters");
  }
  CovarianceModel latent(family, ParamBox(cfg.box_lower, cfg.box_upper));
  latent.check_in_box(cfg.theta0);
  const double latent_var = family->value(cfg.theta0, Vector::Zero(cfg.dim));
  auto transform = parse_transform(cfg.transform, latent_var);
  if (!transform) {
    throw Error(ErrorCode::ConfigError, "unknown transform '" + cfg.transform + "'");
  }

  auto closed = transformed_covariance(latent, cfg.theta0, *transform);
  if (cfg.truth) {
    CovarianceModel model = closed ? closed->model : latent;
    return {latent, cfg.theta0, *transform, model, *cfg.truth, false};
  }
  if (!closed) {
    throw Error(ErrorCode::ConfigError,
                "transform '" + cfg.transform +
                    "' has no closed-form covariance; set `truth`");
  }
  return {latent, cfg.theta0, *transform, closed->model, closed->theta, true};
}

std::uint64_t replicate_key(int side, std::uint64_t replicate) {
  return (static_cast<std::uint64_t>(side) << 32) | (replicate & 0xFFFFFFFFULL);
}

std::uint64_t shared_key(int side) { return replicate_key(side, 0xFFFFFFFFULL); }

std::shared_ptr<const LocationSet> make_locations(const ExperimentConfig& cfg,
                                                  int side, int rep) {
  const std::uint64_t key = cfg.locations == LocationMode::Shared
                                ? shared_key(side)
                                : replicate_key(side, static_cast<std::uint64_t>(rep));
  Engine engine = make_engine(cfg.seed, key, Stream::Locations);
  return std::make_shared<const LocationSet>(
      perturbed_grid(side, cfg.dim, cfg.perturb, engine));
}

FieldSample simulate_replicate(const ExperimentConfig& cfg,
                               const ExperimentSetup& setup, int side, int rep,
                               std::shared_ptr<const LocationSet> ls) {
  const FieldSample z =
      simulate_latent(setup.latent_model, setup.theta0, std::move(ls), cfg.seed,
                      replicate_key(side, static_cast<std::uint64_t>(rep)));
  return apply_transform(z, setup.transform);
}

// ---------------------------------------------------------------- replicate

ReplicateOutcome run_replicate(const ExperimentConfig& cfg,
                               const ExperimentSetup& setup, int side, int rep) {
  ReplicateOutcome out;
  const int p = setup.model.param_count();
  const std::uint64_t key = replicate_key(side, static_cast<std::uint64_t>(rep));
  const Eigen::Index n_expected =
      static_cast<Eigen::Index>(std::pow(side, cfg.dim) + 0.5);

  auto fail = [&](const std::string& label, Eigen::Index n, const Error& e) {
    out.failures.push_back({n, rep, label, std::string(to_string(e.code())), e.what()});
    out.rows.push_back(failed_row(label, rep, n, p));
    out.failed = true;
  };

  FieldSample sample;
  try {
    sample = simulate_replicate(cfg, setup, side, rep, make_locations(cfg, side, rep));
  } catch (const Error& e) {
    out.failures.push_back({n_expected, rep, "SIMULATION",
                            std::string(to_string(e.code())), e.what()});
    out.failed = true;
    return out;
  }
  const LocationSet& ls = *sample.locations;
  const Vector& y = sample.values;
  const Eigen::Index n = ls.size();
  const CovarianceModel& model = setup.model;
  const auto vi = model.variance_index();

  std::optional<Vector> psi_ml, psi_cv;
  bool cv_filtered = false;

  const bool need_ml = wants(cfg, "ml");
  if (need_ml) {
    try {
      const auto r = optimize_ml(model, ls, y, base_options(cfg, key));
      out.rows.push_back(row_from(r, "ML", rep, n, r.theta_hat));
      if (vi) psi_ml = model.correlation_split(r.theta_hat).second;
    } catch (const Error& e) {
      fail("ML", n, e);
    }
  }

  if (wants(cfg, "ml_sigma2") || wants(cfg, "ml_range")) {
    if (!vi) {
      throw Error(ErrorCode::NoVarianceSplit,
                  "ml_sigma2/ml_range need a family with a variance parameter");
    }
  }
  if (wants(cfg, "ml_sigma2")) {
    try {
      OptimizeOptions o = base_options(cfg, key);
      o.fixed.assign(static_cast<std::size_t>(p), std::nullopt);
      for (int i = 0; i < p; ++i) {
        if (i != *vi) o.fixed[static_cast<std::size_t>(i)] = setup.truth(i);
      }
      const auto r = optimize_ml(model, ls, y, o);
      out.rows.push_back(row_from(r, "ML_SIGMA2", rep, n, sigma2_to_theta(model, r.theta_hat(*vi))));
    } catch (const Error& e) {
      fail("ML_SIGMA2", n, e);
    }
  }
  if (wants(cfg, "ml_range")) {
    try {
      OptimizeOptions o = base_options(cfg, key);
      o.fixed.assign(static_cast<std::size_t>(p), std::nullopt);
      o.fixed[static_cast<std::size_t>(*vi)] = setup.truth(*vi);
      const auto r = optimize_ml(model, ls, y, o);
      Vector theta = r.theta_hat;
      theta(*vi) = kNaN;
      out.rows.push_back(row_from(r, "ML_RANGE", rep, n, theta));
    } catch (const Error& e) {
      fail("ML_RANGE", n, e);
    }
  }

  if (wants(cfg, "cv")) {
    try {
      if (!vi) throw Error(ErrorCode::NoVarianceSplit, "cv needs a variance split");
      OptimizeOptions o = base_options(cfg, key);
      o.box = ParamBox(cfg.cv_lower, cfg.cv_upper);
      const auto r = optimize_cv(model, ls, y, o);
      EstimateRow row = row_from(r, "CV", rep, n, psi_to_theta(model, r.theta_hat));
      psi_cv = r.theta_hat;
      if (!in_filter(cfg, r.theta_hat)) {
        row.status = "filtered";
        cv_filtered = true;
      }
      out.rows.push_back(std::move(row));
    } catch (const Error& e) {
      fail("CV", n, e);
    }
  }

  const bool need_var = wants(cfg, "var") || wants(cfg, "var_tapered");
  if (need_var) {
    if (!vi) throw Error(ErrorCode::NoVarianceSplit, "var needs a variance split");
    const Vector psi0 = model.correlation_split(setup.truth).second;
    if (wants(cfg, "var")) {
      try {
        EstimationResult r;
        r.estimator = "VAR";
        const double s2 = variance_estimator(model, psi0, ls, y);
        r.criterion_value = s2;
        out.rows.push_back(row_from(r, "VAR", rep, n, sigma2_to_theta(model, s2)));
      } catch (const Error& e) {
        fail("VAR", n, e);
      }
    }
    if (wants(cfg, "var_tapered")) {
      for (double k : cfg.taper_radii) {
        const std::string label = tapered_label(k);
        try {
          EstimationResult r;
          const double s2 = variance_estimator_tapered(model, psi0, ls, y, k);
          r.criterion_value = s2;
          out.rows.push_back(row_from(r, label, rep, n, sigma2_to_theta(model, s2)));
        } catch (const Error& e) {
          fail(label, n, e);
        }
      }
    }
  }

  if (wants(cfg, "aggregate") && psi_ml && psi_cv) {
    for (double lambda : cfg.lambdas) {
      const Vector psi = aggregate(*psi_ml, *psi_cv, lambda);
      EstimateRow row;
      row.replicate = rep;
      row.n = n;
      row.estimator = aggregate_label(lambda);
      row.theta = psi_to_theta(model, psi);
      row.criterion = kNaN;
      if (cv_filtered) row.status = "filtered";
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

// ---------------------------------------------------------------- summaries

std::vector<SummaryRow> summarize(const ExperimentConfig& cfg,
                                  const ExperimentSetup& setup,
                                  const std::vector<EstimateRow>& rows) {
  (void)cfg;
  // Group by (n, estimator) in first-appearance order.
  std::vector<std::pair<Eigen::Index, std::string>> keys;
  std::map<std::pair<Eigen::Index, std::string>, std::vector<const EstimateRow*>> groups;
  for (const auto& r : rows) {
    const auto k = std::make_pair(r.n, r.estimator);
    if (!groups.count(k)) keys.push_back(k);
    groups[k].push_back(&r);
  }

  std::vector<SummaryRow> out;
  for (const auto& k : keys) {
    const auto& group = groups[k];
    const int p = setup.model.param_count();
    for (int c = 0; c < p; ++c) {
      std::vector<Vector> used;
      int filtered = 0;
      bool estimated = false;
      for (const EstimateRow* r : group) {
        if (r->status == "failed") continue;
        if (std::isnan(r->theta(c))) continue;
        estimated = true;
        if (r->status == "filtered") {
          ++filtered;
          continue;
        }
        used.push_back(Vector::Constant(1, r->theta(c)));
      }
      if (!estimated) continue;
      SummaryRow row;
      row.truth = setup.truth(c);
      if (used.empty()) {
        row.summary.estimator = k.second;
        row.summary.coordinate = c;
        row.summary.n = k.first;
        row.summary.replicates_filtered = filtered;
        row.summary.mean = row.summary.mse = row.summary.bias_sq = row.summary.variance = kNaN;
        row.w1 = kNaN;
        out.push_back(row);
        continue;
      }
      row.summary = error_summary(k.second, k.first, used,
                                  Vector::Constant(1, row.truth)).front();
      row.summary.coordinate = c;
      row.summary.replicates_filtered = filtered;
      row.w1 = kNaN;
      if (used.size() >= 2) {
        std::vector<double> xs;
        xs.reserve(used.size());
        for (const auto& v : used) xs.push_back(v(0));
        try {
          row.w1 = wasserstein1_to_std_normal(standardize(xs, row.truth));
        } catch (const Error&) {
          row.w1 = kNaN;
        }
      }
      out.push_back(row);
    }
  }
  return out;
}

// ---------------------------------------------------------------- CSV

std::string estimates_csv(const RunArtifacts& a) {
  std::ostringstream os;
  os << "replicate,n,estimator";
  for (const auto& name : a.param_names) os << ',' << name;
  os << ",criterion,converged,at_boundary,jitter_events,multistart_spread,status\n";
  for (const auto& r : a.estimates) {
    os << r.replicate << ',' << r.n << ',' << r.estimator;
    for (Eigen::Index i = 0; i < r.theta.size(); ++i) os << ',' << csv_double(r.theta(i));
    os << ',' << csv_double(r.criterion) << ',' << (r.converged ? 1 : 0) << ','
       << (r.at_boundary ? 1 : 0) << ',' << r.jitter_events << ','
       << csv_double(r.multistart_spread) << ',' << r.status << '\n';
  }
  return os.str();
}

std::string summary_csv(const RunArtifacts& a) {
  std::ostringstream os;
  os << "n,estimator,coordinate,truth,used,filtered,mean,mse,bias_sq,variance,w1\n";
  for (const auto& row : a.summary) {
    const ErrorSummary& s = row.summary;
    os << s.n << ',' << s.estimator << ','
       << a.param_names[static_cast<std::size_t>(s.coordinate)] << ','
       << format_double(row.truth) << ',' << s.replicates_used << ','
       << s.replicates_filtered << ',' << csv_double(s.mean) << ','
       << csv_double(s.mse) << ',' << csv_double(s.bias_sq) << ','
       << csv_double(s.variance) << ',' << csv_double(row.w1) << '\n';
  }
  return os.str();
}

std::string aggregate_csv(const RunArtifacts& a) {
  std::ostringstream os;
  os << "n,lambda,coordinate,used,filtered,mse,w1\n";
  const std::string prefix = "AGGREGATE(";
  for (const auto& row : a.summary) {
    const ErrorSummary& s = row.summary;
    if (s.estimator.rfind(prefix, 0) != 0) continue;
    const std::string lambda =
        s.estimator.substr(prefix.size(), s.estimator.size() - prefix.size() - 1);
    os << s.n << ',' << lambda << ','
       << a.param_names[static_cast<std::size_t>(s.coordinate)] << ','
       << s.replicates_used << ',' << s.replicates_filtered << ','
       << csv_double(s.mse) << ',' << csv_double(row.w1) << '\n';
  }
  return os.str();
}

std::string failures_csv(const RunArtifacts& a) {
  std::ostringstream os;
  os << "n,replicate,estimator,code,message\n";
  for (const auto& f : a.failures) {
    std::string msg = f.message;
    std::replace(msg.begin(), msg.end(), '"', '\'');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    os << f.n << ',' << f.replicate << ',' << f.estimator << ',' << f.code << ",\""
       << msg << "\"\n";
  }
  return os.str();
}

// ---------------------------------------------------------------- asymptotics

Population make_population(const ExperimentConfig& cfg,
                           const ExperimentSetup& setup, const std::string& kind) {
  Population pop;
  if (kind == "gaussian") {
    pop = Population::gaussian();
  } else if (kind == "square_transform") {
    pop = Population::square_transform();
    pop.latent_model = setup.latent_model;
    pop.latent_theta = setup.theta0;
  } else if (kind == "monte_carlo") {
    pop = Population::monte_carlo(cfg.asymptotics_reps, cfg.seed, setup.transform.kind);
    pop.latent_model = setup.latent_model;
    pop.latent_theta = setup.theta0;
  } else {
    throw Error(ErrorCode::ConfigError, "unknown population '" + kind + "'");
  }
  pop.cap = cfg.quadform_cap;
  return pop;
}

AsymptoticReport asymptotic_report(const ExperimentConfig& cfg,
                                   const ExperimentSetup& setup, int side,
                                   const std::string& population) {
  const auto ls = make_locations(cfg, side, 0);
  return joint_report(setup.model, setup.truth, *ls,
                      make_population(cfg, setup, population));
}

std::vector<std::pair<Eigen::Index, DecayFit>> decay_study(const ExperimentConfig& cfg) {
  const ExperimentSetup setup = make_setup(cfg);
  std::vector<std::pair<Eigen::Index, DecayFit>> out;
  for (int side : cfg.grid_sides) {
    const auto ls = make_locations(cfg, side, 0);
    const SymMatrix inv = inverse(cholesky(setup.model.cov_matrix(setup.truth, *ls)));
    out.emplace_back(ls->size(), decay_check(inv, *ls, cfg.decay_tau, cfg.decay_bins));
  }
  return out;
}

std::string decay_json(const std::vector<std::pair<Eigen::Index, DecayFit>>& fits) {
  nlohmann::ordered_json j;
  j["schema"] = kDecaySchema;
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& [n, fit] : fits) {
    arr.push_back(nlohmann::ordered_json::parse(to_json(fit, n)));
  }
  j["fits"] = std::move(arr);
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------- run

void apply_environment(ExperimentConfig& cfg) {
  if (const char* dir = std::getenv("TGRF_OUTPUT_DIR"); dir && *dir) {
    cfg.output_dir = dir;
  }
  if (const char* threads = std::getenv("TGRF_THREADS"); threads && *threads) {
    const int t = std::atoi(threads);
    if (t < 1) throw Error(ErrorCode::ConfigError, "TGRF_THREADS must be >= 1");
    omp_set_num_threads(t);
  }
}

RunArtifacts run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentSetup setup = make_setup(cfg);

  RunArtifacts art;
  art.param_names = setup.model.family().param_names();

  for (int side : cfg.grid_sides) {
    std::vector<ReplicateOutcome> slots(static_cast<std::size_t>(cfg.replicates));
    std::vector<std::exception_ptr> fatal(static_cast<std::size_t>(cfg.replicates));
#pragma omp parallel for schedule(dynamic)
    for (int rep = 0; rep < cfg.replicates; ++rep) {
      try {
        slots[static_cast<std::size_t>(rep)] = run_replicate(cfg, setup, side, rep);
      } catch (...) {
        fatal[static_cast<std::size_t>(rep)] = std::current_exception();
      }
    }
    for (int rep = 0; rep < cfg.replicates; ++rep) {
      if (fatal[static_cast<std::size_t>(rep)]) {
        std::rethrow_exception(fatal[static_cast<std::size_t>(rep)]);
      }
      auto& s = slots[static_cast<std::size_t>(rep)];
      art.estimates.insert(art.estimates.end(), s.rows.begin(), s.rows.end());
      art.failures.insert(art.failures.end(), s.failures.begin(), s.failures.end());
      art.replicates_total += 1;
      art.replicates_failed += s.failed ? 1 : 0;
    }

    if (cfg.asymptotics != "none") {
      const Eigen::Index n = static_cast<Eigen::Index>(std::pow(side, cfg.dim) + 0.5);
      try {
        art.reports.emplace(side, asymptotic_report(cfg, setup, side, cfg.asymptotics));
      } catch (const Error& e) {
        art.failures.push_back({n, -1, "ASYMPTOTICS", std::string(to_string(e.code())), e.what()});
      }
    }
  }
  art.summary = summarize(cfg, setup, art.estimates);

  nlohmann::ordered_json m;
  m["schema"] = kManifestSchema;
  m["name"] = cfg.name;
  m["version"] = kVersion;
  m["config_hash"] = config_hash(cfg);
  m["seed"] = cfg.seed;
  m["config"] = canonical_text(cfg);
  m["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                       std::to_string(EIGEN_MAJOR_VERSION) + "." +
                       std::to_string(EIGEN_MINOR_VERSION);
  m["replicates_total"] = art.replicates_total;
  m["replicates_failed"] = art.replicates_failed;
  m["truth"] = std::vector<double>(setup.truth.data(), setup.truth.data() + setup.truth.size());
  m["truth_source"] = setup.closed_form ? "closed_form" : "config";
  std::vector<std::string> files{"estimates.csv", "summary.csv", "aggregate_w1.csv",
                                 "failures.csv"};
  for (const auto& [side, report] : art.reports) {
    files.push_back("report_L" + std::to_string(side) + ".json");
  }
  m["artifacts"] = files;
  art.manifest_json = m.dump(2) + "\n";
  art.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (!cfg.output_dir.empty()) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create '" + cfg.output_dir + "'");
    const fs::path dir(cfg.output_dir);
    write_text_file((dir / "estimates.csv").string(), estimates_csv(art));
    write_text_file((dir / "summary.csv").string(), summary_csv(art));
    write_text_file((dir / "aggregate_w1.csv").string(), aggregate_csv(art));
    write_text_file((dir / "failures.csv").string(), failures_csv(art));
    for (const auto& [side, report] : art.reports) {
      write_text_file((dir / ("report_L" + std::to_string(side) + ".json")).string(),
                      to_json(report));
    }
    write_text_file((dir / "manifest.json").string(), art.manifest_json);
    write_text_file((dir / "timing.txt").string(),
                    "wall_seconds=" + format_double(art.wall_seconds) + "\n");
  }

  if (2 * art.replicates_failed > art.replicates_total) {
    throw Error(ErrorCode::TooManyFailures,
                std::to_string(art.replicates_failed) + " of " +
                    std::to_string(art.replicates_total) + " replicates failed");
  }
  return art;
}

}  // namespace tgrf
