#include "tgrf/config.hpp"
#include "tgrf/errors.hpp"
#include "tgrf/harness.hpp"
#include "tgrf/io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kNumerical = 2;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "experiment config file");
  sub->add_option("--seed", c.seed, "override the master seed");
}

tgrf::ExperimentConfig load(const Common& c) {
  tgrf::ExperimentConfig cfg;
  if (!c.config_path.empty()) cfg = tgrf::load_config(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  tgrf::apply_environment(cfg);
  tgrf::validate(cfg);
  return cfg;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    tgrf::write_text_file(path, text);
  }
}

int side_or_first(const tgrf::ExperimentConfig& cfg, int side) {
  return side > 0 ? side : cfg.grid_sides.front();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Estimation experiments for transformed Gaussian random fields"};
  app.require_subcommand(1);

  Common sim_c, est_c, mc_c, asy_c, dec_c, ver_c;

  auto* version = app.add_subcommand("version", "print the version");
  add_common(version, ver_c);

  int sim_side = 0;
  int sim_rep = 0;
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "simulate one transformed field sample as CSV");
  add_common(simulate, sim_c);
  simulate->add_option("--side", sim_side, "grid side L (default: first of grid_sides)");
  simulate->add_option("--replicate", sim_rep, "replicate index")->check(CLI::NonNegativeNumber);
  simulate->add_option("--output", sim_out, "output file (default stdout)");

  std::string est_in, est_name = "ml", est_out;
  double est_taper = 1.0;
  auto* estimate = app.add_subcommand("estimate", "estimate parameters from a sample CSV");
  add_common(estimate, est_c);
  estimate->add_option("--input", est_in, "sample CSV written by simulate")->required();
  estimate->add_option("--estimator", est_name, "ml, ml_sigma2, ml_range, cv, var or var_tapered")
      ->check(CLI::IsMember({"ml", "ml_sigma2", "ml_range", "cv", "var", "var_tapered"}));
  estimate->add_option("--taper", est_taper, "taper radius for var_tapered");
  estimate->add_option("--output", est_out, "output file (default stdout)");

  std::string mc_dir;
  auto* mc = app.add_subcommand("mc-run", "run a Monte Carlo experiment");
  add_common(mc, mc_c);
  mc->add_option("--output-dir", mc_dir, "artifact directory (overrides output_dir)");

  std::string asy_pop, asy_out;
  int asy_side = 0;
  auto* asy = app.add_subcommand("asymptotics", "asymptotic covariance report as JSON");
  add_common(asy, asy_c);
  asy->add_option("--population", asy_pop, "gaussian, square_transform or monte_carlo")
      ->check(CLI::IsMember({"gaussian", "square_transform", "monte_carlo"}));
  asy->add_option("--side", asy_side, "grid side L (default: first of grid_sides)");
  asy->add_option("--output", asy_out, "output file (default stdout)");

  std::string dec_out;
  auto* decay = app.add_subcommand("decay-check", "decay of the inverse covariance as JSON");
  add_common(decay, dec_c);
  decay->add_option("--output", dec_out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code != 0) {
      std::cerr << "\n" << tgrf::config_schema();
      return kUsage;
    }
    return kOk;
  }

  try {
    if (*version) {
      load(ver_c);
      std::cout << "tgrf " << tgrf::kVersion << "\n";
    } else if (*simulate) {
      const auto cfg = load(sim_c);
      const auto setup = tgrf::make_setup(cfg);
      const int side = side_or_first(cfg, sim_side);
      const auto sample = tgrf::simulate_replicate(cfg, setup, side, sim_rep,
                                                   tgrf::make_locations(cfg, side, sim_rep));
      std::ostringstream os;
      tgrf::write_csv(os, sample);
      emit(sim_out, os.str());
    } else if (*estimate) {
      const auto cfg = load(est_c);
      const auto setup = tgrf::make_setup(cfg);
      std::ifstream in(est_in);
      if (!in) throw tgrf::Error(tgrf::ErrorCode::IoError, "cannot open '" + est_in + "'");
      const auto sample = tgrf::read_sample_csv(in);
      const auto& ls = *sample.locations;
      const auto& model = setup.model;
      tgrf::OptimizeOptions o;
      o.multistarts = cfg.multistarts;
      o.grad_tol = cfg.grad_tol;
      o.max_iter = cfg.max_iter;
      o.seed = cfg.seed;
      tgrf::EstimationResult r;
      std::vector<std::string> names = model.family().param_names();
      const auto vi = model.variance_index();
      if (est_name == "ml") {
        r = tgrf::optimize_ml(model, ls, sample.values, o);
      } else if (est_name == "ml_sigma2" || est_name == "ml_range") {
        if (!vi) throw tgrf::Error(tgrf::ErrorCode::NoVarianceSplit, est_name);
        o.fixed.assign(static_cast<std::size_t>(model.param_count()), std::nullopt);
        for (int i = 0; i < model.param_count(); ++i) {
          const bool known = est_name == "ml_sigma2" ? i != *vi : i == *vi;
          if (known) o.fixed[static_cast<std::size_t>(i)] = setup.truth(i);
        }
        r = tgrf::optimize_ml(model, ls, sample.values, o);
      } else if (est_name == "cv") {
        o.box = tgrf::ParamBox(cfg.cv_lower, cfg.cv_upper);
        r = tgrf::optimize_cv(model, ls, sample.values, o);
        names.erase(names.begin() + *vi);
      } else {
        if (!vi) throw tgrf::Error(tgrf::ErrorCode::NoVarianceSplit, est_name);
        const tgrf::Vector psi0 = model.correlation_split(setup.truth).second;
        const double s2 =
            est_name == "var"
                ? tgrf::variance_estimator(model, psi0, ls, sample.values)
                : tgrf::variance_estimator_tapered(model, psi0, ls, sample.values, est_taper);
        r.estimator = est_name == "var" ? "VAR" : tgrf::tapered_label(est_taper);
        r.theta_hat = tgrf::Vector::Constant(1, s2);
        r.criterion_value = s2;
        names = {names[static_cast<std::size_t>(*vi)]};
      }
      emit(est_out, tgrf::to_json(r, names));
    } else if (*mc) {
      auto cfg = load(mc_c);
      if (!mc_dir.empty()) cfg.output_dir = mc_dir;
      const auto art = tgrf::run_experiment(cfg);
      std::cout << "wrote " << cfg.output_dir << " (" << art.estimates.size()
                << " estimate rows, " << art.replicates_failed << " failed replicates)\n";
    } else if (*asy) {
      const auto cfg = load(asy_c);
      const auto setup = tgrf::make_setup(cfg);
      std::string pop = asy_pop;
      if (pop.empty()) pop = cfg.asymptotics == "none" ? "gaussian" : cfg.asymptotics;
      const auto report =
          tgrf::asymptotic_report(cfg, setup, side_or_first(cfg, asy_side), pop);
      for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
      emit(asy_out, tgrf::to_json(report));
    } else if (*decay) {
      const auto cfg = load(dec_c);
      emit(dec_out, tgrf::decay_json(tgrf::decay_study(cfg)));
    }
  } catch (const tgrf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (tgrf::is_numerical(e.code())) return kNumerical;
    if (e.code() == tgrf::ErrorCode::ConfigError) std::cerr << "\n" << tgrf::config_schema();
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kOk;
}
