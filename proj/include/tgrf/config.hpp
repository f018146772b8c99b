#ifndef TGRF_CONFIG_HPP
#define TGRF_CONFIG_HPP

// Experiment configuration: a flat `key = value` text file. Lists are
// comma-separated, `#` starts a comment, unknown keys are errors.

#include "tgrf/linalg.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tgrf {

enum class LocationMode { PerReplicate, Shared };

struct ExperimentConfig {
  std::string name = "experiment";
  std::vector<int> grid_sides{10, 20, 30};
  int dim = 2;
  double perturb = 0.4;
  LocationMode locations = LocationMode::PerReplicate;

  std::string family = "exponential";
  Vector theta0 = (Vector(2) << 1.5, 2.0).finished();
  // Shared by the latent model and the estimation model.
  Vector box_lower = (Vector(2) << 0.01, 2.0 / 15.0).finished();
  Vector box_upper = (Vector(2) << 100.0, 12.0).finished();
  std::string transform = "identity";
  // Parameters of Y; derived from theta0 and the transform when absent.
  std::optional<Vector> truth;

  // ml, ml_sigma2, ml_range, cv, var, var_tapered, aggregate
  std::vector<std::string> estimators{"ml", "var"};
  std::vector<double> taper_radii{1, 2, 4, 8};
  std::vector<double> lambdas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  // Search box of the correlation parameters for cv.
  Vector cv_lower = (Vector(1) << 2.0 / 15.0).finished();
  Vector cv_upper = (Vector(1) << 12.0).finished();
  // cv estimates outside this range are flagged and excluded from summaries.
  Vector filter_lower = (Vector(1) << 0.14).finished();
  Vector filter_upper = (Vector(1) << 11.4).finished();

  int replicates = 250;
  std::uint64_t seed = 1;
  int multistarts = 5;
  double grad_tol = 1e-8;
  int max_iter = 200;

  // none, gaussian, square_transform, monte_carlo
  std::string asymptotics = "none";
  int asymptotics_reps = 2500;
  int quadform_cap = 150;

  double decay_tau = 1.0;
  int decay_bins = 20;

  std::string output_dir = "tgrf_out";
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Validates ranges and cross-field consistency; throws ConfigError.
void validate(const ExperimentConfig& cfg);

/// Canonical `key = value` text; equal configs give equal text.
std::string canonical_text(const ExperimentConfig& cfg);

/// FNV-1a 64 of the canonical text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

/// Documented schema, printed on usage errors.
std::string config_schema();

}  // namespace tgrf

#endif  // TGRF_CONFIG_HPP
