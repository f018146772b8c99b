#ifndef TGRF_HARNESS_HPP
#define TGRF_HARNESS_HPP

// Monte Carlo experiments: for every grid side L and replicate r, draw a
// perturbed grid, simulate the latent field, transform it, run the requested
// estimators and summarize the errors about the true parameters of Y.
//
// Random streams are keyed by (seed, L << 32 | r), so any replicate can be
// recomputed on its own.

#include "tgrf/asymptotics.hpp"
#include "tgrf/config.hpp"
#include "tgrf/covmodel.hpp"
#include "tgrf/diagnostics.hpp"
#include "tgrf/estimators.hpp"
#include "tgrf/fieldsim.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace tgrf {

inline constexpr const char* kVersion = "0.1.0";

/// Models derived from a config: the latent field, the transform, and the
/// model fitted to Y with its true parameters.
struct ExperimentSetup {
  CovarianceModel latent_model;
  Vector theta0;
  Transform transform;
  CovarianceModel model;
  Vector truth;
  // True when the covariance of Y came from a closed form (identity or
  // Mehler), false when it was supplied by `truth`.
  bool closed_form = false;
};

ExperimentSetup make_setup(const ExperimentConfig& cfg);

std::uint64_t replicate_key(int side, std::uint64_t replicate);
std::uint64_t shared_key(int side);

/// Locations of replicate `rep` at grid side L (the shared design when the
/// config asks for one).
std::shared_ptr<const LocationSet> make_locations(const ExperimentConfig& cfg,
                                                  int side, int rep);

FieldSample simulate_replicate(const ExperimentConfig& cfg,
                               const ExperimentSetup& setup, int side, int rep,
                               std::shared_ptr<const LocationSet> ls);

struct EstimateRow {
  int replicate = 0;
  Eigen::Index n = 0;
  std::string estimator;
  // Full parameter vector of Y's model; entries not estimated are NaN.
  Vector theta;
  double criterion = 0.0;
  bool converged = true;
  bool at_boundary = false;
  int jitter_events = 0;
  double multistart_spread = 0.0;
  // ok, filtered, failed
  std::string status = "ok";
};

struct FailureRow {
  Eigen::Index n = 0;
  int replicate = 0;  // -1 for per-size computations
  std::string estimator;
  std::string code;
  std::string message;
};

struct ReplicateOutcome {
  std::vector<EstimateRow> rows;
  std::vector<FailureRow> failures;
  bool failed = false;
};

ReplicateOutcome run_replicate(const ExperimentConfig& cfg,
                               const ExperimentSetup& setup, int side, int rep);

struct SummaryRow {
  ErrorSummary summary;
  double truth = 0.0;
  // W1 of (estimate - truth) / empirical SD against N(0, 1); NaN when fewer
  // than two replicates survive or the spread is degenerate.
  double w1 = 0.0;
};

struct RunArtifacts {
  std::vector<std::string> param_names;
  std::vector<EstimateRow> estimates;
  std::vector<SummaryRow> summary;
  std::vector<FailureRow> failures;
  std::map<int, AsymptoticReport> reports;  // keyed by grid side
  std::string manifest_json;
  int replicates_total = 0;
  int replicates_failed = 0;
  double wall_seconds = 0.0;
};

/// Runs everything and, when cfg.output_dir is non-empty, writes
/// estimates.csv, summary.csv, aggregate_w1.csv, failures.csv,
/// report_L<side>.json, manifest.json and timing.txt.
/// Throws TooManyFailures (after writing) when more than half of the
/// replicates fail.
RunArtifacts run_experiment(const ExperimentConfig& cfg);

std::vector<SummaryRow> summarize(const ExperimentConfig& cfg,
                                  const ExperimentSetup& setup,
                                  const std::vector<EstimateRow>& rows);

std::string estimates_csv(const RunArtifacts& a);
std::string summary_csv(const RunArtifacts& a);
std::string aggregate_csv(const RunArtifacts& a);
std::string failures_csv(const RunArtifacts& a);

Population make_population(const ExperimentConfig& cfg,
                           const ExperimentSetup& setup,
                           const std::string& kind);

AsymptoticReport asymptotic_report(const ExperimentConfig& cfg,
                                   const ExperimentSetup& setup, int side,
                                   const std::string& population);

/// Decay envelope of the inverse covariance of Y at each grid side.
std::vector<std::pair<Eigen::Index, DecayFit>> decay_study(
    const ExperimentConfig& cfg);
std::string decay_json(const std::vector<std::pair<Eigen::Index, DecayFit>>& fits);

/// Applies TGRF_OUTPUT_DIR and TGRF_THREADS.
void apply_environment(ExperimentConfig& cfg);

}  // namespace tgrf

#endif  // TGRF_HARNESS_HPP
