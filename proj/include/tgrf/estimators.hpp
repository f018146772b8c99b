#ifndef TGRF_ESTIMATORS_HPP
#define TGRF_ESTIMATORS_HPP

// Gaussian (pseudo) maximum likelihood and leave-one-out cross validation
// criteria, their gradients and minimizers, and the closed-form variance
// estimators with known correlation.
//
//   L(theta)  = (1/n) (log det R_theta + y^T R_theta^{-1} y)
//   CV(psi)   = (1/n) y^T C^{-1} diag(C^{-1})^{-2} C^{-1} y
//
// where R_theta = sigma^2 C_psi for families with a variance split.

#include "tgrf/covmodel.hpp"
#include "tgrf/fieldsim.hpp"
#include "tgrf/linalg.hpp"
#include "tgrf/locations.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tgrf {

struct EstimationResult {
  std::string estimator;  // ML, CV, VAR, VAR_TAPERED(K), AGGREGATE(lambda), ...
  Vector theta_hat;
  double criterion_value = 0.0;
  bool converged = true;
  bool at_boundary = false;
  // max - min of the final criterion over successful starts.
  double multistart_spread = 0.0;
  int jitter_events = 0;
  int failed_starts = 0;
  std::string message;
};

struct OptimizeOptions {
  int multistarts = 5;
  // Sup-norm of the projected gradient in log coordinates.
  double grad_tol = 1e-8;
  int max_iter = 200;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
  JitterPolicy jitter;
  // Per-coordinate known values; estimated coordinates are nullopt.
  std::vector<std::optional<double>> fixed;
  // Overrides the model box (theta box for ML, psi box for CV).
  std::optional<ParamBox> box;
  // Extra starting points tried before the random ones.
  std::vector<Vector> initial_points;
};

/// True iff some coordinate lies within 1e-6 (upper - lower) of a bound.
bool near_boundary(const Vector& theta, const ParamBox& box);

// ---------------------------------------------------------------- ML

double ml_criterion(const CovarianceModel& model, const Vector& theta,
                    const LocationSet& ls, const Vector& y,
                    const JitterPolicy& jitter = {});
double ml_criterion(const CovarianceModel& model, const Vector& theta,
                    const FieldSample& sample);

/// dL/dtheta_i = (1/n) tr(R^{-1} dR_i) - (1/n) y^T R^{-1} dR_i R^{-1} y
Vector ml_score(const CovarianceModel& model, const Vector& theta,
                const LocationSet& ls, const Vector& y,
                const JitterPolicy& jitter = {});
Vector ml_score(const CovarianceModel& model, const Vector& theta,
                const FieldSample& sample);

struct MlEvaluation {
  double value = 0.0;
  Vector score;
  double jitter = 0.0;
};
MlEvaluation ml_value_and_score(const CovarianceModel& model,
                                const Vector& theta, const LocationSet& ls,
                                const Vector& y, const JitterPolicy& jitter = {});

/// Matrices Q_i = -R^{-1} dR_i R^{-1} with score_i = (1/n)(tr(R^{-1} dR_i) +
/// y^T Q_i y).
std::vector<Matrix> ml_score_matrices(const CovarianceModel& model,
                                      const Vector& theta, const LocationSet& ls);

EstimationResult optimize_ml(const CovarianceModel& model, const LocationSet& ls,
                             const Vector& y, const OptimizeOptions& opts = {});
EstimationResult optimize_ml(const CovarianceModel& model,
                             const FieldSample& sample,
                             const OptimizeOptions& opts = {});

// ---------------------------------------------------------------- CV

double cv_criterion(const CovarianceModel& model, const Vector& psi,
                    const LocationSet& ls, const Vector& y,
                    const JitterPolicy& jitter = {});
double cv_criterion(const CovarianceModel& model, const Vector& psi,
                    const FieldSample& sample);

/// Virtual leave-one-out residuals y_i - yhat_{-i} = (C^{-1} y)_i / (C^{-1})_ii.
Vector loo_residuals(const CovarianceModel& model, const Vector& psi,
                     const LocationSet& ls, const Vector& y,
                     const JitterPolicy& jitter = {});

/// dCV/dpsi_i = (2/n) y^T A_i y with
/// A_i = C^{-1} D^{-2} (diag(C^{-1} dC_i C^{-1}) D^{-1} - C^{-1} dC_i) C^{-1},
/// D = diag(C^{-1}).
Vector cv_gradient(const CovarianceModel& model, const Vector& psi,
                   const LocationSet& ls, const Vector& y,
                   const JitterPolicy& jitter = {});

struct CvEvaluation {
  double value = 0.0;
  Vector gradient;
  double jitter = 0.0;
};
CvEvaluation cv_value_and_gradient(const CovarianceModel& model,
                                   const Vector& psi, const LocationSet& ls,
                                   const Vector& y,
                                   const JitterPolicy& jitter = {});

/// The (non-symmetric) matrices A_i of cv_gradient.
std::vector<Matrix> cv_gradient_matrices(const CovarianceModel& model,
                                         const Vector& psi,
                                         const LocationSet& ls);

EstimationResult optimize_cv(const CovarianceModel& model, const LocationSet& ls,
                             const Vector& y, const OptimizeOptions& opts = {});

// ---------------------------------------------------------------- variance

/// (1/n) y^T A y
double mean_quadratic_form(const Matrix& a, const Vector& y);

/// C^{-1} with entries (i, j) zeroed where |s_i - s_j|_max > taper_radius.
Matrix taper_inverse(const Matrix& inverse, const LocationSet& ls,
                     double taper_radius);

/// sigma2_ML = (1/n) y^T C^{-1} y with C built from the known psi.
double variance_estimator(const CovarianceModel& model, const Vector& psi_known,
                          const LocationSet& ls, const Vector& y);

/// (1/n) y^T C_K^{-1} y with the max-norm tapered inverse.
double variance_estimator_tapered(const CovarianceModel& model,
                                  const Vector& psi_known, const LocationSet& ls,
                                  const Vector& y, double taper_radius);

/// lambda psi_ml + (1 - lambda) psi_cv, lambda in [0, 1].
Vector aggregate(const Vector& psi_ml, const Vector& psi_cv, double lambda);

std::string tapered_label(double taper_radius);
std::string aggregate_label(double lambda);

}  // namespace tgrf

#endif  // TGRF_ESTIMATORS_HPP
