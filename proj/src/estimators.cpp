#include "tgrf/estimators.hpp"

#include "tgrf/errors.hpp"
#include "tgrf/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

namespace tgrf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string theta_text(const Vector& theta) {
  std::ostringstream os;
  os.precision(10);
  os << "theta=(";
  for (Eigen::Index i = 0; i < theta.size(); ++i) os << (i ? ", " : "") << theta(i);
  os << ')';
  return os.str();
}

void require_size(const LocationSet& ls, const Vector& y) {
  if (ls.size() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "sample has " + std::to_string(y.size()) + " values for " +
                    std::to_string(ls.size()) + " locations");
  }
}

CholFactor factor_at(const SymMatrix& m, const Vector& theta,
                     const JitterPolicy& jitter) {
  try {
    return cholesky(m, jitter);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NotPositiveDefinite) {
      throw Error(ErrorCode::NotPositiveDefinite,
                  std::string(e.what()) + " at " + theta_text(theta));
    }
    throw;
  }
}

// Everything the CV criterion and gradient share.
struct CvState {
  Matrix inv;   // C^{-1}
  Vector v;     // C^{-1} y
  Vector dinv;  // 1 / (C^{-1})_ii
  double jitter = 0.0;
};

CvState cv_state(const CovarianceModel& model, const Vector& psi,
                 const LocationSet& ls, const Vector& y,
                 const JitterPolicy& jitter) {
  require_size(ls, y);
  const CholFactor f = factor_at(model.correlation_matrix(psi, ls), psi, jitter);
  CvState s;
  s.inv = inverse(f).dense();
  s.v = s.inv * y;
  s.dinv = s.inv.diagonal().cwiseInverse();
  s.jitter = f.jitter_applied();
  return s;
}

// ------------------------------------------------------------ multistart

struct Criterion {
  // Both receive the full parameter vector in natural coordinates.
  std::function<double(const Vector&, double&)> value;
  std::function<double(const Vector&, Vector&, double&)> value_and_gradient;
};

struct StartOutcome {
  bool ok = false;
  bool converged = false;
  Vector theta;
  Vector log_free;
  double value = kInf;
};

EstimationResult run_multistart(const std::string& label, const ParamBox& box,
                                const std::vector<std::optional<double>>& fixed,
                                const Criterion& crit,
                                const OptimizeOptions& opts) {
  const Eigen::Index p = box.size();
  if (!fixed.empty() && static_cast<Eigen::Index>(fixed.size()) != p) {
    throw Error(ErrorCode::DimensionMismatch, "fixed-coordinate list size");
  }
  std::vector<Eigen::Index> free_idx;
  Vector base = Vector::Zero(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    if (!fixed.empty() && fixed[static_cast<std::size_t>(i)]) {
      base(i) = *fixed[static_cast<std::size_t>(i)];
    } else {
      free_idx.push_back(i);
    }
  }
  const auto q = static_cast<Eigen::Index>(free_idx.size());

  Vector lo(q), hi(q);
  for (Eigen::Index k = 0; k < q; ++k) {
    lo(k) = std::log(box.lower()(free_idx[k]));
    hi(k) = std::log(box.upper()(free_idx[k]));
  }
  auto full_theta = [&](const Vector& u) {
    Vector theta = base;
    for (Eigen::Index k = 0; k < q; ++k) {
      // Bounds are honoured exactly despite exp/log round trips.
      theta(free_idx[k]) = std::clamp(std::exp(u(k)), box.lower()(free_idx[k]),
                                      box.upper()(free_idx[k]));
    }
    return theta;
  };

  int jitter_events = 0;
  BoxProblem problem;
  problem.lower = lo;
  problem.upper = hi;
  problem.value = [&](const Vector& u) {
    double jit = 0.0;
    try {
      const double v = crit.value(full_theta(u), jit);
      if (jit > 0.0) ++jitter_events;
      return v;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NotPositiveDefinite) return kInf;
      throw;
    }
  };
  problem.value_and_gradient = [&](const Vector& u, Vector& g) {
    double jit = 0.0;
    try {
      const Vector theta = full_theta(u);
      Vector grad_theta;
      const double v = crit.value_and_gradient(theta, grad_theta, jit);
      if (jit > 0.0) ++jitter_events;
      g.resize(q);
      for (Eigen::Index k = 0; k < q; ++k) {
        g(k) = grad_theta(free_idx[k]) * theta(free_idx[k]);
      }
      return v;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NotPositiveDefinite) {
        g = Vector::Zero(q);
        return kInf;
      }
      throw;
    }
  };

  EstimationResult result;
  result.estimator = label;

  if (q == 0) {
    double jit = 0.0;
    result.theta_hat = base;
    result.criterion_value = crit.value(base, jit);
    result.jitter_events = jit > 0.0 ? 1 : 0;
    result.at_boundary = near_boundary(base, box);
    return result;
  }

  std::vector<Vector> starts;
  for (const Vector& init : opts.initial_points) {
    if (init.size() != p) {
      throw Error(ErrorCode::DimensionMismatch, "initial point size");
    }
    Vector u(q);
    for (Eigen::Index k = 0; k < q; ++k) u(k) = std::log(init(free_idx[k]));
    starts.push_back(project_to_box(u, lo, hi));
  }
  Engine engine = make_engine(opts.seed, opts.replicate, Stream::Multistart);
  for (int s = 0; s < opts.multistarts; ++s) {
    Vector u(q);
    for (Eigen::Index k = 0; k < q; ++k) {
      u(k) = std::uniform_real_distribution<double>(lo(k), hi(k))(engine);
    }
    starts.push_back(u);
  }
  if (starts.empty()) {
    throw Error(ErrorCode::InvalidArgument, "no starting points");
  }

  MinimizeOptions mopts;
  mopts.grad_tol = opts.grad_tol;
  mopts.max_iter = opts.max_iter;

  std::vector<StartOutcome> outcomes;
  for (const Vector& u0 : starts) {
    const MinimizeResult r = minimize_box(problem, u0, mopts);
    StartOutcome o;
    o.ok = std::isfinite(r.value) && (r.converged || r.iterations < opts.max_iter);
    o.converged = r.converged;
    o.value = r.value;
    o.log_free = r.x;
    o.theta = full_theta(r.x);
    outcomes.push_back(std::move(o));
  }

  std::vector<const StartOutcome*> good;
  for (const auto& o : outcomes) {
    if (o.ok) good.push_back(&o);
  }
  result.failed_starts = static_cast<int>(outcomes.size() - good.size());
  result.jitter_events = jitter_events;
  if (good.empty()) {
    throw Error(ErrorCode::AllStartsFailed,
                label + ": all " + std::to_string(outcomes.size()) +
                    " starts failed (non-positive-definite or iteration cap)");
  }

  // Smallest criterion; exact ties go to the lexicographically smallest
  // parameter vector.
  std::stable_sort(good.begin(), good.end(), [](const StartOutcome* a, const StartOutcome* b) {
    if (a->value != b->value) return a->value < b->value;
    return std::lexicographical_compare(a->theta.begin(), a->theta.end(),
                                        b->theta.begin(), b->theta.end());
  });
  const StartOutcome& best = *good.front();
  result.theta_hat = best.theta;
  result.criterion_value = best.value;
  result.converged = best.converged;
  result.at_boundary = near_boundary(best.theta, box);
  result.multistart_spread = good.back()->value - best.value;

  double param_spread = 0.0;
  for (const auto* o : good) {
    param_spread = std::max(param_spread,
                            (o->log_free - best.log_free).lpNorm<Eigen::Infinity>());
  }
  const double tol = 1e-12 * std::max(1.0, std::abs(best.value));
  if (good.size() > 1 && result.multistart_spread <= tol && param_spread > 1e-3) {
    result.converged = false;
    result.message = "flat criterion: starts reach equal values at distinct parameters";
  } else if (!best.converged) {
    result.message = "best start did not meet the gradient tolerance";
  }
  return result;
}

}  // namespace

bool near_boundary(const Vector& theta, const ParamBox& box) {
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double slack = 1e-6 * (box.upper()(i) - box.lower()(i));
    if (theta(i) - box.lower()(i) <= slack || box.upper()(i) - theta(i) <= slack) {
      return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------- ML

double ml_criterion(const CovarianceModel& model, const Vector& theta,
                    const LocationSet& ls, const Vector& y,
                    const JitterPolicy& jitter) {
  require_size(ls, y);
  const CholFactor f = factor_at(model.cov_matrix(theta, ls), theta, jitter);
  const Vector alpha = solve(f, y);
  return (f.logdet() + y.dot(alpha)) / static_cast<double>(y.size());
}

double ml_criterion(const CovarianceModel& model, const Vector& theta,
                    const FieldSample& sample) {
  return ml_criterion(model, theta, *sample.locations, sample.values);
}

MlEvaluation ml_value_and_score(const CovarianceModel& model,
                                const Vector& theta, const LocationSet& ls,
                                const Vector& y, const JitterPolicy& jitter) {
  require_size(ls, y);
  const double n = static_cast<double>(y.size());
  const CholFactor f = factor_at(model.cov_matrix(theta, ls), theta, jitter);
  const Vector alpha = solve(f, y);
  const Matrix inv = inverse(f).dense();
  const auto derivs = model.deriv_matrices(theta, ls, 1);

  MlEvaluation out;
  out.value = (f.logdet() + y.dot(alpha)) / n;
  out.jitter = f.jitter_applied();
  out.score.resize(static_cast<Eigen::Index>(derivs.size()));
  for (std::size_t i = 0; i < derivs.size(); ++i) {
    const Matrix& d = derivs[i].dense();
    // tr(R^{-1} dR) with both symmetric is the sum of the Hadamard product.
    out.score(static_cast<Eigen::Index>(i)) =
        (inv.cwiseProduct(d).sum() - alpha.dot(d * alpha)) / n;
  }
  return out;
}

Vector ml_score(const CovarianceModel& model, const Vector& theta,
                const LocationSet& ls, const Vector& y,
                const JitterPolicy& jitter) {
  return ml_value_and_score(model, theta, ls, y, jitter).score;
}

Vector ml_score(const CovarianceModel& model, const Vector& theta,
                const FieldSample& sample) {
  return ml_score(model, theta, *sample.locations, sample.values);
}

std::vector<Matrix> ml_score_matrices(const CovarianceModel& model,
                                      const Vector& theta,
                                      const LocationSet& ls) {
  const CholFactor f = factor_at(model.cov_matrix(theta, ls), theta, {});
  const Matrix inv = inverse(f).dense();
  std::vector<Matrix> out;
  for (const auto& d : model.deriv_matrices(theta, ls, 1)) {
    out.push_back(symmetrized(-(inv * d.dense() * inv)));
  }
  return out;
}

EstimationResult optimize_ml(const CovarianceModel& model, const LocationSet& ls,
                             const Vector& y, const OptimizeOptions& opts) {
  require_size(ls, y);
  const ParamBox box = opts.box.value_or(model.box());
  // The criterion is evaluated against the optimization box, which may be
  // narrower or wider than the model's own box.
  const CovarianceModel boxed(model.family_ptr(), box);
  Criterion crit;
  crit.value = [&](const Vector& theta, double& jit) {
    const CholFactor f = factor_at(boxed.cov_matrix(theta, ls), theta, opts.jitter);
    jit = f.jitter_applied();
    return (f.logdet() + y.dot(solve(f, y))) / static_cast<double>(y.size());
  };
  crit.value_and_gradient = [&](const Vector& theta, Vector& g, double& jit) {
    const MlEvaluation e = ml_value_and_score(boxed, theta, ls, y, opts.jitter);
    jit = e.jitter;
    g = e.score;
    return e.value;
  };
  const bool univariate =
      std::any_of(opts.fixed.begin(), opts.fixed.end(), [](const auto& f) { return f.has_value(); });
  return run_multistart(univariate ? "ML_PARTIAL" : "ML", box, opts.fixed, crit, opts);
}

EstimationResult optimize_ml(const CovarianceModel& model,
                             const FieldSample& sample,
                             const OptimizeOptions& opts) {
  return optimize_ml(model, *sample.locations, sample.values, opts);
}

// ---------------------------------------------------------------- CV

double cv_criterion(const CovarianceModel& model, const Vector& psi,
                    const LocationSet& ls, const Vector& y,
                    const JitterPolicy& jitter) {
  const CvState s = cv_state(model, psi, ls, y, jitter);
  return s.v.cwiseProduct(s.dinv).squaredNorm() / static_cast<double>(y.size());
}

double cv_criterion(const CovarianceModel& model, const Vector& psi,
                    const FieldSample& sample) {
  return cv_criterion(model, psi, *sample.locations, sample.values);
}

Vector loo_residuals(const CovarianceModel& model, const Vector& psi,
                     const LocationSet& ls, const Vector& y,
                     const JitterPolicy& jitter) {
  const CvState s = cv_state(model, psi, ls, y, jitter);
  return s.v.cwiseProduct(s.dinv);
}

CvEvaluation cv_value_and_gradient(const CovarianceModel& model,
                                   const Vector& psi, const LocationSet& ls,
                                   const Vector& y, const JitterPolicy& jitter) {
  const CvState s = cv_state(model, psi, ls, y, jitter);
  const double n = static_cast<double>(y.size());
  const auto derivs = model.correlation_deriv_matrices(psi, ls);

  CvEvaluation out;
  out.value = s.v.cwiseProduct(s.dinv).squaredNorm() / n;
  out.jitter = s.jitter;
  out.gradient.resize(static_cast<Eigen::Index>(derivs.size()));
  const Vector dinv2 = s.dinv.cwiseAbs2();
  const Vector dinv3 = dinv2.cwiseProduct(s.dinv);
  for (std::size_t i = 0; i < derivs.size(); ++i) {
    const Matrix inv_dc = s.inv * derivs[i].dense();
    // diag(C^{-1} dC C^{-1})_a = sum_b (C^{-1} dC)_ab (C^{-1})_ba
    const Vector pdiag = inv_dc.cwiseProduct(s.inv).rowwise().sum();
    const Vector inv_dc_v = inv_dc * s.v;
    const double quad =
        (s.v.cwiseAbs2().cwiseProduct(pdiag).cwiseProduct(dinv3)).sum() -
        (s.v.cwiseProduct(inv_dc_v).cwiseProduct(dinv2)).sum();
    out.gradient(static_cast<Eigen::Index>(i)) = 2.0 * quad / n;
  }
  return out;
}

Vector cv_gradient(const CovarianceModel& model, const Vector& psi,
                   const LocationSet& ls, const Vector& y,
                   const JitterPolicy& jitter) {
  return cv_value_and_gradient(model, psi, ls, y, jitter).gradient;
}

std::vector<Matrix> cv_gradient_matrices(const CovarianceModel& model,
                                         const Vector& psi,
                                         const LocationSet& ls) {
  const CholFactor f = factor_at(model.correlation_matrix(psi, ls), psi, {});
  const Matrix inv = inverse(f).dense();
  const Vector dinv = inv.diagonal().cwiseInverse();
  std::vector<Matrix> out;
  for (const auto& dc : model.correlation_deriv_matrices(psi, ls)) {
    const Matrix inv_dc = inv * dc.dense();
    const Vector pdiag = inv_dc.cwiseProduct(inv).rowwise().sum();
    Matrix inner = -inv_dc;
    inner.diagonal() += pdiag.cwiseProduct(dinv);
    out.push_back(inv * dinv.cwiseAbs2().asDiagonal() * inner * inv);
  }
  return out;
}

EstimationResult optimize_cv(const CovarianceModel& model, const LocationSet& ls,
                             const Vector& y, const OptimizeOptions& opts) {
  require_size(ls, y);
  const ParamBox box = opts.box.value_or(model.psi_box());
  // Rebuild a model whose psi box is the search box; the variance bounds are
  // irrelevant to CV.
  Vector lo = model.join(1.0, box.lower());
  Vector hi = model.join(2.0, box.upper());
  const CovarianceModel boxed(model.family_ptr(), ParamBox(lo, hi));

  Criterion crit;
  crit.value = [&](const Vector& psi, double& jit) {
    const CvState s = cv_state(boxed, psi, ls, y, opts.jitter);
    jit = s.jitter;
    return s.v.cwiseProduct(s.dinv).squaredNorm() / static_cast<double>(y.size());
  };
  crit.value_and_gradient = [&](const Vector& psi, Vector& g, double& jit) {
    const CvEvaluation e = cv_value_and_gradient(boxed, psi, ls, y, opts.jitter);
    jit = e.jitter;
    g = e.gradient;
    return e.value;
  };
  return run_multistart("CV", box, opts.fixed, crit, opts);
}

// ---------------------------------------------------------------- variance

double mean_quadratic_form(const Matrix& a, const Vector& y) {
  if (a.rows() != y.size() || a.cols() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch, "quadratic form size");
  }
  return y.dot(a * y) / static_cast<double>(y.size());
}

Matrix taper_inverse(const Matrix& inv, const LocationSet& ls,
                     double taper_radius) {
  if (!(taper_radius >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "taper radius must be >= 0");
  }
  const Matrix& pts = ls.points();
  Matrix out = inv;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      if ((pts.row(i) - pts.row(j)).cwiseAbs().maxCoeff() > taper_radius) {
        out(i, j) = 0.0;
      }
    }
  }
  return out;
}

double variance_estimator(const CovarianceModel& model, const Vector& psi_known,
                          const LocationSet& ls, const Vector& y) {
  require_size(ls, y);
  const CholFactor f = factor_at(model.correlation_matrix(psi_known, ls), psi_known, {});
  return y.dot(solve(f, y)) / static_cast<double>(y.size());
}

double variance_estimator_tapered(const CovarianceModel& model,
                                  const Vector& psi_known, const LocationSet& ls,
                                  const Vector& y, double taper_radius) {
  require_size(ls, y);
  const CholFactor f = factor_at(model.correlation_matrix(psi_known, ls), psi_known, {});
  return mean_quadratic_form(taper_inverse(inverse(f).dense(), ls, taper_radius), y);
}

Vector aggregate(const Vector& psi_ml, const Vector& psi_cv, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "aggregation weight must lie in [0, 1]");
  }
  if (psi_ml.size() != psi_cv.size()) {
    throw Error(ErrorCode::DimensionMismatch, "aggregate: parameter sizes differ");
  }
  return lambda * psi_ml + (1.0 - lambda) * psi_cv;
}

std::string tapered_label(double taper_radius) {
  std::ostringstream os;
  os << "VAR_TAPERED(" << taper_radius << ')';
  return os.str();
}

std::string aggregate_label(double lambda) {
  std::ostringstream os;
  os << "AGGREGATE(" << lambda << ')';
  return os.str();
}

}  // namespace tgrf
