#include "tgrf/asymptotics.hpp"

#include "tgrf/errors.hpp"
#include "tgrf/estimators.hpp"
#include "tgrf/kernels.hpp"
#include "tgrf/rng.hpp"

#include <cmath>
#include <sstream>

namespace tgrf {

namespace {

void check_index(const SymMatrix& k, Eigen::Index idx) {
  if (idx < 0 || idx >= k.order()) {
    throw Error(ErrorCode::IndexOutOfRange,
                "index " + std::to_string(idx) + " outside order " +
                    std::to_string(k.order()));
  }
}

// The population reduced to something that can be evaluated.
struct Resolved {
  bool monte_carlo = false;
  Cov4Provider cov4;
  bool mehler_inverted = false;
  // Monte Carlo: latent covariance and transform.
  std::optional<CovarianceModel> latent_model;
  Vector latent_theta;
  Transform::Kind transform = Transform::Kind::Identity;
};

struct LatentSpec {
  CovarianceModel model;
  Vector theta;
  bool inverted;
};

LatentSpec latent_for(const CovarianceModel& model, const Vector& theta0,
                      const Population& pop, bool square) {
  if (pop.latent_model && pop.latent_theta) {
    return {*pop.latent_model, *pop.latent_theta, false};
  }
  if (!square) return {model, theta0, false};
  auto inv = invert_square_transform(model, theta0);
  if (!inv) {
    throw Error(ErrorCode::MehlerInversionUnavailable,
                "cannot recover a latent model from family '" +
                    model.family().name() + "'");
  }
  return {inv->model, inv->theta, true};
}

Resolved resolve(const CovarianceModel& model, const Vector& theta0,
                 const LocationSet& ls, const Population& pop) {
  Resolved r;
  switch (pop.kind) {
    case PopulationKind::Gaussian:
      r.cov4 = {FourthMoment::Gaussian, model.cov_matrix(theta0, ls)};
      break;
    case PopulationKind::SquareTransform: {
      if (ls.size() > pop.cap) {
        throw Error(ErrorCode::SizeCapExceeded,
                    "analytic square-transform moments need O(n^4) work; n=" +
                        std::to_string(ls.size()) + " exceeds the cap " +
                        std::to_string(pop.cap) + " (use a monte_carlo population)");
      }
      const LatentSpec lat = latent_for(model, theta0, pop, true);
      r.cov4 = {FourthMoment::SquareTransform, lat.model.cov_matrix(lat.theta, ls)};
      r.mehler_inverted = lat.inverted;
      break;
    }
    case PopulationKind::MonteCarlo: {
      if (pop.reps < 2) {
        throw Error(ErrorCode::InvalidArgument, "monte_carlo population needs >= 2 reps");
      }
      const bool square = pop.mc_transform == Transform::Kind::SquareCentered;
      if (!square && pop.mc_transform != Transform::Kind::Identity) {
        throw Error(ErrorCode::InvalidArgument,
                    "monte_carlo population supports identity and square_centered");
      }
      const LatentSpec lat = latent_for(model, theta0, pop, square);
      r.monte_carlo = true;
      r.latent_model = lat.model;
      r.latent_theta = lat.theta;
      r.mehler_inverted = lat.inverted;
      r.transform = pop.mc_transform;
      break;
    }
  }
  return r;
}

// (1/n) Cov(y^T F_a y, y^T F_b y) for every pair of forms.
Matrix form_covariance(const std::vector<Matrix>& forms, const Resolved& r,
                       const LocationSet& ls, const Population& pop) {
  const auto m = static_cast<Eigen::Index>(forms.size());
  const double n = static_cast<double>(ls.size());
  Matrix out = Matrix::Zero(m, m);
  if (m == 0) return out;

  if (!r.monte_carlo) {
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = a; b < m; ++b) {
        out(a, b) = out(b, a) = quadform_covariance(forms[a], forms[b], r.cov4, pop.cap);
      }
    }
    return out;
  }

  const CholFactor factor =
      cholesky(r.latent_model->cov_matrix(r.latent_theta, ls));
  const double latent_var =
      r.latent_model->family().value(r.latent_theta, Vector::Zero(ls.dim()));
  Matrix values(pop.reps, m);
#pragma omp parallel for schedule(static)
  for (int rep = 0; rep < pop.reps; ++rep) {
    Engine engine = make_engine(pop.seed, static_cast<std::uint64_t>(rep), Stream::Field);
    Vector y = simulate_with_factor(factor, engine);
    if (r.transform == Transform::Kind::SquareCentered) {
      y = (y.array().square() - latent_var).matrix();
    }
    for (Eigen::Index a = 0; a < m; ++a) values(rep, a) = y.dot(forms[a] * y);
  }
  const Vector mean = values.colwise().mean().transpose();
  const Matrix centred = values.rowwise() - mean.transpose();
  out = centred.transpose() * centred / static_cast<double>(pop.reps - 1) / n;
  return symmetrized(out);
}

std::vector<Matrix> ml_forms(const CovarianceModel& model, const Vector& theta0,
                             const LocationSet& ls) {
  return ml_score_matrices(model, theta0, ls);
}

std::vector<Matrix> cv_forms(const CovarianceModel& model, const Vector& theta0,
                             const LocationSet& ls) {
  const auto [sigma2, psi] = model.correlation_split(theta0);
  (void)sigma2;
  std::vector<Matrix> forms;
  for (const Matrix& a : cv_gradient_matrices(model, psi, ls)) {
    forms.push_back(2.0 * symmetrized(a));
  }
  return forms;
}

}  // namespace

// ---------------------------------------------------------------- moments

double isserlis_cov4(const SymMatrix& k, Eigen::Index i, Eigen::Index j,
                     Eigen::Index kk, Eigen::Index l) {
  check_index(k, i);
  check_index(k, j);
  check_index(k, kk);
  check_index(k, l);
  const double kik = k(i, kk), kjl = k(j, l), kil = k(i, l), kjk = k(j, kk);
  const double kij = k(i, j), kkl = k(kk, l);
  return 4.0 * (kik * kik * kjl * kjl + kil * kil * kjk * kjk) +
         16.0 * (kik * kil * kjk * kjl + kij * kil * kjk * kkl +
                 kij * kik * kjl * kkl);
}

double gaussian_cov4(const SymMatrix& k, Eigen::Index i, Eigen::Index j,
                     Eigen::Index kk, Eigen::Index l) {
  check_index(k, i);
  check_index(k, j);
  check_index(k, kk);
  check_index(k, l);
  return k(i, kk) * k(j, l) + k(i, l) * k(j, kk);
}

double Cov4Provider::operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k,
                                Eigen::Index l) const {
  return kind == FourthMoment::Gaussian ? gaussian_cov4(kmat, i, j, k, l)
                                        : isserlis_cov4(kmat, i, j, k, l);
}

double quadform_covariance(const Matrix& a, const Matrix& b,
                           const Cov4Provider& cov4, int cap,
                           ContractionMethod method) {
  const Eigen::Index n = cov4.kmat.order();
  if (a.rows() != n || a.cols() != n || b.rows() != n || b.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "quadratic form matrix vs population size");
  }
  const bool quartic = cov4.kind == FourthMoment::SquareTransform ||
                       method != ContractionMethod::Structured;
  if (quartic && n > cap) {
    throw Error(ErrorCode::SizeCapExceeded,
                "O(n^4) contraction with n=" + std::to_string(n) +
                    " exceeds the cap " + std::to_string(cap) +
                    " (use a monte_carlo population)");
  }
  const Matrix as = symmetrized(a);
  const Matrix bs = symmetrized(b);
  const Matrix& k = cov4.kmat.dense();
  // Unchecked fourth moments for the quadruple loops.
  auto raw = [&](Eigen::Index i, Eigen::Index j, Eigen::Index kk, Eigen::Index l) {
    if (cov4.kind == FourthMoment::Gaussian) return k(i, kk) * k(j, l) + k(i, l) * k(j, kk);
    const double kik = k(i, kk), kjl = k(j, l), kil = k(i, l), kjk = k(j, kk);
    const double kij = k(i, j), kkl = k(kk, l);
    return 4.0 * (kik * kik * kjl * kjl + kil * kil * kjk * kjk) +
           16.0 * (kik * kil * kjk * kjl + kij * kil * kjk * kkl + kij * kik * kjl * kkl);
  };

  double total = 0.0;
  switch (method) {
    case ContractionMethod::Structured:
      total = cov4.kind == FourthMoment::Gaussian
                  ? kernels::omp::gaussian_contraction(as, bs, k)
                  : kernels::omp::square_transform_contraction(as, bs, k);
      break;
    case ContractionMethod::Literal:
      total = kernels::omp::quartic_contraction(as, bs, raw);
      break;
    case ContractionMethod::Serial:
      total = kernels::serial::quartic_contraction(as, bs, raw);
      break;
  }
  return total / static_cast<double>(n);
}

double quadform_variance(const QuadFormSpec& spec, const Cov4Provider& cov4,
                         int cap, ContractionMethod method) {
  const double v = quadform_covariance(spec.a, spec.a, cov4, cap, method);
  return spec.scale_by_n ? v : v * static_cast<double>(cov4.kmat.order());
}

// ---------------------------------------------------------------- population

Population Population::gaussian() { return {}; }

Population Population::square_transform() {
  Population p;
  p.kind = PopulationKind::SquareTransform;
  return p;
}

Population Population::monte_carlo(int reps, std::uint64_t seed,
                                   Transform::Kind transform) {
  Population p;
  p.kind = PopulationKind::MonteCarlo;
  p.reps = reps;
  p.seed = seed;
  p.mc_transform = transform;
  return p;
}

std::string Population::label() const {
  switch (kind) {
    case PopulationKind::Gaussian: return "gaussian";
    case PopulationKind::SquareTransform: return "square_transform";
    case PopulationKind::MonteCarlo: {
      std::ostringstream os;
      os << "monte_carlo(" << reps << ", "
         << (mc_transform == Transform::Kind::SquareCentered ? "square_centered" : "identity")
         << ')';
      return os.str();
    }
  }
  return "unknown";
}

// ---------------------------------------------------------------- matrices

SymMatrix matrix_M(const CovarianceModel& model, const Vector& theta0,
                   const LocationSet& ls) {
  const CholFactor f = cholesky(model.cov_matrix(theta0, ls));
  const auto derivs = model.deriv_matrices(theta0, ls, 1);
  std::vector<Matrix> b;
  for (const auto& d : derivs) b.push_back(solve(f, d.dense()));
  const auto p = static_cast<Eigen::Index>(b.size());
  Matrix m(p, p);
  const double n = static_cast<double>(ls.size());
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i; j < p; ++j) {
      m(i, j) = m(j, i) = trace_of_product(b[i], b[j]) / n;
    }
  }
  return SymMatrix(m);
}

SymMatrix matrix_Sigma(const CovarianceModel& model, const Vector& theta0,
                       const LocationSet& ls, const Population& population) {
  const Resolved r = resolve(model, theta0, ls, population);
  return SymMatrix(form_covariance(ml_forms(model, theta0, ls), r, ls, population));
}

Matrix matrix_N_unsymmetrized(const CovarianceModel& model, const Vector& theta0,
                              const LocationSet& ls) {
  const auto [sigma2, psi] = model.correlation_split(theta0);
  const CholFactor f = cholesky(model.correlation_matrix(psi, ls));
  const Matrix inv = inverse(f).dense();
  const auto dcs = model.correlation_deriv_matrices(psi, ls);
  const auto q = static_cast<Eigen::Index>(dcs.size());
  const double n = static_cast<double>(ls.size());

  // diag(C^{-1})^{-k} as diagonal matrices.
  const Vector dinv = inv.diagonal().cwiseInverse();
  auto dpow = [&](int k) { return Vector(dinv.array().pow(k)); };
  const Vector d2 = dpow(2), d3 = dpow(3), d4 = dpow(4);

  std::vector<Vector> pdiag;  // diag(C^{-1} dC_i C^{-1})
  for (const auto& dc : dcs) {
    pdiag.push_back((inv * dc.dense() * inv).diagonal());
  }

  Matrix out(q, q);
  for (Eigen::Index i = 0; i < q; ++i) {
    for (Eigen::Index j = 0; j < q; ++j) {
      const Matrix& dci = dcs[i].dense();
      const Matrix& dcj = dcs[j].dense();
      const Matrix t1 = dcj * inv * d3.asDiagonal() * pdiag[i].asDiagonal() * inv;
      const Matrix t2 = dcj * inv * d2.asDiagonal() * inv * dci * inv;
      const Vector w = d4.cwiseProduct(pdiag[i]).cwiseProduct(pdiag[j]);
      const Matrix t3 = w.asDiagonal() * inv;
      out(i, j) = (-8.0 * t1.trace() + 2.0 * t2.trace() + 6.0 * t3.trace()) / n;
    }
  }
  return sigma2 * out;
}

Matrix matrix_N(const CovarianceModel& model, const Vector& theta0,
                const LocationSet& ls, std::string* warning) {
  const Matrix raw = matrix_N_unsymmetrized(model, theta0, ls);
  if (raw.size() == 0) return raw;
  const double asym = (raw - raw.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8 && warning) {
    std::ostringstream os;
    os << "N asymmetry " << asym << " exceeds 1e-8; symmetrized";
    *warning = os.str();
  }
  return symmetrized(raw);
}

Matrix matrix_Gamma(const CovarianceModel& model, const Vector& theta0,
                    const LocationSet& ls, const Population& population) {
  const Resolved r = resolve(model, theta0, ls, population);
  return form_covariance(cv_forms(model, theta0, ls), r, ls, population);
}

Matrix sandwich(const Matrix& h, const Matrix& s) {
  if (h.size() == 0) return Matrix(0, 0);
  const Eigen::PartialPivLU<Matrix> lu(h);
  const Matrix hs = lu.solve(s);
  const Matrix out = lu.solve(Matrix(hs.transpose()));
  return symmetrized(out);
}

AsymptoticReport joint_report(const CovarianceModel& model, const Vector& theta0,
                              const LocationSet& ls, const Population& population) {
  const Resolved r = resolve(model, theta0, ls, population);
  AsymptoticReport rep;
  rep.population = population.label();
  rep.mehler_inverted = r.mehler_inverted;
  rep.n = ls.size();
  rep.theta0 = theta0;
  if (r.mehler_inverted) {
    rep.warnings.push_back("latent covariance recovered by inverting the Mehler map");
  }

  const int p = model.param_count();
  const int q = p - 1;
  rep.M = matrix_M(model, theta0, ls).dense();
  std::string warning;
  rep.N = q > 0 ? matrix_N(model, theta0, ls, &warning) : Matrix(0, 0);
  if (!warning.empty()) rep.warnings.push_back(warning);

  std::vector<Matrix> forms = ml_forms(model, theta0, ls);
  if (q > 0) {
    for (Matrix& f : cv_forms(model, theta0, ls)) forms.push_back(std::move(f));
  }
  rep.Psi = form_covariance(forms, r, ls, population);
  rep.Sigma = rep.Psi.topLeftCorner(p, p);
  rep.Gamma = rep.Psi.bottomRightCorner(q, q);

  rep.D = Matrix::Zero(p + q, p + q);
  rep.D.topLeftCorner(p, p) = rep.M;
  if (q > 0) rep.D.bottomRightCorner(q, q) = rep.N;

  rep.sandwich_ml = sandwich(rep.M, rep.Sigma);
  rep.sandwich_cv = sandwich(rep.N, rep.Gamma);
  rep.sandwich_joint = sandwich(rep.D, rep.Psi);
  return rep;
}

}  // namespace tgrf
