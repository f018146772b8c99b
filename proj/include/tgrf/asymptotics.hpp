#ifndef TGRF_ASYMPTOTICS_HPP
#define TGRF_ASYMPTOTICS_HPP

// Finite-n covariance objects behind the central limit theorems for the
// variance estimator, maximum likelihood and cross validation:
//
//   M     (1/n) tr(R^{-1} dR_i R^{-1} dR_j)            expected ML Hessian
//   Sigma Cov(n^{1/2} dL/dtheta_i, n^{1/2} dL/dtheta_j)  score covariance
//   N     expected CV Hessian (three-trace formula)
//   Gamma Cov(n^{1/2} dCV/dpsi_i, n^{1/2} dCV/dpsi_j)
//   D = blockdiag(M, N), Psi the joint covariance of both gradients.
//
// Every score covariance is a covariance of quadratic forms y^T A y, so all
// of them reduce to (1/n) sum_{ijkl} A_ij B_kl Cov(y_i y_j, y_k y_l). Closed
// fourth moments are available for Gaussian y (Wick) and for the centred
// square of a Gaussian field (Isserlis); other populations are simulated.

#include "tgrf/covmodel.hpp"
#include "tgrf/fieldsim.hpp"
#include "tgrf/linalg.hpp"
#include "tgrf/locations.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tgrf {

constexpr int kDefaultQuarticCap = 150;

/// Cov(y_i y_j, y_k y_l) for Y = Z^2 - var(Z), k the latent covariance:
/// 4(k_ik^2 k_jl^2 + k_il^2 k_jk^2)
///   + 16(k_ik k_il k_jk k_jl + k_ij k_il k_jk k_kl + k_ij k_ik k_jl k_kl)
double isserlis_cov4(const SymMatrix& k, Eigen::Index i, Eigen::Index j,
                     Eigen::Index kk, Eigen::Index l);

/// Cov(y_i y_j, y_k y_l) = k_ik k_jl + k_il k_jk for Gaussian y.
double gaussian_cov4(const SymMatrix& k, Eigen::Index i, Eigen::Index j,
                     Eigen::Index kk, Eigen::Index l);

enum class FourthMoment { Gaussian, SquareTransform };

/// Fourth-moment provider: the distribution family of y together with the
/// covariance it is built from (k_Y for Gaussian, latent k_Z for the square).
struct Cov4Provider {
  FourthMoment kind = FourthMoment::Gaussian;
  SymMatrix kmat;

  double operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k,
                    Eigen::Index l) const;
};

enum class ContractionMethod {
  Structured,  // matrix-product reduction, OpenMP
  Literal,     // quadruple loop over cov4, OpenMP
  Serial,      // quadruple loop over cov4, single thread
};

/// V_n = (1/n) y^T A y. `a` may be non-symmetric; only its symmetric part
/// enters the quadratic form.
struct QuadFormSpec {
  Matrix a;
  bool scale_by_n = true;
};

/// (1/n) sum_{ijkl} A_ij B_kl Cov(y_i y_j, y_k y_l) = (1/n) Cov(y^T A y, y^T B y).
/// Square-transform populations cost O(n^4) and are capped at `cap` points.
double quadform_covariance(const Matrix& a, const Matrix& b,
                           const Cov4Provider& cov4,
                           int cap = kDefaultQuarticCap,
                           ContractionMethod method = ContractionMethod::Structured);

/// n Var(V_n) (or Var(y^T A y) when scale_by_n is false).
double quadform_variance(const QuadFormSpec& spec, const Cov4Provider& cov4,
                         int cap = kDefaultQuarticCap,
                         ContractionMethod method = ContractionMethod::Structured);

enum class PopulationKind { Gaussian, SquareTransform, MonteCarlo };

/// Distribution of y used for score covariances.
struct Population {
  PopulationKind kind = PopulationKind::Gaussian;
  // Monte Carlo only: the transform applied to the simulated latent field.
  Transform::Kind mc_transform = Transform::Kind::Identity;
  int reps = 0;
  std::uint64_t seed = 0;
  // Latent model (square transform and Monte Carlo). When absent it is
  // recovered from the model of y: itself for Gaussian data, by inverting
  // the Mehler map for the square transform.
  std::optional<CovarianceModel> latent_model;
  std::optional<Vector> latent_theta;
  int cap = kDefaultQuarticCap;

  static Population gaussian();
  static Population square_transform();
  static Population monte_carlo(int reps, std::uint64_t seed,
                                Transform::Kind transform);
  std::string label() const;
};

SymMatrix matrix_M(const CovarianceModel& model, const Vector& theta0,
                   const LocationSet& ls);

SymMatrix matrix_Sigma(const CovarianceModel& model, const Vector& theta0,
                       const LocationSet& ls, const Population& population);

/// Expected Hessian of CV at psi0 when y has covariance sigma0^2 C_psi0. The
/// three-trace expression holds for unit variance; the result is scaled by
/// sigma0^2 taken from theta0.
Matrix matrix_N_unsymmetrized(const CovarianceModel& model, const Vector& theta0,
                              const LocationSet& ls);
/// Symmetrized N; asymmetry above 1e-8 is reported through `warning`.
Matrix matrix_N(const CovarianceModel& model, const Vector& theta0,
                const LocationSet& ls, std::string* warning = nullptr);

Matrix matrix_Gamma(const CovarianceModel& model, const Vector& theta0,
                    const LocationSet& ls, const Population& population);

struct AsymptoticReport {
  Matrix M;
  Matrix Sigma;
  Matrix N;
  Matrix Gamma;
  Matrix D;
  Matrix Psi;
  Matrix sandwich_ml;
  Matrix sandwich_cv;
  Matrix sandwich_joint;
  std::string population;
  bool mehler_inverted = false;
  Eigen::Index n = 0;
  Vector theta0;
  std::vector<std::string> warnings;
};

AsymptoticReport joint_report(const CovarianceModel& model, const Vector& theta0,
                              const LocationSet& ls, const Population& population);

/// H^{-1} S H^{-1}, symmetrized. Empty inputs give an empty result.
Matrix sandwich(const Matrix& h, const Matrix& s);

}  // namespace tgrf

#endif  // TGRF_ASYMPTOTICS_HPP
