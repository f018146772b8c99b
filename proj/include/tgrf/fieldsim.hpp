#ifndef TGRF_FIELDSIM_HPP
#define TGRF_FIELDSIM_HPP

#include "tgrf/covmodel.hpp"
#include "tgrf/linalg.hpp"
#include "tgrf/locations.hpp"
#include "tgrf/rng.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

namespace tgrf {

/// Pointwise transformation Y = F(Z) - centering.
struct Transform {
  enum class Kind { Identity, SquareCentered, EvenMonomial, Custom };

  Kind kind = Kind::Identity;
  // Subtracted mean E[F(Z(x))].
  double centering = 0.0;
  // Exponent r of Z^(2r) for EvenMonomial.
  int power = 1;
  // Custom transforms only; growth and monotonicity are declared, unchecked.
  std::function<double(double)> custom;
  std::string custom_name;

  static Transform identity();
  /// Z^2 - sigma2 for a latent field of marginal variance sigma2.
  static Transform square_centered(double latent_variance);
  /// Z^(2r) - (2r-1)!! for a unit-variance latent field.
  static Transform even_monomial(int r);
  static Transform make_custom(std::string name, std::function<double(double)> f,
                               double centering);

  double operator()(double z) const;
  std::string name() const;
};

std::optional<Transform> parse_transform(const std::string& name,
                                         double latent_variance);

/// (2r - 1)!!
double double_factorial_odd(int r);

struct Provenance {
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
  std::string transform = "identity";
  std::string latent_family;
  Vector latent_theta;
  double latent_variance = 0.0;
};

struct FieldSample {
  std::shared_ptr<const LocationSet> locations;
  Vector values;
  Provenance provenance;

  Eigen::Index size() const { return values.size(); }
};

/// Exact simulation y = L eps with L the Cholesky factor of the covariance
/// matrix and eps drawn from the (seed, replicate, Field) stream.
FieldSample simulate_latent(const CovarianceModel& model, const Vector& theta0,
                            std::shared_ptr<const LocationSet> ls,
                            std::uint64_t seed, std::uint64_t replicate = 0);

/// Same draw with a precomputed factor, for Monte Carlo loops over a fixed
/// design.
Vector simulate_with_factor(const CholFactor& factor, Engine& engine);

FieldSample apply_transform(const FieldSample& z, const Transform& t);

/// Covariance of T(Z) when it has a closed form in the family: identity
/// leaves the model unchanged; the centred square of an exponential field is
/// exponential(2 sigma^4, rho / 2) (Mehler). Other cases return nullopt.
struct TransformedCovariance {
  CovarianceModel model;
  Vector theta;
};
std::optional<TransformedCovariance> transformed_covariance(
    const CovarianceModel& latent_model, const Vector& theta0,
    const Transform& t);

/// Latent exponential parameters recovered from the square-transform
/// covariance by k_Z = sqrt(k_Y / 2): (sqrt(sigma2_Y / 2), 2 rho_Y).
std::optional<TransformedCovariance> invert_square_transform(
    const CovarianceModel& y_model, const Vector& theta_y);

// CSV with provenance as '#' comment lines, then index,x1..xd,value.
void write_csv(std::ostream& out, const FieldSample& sample);
FieldSample read_sample_csv(std::istream& in);

}  // namespace tgrf

#endif  // TGRF_FIELDSIM_HPP
