#ifndef TGRF_COVMODEL_HPP
#define TGRF_COVMODEL_HPP

// Parametric stationary covariance families.
//
// Two norms appear and are never mixed: covariance functions use the
// Euclidean norm of the lag, while separation and tapering use the max-norm
// (see locations.hpp).

#include "tgrf/linalg.hpp"
#include "tgrf/locations.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tgrf {

/// Componentwise box lower < upper, finite, strictly positive bounds.
class ParamBox {
 public:
  ParamBox(Vector lower, Vector upper);

  Eigen::Index size() const { return lower_.size(); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  bool contains(const Vector& theta) const;
  // Drops coordinate `index`.
  ParamBox without(int index) const;

 private:
  Vector lower_;
  Vector upper_;
};

/// A covariance family k_theta(lag). Implementations provide analytic
/// parameter derivatives of order 1 and 2.
class CovarianceFamily {
 public:
  virtual ~CovarianceFamily() = default;

  virtual std::string name() const = 0;
  virtual int param_count() const = 0;
  virtual std::vector<std::string> param_names() const = 0;
  /// Coordinate of sigma^2 when k_theta = sigma^2 c_psi.
  virtual std::optional<int> variance_index() const { return std::nullopt; }
  /// Declared, not verified, positivity of the spectral density.
  virtual bool fourier_positive() const { return false; }

  virtual double value(const Vector& theta, const Vector& lag) const = 0;
  virtual double deriv1(const Vector& theta, const Vector& lag, int i) const = 0;
  virtual double deriv2(const Vector& theta, const Vector& lag, int i,
                        int j) const = 0;
};

/// Families depending on the lag only through its Euclidean norm. Matrix
/// assembly uses the radial entry points directly.
class IsotropicFamily : public CovarianceFamily {
 public:
  virtual double radial(const Vector& theta, double r) const = 0;
  virtual double radial_deriv1(const Vector& theta, double r, int i) const = 0;
  virtual double radial_deriv2(const Vector& theta, double r, int i,
                               int j) const = 0;

  double value(const Vector& theta, const Vector& lag) const final {
    return radial(theta, lag.norm());
  }
  double deriv1(const Vector& theta, const Vector& lag, int i) const final {
    return radial_deriv1(theta, lag.norm(), i);
  }
  double deriv2(const Vector& theta, const Vector& lag, int i,
                int j) const final {
    return radial_deriv2(theta, lag.norm(), i, j);
  }
};

/// k(s) = sigma^2 exp(-||s||_2 / rho), theta = (sigma^2, rho). Its spectral
/// density is positive everywhere.
class ExponentialFamily final : public IsotropicFamily {
 public:
  std::string name() const override { return "exponential"; }
  int param_count() const override { return 2; }
  std::vector<std::string> param_names() const override {
    return {"sigma2", "range"};
  }
  std::optional<int> variance_index() const override { return 0; }
  bool fourier_positive() const override { return true; }

  double radial(const Vector& theta, double r) const override;
  double radial_deriv1(const Vector& theta, double r, int i) const override;
  double radial_deriv2(const Vector& theta, double r, int i,
                       int j) const override;
};

using FamilyFactory = std::function<std::shared_ptr<const CovarianceFamily>()>;

/// Process-wide family registry; "exponential" is always present.
void register_family(const std::string& name, FamilyFactory factory);
std::shared_ptr<const CovarianceFamily> make_family(const std::string& name);
std::vector<std::string> registered_families();

class CovarianceModel {
 public:
  CovarianceModel(std::shared_ptr<const CovarianceFamily> family, ParamBox box);

  static CovarianceModel exponential(ParamBox box);

  const CovarianceFamily& family() const { return *family_; }
  std::shared_ptr<const CovarianceFamily> family_ptr() const { return family_; }
  const ParamBox& box() const { return box_; }
  int param_count() const { return family_->param_count(); }
  std::optional<int> variance_index() const { return family_->variance_index(); }

  void check_in_box(const Vector& theta) const;

  double eval(const Vector& theta, const Vector& lag) const;
  /// `which` lists one or two parameter indices.
  double eval_deriv(const Vector& theta, const Vector& lag,
                    const std::vector<int>& which) const;

  SymMatrix cov_matrix(const Vector& theta, const LocationSet& ls) const;
  /// Order 1: p matrices dR/dtheta_i. Order 2: p(p+1)/2 matrices
  /// d2R/dtheta_i dtheta_j ordered (0,0), (0,1), ..., (0,p-1), (1,1), ...
  std::vector<SymMatrix> deriv_matrices(const Vector& theta,
                                        const LocationSet& ls, int order) const;

  /// (sigma^2, psi) for families with a multiplicative variance.
  std::pair<double, Vector> correlation_split(const Vector& theta) const;
  /// Inverse of correlation_split.
  Vector join(double sigma2, const Vector& psi) const;
  /// Box of psi (theta box without the variance coordinate).
  ParamBox psi_box() const;

  /// C_psi and dC_psi/dpsi_i, the correlation matrices behind k = sigma^2 c.
  SymMatrix correlation_matrix(const Vector& psi, const LocationSet& ls) const;
  std::vector<SymMatrix> correlation_deriv_matrices(const Vector& psi,
                                                    const LocationSet& ls) const;

 private:
  int require_variance_index() const;
  // Unchecked evaluation used by both covariance and correlation matrices.
  SymMatrix assemble(const Vector& theta, const LocationSet& ls) const;
  SymMatrix assemble_deriv(const Vector& theta, const LocationSet& ls, int i,
                           int j) const;

  std::shared_ptr<const CovarianceFamily> family_;
  ParamBox box_;
};

/// (1/n) sum_ij (k_theta(s_i - s_j) - k_theta0(s_i - s_j))^2, the finite-n
/// identifiability surface (reported, no asymptotic claim).
double identifiability_gap(const CovarianceModel& model, const Vector& theta,
                           const Vector& theta0, const LocationSet& ls);

}  // namespace tgrf

#endif  // TGRF_COVMODEL_HPP
