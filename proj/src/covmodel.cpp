#include "tgrf/covmodel.hpp"

#include "tgrf/errors.hpp"
#include "tgrf/kernels.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

namespace tgrf {

namespace {

std::string format_vector(const Vector& v) {
  std::ostringstream os;
  os.precision(10);
  os << '(';
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    os << v(i);
  }
  os << ')';
  return os.str();
}

struct Registry {
  std::mutex mutex;
  std::map<std::string, FamilyFactory> factories{
      {"exponential",
       [] { return std::make_shared<const ExponentialFamily>(); }}};
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

// ---------------------------------------------------------------- ParamBox

ParamBox::ParamBox(Vector lower, Vector upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "ParamBox bound sizes differ");
  }
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (!std::isfinite(lower_(i)) || !std::isfinite(upper_(i)) ||
        !(lower_(i) > 0.0) || !(lower_(i) < upper_(i))) {
      throw Error(ErrorCode::InvalidArgument,
                  "ParamBox needs 0 < lower < upper < inf, got lower=" +
                      format_vector(lower_) + " upper=" + format_vector(upper_));
    }
  }
}

bool ParamBox::contains(const Vector& theta) const {
  if (theta.size() != lower_.size()) return false;
  return (theta.array() >= lower_.array()).all() &&
         (theta.array() <= upper_.array()).all();
}

ParamBox ParamBox::without(int index) const {
  const Eigen::Index p = lower_.size();
  Vector lo(p - 1), hi(p - 1);
  for (Eigen::Index i = 0, k = 0; i < p; ++i) {
    if (i == index) continue;
    lo(k) = lower_(i);
    hi(k) = upper_(i);
    ++k;
  }
  return ParamBox(lo, hi);
}

// ------------------------------------------------------------- exponential

double ExponentialFamily::radial(const Vector& theta, double r) const {
  return theta(0) * std::exp(-r / theta(1));
}

double ExponentialFamily::radial_deriv1(const Vector& theta, double r,
                                        int i) const {
  const double rho = theta(1);
  const double e = std::exp(-r / rho);
  switch (i) {
    case 0: return e;
    case 1: return theta(0) * e * r / (rho * rho);
    default: break;
  }
  throw Error(ErrorCode::IndexOutOfRange, "exponential has 2 parameters");
}

double ExponentialFamily::radial_deriv2(const Vector& theta, double r, int i,
                                        int j) const {
  if (i > j) std::swap(i, j);
  const double rho = theta(1);
  const double e = std::exp(-r / rho);
  if (i == 0 && j == 0) return 0.0;
  if (i == 0 && j == 1) return e * r / (rho * rho);
  if (i == 1 && j == 1) {
    const double rho3 = rho * rho * rho;
    return theta(0) * e * (r * r / (rho3 * rho) - 2.0 * r / rho3);
  }
  throw Error(ErrorCode::IndexOutOfRange, "exponential has 2 parameters");
}

// ---------------------------------------------------------------- registry

void register_family(const std::string& name, FamilyFactory factory) {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  r.factories[name] = std::move(factory);
}

std::shared_ptr<const CovarianceFamily> make_family(const std::string& name) {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  const auto it = r.factories.find(name);
  if (it == r.factories.end()) {
    throw Error(ErrorCode::InvalidArgument, "unknown covariance family '" + name + "'");
  }
  return it->second();
}

std::vector<std::string> registered_families() {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  std::vector<std::string> names;
  for (const auto& [name, _] : r.factories) names.push_back(name);
  return names;
}

// ---------------------------------------------------------------- model

CovarianceModel::CovarianceModel(std::shared_ptr<const CovarianceFamily> family,
                                 ParamBox box)
    : family_(std::move(family)), box_(std::move(box)) {
  if (!family_) {
    throw Error(ErrorCode::InvalidArgument, "null covariance family");
  }
  if (box_.size() != family_->param_count()) {
    throw Error(ErrorCode::DimensionMismatch,
                "box has " + std::to_string(box_.size()) + " coordinates, family '" +
                    family_->name() + "' has " +
                    std::to_string(family_->param_count()));
  }
}

CovarianceModel CovarianceModel::exponential(ParamBox box) {
  return CovarianceModel(std::make_shared<const ExponentialFamily>(), std::move(box));
}

void CovarianceModel::check_in_box(const Vector& theta) const {
  if (!box_.contains(theta)) {
    throw Error(ErrorCode::ParamOutOfBox,
                "theta " + format_vector(theta) + " outside [" +
                    format_vector(box_.lower()) + ", " +
                    format_vector(box_.upper()) + "]");
  }
}

double CovarianceModel::eval(const Vector& theta, const Vector& lag) const {
  check_in_box(theta);
  return family_->value(theta, lag);
}

double CovarianceModel::eval_deriv(const Vector& theta, const Vector& lag,
                                   const std::vector<int>& which) const {
  check_in_box(theta);
  for (int w : which) {
    if (w < 0 || w >= param_count()) {
      throw Error(ErrorCode::IndexOutOfRange, "derivative index " + std::to_string(w));
    }
  }
  if (which.size() == 1) return family_->deriv1(theta, lag, which[0]);
  if (which.size() == 2) return family_->deriv2(theta, lag, which[0], which[1]);
  throw Error(ErrorCode::UnsupportedOrder,
              "derivative order " + std::to_string(which.size()) +
                  " (supported: 1, 2)");
}

SymMatrix CovarianceModel::assemble(const Vector& theta,
                                    const LocationSet& ls) const {
  if (const auto* iso = dynamic_cast<const IsotropicFamily*>(family_.get())) {
    const Matrix& dist = ls.euclidean_distances();
    return SymMatrix(kernels::omp::fill_symmetric(
        ls.size(), [&](Eigen::Index i, Eigen::Index j) {
          return iso->radial(theta, dist(i, j));
        }));
  }
  return SymMatrix(kernels::omp::fill_symmetric(
      ls.size(), [&](Eigen::Index i, Eigen::Index j) {
        return family_->value(theta, ls.lag(i, j));
      }));
}

SymMatrix CovarianceModel::assemble_deriv(const Vector& theta,
                                          const LocationSet& ls, int a,
                                          int b) const {
  const Matrix& dist = ls.euclidean_distances();
  const auto* iso = dynamic_cast<const IsotropicFamily*>(family_.get());
  return SymMatrix(kernels::omp::fill_symmetric(
      ls.size(), [&](Eigen::Index i, Eigen::Index j) {
        if (iso) {
          const double r = dist(i, j);
          return b < 0 ? iso->radial_deriv1(theta, r, a)
                       : iso->radial_deriv2(theta, r, a, b);
        }
        const Vector lag = ls.lag(i, j);
        return b < 0 ? family_->deriv1(theta, lag, a)
                     : family_->deriv2(theta, lag, a, b);
      }));
}

SymMatrix CovarianceModel::cov_matrix(const Vector& theta,
                                      const LocationSet& ls) const {
  check_in_box(theta);
  return assemble(theta, ls);
}

std::vector<SymMatrix> CovarianceModel::deriv_matrices(const Vector& theta,
                                                       const LocationSet& ls,
                                                       int order) const {
  check_in_box(theta);
  const int p = param_count();
  std::vector<SymMatrix> out;
  if (order == 1) {
    for (int i = 0; i < p; ++i) out.push_back(assemble_deriv(theta, ls, i, -1));
  } else if (order == 2) {
    for (int i = 0; i < p; ++i) {
      for (int j = i; j < p; ++j) out.push_back(assemble_deriv(theta, ls, i, j));
    }
  } else {
    throw Error(ErrorCode::UnsupportedOrder,
                "derivative order " + std::to_string(order) + " (supported: 1, 2)");
  }
  return out;
}

int CovarianceModel::require_variance_index() const {
  const auto idx = family_->variance_index();
  if (!idx) {
    throw Error(ErrorCode::NoVarianceSplit,
                "family '" + family_->name() + "' declares no variance parameter");
  }
  return *idx;
}

std::pair<double, Vector> CovarianceModel::correlation_split(
    const Vector& theta) const {
  const int vi = require_variance_index();
  if (theta.size() != param_count()) {
    throw Error(ErrorCode::DimensionMismatch, "theta size");
  }
  Vector psi(theta.size() - 1);
  for (Eigen::Index i = 0, k = 0; i < theta.size(); ++i) {
    if (i != vi) psi(k++) = theta(i);
  }
  return {theta(vi), psi};
}

Vector CovarianceModel::join(double sigma2, const Vector& psi) const {
  const int vi = require_variance_index();
  if (psi.size() != param_count() - 1) {
    throw Error(ErrorCode::DimensionMismatch, "psi size");
  }
  Vector theta(param_count());
  for (Eigen::Index i = 0, k = 0; i < theta.size(); ++i) {
    theta(i) = (i == vi) ? sigma2 : psi(k++);
  }
  return theta;
}

ParamBox CovarianceModel::psi_box() const {
  return box_.without(require_variance_index());
}

SymMatrix CovarianceModel::correlation_matrix(const Vector& psi,
                                              const LocationSet& ls) const {
  if (!psi_box().contains(psi)) {
    throw Error(ErrorCode::ParamOutOfBox, "psi " + format_vector(psi) + " outside box");
  }
  return assemble(join(1.0, psi), ls);
}

std::vector<SymMatrix> CovarianceModel::correlation_deriv_matrices(
    const Vector& psi, const LocationSet& ls) const {
  if (!psi_box().contains(psi)) {
    throw Error(ErrorCode::ParamOutOfBox, "psi " + format_vector(psi) + " outside box");
  }
  const int vi = require_variance_index();
  const Vector theta = join(1.0, psi);
  std::vector<SymMatrix> out;
  for (int i = 0; i < param_count(); ++i) {
    if (i != vi) out.push_back(assemble_deriv(theta, ls, i, -1));
  }
  return out;
}

double identifiability_gap(const CovarianceModel& model, const Vector& theta,
                           const Vector& theta0, const LocationSet& ls) {
  const Matrix diff =
      model.cov_matrix(theta, ls).dense() - model.cov_matrix(theta0, ls).dense();
  return diff.squaredNorm() / static_cast<double>(ls.size());
}

}  // namespace tgrf
