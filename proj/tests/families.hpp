#ifndef TGRF_TESTS_FAMILIES_HPP
#define TGRF_TESTS_FAMILIES_HPP

// Test-only covariance families registered through the public registry.

#include "tgrf/covmodel.hpp"

#include <cmath>
#include <memory>
#include <string>

namespace tgrf::families {

/// k(s) = sigma^2 exp(-||s|| / scale) with `extra` parameters that do not
/// enter k. extra = 0 gives a variance-only model; extra = 1 gives a model
/// whose correlation is constant in psi (flat CV surface).
class FixedCorrelationFamily final : public IsotropicFamily {
 public:
  FixedCorrelationFamily(int extra, double scale) : extra_(extra), scale_(scale) {}

  std::string name() const override {
    if (scale_ <= 0) return "white_noise";
    return "fixed_corr_" + std::to_string(extra_);
  }
  int param_count() const override { return 1 + extra_; }
  std::vector<std::string> param_names() const override {
    std::vector<std::string> n{"sigma2"};
    for (int i = 0; i < extra_; ++i) n.push_back("dummy" + std::to_string(i));
    return n;
  }
  std::optional<int> variance_index() const override { return 0; }

  double radial(const Vector& theta, double r) const override {
    return theta(0) * corr(r);
  }
  double radial_deriv1(const Vector&, double r, int i) const override {
    return i == 0 ? corr(r) : 0.0;
  }
  double radial_deriv2(const Vector&, double, int, int) const override { return 0.0; }

 private:
  double corr(double r) const { return scale_ > 0 ? std::exp(-r / scale_) : (r == 0 ? 1.0 : 0.0); }
  int extra_;
  double scale_;
};

/// Anisotropic family without a variance split: k(s) = a exp(-|s_1| b - ||s||^2).
class NoSplitFamily final : public CovarianceFamily {
 public:
  std::string name() const override { return "no_split"; }
  int param_count() const override { return 2; }
  std::vector<std::string> param_names() const override { return {"a", "b"}; }
  double value(const Vector& t, const Vector& lag) const override {
    return t(0) * std::exp(-t(1) * lag(0) * lag(0) - lag.squaredNorm());
  }
  double deriv1(const Vector& t, const Vector& lag, int i) const override {
    const double e = std::exp(-t(1) * lag(0) * lag(0) - lag.squaredNorm());
    return i == 0 ? e : -t(0) * lag(0) * lag(0) * e;
  }
  double deriv2(const Vector& t, const Vector& lag, int i, int j) const override {
    const double e = std::exp(-t(1) * lag(0) * lag(0) - lag.squaredNorm());
    const double s = lag(0) * lag(0);
    if (i == 0 && j == 0) return 0.0;
    if (i == 1 && j == 1) return t(0) * s * s * e;
    return -s * e;
  }
};

inline void register_test_families() {
  register_family("fixed_corr_0", [] { return std::make_shared<FixedCorrelationFamily>(0, 1.0); });
  register_family("fixed_corr_1", [] { return std::make_shared<FixedCorrelationFamily>(1, 1.0); });
  register_family("white_noise", [] { return std::make_shared<FixedCorrelationFamily>(0, 0.0); });
  register_family("no_split", [] { return std::make_shared<NoSplitFamily>(); });
}

}  // namespace tgrf::families

#endif  // TGRF_TESTS_FAMILIES_HPP
