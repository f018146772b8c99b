#include "oracles.hpp"
#include "tgrf/diagnostics.hpp"
#include "tgrf/errors.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace tgrf;

namespace {

// W1 by brute-force trapezoid integration on a fine grid.
double w1_by_quadrature(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double lo = std::min(x.front(), -12.0) - 1.0, hi = std::max(x.back(), 12.0) + 1.0;
  const int steps = 400000;
  const double dt = (hi - lo) / steps;
  double total = 0.0;
  std::size_t below = 0;
  for (int s = 0; s < steps; ++s) {
    const double t = lo + (s + 0.5) * dt;
    while (below < x.size() && x[below] <= t) ++below;
    const double fn = static_cast<double>(below) / static_cast<double>(x.size());
    total += std::abs(fn - 0.5 * std::erfc(-t / std::numbers::sqrt2)) * dt;
  }
  return total;
}

}  // namespace

TEST(Normal, CdfQuantilePdf) {
  EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-15);
  EXPECT_NEAR(normal_cdf(-8.0), 6.22096057427178e-16, 1e-28);
  EXPECT_NEAR(normal_pdf(0.0), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-16);
  for (double p : {1e-10, 0.01, 0.3, 0.5, 0.9, 0.999999}) {
    EXPECT_NEAR(normal_cdf(normal_quantile(p)), p, 1e-14 * std::max(p, 1e-3));
  }
}

TEST(Wasserstein, SinglePointAtZero) {
  EXPECT_NEAR(wasserstein1_to_std_normal({0.0}), std::sqrt(2.0 / std::numbers::pi), 1e-12);
}

TEST(Wasserstein, QuantileSampleIsClose) {
  std::vector<double> q;
  const int n = 10000;
  for (int i = 1; i <= n; ++i) q.push_back(normal_quantile((i - 0.5) / n));
  EXPECT_LE(wasserstein1_to_std_normal(q), 1e-3);
}

TEST(Wasserstein, MatchesQuadratureAndIgnoresOrder) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.3, 1.4);
  std::vector<double> x;
  for (int i = 0; i < 200; ++i) x.push_back(normal(rng));
  const double exact = wasserstein1_to_std_normal(x);
  EXPECT_NEAR(exact, w1_by_quadrature(x), 1e-6);
  std::reverse(x.begin(), x.end());
  EXPECT_DOUBLE_EQ(wasserstein1_to_std_normal(x), exact);
  // A point mass at c is at distance E|Z - c|.
  const double c = 1.7;
  EXPECT_NEAR(wasserstein1_to_std_normal({c}), 2 * normal_pdf(c) + c * (2 * normal_cdf(c) - 1), 1e-12);
}

TEST(Wasserstein, TranslationMonotone) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  std::vector<double> x;
  for (int i = 0; i < 500; ++i) x.push_back(normal(rng));
  x = standardize(x, oracle::sample_mean(x));
  double prev = wasserstein1_to_std_normal(x);
  for (double c : {0.1, 0.2, 0.5, 1.0, 2.0}) {
    std::vector<double> shifted = x;
    for (double& v : shifted) v += c;
    const double w = wasserstein1_to_std_normal(shifted);
    EXPECT_GT(w, prev) << c;
    prev = w;
  }
}

TEST(Wasserstein, Errors) {
  EXPECT_THROW(wasserstein1_to_std_normal({}), Error);
  EXPECT_THROW(wasserstein1_to_std_normal({0.0, NAN}), Error);
}

TEST(Standardize, MeanAndScale) {
  const std::vector<double> x{1.0, 4.0, 2.0, 9.0, -3.0};
  const auto z = standardize(x, oracle::sample_mean(x));
  EXPECT_NEAR(oracle::sample_mean(z), 0.0, 1e-12);
  EXPECT_NEAR(oracle::sample_variance(z), 1.0, 1e-12);
  const auto fixed = standardize(x, 1.0, 2.0);
  EXPECT_EQ(fixed[1], 1.5);
  try {
    standardize({2.0, 2.0, 2.0}, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateScale);
  }
  EXPECT_THROW(standardize({1.0}, 0.0), Error);
  EXPECT_THROW(standardize(x, 0.0, 0.0), Error);
}

TEST(ErrorSummary, Examples) {
  const Vector truth = (Vector(2) << 1.5, 2.0).finished();
  const auto exact = error_summary("ML", 100, {truth, truth, truth}, truth);
  ASSERT_EQ(exact.size(), 2u);
  for (const auto& s : exact) {
    EXPECT_EQ(s.mse, 0.0);
    EXPECT_EQ(s.bias_sq, 0.0);
    EXPECT_EQ(s.variance, 0.0);
    EXPECT_EQ(s.replicates_used, 3);
    EXPECT_EQ(s.n, 100);
  }
  const auto two = error_summary("ML", 4, {(truth.array() - 1).matrix(), (truth.array() + 1).matrix()}, truth);
  EXPECT_DOUBLE_EQ(two[0].mse, 1.0);
  EXPECT_DOUBLE_EQ(two[0].bias_sq, 0.0);
  EXPECT_DOUBLE_EQ(two[0].variance, 1.0);
}

TEST(ErrorSummary, DecompositionAndFiltering) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal(0.4, 2.0);
  std::vector<Vector> est;
  for (int i = 0; i < 300; ++i) est.push_back(Vector::Constant(1, std::exp(normal(rng))));
  const Vector truth = Vector::Constant(1, 1.0);
  const ParamBox box(Vector::Constant(1, 0.14), Vector::Constant(1, 11.4));
  const auto s = error_summary("CV", 25, est, truth, box)[0];
  int inside = 0;
  double mse = 0.0;
  for (const auto& e : est) {
    if (e(0) >= 0.14 && e(0) <= 11.4) {
      ++inside;
      mse += (e(0) - 1.0) * (e(0) - 1.0);
    }
  }
  EXPECT_EQ(s.replicates_used, inside);
  EXPECT_EQ(s.replicates_used + s.replicates_filtered, 300);
  EXPECT_GT(s.replicates_filtered, 0);
  EXPECT_NEAR(s.mse, mse / inside, 1e-12 * s.mse);
  EXPECT_NEAR(s.mse, s.bias_sq + s.variance, 1e-10 * s.mse);
  try {
    error_summary("CV", 25, {Vector::Constant(1, 100.0)}, truth, box);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AllFiltered);
  }
}

TEST(DecayCheck, DiagonalInverse) {
  const LocationSet ls = perturbed_grid(4, 2, 0.3, 1);
  Vector d(16);
  for (int i = 0; i < 16; ++i) d(i) = 1.0 + 0.1 * i;
  const DecayFit fit = decay_check(SymMatrix(Matrix(d.asDiagonal())), ls, 1.0, 5);
  EXPECT_DOUBLE_EQ(fit.c_sup_fit, 2.5);
  EXPECT_EQ(fit.violations, 0);
  int pairs = 0;
  for (std::size_t b = 0; b < fit.bins.size(); ++b) {
    pairs += fit.bins[b].count;
    if (b > 0) EXPECT_EQ(fit.bins[b].max_abs, 0.0);
    if (b > 0) EXPECT_EQ(fit.bins[b].lower, fit.bins[b - 1].upper);
  }
  EXPECT_EQ(pairs, 16 * 17 / 2);
}

TEST(DecayCheck, OrderInvariance) {
  const auto model = CovarianceModel::exponential(
      ParamBox((Vector(2) << 0.01, 0.1).finished(), (Vector(2) << 100, 12).finished()));
  const Vector theta = (Vector(2) << 1.5, 2.0).finished();
  const LocationSet ls = perturbed_grid(6, 2, 0.4, 2);
  std::vector<int> perm(36);
  for (int i = 0; i < 36; ++i) perm[i] = i;
  std::mt19937_64 rng(2);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix pts(36, 2);
  for (int i = 0; i < 36; ++i) pts.row(i) = ls.points().row(perm[i]);
  const LocationSet shuffled(pts);
  const auto a = decay_check(inverse(cholesky(model.cov_matrix(theta, ls))), ls, 1.0, 8);
  const auto b = decay_check(inverse(cholesky(model.cov_matrix(theta, shuffled))), shuffled, 1.0, 8);
  EXPECT_NEAR(a.c_sup_fit, b.c_sup_fit, 1e-12 * a.c_sup_fit);
  ASSERT_EQ(a.bins.size(), b.bins.size());
  for (std::size_t i = 0; i < a.bins.size(); ++i) {
    EXPECT_EQ(a.bins[i].count, b.bins[i].count);
    EXPECT_NEAR(a.bins[i].max_abs, b.bins[i].max_abs, 1e-12 * a.c_sup_fit);
  }
}

TEST(DecayCheck, ExponentialModelEnvelope) {
  const auto model = CovarianceModel::exponential(
      ParamBox((Vector(2) << 0.01, 0.1).finished(), (Vector(2) << 100, 12).finished()));
  const Vector theta = (Vector(2) << 1.5, 2.0).finished();
  std::vector<double> csup;
  for (int side : {10, 20}) {
    const LocationSet ls = perturbed_grid(side, 2, 0.4, 3);
    const auto fit = decay_check(inverse(cholesky(model.cov_matrix(theta, ls))), ls, 1.0, 10);
    EXPECT_EQ(fit.violations, 0);
    csup.push_back(fit.c_sup_fit);
    for (std::size_t b = 2; b < fit.bins.size(); ++b) {
      if (fit.bins[b].count == 0) continue;
      EXPECT_LE(fit.bins[b].max_abs, fit.bins[b - 1].max_abs) << side << " bin " << b;
    }
  }
  EXPECT_LE(csup[1], 1.5 * csup[0]);
}

TEST(DecayCheck, Errors) {
  const LocationSet ls = perturbed_grid(2, 2, 0.0, 1);
  const SymMatrix id(Matrix::Identity(4, 4));
  EXPECT_THROW(decay_check(id, ls, 0.0, 3), Error);
  EXPECT_THROW(decay_check(id, ls, 1.0, 0), Error);
  EXPECT_THROW(decay_check(SymMatrix(Matrix::Identity(3, 3)), ls, 1.0, 3), Error);
}

TEST(Wasserstein, BaselineMatchesBrownianBridgeApproximation) {
  // E W1 ~ sqrt(2/(pi n)) int sqrt(Phi(1-Phi)) dt for large n.
  double integral = 0.0;
  const double h = 1e-3;
  for (double t = -10.0; t < 10.0; t += h) {
    const double a = 0.5 * std::erfc(-t / std::numbers::sqrt2);
    const double b = 0.5 * std::erfc(-(t + h) / std::numbers::sqrt2);
    integral += 0.5 * h * (std::sqrt(a * (1 - a)) + std::sqrt(b * (1 - b)));
  }
  const int n = 250;
  const double approx_mean = std::sqrt(2.0 / (std::numbers::pi * n)) * integral;
  const double median = wasserstein1_baseline(n, 2000, 17);
  EXPECT_GT(median, 0.8 * approx_mean);
  EXPECT_LT(median, approx_mean);
  EXPECT_EQ(median, wasserstein1_baseline(n, 2000, 17));
  EXPECT_THROW(wasserstein1_baseline(0, 10, 1), Error);
}
