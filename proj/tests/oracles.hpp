#ifndef TGRF_TESTS_ORACLES_HPP
#define TGRF_TESTS_ORACLES_HPP

// Independent reference computations shared by the unit and acceptance
// tests. None of them calls the code path it is used to check.

#include "tgrf/covmodel.hpp"
#include "tgrf/linalg.hpp"
#include "tgrf/locations.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace tgrf::oracle {

/// E[X_{a_1} ... X_{a_m}] for a centred Gaussian vector with covariance k,
/// as the sum over all perfect matchings of the index list (Isserlis).
/// Accumulated in long double: the moments feed heavily cancelling sums.
inline long double gaussian_moment_ld(const Matrix& k, const std::vector<int>& idx) {
  if (idx.empty()) return 1.0L;
  if (idx.size() % 2 == 1) return 0.0L;
  const int first = idx.front();
  long double total = 0.0L;
  for (std::size_t m = 1; m < idx.size(); ++m) {
    std::vector<int> rest;
    for (std::size_t t = 1; t < idx.size(); ++t) {
      if (t != m) rest.push_back(idx[t]);
    }
    total += static_cast<long double>(k(first, idx[m])) * gaussian_moment_ld(k, rest);
  }
  return total;
}

inline double gaussian_moment(const Matrix& k, const std::vector<int>& idx) {
  return static_cast<double>(gaussian_moment_ld(k, idx));
}

/// Cov(Y_i Y_j, Y_k Y_l) for Y = Z^2 - diag(k), expanded by multilinearity
/// into Gaussian moments of Z of order up to 8.
inline double square_transform_cov4(const Matrix& k, int i, int j, int kk, int l) {
  // Y_a = Z_a Z_a - k_aa; a product of Y's is a sum over subsets choosing
  // either the pair (a, a) or the constant -k_aa.
  auto moment_y = [&](const std::vector<int>& ys) {
    const std::size_t m = ys.size();
    long double total = 0.0L;
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
      std::vector<int> zs;
      long double coef = 1.0L;
      for (std::size_t t = 0; t < m; ++t) {
        if (mask & (1u << t)) {
          zs.push_back(ys[t]);
          zs.push_back(ys[t]);
        } else {
          coef *= -k(ys[t], ys[t]);
        }
      }
      total += coef * gaussian_moment_ld(k, zs);
    }
    return total;
  };
  return static_cast<double>(moment_y({i, j, kk, l}) - moment_y({i, j}) * moment_y({kk, l}));
}

/// Brute-force leave-one-out: refit the simple-kriging predictor of y_i
/// from the other n - 1 values and return the mean squared error.
inline double loo_mse_by_refit(const Matrix& c, const Vector& y) {
  const Eigen::Index n = y.size();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) keep.push_back(j);
    }
    const auto m = static_cast<Eigen::Index>(keep.size());
    Matrix cc(m, m);
    Vector ci(m), yy(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      ci(a) = c(i, keep[a]);
      yy(a) = y(keep[a]);
      for (Eigen::Index b = 0; b < m; ++b) cc(a, b) = c(keep[a], keep[b]);
    }
    const double pred = ci.dot(cc.fullPivLu().solve(yy));
    sum += (y(i) - pred) * (y(i) - pred);
  }
  return sum / static_cast<double>(n);
}

/// Central finite-difference gradient with relative step h * max(1, |x_i|).
inline Vector fd_gradient(const std::function<double(const Vector&)>& f,
                          const Vector& x, double h = 1e-6) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(x(i)));
    Vector xp = x, xm = x;
    xp(i) += step;
    xm(i) -= step;
    g(i) = (f(xp) - f(xm)) / (2.0 * step);
  }
  return g;
}

/// Random symmetric positive definite matrix with eigenvalues in [lo, hi].
inline Matrix random_spd(Eigen::Index n, std::mt19937_64& rng, double lo = 0.5,
                         double hi = 5.0) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(lo, hi);
  Matrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = normal(rng);
  }
  const Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix q = qr.householderQ();
  Vector ev(n);
  for (Eigen::Index i = 0; i < n; ++i) ev(i) = unif(rng);
  return q * ev.asDiagonal() * q.transpose();
}

/// Random points, well separated by construction (a jittered grid shuffled).
inline LocationSet random_locations(Eigen::Index n, int dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  const int side = static_cast<int>(std::ceil(std::pow(static_cast<double>(n), 1.0 / dim)));
  Matrix pts(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index rest = i;
    for (int d = 0; d < dim; ++d) {
      pts(i, d) = static_cast<double>(rest % side) + jitter(rng);
      rest /= side;
    }
  }
  return LocationSet(pts);
}

/// Plain sample variance (1/(N-1)).
inline double sample_variance(const std::vector<double>& x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(x.size() - 1);
}

inline double sample_mean(const std::vector<double>& x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  return mean / static_cast<double>(x.size());
}

}  // namespace tgrf::oracle

#endif  // TGRF_TESTS_ORACLES_HPP
