#ifndef TGRF_KERNELS_HPP
#define TGRF_KERNELS_HPP

// Data-parallel inner loops. Every kernel in `omp` has a plain loop twin in
// `serial` that the tests use as the reference. Parallel reductions
// accumulate one partial per outer index and sum the partials in index
// order, so results do not depend on the thread count.

#include "tgrf/linalg.hpp"

#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tgrf::kernels {

namespace serial {

/// n x n symmetric matrix with entries f(i, j), f evaluated for i >= j only.
template <typename F>
Matrix fill_symmetric(Eigen::Index n, F&& f) {
  Matrix m(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const double v = f(i, j);
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

/// sum_{i,j,k,l} A_ij B_kl cov4(i, j, k, l), written out literally.
template <typename Cov4>
double quartic_contraction(const Matrix& a, const Matrix& b, Cov4&& cov4) {
  const Eigen::Index n = a.rows();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index l = 0; l < n; ++l) {
          total += a(i, j) * b(k, l) * cov4(i, j, k, l);
        }
      }
    }
  }
  return total;
}

}  // namespace serial

namespace omp {

template <typename F>
Matrix fill_symmetric(Eigen::Index n, F&& f) {
  Matrix m(n, n);
#pragma omp parallel for schedule(dynamic, 8)
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const double v = f(i, j);
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

template <typename Cov4>
double quartic_contraction(const Matrix& a, const Matrix& b, Cov4&& cov4) {
  const Eigen::Index n = a.rows();
  std::vector<double> partial(static_cast<std::size_t>(n), 0.0);
#pragma omp parallel for schedule(dynamic, 1)
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double aij = a(i, j);
      if (aij == 0.0) continue;
      for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index l = 0; l < n; ++l) {
          acc += aij * b(k, l) * cov4(i, j, k, l);
        }
      }
    }
    partial[static_cast<std::size_t>(i)] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

/// Structured evaluation of the quartic contraction for the centred square
/// transform Y = Z^2 - var(Z), where k is the latent covariance matrix and
/// a, b are symmetric. Four of the five Isserlis terms reduce to matrix
/// products; the remaining one is evaluated as n quadratic forms per row.
double square_transform_contraction(const Matrix& a, const Matrix& b,
                                    const Matrix& k);

/// Gaussian population: sum A_ij B_kl (K_ik K_jl + K_il K_jk) = 2 tr(AKBK)
/// for symmetric a, b.
double gaussian_contraction(const Matrix& a, const Matrix& b, const Matrix& k);

}  // namespace omp

/// Threads the omp kernels will use.
int max_threads();

}  // namespace tgrf::kernels

#endif  // TGRF_KERNELS_HPP
