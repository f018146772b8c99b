#ifndef TGRF_LINALG_HPP
#define TGRF_LINALG_HPP

// Dense symmetric linear algebra on full (not packed) column-major Eigen
// storage.

#include <Eigen/Dense>

#include <cstddef>

namespace tgrf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Symmetric matrix with exact symmetry. Construction replaces the input by
/// (m + m^T) / 2, so entries(i, j) == entries(j, i) bit for bit.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m);

  static SymMatrix identity(Eigen::Index order);
  static SymMatrix diagonal(const Vector& d);

  Eigen::Index order() const { return m_.rows(); }
  const Matrix& dense() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  Matrix m_;
};

/// Escalating diagonal jitter: attempt k (k = 1..max_escalations + 1) adds
/// base * growth^(k-1) * mean(diag). The defaults give {1e-10, 1e-8, 1e-6}.
struct JitterPolicy {
  double base = 1e-10;
  double growth = 100.0;
  int max_escalations = 2;

  static JitterPolicy none() { return {0.0, 1.0, -1}; }
};

class CholFactor {
 public:
  CholFactor(Matrix lower, double logdet, double jitter_applied);

  Eigen::Index order() const { return lower_.rows(); }
  const Matrix& lower() const { return lower_; }
  double logdet() const { return logdet_; }
  // Absolute diagonal shift that was added before factorizing (0 if exact).
  double jitter_applied() const { return jitter_; }

 private:
  Matrix lower_;
  double logdet_;
  double jitter_;
};

CholFactor cholesky(const SymMatrix& m, const JitterPolicy& policy = {});

Vector solve(const CholFactor& f, const Vector& b);
Matrix solve(const CholFactor& f, const Matrix& b);

SymMatrix inverse(const CholFactor& f);

struct EigenRange {
  double lambda_min;
  double lambda_max;
};

/// Smallest and largest eigenvalue. Full symmetric eigendecomposition up to
/// order 2000, power iterations beyond that.
EigenRange extreme_eigenvalues(const SymMatrix& m, double tol = 1e-10);

/// Symmetric matrix of (1/2)(m + m^T) for a general square matrix.
Matrix symmetrized(const Matrix& m);

/// trace(a * b) without forming the product.
double trace_of_product(const Matrix& a, const Matrix& b);

}  // namespace tgrf

#endif  // TGRF_LINALG_HPP
