#include "tgrf/linalg.hpp"

#include "tgrf/errors.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <string>

namespace tgrf {

namespace {

constexpr Eigen::Index kDenseEigenLimit = 2000;

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + ": matrix is " + std::to_string(m.rows()) +
                    "x" + std::to_string(m.cols()));
  }
}

// In-place lower Cholesky factor; false if a pivot is not positive.
bool potrf_lower(Matrix& a) {
  Eigen::LLT<Eigen::Ref<Matrix>, Eigen::Lower> llt(a);
  return llt.info() == Eigen::Success;
}

// Largest eigenvalue of a symmetric matrix by power iteration with a
// Rayleigh-quotient stopping rule.
double power_iteration(const Matrix& m, double tol, int budget) {
  Vector v = Vector::Ones(m.rows()).normalized();
  double lambda = v.dot(m * v);
  for (int it = 0; it < budget; ++it) {
    Vector w = m * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    const double next = v.dot(m * v);
    if (std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next))) {
      return next;
    }
    lambda = next;
  }
  throw Error(ErrorCode::ConvergenceFailure,
              "power iteration did not reach tolerance");
}

}  // namespace

SymMatrix::SymMatrix(const Matrix& m) {
  require_square(m, "SymMatrix");
  if (m.rows() < 1) {
    throw Error(ErrorCode::DimensionMismatch, "SymMatrix: order must be >= 1");
  }
  m_ = symmetrized(m);
}

SymMatrix SymMatrix::identity(Eigen::Index order) {
  return SymMatrix(Matrix::Identity(order, order));
}

SymMatrix SymMatrix::diagonal(const Vector& d) {
  return SymMatrix(Matrix(d.asDiagonal()));
}

CholFactor::CholFactor(Matrix lower, double logdet, double jitter_applied)
    : lower_(std::move(lower)), logdet_(logdet), jitter_(jitter_applied) {}

CholFactor cholesky(const SymMatrix& m, const JitterPolicy& policy) {
  const Matrix& dense = m.dense();
  const double mean_diag = dense.diagonal().mean();

  for (int attempt = 0; attempt <= policy.max_escalations + 1; ++attempt) {
    double shift = 0.0;
    if (attempt > 0) {
      shift = policy.base * std::pow(policy.growth, attempt - 1) * mean_diag;
    }
    Matrix a = dense;
    if (shift > 0.0) a.diagonal().array() += shift;
    if (!potrf_lower(a)) continue;

    a.triangularView<Eigen::StrictlyUpper>().setZero();
    const double logdet = 2.0 * a.diagonal().array().log().sum();
    return CholFactor(std::move(a), logdet, shift);
  }
  throw Error(ErrorCode::NotPositiveDefinite,
              "cholesky failed after " +
                  std::to_string(policy.max_escalations + 1) +
                  " jitter escalations (order " + std::to_string(m.order()) +
                  ")");
}

Matrix solve(const CholFactor& f, const Matrix& b) {
  if (b.rows() != f.order()) {
    throw Error(ErrorCode::DimensionMismatch,
                "solve: factor order " + std::to_string(f.order()) +
                    " vs right-hand side rows " + std::to_string(b.rows()));
  }
  Matrix x = b;
  if (x.size() == 0) return x;
  const auto lower = f.lower().triangularView<Eigen::Lower>();
  lower.solveInPlace(x);
  lower.transpose().solveInPlace(x);
  return x;
}

Vector solve(const CholFactor& f, const Vector& b) {
  if (b.size() != f.order()) {
    throw Error(ErrorCode::DimensionMismatch,
                "solve: factor order " + std::to_string(f.order()) +
                    " vs right-hand side size " + std::to_string(b.size()));
  }
  Vector x = b;
  const auto lower = f.lower().triangularView<Eigen::Lower>();
  lower.solveInPlace(x);
  lower.transpose().solveInPlace(x);
  return x;
}

SymMatrix inverse(const CholFactor& f) {
  // R^{-1} = L^{-T} L^{-1}
  Matrix linv = Matrix::Identity(f.order(), f.order());
  f.lower().triangularView<Eigen::Lower>().solveInPlace(linv);
  Matrix inv = Matrix::Zero(f.order(), f.order());
  inv.selfadjointView<Eigen::Lower>().rankUpdate(linv.transpose());
  inv.triangularView<Eigen::StrictlyUpper>() = inv.transpose();
  return SymMatrix(inv);
}

EigenRange extreme_eigenvalues(const SymMatrix& m, double tol) {
  const Matrix& a = m.dense();
  if (m.order() <= kDenseEigenLimit) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
      throw Error(ErrorCode::ConvergenceFailure,
                  "symmetric eigensolver failed");
    }
    const Vector& ev = solver.eigenvalues();
    return {ev.minCoeff(), ev.maxCoeff()};
  }

  // Gershgorin bound shifts the spectrum to be nonnegative so that power
  // iteration on (shift I - A) finds the smallest eigenvalue.
  const int budget = 20000;
  const double shift = (a.cwiseAbs().rowwise().sum()).maxCoeff();
  const double top = power_iteration(a + shift * Matrix::Identity(a.rows(), a.cols()),
                                     tol, budget) - shift;
  const double bottom =
      shift - power_iteration(shift * Matrix::Identity(a.rows(), a.cols()) - a,
                              tol, budget);
  return {bottom, top};
}

Matrix symmetrized(const Matrix& m) {
  require_square(m, "symmetrized");
  return 0.5 * (m + m.transpose());
}

double trace_of_product(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows() || a.rows() != b.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "trace_of_product");
  }
  // tr(AB) = sum_ij A_ij B_ji
  return a.cwiseProduct(b.transpose()).sum();
}

}  // namespace tgrf
