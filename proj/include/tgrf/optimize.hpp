#ifndef TGRF_OPTIMIZE_HPP
#define TGRF_OPTIMIZE_HPP

// Small-dimensional box-constrained minimization: projected quasi-Newton
// (BFGS inverse-Hessian update on the free variables, Armijo backtracking)
// with a Nelder-Mead fallback when the line search stalls.

#include "tgrf/linalg.hpp"

#include <functional>
#include <string>

namespace tgrf {

struct BoxProblem {
  // Objective value only; may return +inf where undefined.
  std::function<double(const Vector&)> value;
  // Objective value, writes the gradient.
  std::function<double(const Vector&, Vector&)> value_and_gradient;
  Vector lower;
  Vector upper;
};

struct MinimizeOptions {
  // Sup-norm of the projected gradient.
  double grad_tol = 1e-8;
  int max_iter = 200;
  // Largest step, in sup-norm, attempted by one line search.
  double max_step = 2.0;
  bool simplex_fallback = true;
};

struct MinimizeResult {
  Vector x;
  double value = 0.0;
  Vector gradient;
  double projected_grad_norm = 0.0;
  bool converged = false;
  bool used_simplex = false;
  int iterations = 0;
  int evaluations = 0;
  std::string message;
};

Vector project_to_box(const Vector& x, const Vector& lower, const Vector& upper);

/// Gradient with components zeroed where a bound is active and the gradient
/// points out of the box.
Vector projected_gradient(const Vector& x, const Vector& g, const Vector& lower,
                          const Vector& upper);

MinimizeResult minimize_box(const BoxProblem& problem, const Vector& x0,
                            const MinimizeOptions& opts = {});

/// Derivative-free Nelder-Mead restricted to the box by projection.
MinimizeResult nelder_mead_box(const BoxProblem& problem, const Vector& x0,
                               int max_evals, double initial_step);

}  // namespace tgrf

#endif  // TGRF_OPTIMIZE_HPP
