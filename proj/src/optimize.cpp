#include "tgrf/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace tgrf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kArmijo = 1e-4;
// Relative change in f treated as round-off when comparing trial points.
constexpr double kNoise = 1e-13;

double safe_value(const BoxProblem& p, const Vector& x, int& evals) {
  ++evals;
  const double v = p.value(x);
  return std::isfinite(v) ? v : kInf;
}

double safe_value_grad(const BoxProblem& p, const Vector& x, Vector& g, int& evals) {
  ++evals;
  const double v = p.value_and_gradient(x, g);
  if (!std::isfinite(v) || !g.allFinite()) return kInf;
  return v;
}

}  // namespace

Vector project_to_box(const Vector& x, const Vector& lower, const Vector& upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}

Vector projected_gradient(const Vector& x, const Vector& g, const Vector& lower,
                          const Vector& upper) {
  Vector pg = g;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if ((x(i) <= lower(i) && g(i) > 0.0) || (x(i) >= upper(i) && g(i) < 0.0)) {
      pg(i) = 0.0;
    }
  }
  return pg;
}

MinimizeResult minimize_box(const BoxProblem& problem, const Vector& x0,
                            const MinimizeOptions& opts) {
  const Eigen::Index dim = x0.size();
  const Vector& lo = problem.lower;
  const Vector& hi = problem.upper;

  MinimizeResult res;
  Vector x = project_to_box(x0, lo, hi);
  Vector g(dim);
  double f = safe_value_grad(problem, x, g, res.evaluations);
  if (!std::isfinite(f)) {
    res.x = x;
    res.value = kInf;
    res.gradient = Vector::Zero(dim);
    res.message = "objective undefined at start";
    return res;
  }

  Matrix h = Matrix::Identity(dim, dim);
  bool stalled = false;
  bool fresh = true;
  std::vector<Eigen::Index> prev_free;

  for (res.iterations = 0; res.iterations < opts.max_iter; ++res.iterations) {
    const Vector pg = projected_gradient(x, g, lo, hi);
    if (pg.lpNorm<Eigen::Infinity>() <= opts.grad_tol) {
      res.converged = true;
      break;
    }

    // Free variables: not pinned at a bound by the gradient.
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < dim; ++i) {
      if (pg(i) != 0.0) free.push_back(i);
    }
    // Curvature collected on another face of the box does not transfer.
    if (free != prev_free) {
      h.setIdentity();
      fresh = true;
      prev_free = free;
    }

    auto direction = [&](const Matrix& hm) {
      Vector d = Vector::Zero(dim);
      for (Eigen::Index a : free) {
        for (Eigen::Index b : free) d(a) -= hm(a, b) * g(b);
      }
      return d;
    };

    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      if (attempt == 1) {
        h.setIdentity();
        fresh = true;
      }
      Vector d = direction(h);
      if (g.dot(d) >= 0.0) {
        h.setIdentity();
        fresh = true;
        d = direction(h);
      }
      const double dnorm = d.lpNorm<Eigen::Infinity>();
      if (dnorm > opts.max_step) d *= opts.max_step / dnorm;

      double alpha = 1.0;
      for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
        const Vector xn = project_to_box(x + alpha * d, lo, hi);
        const Vector s = xn - x;
        if (s.lpNorm<Eigen::Infinity>() == 0.0) break;
        const double fn = safe_value(problem, xn, res.evaluations);
        if (!std::isfinite(fn)) continue;

        const double decrease = g.dot(s);
        bool take = fn <= f + kArmijo * decrease;
        Vector gn(dim);
        double fg = kInf;
        if (take || std::abs(fn - f) <= kNoise * std::max(1.0, std::abs(f))) {
          fg = safe_value_grad(problem, xn, gn, res.evaluations);
          if (!std::isfinite(fg)) continue;
          // Inside round-off the value cannot rank points; the projected
          // gradient can.
          if (!take) {
            take = projected_gradient(xn, gn, lo, hi).lpNorm<Eigen::Infinity>() <
                   pg.lpNorm<Eigen::Infinity>();
          }
        }
        if (!take) continue;

        const Vector y = gn - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
          if (fresh) {
            h *= sy / y.squaredNorm();
            fresh = false;
          }
          const double rho = 1.0 / sy;
          const Matrix eye = Matrix::Identity(dim, dim);
          h = (eye - rho * s * y.transpose()) * h * (eye - rho * y * s.transpose()) +
              rho * s * s.transpose();
        }
        x = xn;
        f = fg;
        g = gn;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      stalled = true;
      break;
    }
  }

  res.x = x;
  res.value = f;
  res.gradient = g;
  res.projected_grad_norm =
      projected_gradient(x, g, lo, hi).lpNorm<Eigen::Infinity>();
  res.converged = res.projected_grad_norm <= opts.grad_tol;

  if (stalled && !res.converged && opts.simplex_fallback) {
    const double step = 0.05 * (hi - lo).minCoeff();
    MinimizeResult nm =
        nelder_mead_box(problem, x, 400 * static_cast<int>(dim), step);
    nm.evaluations += res.evaluations;
    nm.iterations += res.iterations;
    nm.used_simplex = true;
    nm.converged = nm.projected_grad_norm <= opts.grad_tol;
    if (nm.value <= res.value) {
      // Polish from the simplex point without a further fallback.
      MinimizeOptions polish = opts;
      polish.simplex_fallback = false;
      MinimizeResult q = minimize_box(problem, nm.x, polish);
      q.evaluations += nm.evaluations;
      q.iterations += nm.iterations;
      q.used_simplex = true;
      if (q.value <= nm.value) return q;
      return nm;
    }
    res.used_simplex = true;
    res.message = "line search stalled; simplex did not improve";
    return res;
  }
  if (stalled && !res.converged) res.message = "line search stalled";
  if (!stalled && !res.converged) res.message = "iteration cap reached";
  return res;
}

MinimizeResult nelder_mead_box(const BoxProblem& problem, const Vector& x0,
                               int max_evals, double initial_step) {
  const Eigen::Index dim = x0.size();
  const Vector& lo = problem.lower;
  const Vector& hi = problem.upper;
  MinimizeResult res;

  std::vector<Vector> pts;
  std::vector<double> vals;
  pts.push_back(project_to_box(x0, lo, hi));
  for (Eigen::Index i = 0; i < dim; ++i) {
    Vector p = pts[0];
    p(i) += (p(i) + initial_step <= hi(i)) ? initial_step : -initial_step;
    pts.push_back(project_to_box(p, lo, hi));
  }
  for (const auto& p : pts) vals.push_back(safe_value(problem, p, res.evaluations));

  std::vector<std::size_t> order(pts.size());
  while (res.evaluations < max_evals) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[order.size() - 2];

    const double spread = vals[worst] - vals[best];
    if (std::isfinite(spread) &&
        spread <= 1e-15 * std::max(1.0, std::abs(vals[best]))) {
      double size = 0.0;
      for (const auto& p : pts) size = std::max(size, (p - pts[best]).lpNorm<Eigen::Infinity>());
      if (size < 1e-10) break;
    }

    Vector centroid = Vector::Zero(dim);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (k != worst) centroid += pts[k];
    }
    centroid /= static_cast<double>(dim);

    auto trial = [&](double coef) {
      return project_to_box(centroid + coef * (pts[worst] - centroid), lo, hi);
    };
    const Vector xr = trial(-1.0);
    const double fr = safe_value(problem, xr, res.evaluations);
    if (fr < vals[best]) {
      const Vector xe = trial(-2.0);
      const double fe = safe_value(problem, xe, res.evaluations);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    const Vector xc = trial(fr < vals[worst] ? -0.5 : 0.5);
    const double fc = safe_value(problem, xc, res.evaluations);
    if (fc < std::min(fr, vals[worst])) {
      pts[worst] = xc;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (k == best) continue;
      pts[k] = pts[best] + 0.5 * (pts[k] - pts[best]);
      vals[k] = safe_value(problem, pts[k], res.evaluations);
    }
  }

  const auto best_it = std::min_element(vals.begin(), vals.end());
  const std::size_t best = static_cast<std::size_t>(best_it - vals.begin());
  res.x = pts[best];
  if (problem.value_and_gradient) {
    Vector g(dim);
    res.value = safe_value_grad(problem, res.x, g, res.evaluations);
    res.gradient = g;
    res.projected_grad_norm =
        std::isfinite(res.value)
            ? projected_gradient(res.x, g, lo, hi).lpNorm<Eigen::Infinity>()
            : kInf;
  } else {
    res.value = vals[best];
    res.projected_grad_norm = kInf;
  }
  res.used_simplex = true;
  res.message = "simplex";
  return res;
}

}  // namespace tgrf
