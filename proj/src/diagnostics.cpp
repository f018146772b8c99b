#include "tgrf/diagnostics.hpp"

#include "tgrf/errors.hpp"
#include "tgrf/rng.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace tgrf {

namespace {

// G(t) = int_{-inf}^t Phi = t Phi(t) + phi(t)
double integrated_cdf(double t) { return t * normal_cdf(t) + normal_pdf(t); }

// int_a^b |p - Phi(t)| dt for a <= b.
double segment_distance(double a, double b, double p) {
  if (b <= a) return 0.0;
  const double crossing = p <= 0.0 ? -INFINITY : (p >= 1.0 ? INFINITY : normal_quantile(p));
  auto above = [&](double lo, double hi) {  // Phi >= p on [lo, hi]
    return integrated_cdf(hi) - integrated_cdf(lo) - p * (hi - lo);
  };
  auto below = [&](double lo, double hi) {
    return p * (hi - lo) - (integrated_cdf(hi) - integrated_cdf(lo));
  };
  if (crossing <= a) return above(a, b);
  if (crossing >= b) return below(a, b);
  return below(a, crossing) + above(crossing, b);
}

}  // namespace

double normal_cdf(double t) { return 0.5 * std::erfc(-t / std::numbers::sqrt2); }

double normal_pdf(double t) {
  return std::exp(-0.5 * t * t) * 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
}

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double wasserstein1_to_std_normal(const std::vector<double>& sample) {
  if (sample.empty()) throw Error(ErrorCode::EmptySample, "W1 of an empty sample");
  for (double x : sample) {
    if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, "W1: non-finite value");
  }
  std::vector<double> x = sample;
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());

  // Left tail: F_n = 0 below the minimum.
  double total = integrated_cdf(x.front());
  for (std::size_t k = 1; k < x.size(); ++k) {
    total += segment_distance(x[k - 1], x[k], static_cast<double>(k) / n);
  }
  // Right tail: int_b^inf (1 - Phi) = phi(b) - b (1 - Phi(b)).
  const double b = x.back();
  total += normal_pdf(b) - b * normal_cdf(-b);
  return total;
}

double wasserstein1_baseline(int sample_size, int draws, std::uint64_t seed) {
  if (sample_size < 1 || draws < 1) {
    throw Error(ErrorCode::EmptySample, "baseline needs sample_size >= 1 and draws >= 1");
  }
  std::vector<double> w(static_cast<std::size_t>(draws));
  std::vector<double> x(static_cast<std::size_t>(sample_size));
  for (int k = 0; k < draws; ++k) {
    Engine e = make_engine(seed, static_cast<std::uint64_t>(k), Stream::Auxiliary);
    std::normal_distribution<double> normal;
    for (auto& v : x) v = normal(e);
    w[static_cast<std::size_t>(k)] = wasserstein1_to_std_normal(x);
  }
  const auto mid = w.begin() + draws / 2;
  std::nth_element(w.begin(), mid, w.end());
  if (draws % 2 == 1) return *mid;
  return 0.5 * (*mid + *std::max_element(w.begin(), mid));
}

std::vector<double> standardize(const std::vector<double>& sample, double center,
                                std::optional<double> scale) {
  double s = 0.0;
  if (scale) {
    if (!(*scale > 0.0)) throw Error(ErrorCode::DegenerateScale, "scale must be > 0");
    s = *scale;
  } else {
    if (sample.size() < 2) {
      throw Error(ErrorCode::DegenerateScale, "empirical scale needs >= 2 samples");
    }
    double mean = 0.0;
    for (double v : sample) mean += v;
    mean /= static_cast<double>(sample.size());
    double ss = 0.0;
    for (double v : sample) ss += (v - mean) * (v - mean);
    s = std::sqrt(ss / static_cast<double>(sample.size() - 1));
    if (s < 1e-14) throw Error(ErrorCode::DegenerateScale, "empirical SD below 1e-14");
  }
  std::vector<double> out;
  out.reserve(sample.size());
  for (double v : sample) out.push_back((v - center) / s);
  return out;
}

std::vector<ErrorSummary> error_summary(const std::string& estimator, Eigen::Index n,
                                        const std::vector<Vector>& estimates,
                                        const Vector& truth,
                                        const std::optional<ParamBox>& filter) {
  const Eigen::Index p = truth.size();
  std::vector<const Vector*> kept;
  for (const Vector& e : estimates) {
    if (e.size() != p) throw Error(ErrorCode::DimensionMismatch, "estimate size vs truth");
    if (filter && !filter->contains(e)) continue;
    kept.push_back(&e);
  }
  if (estimates.empty()) throw Error(ErrorCode::EmptySample, "no estimates");
  if (kept.empty()) {
    throw Error(ErrorCode::AllFiltered,
                estimator + ": all " + std::to_string(estimates.size()) +
                    " replicates filtered");
  }
  const double count = static_cast<double>(kept.size());
  std::vector<ErrorSummary> out;
  for (Eigen::Index c = 0; c < p; ++c) {
    ErrorSummary s;
    s.estimator = estimator;
    s.coordinate = static_cast<int>(c);
    s.n = n;
    s.replicates_used = static_cast<int>(kept.size());
    s.replicates_filtered = static_cast<int>(estimates.size() - kept.size());
    double mean = 0.0;
    for (const Vector* e : kept) mean += (*e)(c);
    mean /= count;
    double var = 0.0, mse = 0.0;
    for (const Vector* e : kept) {
      var += ((*e)(c) - mean) * ((*e)(c) - mean);
      mse += ((*e)(c) - truth(c)) * ((*e)(c) - truth(c));
    }
    s.mean = mean;
    s.bias_sq = (mean - truth(c)) * (mean - truth(c));
    s.variance = var / count;
    s.mse = mse / count;
    out.push_back(s);
  }
  return out;
}

DecayFit decay_check(const SymMatrix& inv, const LocationSet& ls, double tau,
                     int n_bins) {
  if (!(tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "tau must be > 0");
  if (n_bins < 1) throw Error(ErrorCode::InvalidArgument, "n_bins must be >= 1");
  if (inv.order() != ls.size()) {
    throw Error(ErrorCode::DimensionMismatch, "inverse order vs location count");
  }
  const Eigen::Index n = ls.size();
  const double exponent = ls.dim() + tau;
  const Matrix& pts = ls.points();

  DecayFit fit;
  fit.tau = tau;
  const double width = ls.diameter() > 0.0 ? ls.diameter() / n_bins : 1.0;
  fit.bins.resize(static_cast<std::size_t>(n_bins));
  for (int b = 0; b < n_bins; ++b) {
    fit.bins[static_cast<std::size_t>(b)].lower = b * width;
    fit.bins[static_cast<std::size_t>(b)].upper = (b + 1) * width;
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double h = (pts.row(i) - pts.row(j)).cwiseAbs().maxCoeff();
      const double v = std::abs(inv(i, j));
      fit.c_sup_fit = std::max(fit.c_sup_fit, v * (1.0 + std::pow(h, exponent)));
      const auto b = std::min<std::size_t>(static_cast<std::size_t>(h / width),
                                           static_cast<std::size_t>(n_bins - 1));
      auto& bin = fit.bins[b];
      ++bin.count;
      bin.max_abs = std::max(bin.max_abs, v);
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double h = (pts.row(i) - pts.row(j)).cwiseAbs().maxCoeff();
      const double bound = fit.c_sup_fit / (1.0 + std::pow(h, exponent));
      if (std::abs(inv(i, j)) > bound * (1.0 + 1e-12)) ++fit.violations;
    }
  }
  return fit;
}

}  // namespace tgrf
