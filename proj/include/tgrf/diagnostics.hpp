#ifndef TGRF_DIAGNOSTICS_HPP
#define TGRF_DIAGNOSTICS_HPP

#include "tgrf/covmodel.hpp"
#include "tgrf/linalg.hpp"
#include "tgrf/locations.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tgrf {

/// W1(F_n, Phi) = int |F_n(t) - Phi(t)| dt, integrated exactly between
/// order statistics with closed-form tails.
double wasserstein1_to_std_normal(const std::vector<double>& sample);

/// Median of W1 over `draws` standard-normal samples of size `sample_size`:
/// the sampling-noise floor of the distance at that size.
double wasserstein1_baseline(int sample_size, int draws, std::uint64_t seed);

double normal_cdf(double t);
double normal_pdf(double t);
double normal_quantile(double p);

/// (x - center) / scale. Without a scale, the sample standard deviation
/// (1/(N-1)) is used.
std::vector<double> standardize(const std::vector<double>& sample, double center,
                                std::optional<double> scale = std::nullopt);

/// Error decomposition of one coordinate about the truth. The variance uses
/// 1/N so that mse == bias_sq + variance up to rounding.
struct ErrorSummary {
  std::string estimator;
  int coordinate = 0;
  Eigen::Index n = 0;
  int replicates_used = 0;
  int replicates_filtered = 0;
  double mean = 0.0;
  double mse = 0.0;
  double bias_sq = 0.0;
  double variance = 0.0;
};

/// One summary per coordinate. Rows (replicates) with any coordinate
/// outside `filter` are excluded and counted.
std::vector<ErrorSummary> error_summary(const std::string& estimator,
                                        Eigen::Index n,
                                        const std::vector<Vector>& estimates,
                                        const Vector& truth,
                                        const std::optional<ParamBox>& filter = std::nullopt);

struct DecayBin {
  double lower = 0.0;
  double upper = 0.0;
  int count = 0;
  double max_abs = 0.0;
};

/// Envelope fit |inv_ij| <= c_sup / (1 + h_ij^(d + tau)), h the max-norm
/// distance between sites.
struct DecayFit {
  double tau = 0.0;
  double c_sup_fit = 0.0;
  std::vector<DecayBin> bins;
  int violations = 0;
};

DecayFit decay_check(const SymMatrix& inv, const LocationSet& ls, double tau,
                     int n_bins);

}  // namespace tgrf

#endif  // TGRF_DIAGNOSTICS_HPP
