#ifndef TGRF_LOCATIONS_HPP
#define TGRF_LOCATIONS_HPP

#include "tgrf/linalg.hpp"
#include "tgrf/rng.hpp"

#include <cstdint>
#include <iosfwd>

namespace tgrf {

/// Max-norm |x| = max_k |x_k|, the distance used for separation and tapering.
double max_norm_distance(const Eigen::Ref<const Vector>& a,
                         const Eigen::Ref<const Vector>& b);

/// Ordered set of distinct points in R^d. Points are stored row-wise.
/// Immutable after construction; the minimum pairwise max-norm separation is
/// computed once by an exact O(n^2) scan.
class LocationSet {
 public:
  explicit LocationSet(Matrix points);

  int dim() const { return static_cast<int>(points_.cols()); }
  Eigen::Index size() const { return points_.rows(); }
  const Matrix& points() const { return points_; }
  Vector point(Eigen::Index i) const { return points_.row(i).transpose(); }
  Vector lag(Eigen::Index i, Eigen::Index j) const {
    return (points_.row(i) - points_.row(j)).transpose();
  }
  double min_separation() const { return min_separation_; }
  // Largest pairwise max-norm distance.
  double diameter() const { return diameter_; }
  // Pairwise Euclidean distances, cached for covariance assembly.
  const Matrix& euclidean_distances() const { return euclidean_; }

 private:
  Matrix points_;
  double min_separation_ = 0.0;
  double diameter_ = 0.0;
  Matrix euclidean_;
};

/// side^dim points: the integer grid {1..side}^dim with i.i.d.
/// Uniform[-u, u]^dim perturbations. Minimum separation is at least 1 - 2u.
LocationSet perturbed_grid(int side, int dim, double halfwidth, Engine& engine);
LocationSet perturbed_grid(int side, int dim, double halfwidth,
                           std::uint64_t seed);

bool check_separation(const LocationSet& ls, double delta);
// Same test on a raw point list (rows), which may contain duplicates.
bool check_separation(const Matrix& points, double delta);
// Exact minimum pairwise max-norm distance of a raw point list.
double min_separation(const Matrix& points);

// CSV with columns index,x1..xd.
void write_csv(std::ostream& out, const LocationSet& ls);

}  // namespace tgrf

#endif  // TGRF_LOCATIONS_HPP
