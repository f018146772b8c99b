#include "tgrf/locations.hpp"

#include "tgrf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

namespace tgrf {

double max_norm_distance(const Eigen::Ref<const Vector>& a,
                         const Eigen::Ref<const Vector>& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

LocationSet::LocationSet(Matrix points) : points_(std::move(points)) {
  if (points_.rows() < 1 || points_.cols() < 1) {
    throw Error(ErrorCode::InvalidArgument,
                "LocationSet needs at least one point of dimension >= 1");
  }
  if (!points_.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "LocationSet: non-finite coordinate");
  }
  const Eigen::Index n = points_.rows();
  double sep = std::numeric_limits<double>::infinity();
  double diam = 0.0;
  euclidean_ = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const auto diff = points_.row(i) - points_.row(j);
      const double h = diff.cwiseAbs().maxCoeff();
      sep = std::min(sep, h);
      diam = std::max(diam, h);
      euclidean_(i, j) = euclidean_(j, i) = diff.norm();
    }
  }
  if (n > 1 && sep == 0.0) {
    throw Error(ErrorCode::InvalidArgument, "LocationSet: coincident points");
  }
  min_separation_ = n > 1 ? sep : std::numeric_limits<double>::infinity();
  diameter_ = diam;
}

LocationSet perturbed_grid(int side, int dim, double halfwidth, Engine& engine) {
  if (side < 1) {
    throw Error(ErrorCode::InvalidArgument, "grid side must be >= 1");
  }
  if (dim < 1 || dim > 3) {
    throw Error(ErrorCode::InvalidArgument, "grid dimension must be 1, 2 or 3");
  }
  if (!(halfwidth >= 0.0) || halfwidth >= 0.5) {
    throw Error(ErrorCode::InvalidPerturbation,
                "perturbation half-width must lie in [0, 0.5), got " +
                    std::to_string(halfwidth));
  }
  Eigen::Index n = 1;
  for (int k = 0; k < dim; ++k) n *= side;

  Matrix pts(n, dim);
  std::uniform_real_distribution<double> unif(-halfwidth, halfwidth);
  for (Eigen::Index i = 0; i < n; ++i) {
    // First coordinate varies fastest.
    Eigen::Index rest = i;
    for (int k = 0; k < dim; ++k) {
      pts(i, k) = static_cast<double>(rest % side + 1);
      rest /= side;
    }
  }
  if (halfwidth > 0.0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int k = 0; k < dim; ++k) pts(i, k) += unif(engine);
    }
  }
  return LocationSet(std::move(pts));
}

LocationSet perturbed_grid(int side, int dim, double halfwidth,
                           std::uint64_t seed) {
  Engine engine = make_engine(seed, 0, Stream::Locations);
  return perturbed_grid(side, dim, halfwidth, engine);
}

bool check_separation(const LocationSet& ls, double delta) {
  return ls.min_separation() >= delta;
}

double min_separation(const Matrix& points) {
  double sep = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < points.rows(); ++j) {
      sep = std::min(sep, (points.row(i) - points.row(j)).cwiseAbs().maxCoeff());
    }
  }
  return sep;
}

bool check_separation(const Matrix& points, double delta) {
  return min_separation(points) >= delta;
}

void write_csv(std::ostream& out, const LocationSet& ls) {
  out << "index";
  for (int k = 0; k < ls.dim(); ++k) out << ",x" << (k + 1);
  out << '\n';
  out.precision(17);
  for (Eigen::Index i = 0; i < ls.size(); ++i) {
    out << i;
    for (int k = 0; k < ls.dim(); ++k) out << ',' << ls.points()(i, k);
    out << '\n';
  }
}

}  // namespace tgrf
