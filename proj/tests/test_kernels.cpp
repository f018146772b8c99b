#include "oracles.hpp"
#include "tgrf/asymptotics.hpp"
#include "tgrf/kernels.hpp"
#include "tgrf/rng.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace tgrf;

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  Engine a = make_engine(1, 0, Stream::Field);
  Engine b = make_engine(1, 0, Stream::Field);
  EXPECT_EQ(a(), b());
  std::set<std::uint64_t> firsts;
  for (std::uint64_t rep = 0; rep < 50; ++rep) {
    for (Stream s : {Stream::Locations, Stream::Field, Stream::Multistart}) {
      firsts.insert(make_engine(1, rep, s)());
    }
  }
  EXPECT_EQ(firsts.size(), 150u);
  EXPECT_NE(mix_key(1, 2, 3), mix_key(1, 3, 2));
}

TEST(Kernels, FillSymmetricMatchesSerial) {
  auto f = [](Eigen::Index i, Eigen::Index j) {
    return std::sin(static_cast<double>(3 * i + j)) + static_cast<double>(i * j);
  };
  const Matrix s = kernels::serial::fill_symmetric(37, f);
  const Matrix p = kernels::omp::fill_symmetric(37, f);
  EXPECT_EQ(s, p);
  EXPECT_EQ(s, s.transpose());
}

class ContractionTest : public ::testing::TestWithParam<int> {};

TEST_P(ContractionTest, ParallelAndStructuredMatchSerialLoop) {
  const int n = GetParam();
  std::mt19937_64 rng(static_cast<std::uint64_t>(n));
  const Matrix k = oracle::random_spd(n, rng, 0.2, 2.0);
  Matrix a = Matrix::Random(n, n);
  Matrix b = Matrix::Random(n, n);
  a = 0.5 * (a + a.transpose()).eval();
  b = 0.5 * (b + b.transpose()).eval();
  const SymMatrix ks(k);

  auto sq = [&](Eigen::Index i, Eigen::Index j, Eigen::Index kk, Eigen::Index l) {
    return isserlis_cov4(ks, i, j, kk, l);
  };
  auto ga = [&](Eigen::Index i, Eigen::Index j, Eigen::Index kk, Eigen::Index l) {
    return gaussian_cov4(ks, i, j, kk, l);
  };

  const double ref_sq = kernels::serial::quartic_contraction(a, b, sq);
  const double omp_sq = kernels::omp::quartic_contraction(a, b, sq);
  const double str_sq = kernels::omp::square_transform_contraction(a, b, k);
  const double tol_sq = 1e-10 * std::max(1.0, std::abs(ref_sq));
  EXPECT_NEAR(omp_sq, ref_sq, tol_sq);
  EXPECT_NEAR(str_sq, ref_sq, tol_sq);

  const double ref_g = kernels::serial::quartic_contraction(a, b, ga);
  const double str_g = kernels::omp::gaussian_contraction(a, b, k);
  EXPECT_NEAR(str_g, ref_g, 1e-10 * std::max(1.0, std::abs(ref_g)));
}

INSTANTIATE_TEST_SUITE_P(Sizes, ContractionTest, ::testing::Values(1, 2, 3, 7, 16));

TEST(Kernels, QuarticContractionIsThreadCountInvariant) {
  std::mt19937_64 rng(5);
  const int n = 12;
  const Matrix k = oracle::random_spd(n, rng);
  const Matrix a = Matrix::Random(n, n);
  const SymMatrix ks(k);
  auto sq = [&](Eigen::Index i, Eigen::Index j, Eigen::Index kk, Eigen::Index l) {
    return isserlis_cov4(ks, i, j, kk, l);
  };
#ifdef _OPENMP
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const double one = kernels::omp::quartic_contraction(a, a, sq);
  omp_set_num_threads(4);
  const double four = kernels::omp::quartic_contraction(a, a, sq);
  omp_set_num_threads(saved);
  EXPECT_EQ(one, four);
#endif
  EXPECT_GE(kernels::max_threads(), 1);
}
