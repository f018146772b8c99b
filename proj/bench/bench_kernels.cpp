#include "tgrf/asymptotics.hpp"
#include "tgrf/covmodel.hpp"
#include "tgrf/kernels.hpp"
#include "tgrf/locations.hpp"

#include <benchmark/benchmark.h>

using namespace tgrf;

namespace {

struct Problem {
  Matrix k;
  Matrix a;
  Matrix b;
};

Problem make_problem(int side) {
  const auto model = CovarianceModel::exponential(
      ParamBox((Vector(2) << 0.01, 0.1).finished(), (Vector(2) << 100, 12).finished()));
  const LocationSet ls = perturbed_grid(side, 2, 0.4, std::uint64_t{1});
  Problem p;
  p.k = model.cov_matrix((Vector(2) << 1.5, 2.0).finished(), ls).dense();
  p.a = p.k.inverse();
  p.b = p.a * p.a;
  return p;
}

double isserlis(const Matrix& k, Eigen::Index i, Eigen::Index j, Eigen::Index kk, Eigen::Index l) {
  const double kik = k(i, kk), kjl = k(j, l), kil = k(i, l), kjk = k(j, kk);
  const double kij = k(i, j), kkl = k(kk, l);
  return 4.0 * (kik * kik * kjl * kjl + kil * kil * kjk * kjk) +
         16.0 * (kik * kil * kjk * kjl + kij * kil * kjk * kkl + kij * kik * kjl * kkl);
}

void BM_QuarticSerial(benchmark::State& state) {
  const Problem p = make_problem(static_cast<int>(state.range(0)));
  auto f = [&](Eigen::Index i, Eigen::Index j, Eigen::Index k, Eigen::Index l) {
    return isserlis(p.k, i, j, k, l);
  };
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::quartic_contraction(p.a, p.b, f));
}

void BM_QuarticOmp(benchmark::State& state) {
  const Problem p = make_problem(static_cast<int>(state.range(0)));
  auto f = [&](Eigen::Index i, Eigen::Index j, Eigen::Index k, Eigen::Index l) {
    return isserlis(p.k, i, j, k, l);
  };
  for (auto _ : state) benchmark::DoNotOptimize(kernels::omp::quartic_contraction(p.a, p.b, f));
}

void BM_QuarticStructured(benchmark::State& state) {
  const Problem p = make_problem(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::omp::square_transform_contraction(p.a, p.b, p.k));
  }
}

void BM_FillSerial(benchmark::State& state) {
  const Problem p = make_problem(static_cast<int>(state.range(0)));
  const Eigen::Index n = p.k.rows();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        kernels::serial::fill_symmetric(n, [&](Eigen::Index i, Eigen::Index j) { return std::exp(-p.k(i, j)); }));
  }
}

void BM_FillOmp(benchmark::State& state) {
  const Problem p = make_problem(static_cast<int>(state.range(0)));
  const Eigen::Index n = p.k.rows();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        kernels::omp::fill_symmetric(n, [&](Eigen::Index i, Eigen::Index j) { return std::exp(-p.k(i, j)); }));
  }
}

}  // namespace

BENCHMARK(BM_QuarticSerial)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_QuarticOmp)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_QuarticStructured)->Arg(4)->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FillSerial)->Arg(20)->Arg(30)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FillOmp)->Arg(20)->Arg(30)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
