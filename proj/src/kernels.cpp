#include "tgrf/kernels.hpp"

namespace tgrf::kernels {

namespace omp {

double square_transform_contraction(const Matrix& a, const Matrix& b,
                                    const Matrix& k) {
  const Eigen::Index n = a.rows();
  const Matrix k2 = k.cwiseProduct(k);

  // 4 (K2_ik K2_jl + K2_il K2_jk) -> 8 tr(A K2 B K2)
  const Matrix ak2 = a * k2;
  const Matrix bk2 = b * k2;
  const double squares = 8.0 * trace_of_product(ak2, bk2);

  // 16 (K_ij K_il K_jk K_kl + K_ij K_ik K_jl K_kl): both contract B o K
  // between two K factors -> 32 <A o K, K (B o K) K>.
  const Matrix a_k = a.cwiseProduct(k);
  const Matrix kbk = k * b.cwiseProduct(k) * k;
  const double chains = 32.0 * a_k.cwiseProduct(kbk).sum();

  // 16 K_ik K_il K_jk K_jl: for each i, W = diag(K_i) K has columns
  // w_j = K_i o K_j and the term is sum_j A_ij w_j^T B w_j.
  std::vector<double> partial(static_cast<std::size_t>(n), 0.0);
#pragma omp parallel for schedule(dynamic, 1)
  for (Eigen::Index i = 0; i < n; ++i) {
    const Matrix w = k.col(i).asDiagonal() * k;
    const Matrix bw = b * w;
    const Vector forms = w.cwiseProduct(bw).colwise().sum().transpose();
    partial[static_cast<std::size_t>(i)] = a.row(i).dot(forms);
  }
  double cross = 0.0;
  for (double p : partial) cross += p;

  return squares + chains + 16.0 * cross;
}

double gaussian_contraction(const Matrix& a, const Matrix& b, const Matrix& k) {
  const Matrix ak = a * k;
  const Matrix bk = b * k;
  return 2.0 * trace_of_product(ak, bk);
}

}  // namespace omp

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace tgrf::kernels
