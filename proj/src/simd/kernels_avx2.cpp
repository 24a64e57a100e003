#include <immintrin.h>

#include "commeval/simd/kernels.hpp"

namespace commeval::simd {
namespace {

inline double horizontal_sum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d sum = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(sum, _mm_unpackhi_pd(sum, sum)));
}

double avx2_dot(const float* a, const float* b, std::size_t dim) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= dim; i += 8) {
    const __m256 va = _mm256_loadu_ps(a + i);
    const __m256 vb = _mm256_loadu_ps(b + i);
    acc0 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(va)),
                           _mm256_cvtps_pd(_mm256_castps256_ps128(vb)), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(va, 1)),
                           _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1)), acc1);
  }
  double acc = horizontal_sum(_mm256_add_pd(acc0, acc1));
  for (; i < dim; ++i) acc += static_cast<double>(a[i]) * b[i];
  return acc;
}

double avx2_squared_norm(const float* a, std::size_t dim) { return avx2_dot(a, a, dim); }

void avx2_dot_rows(const float* query, const float* rows, std::size_t n_rows, std::size_t dim,
                   double* out) {
  for (std::size_t r = 0; r < n_rows; ++r) out[r] = avx2_dot(query, rows + r * dim, dim);
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{"avx2", avx2_dot, avx2_squared_norm, avx2_dot_rows};
  return table;
}

}  // namespace commeval::simd
