#include "commeval/simd/kernels.hpp"

namespace commeval::simd {
namespace {

double scalar_dot(const float* a, const float* b, std::size_t dim) {
  double acc = 0.0;
  for (std::size_t i = 0; i < dim; ++i) acc += static_cast<double>(a[i]) * b[i];
  return acc;
}

double scalar_squared_norm(const float* a, std::size_t dim) { return scalar_dot(a, a, dim); }

void scalar_dot_rows(const float* query, const float* rows, std::size_t n_rows, std::size_t dim,
                     double* out) {
  for (std::size_t r = 0; r < n_rows; ++r) out[r] = scalar_dot(query, rows + r * dim, dim);
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", scalar_dot, scalar_squared_norm, scalar_dot_rows};
  return table;
}

}  // namespace commeval::simd
