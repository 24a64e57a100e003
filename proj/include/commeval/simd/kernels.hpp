#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

// Float-storage, double-accumulation vector kernels used by the embedding
// metrics. Every variant must agree with the scalar table to within
// summation-order rounding; tests/simd_kernels_test.cpp checks this.
namespace commeval::simd {

struct KernelTable {
  std::string_view name;
  double (*dot)(const float* a, const float* b, std::size_t dim);
  double (*squared_norm)(const float* a, std::size_t dim);
  // out[r] = dot(query, rows + r * dim) for r in [0, n_rows).
  void (*dot_rows)(const float* query, const float* rows, std::size_t n_rows, std::size_t dim,
                   double* out);
};

const KernelTable& scalar_kernels();

// Variants compiled into this binary and supported by the running CPU.
std::vector<const KernelTable*> available_kernels();

// Best supported variant, unless COMMEVAL_SIMD=<name> or force_kernels()
// pins one. Unknown or unsupported names fall back to scalar.
const KernelTable& active_kernels();

// Returns false (and leaves the selection unchanged) if `name` is not available.
bool force_kernels(std::string_view name);
void reset_kernel_selection();

inline double dot(std::span<const float> a, std::span<const float> b) {
  return active_kernels().dot(a.data(), b.data(), a.size());
}

inline double squared_norm(std::span<const float> a) {
  return active_kernels().squared_norm(a.data(), a.size());
}

}  // namespace commeval::simd
