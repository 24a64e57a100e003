#include <atomic>
#include <cstdlib>

#include "commeval/simd/kernels.hpp"

namespace commeval::simd {

#if defined(COMMEVAL_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif
#if defined(COMMEVAL_HAVE_NEON)
const KernelTable& neon_kernels();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(COMMEVAL_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* find(std::string_view name) {
  for (const auto* table : available_kernels()) {
    if (table->name == name) return table;
  }
  return nullptr;
}

const KernelTable* default_selection() {
  if (const char* env = std::getenv("COMMEVAL_SIMD")) {
    if (const auto* pinned = find(env)) return pinned;
    return &scalar_kernels();
  }
  return available_kernels().back();
}

std::atomic<const KernelTable*>& selection() {
  static std::atomic<const KernelTable*> current{default_selection()};
  return current;
}

}  // namespace

std::vector<const KernelTable*> available_kernels() {
  std::vector<const KernelTable*> out{&scalar_kernels()};
#if defined(COMMEVAL_HAVE_AVX2)
  if (cpu_has_avx2()) out.push_back(&avx2_kernels());
#endif
#if defined(COMMEVAL_HAVE_NEON)
  // Advanced SIMD is mandatory on AArch64.
  out.push_back(&neon_kernels());
#endif
  return out;
}

const KernelTable& active_kernels() { return *selection().load(std::memory_order_acquire); }

bool force_kernels(std::string_view name) {
  const auto* table = find(name);
  if (!table) return false;
  selection().store(table, std::memory_order_release);
  return true;
}

void reset_kernel_selection() { selection().store(default_selection(), std::memory_order_release); }

}  // namespace commeval::simd
