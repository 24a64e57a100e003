#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include "commeval/simd/kernels.hpp"

namespace commeval::simd {
namespace {

std::vector<float> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

// Double accumulation keeps reordering error far below float resolution.
double tolerance(std::size_t dim) { return 1e-12 * static_cast<double>(dim + 1); }

TEST(Kernels, ScalarIsAlwaysAvailable) {
  const auto all = available_kernels();
  ASSERT_FALSE(all.empty());
  EXPECT_EQ(all.front()->name, "scalar");
}

TEST(Kernels, EveryVariantMatchesScalar) {
  std::mt19937_64 rng(42);
  const auto& ref = scalar_kernels();
  for (const auto* k : available_kernels()) {
    SCOPED_TRACE(std::string(k->name));
    // Odd sizes exercise the tails.
    for (std::size_t dim : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 16u, 17u, 31u, 64u, 100u, 768u, 1023u}) {
      const auto a = random_vector(rng, dim);
      const auto b = random_vector(rng, dim);
      EXPECT_NEAR(k->dot(a.data(), b.data(), dim), ref.dot(a.data(), b.data(), dim), tolerance(dim));
      EXPECT_NEAR(k->squared_norm(a.data(), dim), ref.squared_norm(a.data(), dim), tolerance(dim));

      constexpr std::size_t rows = 9;
      std::vector<float> block;
      for (std::size_t r = 0; r < rows; ++r) {
        const auto row = random_vector(rng, dim);
        block.insert(block.end(), row.begin(), row.end());
      }
      std::vector<double> got(rows), want(rows);
      k->dot_rows(a.data(), block.data(), rows, dim, got.data());
      ref.dot_rows(a.data(), block.data(), rows, dim, want.data());
      for (std::size_t r = 0; r < rows; ++r) EXPECT_NEAR(got[r], want[r], tolerance(dim));
    }
  }
}

TEST(Kernels, ScalarHandlesExactValues) {
  const std::vector<float> a{1, 2, 3};
  const std::vector<float> b{4, 5, 6};
  EXPECT_EQ(scalar_kernels().dot(a.data(), b.data(), 3), 32.0);
  EXPECT_EQ(scalar_kernels().squared_norm(a.data(), 3), 14.0);
}

TEST(Kernels, ForceAndResetSelection) {
  EXPECT_TRUE(force_kernels("scalar"));
  EXPECT_EQ(active_kernels().name, "scalar");
  EXPECT_FALSE(force_kernels("no-such-isa"));
  EXPECT_EQ(active_kernels().name, "scalar");
  reset_kernel_selection();
  EXPECT_EQ(active_kernels().name, available_kernels().back()->name);
}

TEST(Kernels, EnvironmentPinsVariant) {
  ::setenv("COMMEVAL_SIMD", "scalar", 1);
  reset_kernel_selection();
  EXPECT_EQ(active_kernels().name, "scalar");
  ::setenv("COMMEVAL_SIMD", "bogus", 1);
  reset_kernel_selection();
  EXPECT_EQ(active_kernels().name, "scalar");
  ::unsetenv("COMMEVAL_SIMD");
  reset_kernel_selection();
}

TEST(Kernels, SpanHelpersUseActiveTable) {
  const std::vector<float> a{3, 4};
  EXPECT_EQ(squared_norm(a), 25.0);
  EXPECT_EQ(dot(a, a), 25.0);
}

}  // namespace
}  // namespace commeval::simd
