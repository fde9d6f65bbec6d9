#pragma once

// Dense inner-loop kernels. Every kernel has a scalar reference
// implementation and an AVX2/FMA variant; the variant is chosen once at
// startup from CPU features and may be overridden with SCE_SIMD=scalar.

#include <cstddef>
#include <span>
#include <string_view>

namespace sce::simd {

enum class Level { Scalar, Avx2 };

Level active_level();
void set_level(Level level);  // throws if the CPU lacks the requested level
bool cpu_supports(Level level);
std::string_view to_string(Level level);

/// Σ a_i b_i
double dot(std::span<const double> a, std::span<const double> b);

/// Σ (a_i − b_i)²
double sq_diff_sum(std::span<const double> a, std::span<const double> b);

/// y += alpha · x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

/// Σ a_i
double sum(std::span<const double> a);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sq_diff_sum(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double sum(const double* a, std::size_t n);
}  // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double sq_diff_sum(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double sum(const double* a, std::size_t n);
}  // namespace avx2

}  // namespace sce::simd
