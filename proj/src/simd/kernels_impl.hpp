#pragma once

#include <cstddef>

#if defined(__x86_64__) || defined(_M_X64)
#define LINGEMB_SIMD_X86 1
#else
#define LINGEMB_SIMD_X86 0
#endif

#if defined(__aarch64__) || defined(_M_ARM64)
#define LINGEMB_SIMD_NEON 1
#else
#define LINGEMB_SIMD_NEON 0
#endif

namespace lingemb::simd {

#if LINGEMB_SIMD_X86
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
double sum_squares(const double* x, std::size_t n);
}  // namespace avx2
#endif

#if LINGEMB_SIMD_NEON
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
double sum_squares(const double* x, std::size_t n);
}  // namespace neon
#endif

}  // namespace lingemb::simd
