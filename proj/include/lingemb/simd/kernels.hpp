#pragma once

// Dense double-precision vector kernels used by every inner loop of the
// embedding trainer and the classifiers.
//
// Each kernel has a scalar reference implementation and vectorized variants
// (AVX2+FMA on x86-64, NEON on AArch64). The variant is chosen once at
// startup from the CPU feature bits and can be overridden with the
// LINGEMB_SIMD environment variable ("scalar", "avx2", "neon") or with
// set_backend(). Vector variants reassociate sums, so results match the
// scalar reference to rounding, not bit for bit. Within one backend every
// kernel is deterministic.

#include <cstddef>
#include <span>
#include <string_view>

namespace lingemb::simd {

enum class Backend { Scalar, Avx2, Neon };

std::string_view to_string(Backend backend);

// True when the running CPU (and the build) can execute the backend.
bool backend_available(Backend backend);

Backend active_backend();

// Switches the process-wide kernel table. Throws Error(Parameter) when the
// backend is unavailable. Not thread-safe against concurrent kernel calls.
void set_backend(Backend backend);

// sum_i a[i] * b[i]
double dot(std::span<const double> a, std::span<const double> b);

// y[i] += alpha * x[i]
void axpy(double alpha, std::span<const double> x, std::span<double> y);

// x[i] *= alpha
void scale(double alpha, std::span<double> x);

// sum_i x[i]^2
double sum_squares(std::span<const double> x);

// Per-backend entry points, exposed for equivalence tests and benchmarks.
struct KernelTable {
    double (*dot)(const double* a, const double* b, std::size_t n);
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    void (*scale)(double alpha, double* x, std::size_t n);
    double (*sum_squares)(const double* x, std::size_t n);
};

const KernelTable& kernels_for(Backend backend);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
double sum_squares(const double* x, std::size_t n);
}  // namespace scalar

}  // namespace lingemb::simd
