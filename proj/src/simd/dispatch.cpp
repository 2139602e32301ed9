#include "kernels_impl.hpp"
#include "lingemb/error.hpp"
#include "lingemb/simd/kernels.hpp"

#include <atomic>
#include <cassert>
#include <cstdlib>
#include <string>

namespace lingemb::simd {

namespace {

constexpr KernelTable kScalarTable{scalar::dot, scalar::axpy, scalar::scale, scalar::sum_squares};
#if LINGEMB_SIMD_X86
constexpr KernelTable kAvx2Table{avx2::dot, avx2::axpy, avx2::scale, avx2::sum_squares};
#endif
#if LINGEMB_SIMD_NEON
constexpr KernelTable kNeonTable{neon::dot, neon::axpy, neon::scale, neon::sum_squares};
#endif

Backend detect_best() {
    if (const char* forced = std::getenv("LINGEMB_SIMD")) {
        const std::string name(forced);
        if (name == "scalar") return Backend::Scalar;
        if (name == "avx2" && backend_available(Backend::Avx2)) return Backend::Avx2;
        if (name == "neon" && backend_available(Backend::Neon)) return Backend::Neon;
    }
    if (backend_available(Backend::Avx2)) return Backend::Avx2;
    if (backend_available(Backend::Neon)) return Backend::Neon;
    return Backend::Scalar;
}

struct Active {
    Backend backend;
    const KernelTable* table;
};

Active& active() {
    static Active state = [] {
        const Backend b = detect_best();
        return Active{b, &kernels_for(b)};
    }();
    return state;
}

}  // namespace

std::string_view to_string(Backend backend) {
    switch (backend) {
        case Backend::Scalar: return "scalar";
        case Backend::Avx2: return "avx2";
        case Backend::Neon: return "neon";
    }
    return "unknown";
}

bool backend_available(Backend backend) {
    switch (backend) {
        case Backend::Scalar: return true;
        case Backend::Avx2:
#if LINGEMB_SIMD_X86 && (defined(__GNUC__) || defined(__clang__))
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Backend::Neon: return LINGEMB_SIMD_NEON != 0;
    }
    return false;
}

const KernelTable& kernels_for(Backend backend) {
    switch (backend) {
#if LINGEMB_SIMD_X86
        case Backend::Avx2: return kAvx2Table;
#endif
#if LINGEMB_SIMD_NEON
        case Backend::Neon: return kNeonTable;
#endif
        default: return kScalarTable;
    }
}

Backend active_backend() { return active().backend; }

void set_backend(Backend backend) {
    if (!backend_available(backend)) {
        fail(ErrorKind::Parameter,
             "SIMD backend '" + std::string(to_string(backend)) + "' is not available on this CPU");
    }
    active() = Active{backend, &kernels_for(backend)};
}

double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    return active().table->dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    active().table->axpy(alpha, x.data(), y.data(), x.size());
}

void scale(double alpha, std::span<double> x) {
    active().table->scale(alpha, x.data(), x.size());
}

double sum_squares(std::span<const double> x) {
    return active().table->sum_squares(x.data(), x.size());
}

}  // namespace lingemb::simd
