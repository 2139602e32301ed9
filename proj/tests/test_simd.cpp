#include "doctest.h"

#include "lingemb/simd/kernels.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace lingemb::simd;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

std::vector<Backend> available_vector_backends() {
    std::vector<Backend> out;
    for (Backend b : {Backend::Avx2, Backend::Neon}) {
        if (backend_available(b)) out.push_back(b);
    }
    return out;
}

}  // namespace

TEST_CASE("scalar kernels on a hand example") {
    const std::vector<double> a{1, 2, 3};
    const std::vector<double> b{4, -5, 6};
    CHECK(scalar::dot(a.data(), b.data(), 3) == 12.0);
    CHECK(scalar::sum_squares(a.data(), 3) == 14.0);
    std::vector<double> y{1, 1, 1};
    scalar::axpy(2.0, a.data(), y.data(), 3);
    CHECK(y == std::vector<double>{3, 5, 7});
    scalar::scale(0.5, y.data(), 3);
    CHECK(y == std::vector<double>{1.5, 2.5, 3.5});
}

TEST_CASE("vector backends agree with the scalar reference") {
    std::mt19937_64 rng(7);
    const KernelTable& ref = kernels_for(Backend::Scalar);
    for (Backend backend : available_vector_backends()) {
        const KernelTable& vec = kernels_for(backend);
        CAPTURE(to_string(backend));
        for (std::size_t n = 0; n <= 67; ++n) {
            CAPTURE(n);
            const auto a = random_vector(n, rng);
            const auto b = random_vector(n, rng);
            const double bound = 1e-13 * (1.0 + static_cast<double>(n));
            CHECK(std::abs(vec.dot(a.data(), b.data(), n) - ref.dot(a.data(), b.data(), n)) <= bound);
            CHECK(std::abs(vec.sum_squares(a.data(), n) - ref.sum_squares(a.data(), n)) <= bound * 4);

            auto y_ref = b;
            auto y_vec = b;
            ref.axpy(-0.37, a.data(), y_ref.data(), n);
            vec.axpy(-0.37, a.data(), y_vec.data(), n);
            for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y_ref[i] - y_vec[i]) <= 1e-15 * (1 + std::abs(a[i]) + std::abs(b[i])));

            auto s_ref = a;
            auto s_vec = a;
            ref.scale(1.7, s_ref.data(), n);
            vec.scale(1.7, s_vec.data(), n);
            CHECK(s_ref == s_vec);
        }
    }
}

TEST_CASE("backend switching") {
    const Backend original = active_backend();
    set_backend(Backend::Scalar);
    CHECK(active_backend() == Backend::Scalar);
    const std::vector<double> a{1, 2, 3, 4, 5};
    CHECK(dot(a, a) == 55.0);
    set_backend(original);
    CHECK(active_backend() == original);
#if !defined(__aarch64__)
    CHECK_THROWS(set_backend(Backend::Neon));
#endif
}
