#include <doctest.h>

#include <cmath>
#include <vector>

#include "recam/errors.hpp"
#include "recam/kernels.hpp"
#include "recam/rng.hpp"

using namespace recam;

namespace {

const std::vector<std::size_t> kSizes = {0, 1, 2, 3, 4, 5, 7, 8, 15, 16, 17, 31, 32, 33, 100, 257};

std::vector<double> random_vec(Rng& rng, std::size_t n, double scale = 4.0) {
    std::vector<double> v(n);
    for (double& x : v) {
        x = rng.uniform(-scale, scale);
    }
    return v;
}

// Every instruction set that this build can actually run.
std::vector<kernels::Isa> available_isas() {
    std::vector<kernels::Isa> isas;
    for (kernels::Isa isa : {kernels::Isa::scalar, kernels::Isa::avx2, kernels::Isa::neon}) {
        if (kernels::isa_available(isa)) {
            isas.push_back(isa);
        }
    }
    return isas;
}

}  // namespace

TEST_CASE("scalar kernels compute the reference semantics") {
    const auto& ops = kernels::scalar_ops();
    const std::vector<double> a = {1.0, -2.0, 3.0};
    const std::vector<double> b = {0.5, 4.0, -1.0};
    CHECK(ops.dot(a.data(), b.data(), 3) == doctest::Approx(1.0 * 0.5 - 2.0 * 4.0 - 3.0));
    CHECK(ops.sum(a.data(), 3) == doctest::Approx(2.0));
    CHECK(ops.max(a.data(), 3) == 3.0);
    CHECK(ops.max(a.data(), 0) == -std::numeric_limits<double>::infinity());

    std::vector<double> y = {1.0, 1.0, 1.0};
    ops.axpy(2.0, a.data(), y.data(), 3);
    CHECK(y[0] == 3.0);
    CHECK(y[1] == -3.0);
    CHECK(y[2] == 7.0);
}

TEST_CASE("vector variants agree with the scalar reference") {
    const auto& ref = kernels::scalar_ops();
    for (kernels::Isa isa : available_isas()) {
        CAPTURE(kernels::isa_name(isa));
        const kernels::Ops* ops = kernels::ops_for(isa);
        REQUIRE(ops != nullptr);
        Rng rng(mix_seed(99, static_cast<std::uint64_t>(isa)));

        for (std::size_t n : kSizes) {
            CAPTURE(n);
            const std::vector<double> a = random_vec(rng, n);
            const std::vector<double> b = random_vec(rng, n);

            // Element-wise ops use the same IEEE operations: exact match.
            std::vector<double> out_ref(n), out_isa(n);
            ref.add(a.data(), b.data(), out_ref.data(), n);
            ops->add(a.data(), b.data(), out_isa.data(), n);
            CHECK(out_ref == out_isa);

            ref.mul(a.data(), b.data(), out_ref.data(), n);
            ops->mul(a.data(), b.data(), out_isa.data(), n);
            CHECK(out_ref == out_isa);

            ref.shift(a.data(), 1.25, out_ref.data(), n);
            ops->shift(a.data(), 1.25, out_isa.data(), n);
            CHECK(out_ref == out_isa);

            std::vector<double> scale_ref = a;
            std::vector<double> scale_isa = a;
            ref.scale(-0.75, scale_ref.data(), n);
            ops->scale(-0.75, scale_isa.data(), n);
            CHECK(scale_ref == scale_isa);

            // Reductions may reassociate (and fuse): tolerance equivalence.
            const double dot_ref = ref.dot(a.data(), b.data(), n);
            const double dot_isa = ops->dot(a.data(), b.data(), n);
            CHECK(std::abs(dot_ref - dot_isa) <=
                  1e-12 * (1.0 + std::abs(dot_ref) + static_cast<double>(n)));

            const double sum_ref = ref.sum(a.data(), n);
            const double sum_isa = ops->sum(a.data(), n);
            CHECK(std::abs(sum_ref - sum_isa) <=
                  1e-12 * (1.0 + std::abs(sum_ref) + static_cast<double>(n)));

            CHECK(ref.max(a.data(), n) == ops->max(a.data(), n));

            std::vector<double> axpy_ref = b;
            std::vector<double> axpy_isa = b;
            ref.axpy(0.37, a.data(), axpy_ref.data(), n);
            ops->axpy(0.37, a.data(), axpy_isa.data(), n);
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(std::abs(axpy_ref[i] - axpy_isa[i]) <= 1e-14 * (1.0 + std::abs(axpy_ref[i])));
            }
        }
    }
}

TEST_CASE("kernel selection") {
    const kernels::Isa before = kernels::active_isa();

    kernels::select(kernels::Isa::scalar);
    CHECK(kernels::active_isa() == kernels::Isa::scalar);
    CHECK(&kernels::active() == &kernels::scalar_ops());

    CHECK_THROWS_AS(kernels::select("no-such-isa"), ConfigError);

    kernels::select("auto");
    // auto picks the best available set; scalar is always a valid answer
    CHECK(kernels::isa_available(kernels::active_isa()));

    kernels::select(before);
}
