// AVX2 + FMA kernels. This translation unit is the only one compiled with
// -mavx2 -mfma; callers reach it through the dispatch table after a runtime
// CPU check, so the binary stays safe on older x86.

#include "recam/kernels.hpp"

#if defined(RECAM_HAVE_AVX2)

#include <cmath>
#include <immintrin.h>

#include <limits>

namespace recam::kernels {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d va = _mm256_loadu_pd(a + i);
        __m256d vb = _mm256_loadu_pd(b + i);
        acc = _mm256_fmadd_pd(va, vb, acc);
    }
    double result = hsum(acc);
    for (; i < n; ++i) {
        result += a[i] * b[i];
    }
    return result;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vx = _mm256_loadu_pd(x + i);
        __m256d vy = _mm256_loadu_pd(y + i);
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, vx, vy));
    }
    for (; i < n; ++i) {
        y[i] = std::fma(alpha, x[i], y[i]);
    }
}

void scale_avx2(double alpha, double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), va));
    }
    for (; i < n; ++i) {
        x[i] *= alpha;
    }
}

void add_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) {
        out[i] = a[i] + b[i];
    }
}

void mul_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) {
        out[i] = a[i] * b[i];
    }
}

void shift_avx2(const double* a, double c, double* out, std::size_t n) {
    const __m256d vc = _mm256_set1_pd(c);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), vc));
    }
    for (; i < n; ++i) {
        out[i] = a[i] + c;
    }
}

double sum_avx2(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    }
    double result = hsum(acc);
    for (; i < n; ++i) {
        result += x[i];
    }
    return result;
}

double max_avx2(const double* x, std::size_t n) {
    double result = -std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    if (n >= 4) {
        __m256d acc = _mm256_loadu_pd(x);
        for (i = 4; i + 4 <= n; i += 4) {
            acc = _mm256_max_pd(acc, _mm256_loadu_pd(x + i));
        }
        double lanes[4];
        _mm256_storeu_pd(lanes, acc);
        for (double v : lanes) {
            if (v > result) {
                result = v;
            }
        }
    }
    for (; i < n; ++i) {
        if (x[i] > result) {
            result = x[i];
        }
    }
    return result;
}

}  // namespace

const Ops* avx2_ops() {
    static const Ops ops{dot_avx2, axpy_avx2, scale_avx2, add_avx2,
                         mul_avx2, shift_avx2, sum_avx2,  max_avx2};
    return &ops;
}

}  // namespace recam::kernels

#else

namespace recam::kernels {
const Ops* avx2_ops() { return nullptr; }
}  // namespace recam::kernels

#endif  // RECAM_HAVE_AVX2
