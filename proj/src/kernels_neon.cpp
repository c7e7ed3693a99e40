// NEON kernels for aarch64. Compiled into the table only when the target
// has Advanced SIMD; float64x2 processes two doubles per vector.

#include "recam/kernels.hpp"

#if defined(__ARM_NEON) && defined(__aarch64__)

#include <arm_neon.h>

#include <limits>

namespace recam::kernels {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
    }
    double result = vaddvq_f64(acc);
    for (; i < n; ++i) {
        result += a[i] * b[i];
    }
    return result;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) {
        y[i] += alpha * x[i];
    }
}

void scale_neon(double alpha, double* x, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(x + i, vmulq_f64(vld1q_f64(x + i), va));
    }
    for (; i < n; ++i) {
        x[i] *= alpha;
    }
}

void add_neon(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    }
    for (; i < n; ++i) {
        out[i] = a[i] + b[i];
    }
}

void mul_neon(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    }
    for (; i < n; ++i) {
        out[i] = a[i] * b[i];
    }
}

void shift_neon(const double* a, double c, double* out, std::size_t n) {
    const float64x2_t vc = vdupq_n_f64(c);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vc));
    }
    for (; i < n; ++i) {
        out[i] = a[i] + c;
    }
}

double sum_neon(const double* x, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        acc = vaddq_f64(acc, vld1q_f64(x + i));
    }
    double result = vaddvq_f64(acc);
    for (; i < n; ++i) {
        result += x[i];
    }
    return result;
}

double max_neon(const double* x, std::size_t n) {
    double result = -std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    if (n >= 2) {
        float64x2_t acc = vld1q_f64(x);
        for (i = 2; i + 2 <= n; i += 2) {
            acc = vmaxq_f64(acc, vld1q_f64(x + i));
        }
        result = vmaxvq_f64(acc);
    }
    for (; i < n; ++i) {
        if (x[i] > result) {
            result = x[i];
        }
    }
    return result;
}

}  // namespace

const Ops* neon_ops() {
    static const Ops ops{dot_neon, axpy_neon, scale_neon, add_neon,
                         mul_neon, shift_neon, sum_neon,  max_neon};
    return &ops;
}

}  // namespace recam::kernels

#else

namespace recam::kernels {
const Ops* neon_ops() { return nullptr; }
}  // namespace recam::kernels

#endif
