#include "recam/kernels.hpp"

#include <limits>

// Reference kernels. Plain loops, no pragmas: these define the semantics the
// vector variants are tested against.

namespace recam::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        y[i] += alpha * x[i];
    }
}

void scale_scalar(double alpha, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        x[i] *= alpha;
    }
}

void add_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = a[i] + b[i];
    }
}

void mul_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = a[i] * b[i];
    }
}

void shift_scalar(const double* a, double c, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = a[i] + c;
    }
}

double sum_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += x[i];
    }
    return acc;
}

double max_scalar(const double* x, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] > m) {
            m = x[i];
        }
    }
    return m;
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops ops{dot_scalar, axpy_scalar, scale_scalar, add_scalar,
                         mul_scalar, shift_scalar, sum_scalar,  max_scalar};
    return ops;
}

}  // namespace recam::kernels
