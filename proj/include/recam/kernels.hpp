#pragma once

#include <cstddef>
#include <string>
#include <string_view>

// Double-precision vector kernels behind a runtime-selected dispatch table.
// Scalar versions are the reference semantics; AVX2/NEON variants must agree
// with them (exactly for element-wise ops, to reduction tolerance for dot/sum,
// see tests/test_kernels.cpp). Selection happens once, at first use:
//   1. RECAM_KERNELS env var ("scalar" | "avx2" | "neon" | "auto"), then
//   2. best instruction set the CPU reports.
namespace recam::kernels {

enum class Isa { scalar, avx2, neon };

struct Ops {
    // dot(a, b, n) -> sum_i a[i]*b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // x[i] *= alpha
    void (*scale)(double alpha, double* x, std::size_t n);
    // out[i] = a[i] + b[i]
    void (*add)(const double* a, const double* b, double* out, std::size_t n);
    // out[i] = a[i] * b[i]
    void (*mul)(const double* a, const double* b, double* out, std::size_t n);
    // out[i] = a[i] + c
    void (*shift)(const double* a, double c, double* out, std::size_t n);
    // sum_i x[i]
    double (*sum)(const double* x, std::size_t n);
    // max_i x[i]; n == 0 -> -inf
    double (*max)(const double* x, std::size_t n);
};

const Ops& scalar_ops();

// Table for a specific instruction set, or nullptr when this build/CPU
// cannot run it.
const Ops* ops_for(Isa isa);

bool isa_available(Isa isa);
const char* isa_name(Isa isa);

// The active table. First call resolves RECAM_KERNELS / CPU detection.
const Ops& active();
Isa active_isa();

// Force a specific table (used by the CLI --kernels flag and by the
// equivalence tests). Throws ConfigError if the set is unavailable.
void select(Isa isa);
void select(std::string_view name);  // "scalar" | "avx2" | "neon" | "auto"

// Convenience forwarders through the active table.
inline double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) { active().axpy(alpha, x, y, n); }
inline void scale(double alpha, double* x, std::size_t n) { active().scale(alpha, x, n); }
inline void add(const double* a, const double* b, double* out, std::size_t n) { active().add(a, b, out, n); }
inline void mul(const double* a, const double* b, double* out, std::size_t n) { active().mul(a, b, out, n); }
inline void shift(const double* a, double c, double* out, std::size_t n) { active().shift(a, c, out, n); }
inline double sum(const double* x, std::size_t n) { return active().sum(x, n); }
inline double max(const double* x, std::size_t n) { return active().max(x, n); }

}  // namespace recam::kernels
