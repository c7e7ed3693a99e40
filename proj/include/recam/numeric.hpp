#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "recam/kernels.hpp"

namespace recam {

// Numerically stable softmax: subtract max, exponentiate, normalize.
inline std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.size());
    if (logits.empty()) {
        return out;
    }
    const double m = kernels::max(logits.data(), logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        total += out[i];
    }
    kernels::scale(1.0 / total, out.data(), out.size());
    return out;
}

inline double l2_norm_squared(std::span<const double> x) {
    return kernels::dot(x.data(), x.data(), x.size());
}

}  // namespace recam
