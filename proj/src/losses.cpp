#include "recam/losses.hpp"

#include <cmath>

#include "recam/errors.hpp"
#include "recam/numeric.hpp"

namespace recam::losses {

std::vector<double> smooth_labels(int label, int k, const SmoothingConfig& cfg) {
    if (k <= 0) {
        throw ValidationError("class count must be positive");
    }
    if (label < 0 || label >= k) {
        throw ValidationError("label " + std::to_string(label) + " outside [0," + std::to_string(k - 1) + "]");
    }
    if (cfg.alpha < 0.0 || cfg.alpha >= 1.0) {
        throw ValidationError("smoothing alpha must be in [0, 1)");
    }
    std::vector<double> out(static_cast<std::size_t>(k), cfg.alpha / static_cast<double>(k));
    out[static_cast<std::size_t>(label)] += 1.0 - cfg.alpha;
    return out;
}

double cross_entropy(std::span<const double> scores, std::span<const double> target) {
    if (scores.size() != target.size()) {
        throw ValidationError("cross_entropy: size mismatch");
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (target[i] == 0.0) {
            continue;  // exact zero contribution, no 0 * log(0)
        }
        const double p = scores[i] < kLogFloor ? kLogFloor : scores[i];
        loss -= target[i] * std::log(p);
    }
    return loss;
}

SoftmaxCrossEntropy softmax_cross_entropy(std::span<const double> logits, std::span<const double> target) {
    SoftmaxCrossEntropy out;
    out.probs = softmax(logits);
    out.loss = cross_entropy(out.probs, target);
    out.d_logits.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out.d_logits[i] = out.probs[i] - target[i];
    }
    return out;
}

double uncertainty_combine(double l1, double l2, const UncertaintyParams& p) {
    return 0.5 * std::exp(-p.log_var1) * l1 + 0.5 * std::exp(-p.log_var2) * l2 + p.log_var1 + p.log_var2;
}

UncertaintyGrads uncertainty_grads(double l1, double l2, const UncertaintyParams& p) {
    UncertaintyGrads g;
    g.d_l1 = 0.5 * std::exp(-p.log_var1);
    g.d_l2 = 0.5 * std::exp(-p.log_var2);
    g.d_log_var1 = -g.d_l1 * l1 + 1.0;
    g.d_log_var2 = -g.d_l2 * l2 + 1.0;
    return g;
}

}  // namespace recam::losses
