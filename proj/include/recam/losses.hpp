#pragma once

#include <span>
#include <vector>

namespace recam::losses {

// Floor inside log(); zero probabilities against nonzero targets clamp here
// instead of producing inf.
inline constexpr double kLogFloor = 1e-12;

struct SmoothingConfig {
    double alpha = 0.1;  // in [0, 1)
};

// (1 - alpha) * onehot(label) + alpha / k. Sums to one; the true class keeps
// the argmax for any alpha < (k-1)/k.
std::vector<double> smooth_labels(int label, int k, const SmoothingConfig& cfg);

// -sum_i target[i] * log(scores[i]), zero-target entries contribute exactly 0.
double cross_entropy(std::span<const double> scores, std::span<const double> target);

// Forward softmax + cross entropy against a target distribution, with the
// gradient wrt the logits (p - t). Loss is computed through cross_entropy so
// training and scoring read the same scalar.
struct SoftmaxCrossEntropy {
    double loss = 0.0;
    std::vector<double> probs;
    std::vector<double> d_logits;
};
SoftmaxCrossEntropy softmax_cross_entropy(std::span<const double> logits, std::span<const double> target);

// Trainable task-weighting parameters, stored as log sigma^2 so the variances
// stay positive without constraints.
struct UncertaintyParams {
    double log_var1 = 0.0;
    double log_var2 = 0.0;
};

// L1/(2 sigma1^2) + L2/(2 sigma2^2) + log(sigma1^2 sigma2^2)
// with sigma^2 = exp(log_var).
double uncertainty_combine(double l1, double l2, const UncertaintyParams& p);

struct UncertaintyGrads {
    double d_l1 = 0.0;       // weight on the L1 branch, exp(-log_var1)/2
    double d_l2 = 0.0;
    double d_log_var1 = 0.0;
    double d_log_var2 = 0.0;
};
UncertaintyGrads uncertainty_grads(double l1, double l2, const UncertaintyParams& p);

}  // namespace recam::losses
