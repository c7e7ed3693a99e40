#include <doctest.h>

#include <cmath>
#include <vector>

#include "recam/errors.hpp"
#include "recam/losses.hpp"
#include "recam/numeric.hpp"
#include "recam/rng.hpp"

using namespace recam;
using namespace recam::losses;

TEST_CASE("smooth_labels worked example") {
    const std::vector<double> v = smooth_labels(1, 5, {0.1});
    REQUIRE(v.size() == 5);
    CHECK(v[0] == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(v[1] == doctest::Approx(0.92).epsilon(1e-12));
    CHECK(v[2] == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(v[3] == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(v[4] == doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("smooth_labels alpha=0 is exactly one-hot") {
    const std::vector<double> v = smooth_labels(0, 5, {0.0});
    CHECK(v == std::vector<double>{1.0, 0.0, 0.0, 0.0, 0.0});
}

TEST_CASE("smooth_labels properties") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const int k = 2 + static_cast<int>(rng.below(8));
        const int label = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
        const double alpha = rng.uniform(0.0, 0.89);
        const std::vector<double> v = smooth_labels(label, k, {alpha});

        double total = 0.0;
        int argmax = 0;
        for (int i = 0; i < k; ++i) {
            total += v[static_cast<std::size_t>(i)];
            if (v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(argmax)]) {
                argmax = i;
            }
            CHECK(v[static_cast<std::size_t>(i)] >= alpha / k - 1e-15);
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        // alpha < (k-1)/k keeps the true class on top
        CHECK(argmax == label);
    }
}

TEST_CASE("smooth_labels validation") {
    CHECK_THROWS_AS(smooth_labels(5, 5, {0.1}), ValidationError);
    CHECK_THROWS_AS(smooth_labels(-1, 5, {0.1}), ValidationError);
    CHECK_THROWS_AS(smooth_labels(0, 5, {1.0}), ValidationError);
}

TEST_CASE("cross_entropy hand values") {
    const std::vector<double> onehot = {0.0, 1.0, 0.0, 0.0, 0.0};
    CHECK(cross_entropy(onehot, onehot) == 0.0);

    const std::vector<double> uniform(5, 0.2);
    const std::vector<double> first_hot = {1.0, 0.0, 0.0, 0.0, 0.0};
    CHECK(cross_entropy(uniform, first_hot) == doctest::Approx(std::log(5.0)).epsilon(1e-12));

    // Smoothed target against itself equals its entropy.
    const std::vector<double> smoothed = smooth_labels(1, 5, {0.1});
    double entropy = 0.0;
    for (double p : smoothed) {
        entropy -= p * std::log(p);
    }
    CHECK(cross_entropy(smoothed, smoothed) == doctest::Approx(entropy).epsilon(1e-12));
}

TEST_CASE("cross_entropy clamps zero scores instead of exploding") {
    const std::vector<double> scores = {0.0, 1.0};
    const std::vector<double> target = {0.5, 0.5};
    const double loss = cross_entropy(scores, target);
    CHECK(std::isfinite(loss));
    CHECK(loss == doctest::Approx(-0.5 * std::log(kLogFloor)).epsilon(1e-12));
}

TEST_CASE("cross_entropy is bitwise plain when smoothing is off") {
    const std::vector<double> scores = {0.1, 0.3, 0.2, 0.15, 0.25};
    const std::vector<double> onehot = {0.0, 0.0, 1.0, 0.0, 0.0};
    const std::vector<double> smoothed_off = smooth_labels(2, 5, {0.0});
    CHECK(cross_entropy(scores, smoothed_off) == cross_entropy(scores, onehot));
    CHECK(cross_entropy(scores, onehot) == -std::log(scores[2]));
}

TEST_CASE("softmax_cross_entropy gradient is p - t") {
    const std::vector<double> logits = {0.3, -1.2, 0.0, 2.0, 0.7};
    const std::vector<double> target = smooth_labels(3, 5, {0.1});
    const SoftmaxCrossEntropy out = softmax_cross_entropy(logits, target);
    const std::vector<double> probs = softmax(logits);
    CHECK(out.probs == probs);
    CHECK(out.loss == cross_entropy(probs, target));
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(out.d_logits[i] == doctest::Approx(probs[i] - target[i]).epsilon(1e-15));
    }
}

TEST_CASE("uncertainty_combine hand values") {
    // unit variances: 0.5*2 + 0.5*4 + 0
    CHECK(uncertainty_combine(2.0, 4.0, {0.0, 0.0}) == doctest::Approx(3.0).epsilon(1e-12));
    // sigma1^2 = e, sigma2^2 = 1: 1/e + 1 + 1
    CHECK(uncertainty_combine(2.0, 2.0, {1.0, 0.0}) ==
          doctest::Approx(std::exp(-1.0) + 2.0).epsilon(1e-12));
}

TEST_CASE("uncertainty gradient at the worked point") {
    const UncertaintyGrads g = uncertainty_grads(2.0, 2.0, {0.0, 0.0});
    CHECK(g.d_log_var1 == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(g.d_log_var2 == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(g.d_l1 == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("uncertainty matches the sigma-form on random triples") {
    Rng rng(17);
    for (int trial = 0; trial < 1000; ++trial) {
        const double l1 = rng.uniform(0.01, 8.0);
        const double l2 = rng.uniform(0.01, 8.0);
        const double lv1 = rng.uniform(-3.0, 3.0);
        const double lv2 = rng.uniform(-3.0, 3.0);
        const double sigma1_sq = std::exp(lv1);
        const double sigma2_sq = std::exp(lv2);
        const double sigma_form =
            l1 / (2.0 * sigma1_sq) + l2 / (2.0 * sigma2_sq) + std::log(sigma1_sq * sigma2_sq);
        const double ours = uncertainty_combine(l1, l2, {lv1, lv2});
        CHECK(std::abs(ours - sigma_form) <= 1e-9 * std::max(1.0, std::abs(sigma_form)));
    }
}

TEST_CASE("uncertainty minimizer satisfies sigma^2 = L/2") {
    // d/dlv [ e^{-lv} L/2 + lv ] = 0  =>  lv* = log(L/2)
    for (double l1 : {0.5, 1.0, 2.0, 7.0}) {
        const double lv_star = std::log(l1 / 2.0);
        const double at_star = uncertainty_combine(l1, 1.0, {lv_star, 0.0});
        for (double delta : {-0.5, -0.1, 0.1, 0.5}) {
            CHECK(uncertainty_combine(l1, 1.0, {lv_star + delta, 0.0}) > at_star);
        }
        CHECK(uncertainty_grads(l1, 1.0, {lv_star, 0.0}).d_log_var1 ==
              doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("uncertainty gradients match finite differences") {
    Rng rng(23);
    const double h = 1e-6;
    for (int trial = 0; trial < 100; ++trial) {
        const double l1 = rng.uniform(0.05, 5.0);
        const double l2 = rng.uniform(0.05, 5.0);
        const double lv1 = rng.uniform(-2.0, 2.0);
        const double lv2 = rng.uniform(-2.0, 2.0);
        const UncertaintyGrads g = uncertainty_grads(l1, l2, {lv1, lv2});
        const double fd1 =
            (uncertainty_combine(l1, l2, {lv1 + h, lv2}) - uncertainty_combine(l1, l2, {lv1 - h, lv2})) /
            (2.0 * h);
        const double fd2 =
            (uncertainty_combine(l1, l2, {lv1, lv2 + h}) - uncertainty_combine(l1, l2, {lv1, lv2 - h})) /
            (2.0 * h);
        CHECK(g.d_log_var1 == doctest::Approx(fd1).epsilon(1e-5));
        CHECK(g.d_log_var2 == doctest::Approx(fd2).epsilon(1e-5));
    }
}
