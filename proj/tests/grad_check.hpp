#pragma once

// Central finite-difference check of the end-to-end loss gradient against
// the analytic backward pass, sampling coordinates from every parameter
// tensor (encoder, head, uncertainty). Independent of the backward path it
// verifies: the reference value is two forward evaluations per coordinate.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "recam/backends.hpp"
#include "recam/config.hpp"
#include "recam/model.hpp"
#include "recam/rng.hpp"
#include "recam/train.hpp"

#include "test_support.hpp"

namespace recam::testsupport {

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string worst_coordinate;
    std::size_t checked = 0;
    std::size_t meaningful = 0;  // coordinates with a non-negligible gradient
};

inline GradCheckResult gradient_check(bool siamese, std::size_t coords_per_tensor, double step_size,
                                      std::uint64_t seed = 11) {
    RunConfig config;
    config.allow_unsafe = true;
    config.max_input_length = 64;
    config.seed = seed;
    config.use_siamese = siamese;
    config.use_label_smoothing = true;  // exercises the smoothed-target path
    config.label_smoothing_alpha = 0.1;

    const data::DatasetSplit split = fixture_split(2, "train");
    text::Tokenizer tokenizer = training::fit_tokenizer(split, config);
    backends::TransformerEncoder encoder(backends::tiny_encoder_config(
        tokenizer.size(), static_cast<std::size_t>(config.max_input_length), config.seed));
    model::ClassifierHead head(encoder.hidden_size(), config.head_hidden_layers, config.seed);

    const std::vector<training::PreparedExample> prepared =
        training::prepare_split(split, tokenizer, config);
    std::vector<const training::PreparedExample*> batch;
    for (const auto& pe : prepared) {
        batch.push_back(&pe);
    }

    std::vector<double> uncertainty = {0.1, -0.2};  // off-origin so both terms matter
    std::vector<double> uncertainty_grads(2, 0.0);

    encoder.zero_grad();
    head.zero_grad();
    training::compute_batch(batch, encoder, head, uncertainty, uncertainty_grads, config, true);

    struct Coordinate {
        std::string name;
        double* param;
        double analytic;
    };
    std::vector<Coordinate> coords;
    Rng rng(mix_seed(seed, 0x46444348));
    auto sample_groups = [&](std::span<double> params, std::span<double> grads,
                             const std::vector<model::ParamGroup>& groups) {
        for (const model::ParamGroup& g : groups) {
            for (std::size_t s = 0; s < std::min(coords_per_tensor, g.size); ++s) {
                const std::size_t i = g.offset + static_cast<std::size_t>(rng.below(g.size));
                coords.push_back({g.name + "[" + std::to_string(i - g.offset) + "]", &params[i], grads[i]});
            }
        }
    };
    sample_groups(encoder.parameters(), encoder.gradients(), encoder.param_groups());
    sample_groups(head.parameters(), head.gradients(), head.param_groups());
    if (siamese) {
        coords.push_back({"uncertainty.log_var1", &uncertainty[0], uncertainty_grads[0]});
        coords.push_back({"uncertainty.log_var2", &uncertainty[1], uncertainty_grads[1]});
    }

    auto loss_now = [&]() {
        return training::compute_batch(batch, encoder, head, uncertainty, uncertainty_grads, config,
                                       false)
            .loss;
    };

    GradCheckResult result;
    for (const Coordinate& c : coords) {
        const double saved = *c.param;
        *c.param = saved + step_size;
        const double loss_plus = loss_now();
        *c.param = saved - step_size;
        const double loss_minus = loss_now();
        *c.param = saved;
        const double fd = (loss_plus - loss_minus) / (2.0 * step_size);

        const double scale = std::max(std::abs(c.analytic), std::abs(fd));
        ++result.checked;
        if (scale < 1e-6) {
            continue;  // both effectively zero; absolute agreement
        }
        ++result.meaningful;
        const double rel = std::abs(c.analytic - fd) / scale;
        if (rel > result.max_rel_err) {
            result.max_rel_err = rel;
            result.worst_coordinate = c.name;
        }
    }
    return result;
}

}  // namespace recam::testsupport
