#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace recam {

// All training and technique hyper-parameters for one run. Values are
// restricted to the published grid (learning_rate {1e-5, 2e-5}, batch_size
// {16, 32}, warmup {0.1, 1, 2}, epochs [3, 10]) unless allow_unsafe is set;
// desk-scale tests rely on the unsafe escape hatch.
struct RunConfig {
    double learning_rate = 2e-5;
    int batch_size = 16;
    double grad_clip_norm = 1.0;
    // < 1: fraction of total optimizer steps; >= 1: whole epochs.
    double warmup = 0.1;
    int max_input_length = 200;
    int epochs = 3;
    std::uint64_t seed = 42;

    // Technique switches.
    bool use_special_tokens = false;
    bool use_sentence_ranking = false;
    bool use_label_smoothing = false;
    bool use_siamese = false;
    bool use_back_translation = false;

    // Scheme name: "<e>", "<#>", "<$>", "#", "$" or "none".
    std::string special_token_scheme = "<e>";
    double label_smoothing_alpha = 0.1;
    // Smoothing applies to the auxiliary branch too unless disabled.
    bool smooth_both_branches = true;

    std::string placeholder = "@placeholder";
    std::string subtask = "imperceptibility";

    // Ranker knobs.
    bool ranking_recall_only = false;
    bool ranking_strip_placeholder = false;

    // Classifier head depth above the pooled state (0 = single linear layer).
    int head_hidden_layers = 0;

    bool allow_unsafe = false;

    void validate() const;  // throws ConfigError listing every violation

    std::string to_json() const;
    static RunConfig from_json(const std::string& text);
    // .json or .yaml/.yml decided by extension.
    static RunConfig from_file(const std::filesystem::path& path);

    bool operator==(const RunConfig&) const = default;
};

// The published hyper-parameter grid: 2 learning rates x 2 batch sizes x
// 3 warmup settings = 12 points, in deterministic order.
std::vector<RunConfig> enumerate_grid(const RunConfig& base);

}  // namespace recam
