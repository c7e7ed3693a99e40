#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "recam/backends.hpp"
#include "recam/config.hpp"
#include "recam/dataset.hpp"
#include "recam/losses.hpp"
#include "recam/model.hpp"
#include "recam/textprep.hpp"

namespace recam::training {

// Linear warmup to the base rate, then linear decay to zero.
// warmup_steps == 0 starts at the base rate immediately.
double lr_at(long long step, long long total_steps, long long warmup_steps, double base_lr);

// Resolves the warmup setting: fractions of total steps below 1, whole
// epochs at 1 and above.
long long resolve_warmup_steps(double warmup, long long total_steps, long long steps_per_epoch);

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

// Adam with decoupled weight decay over a list of parameter slots
// (encoder, head, uncertainty). Decay applies only to groups flagged decay.
class AdamW {
public:
    explicit AdamW(const AdamHyper& hyper = {}) : hyper_(hyper) {}

    void add_slot(std::span<double> params, std::span<double> grads,
                  const std::vector<model::ParamGroup>& groups);

    std::size_t parameter_count() const { return decay_.size(); }
    double global_grad_norm() const;
    // Scales every gradient so the global norm is at most max_norm.
    void clip_global_norm(double max_norm);
    void step(double lr);
    void zero_grad();

    long long step_count() const { return step_count_; }

    // Flat state for checkpointing: m ++ v ++ [step].
    std::vector<double> export_state() const;
    void import_state(const std::vector<double>& state);

private:
    AdamHyper hyper_;
    struct Slot {
        std::span<double> params;
        std::span<double> grads;
    };
    std::vector<Slot> slots_;
    std::vector<char> decay_;
    std::vector<double> m_;
    std::vector<double> v_;
    long long step_count_ = 0;
};

// Best-dev snapshot of a full run: model, tokenizer, optimizer and the exact
// config. Reloading reproduces the stored dev accuracy bit-for-bit.
struct Checkpoint {
    backends::EncoderConfig encoder_config;
    std::unique_ptr<backends::TransformerEncoder> encoder;
    model::ClassifierHead head;
    losses::UncertaintyParams uncertainty;
    text::Tokenizer tokenizer;
    RunConfig config;
    double dev_accuracy = 0.0;
    int epoch = 0;
    std::vector<double> optimizer_state;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& dir);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

struct StepInfo {
    long long step = 0;
    double loss = 0.0;
    double loss1 = 0.0;  // completed-question branch (0 when siamese is off)
    double loss2 = 0.0;  // joint branch
    double lr = 0.0;
    double grad_norm = 0.0;          // pre-clip global norm
    double grad_norm_postclip = 0.0;
};

using StepHook = std::function<void(const StepInfo&)>;

struct TrainOptions {
    std::string backend_kind = "tiny";
    std::filesystem::path pretrained_dir;
    // Used when config.use_back_translation is set; trained corpus becomes
    // train + back_translated.
    const data::DatasetSplit* back_translated = nullptr;
    std::filesystem::path log_path;  // JSONL step records when non-empty
    StepHook hook;
    bool verbose = false;
};

struct TrainOutput {
    Checkpoint checkpoint;
    std::vector<StepInfo> steps;
    std::vector<double> dev_accuracy_by_epoch;
};

// Fine-tunes on the (possibly augmented) training split, evaluates dev each
// epoch, returns the best-dev checkpoint. Aborts with diagnostics on
// non-finite loss.
TrainOutput train(const data::DatasetSplit& train_split, const data::DatasetSplit& dev_split,
                  const RunConfig& config, const TrainOptions& options = {});

struct GridCell {
    std::size_t config_index = 0;
    RunConfig config;
    bool ok = false;
    std::string error;
    double dev_accuracy = 0.0;
};

struct GridSearchResult {
    std::optional<std::size_t> best_index;  // into cells
    std::vector<GridCell> cells;
    Checkpoint best_checkpoint;  // valid when best_index is set
};

// Trains every config, ranks by dev accuracy; ties keep the earlier config.
// A failing cell is recorded and skipped, the others continue.
GridSearchResult grid_search(const std::vector<RunConfig>& configs, const data::DatasetSplit& train_split,
                             const data::DatasetSplit& dev_split, const TrainOptions& options = {});

// Deterministic frozen encoder used as the ranking embedder. Derived from the
// run seed and vocabulary only, so training and later evaluation rank
// passages identically.
std::unique_ptr<backends::TransformerEncoder> make_ranking_encoder(const text::Tokenizer& tokenizer,
                                                                   const RunConfig& config);

// Shared train/eval preprocessing: optional sentence ranking, then the five
// per-candidate encodings.
struct PreparedExample {
    std::string id;
    std::optional<int> label;
    std::vector<textprep::EncodedInstance> instances;
};

std::vector<PreparedExample> prepare_split(const data::DatasetSplit& split, const text::Tokenizer& tokenizer,
                                           const RunConfig& config);

// Fits the run tokenizer: reserved markers, the placeholder, the special
// token scheme when enabled, then the split's vocabulary.
text::Tokenizer fit_tokenizer(const data::DatasetSplit& split, const RunConfig& config);

struct BatchResult {
    double loss = 0.0;   // uncertainty-combined in siamese mode, else loss2
    double loss1 = 0.0;  // completed-question branch mean
    double loss2 = 0.0;  // joint branch mean
};

// Loss of one batch under the current parameters. With accumulate_grads,
// gradients flow into the encoder, head and uncertainty gradient buffers
// (the finite-difference checks call this with accumulate_grads=false).
BatchResult compute_batch(const std::vector<const PreparedExample*>& batch,
                          backends::TransformerEncoder& encoder, model::ClassifierHead& head,
                          std::span<const double> uncertainty_params,
                          std::span<double> uncertainty_grads, const RunConfig& config,
                          bool accumulate_grads);

}  // namespace recam::training
