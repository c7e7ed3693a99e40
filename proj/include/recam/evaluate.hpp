#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "recam/dataset.hpp"
#include "recam/textprep.hpp"
#include "recam/train.hpp"

namespace recam::evaluation {

struct Prediction {
    std::string id;
    int predicted = 0;
    std::optional<int> label;

    bool operator==(const Prediction&) const = default;
};

struct EvalReport {
    std::string split_name;
    double accuracy = 0.0;  // exactly correct / total
    std::vector<Prediction> predictions;
    RunConfig config;

    std::string to_json() const;
    static EvalReport from_json(const std::string& text);

    bool operator==(const EvalReport&) const = default;
};

// Accuracy of a checkpoint over a labeled split. Unlabeled or empty splits
// are rejected (predict-only mode handles unlabeled data).
EvalReport evaluate(const training::Checkpoint& checkpoint, const data::DatasetSplit& split);

// Per-example argmax predictions without requiring labels.
std::vector<Prediction> predict_split(const training::Checkpoint& checkpoint,
                                      const data::DatasetSplit& split);

inline const std::array<const char*, 5> kTechniqueNames = {
    "special_tokens", "sentence_ranking", "label_smoothing", "siamese", "back_translation"};

struct AblationData {
    const data::DatasetSplit* train = nullptr;
    const data::DatasetSplit* trial = nullptr;
    const data::DatasetSplit* dev = nullptr;
    // Consumed by rows that switch back_translation on.
    const data::DatasetSplit* back_translated = nullptr;
};

struct AblationRow {
    std::string name;
    RunConfig config;
    bool ok = false;
    std::string error;
    double trial_accuracy = 0.0;
    double dev_accuracy = 0.0;
};

// baseline row, one single-technique row per entry, then the combined row
// (the per-subtask final configuration). Shared seed across rows. A failing
// row is recorded and the others continue.
std::vector<AblationRow> run_ablation(const RunConfig& base, const std::vector<std::string>& techniques,
                                      const AblationData& data,
                                      const training::TrainOptions& options = {});

// One row per scheme (trial/dev accuracy); duplicates are rejected.
std::vector<AblationRow> run_token_sweep(const std::vector<textprep::SpecialTokenScheme>& schemes,
                                         const RunConfig& base, const AblationData& data,
                                         const training::TrainOptions& options = {});

// Published cross-definition accuracies, kept as reference metadata only
// ([trained][tested], percent). Not reproducible at this artifact's scale.
inline constexpr std::array<std::array<double, 2>, 2> kTransferReference = {{{87.51, 84.13},
                                                                             {81.09, 89.64}}};

struct TransferMatrix {
    // [trained-on][tested-on]; subtask order: imperceptibility, nonspecificity.
    std::array<std::array<double, 2>, 2> accuracy{};
    std::array<std::array<bool, 2>, 2> filled{};

    bool complete() const;
    std::string to_json() const;
};

struct TransferInputs {
    const training::Checkpoint* checkpoint_subtask1 = nullptr;
    const training::Checkpoint* checkpoint_subtask2 = nullptr;
    const data::DatasetSplit* test_subtask1 = nullptr;
    const data::DatasetSplit* test_subtask2 = nullptr;
};

// Fills every cell that has both a checkpoint and a labeled test split;
// missing inputs leave the matrix incomplete rather than failing.
TransferMatrix run_transfer(const TransferInputs& inputs);

// Aligned-column text mirroring the published table layout.
std::string format_ablation_table(const std::vector<AblationRow>& rows, const std::string& header);
std::string ablation_rows_to_json(const std::vector<AblationRow>& rows);
std::string format_transfer_table(const TransferMatrix& matrix);

}  // namespace recam::evaluation
