#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "recam/text.hpp"

namespace recam::data {

inline constexpr int kNumOptions = 5;
inline constexpr const char* kDefaultPlaceholder = "@placeholder";

// One cloze question: passage, summary question with a single placeholder,
// five candidate concepts, and (except on test splits) the gold index.
struct Example {
    std::string id;
    std::string article;
    std::string question;
    std::array<std::string, kNumOptions> options;
    std::optional<int> label;

    bool operator==(const Example&) const = default;
};

enum class Subtask { imperceptibility, nonspecificity };

const char* subtask_name(Subtask s);
Subtask subtask_from_name(const std::string& name);
Subtask subtask_from_index(int index);  // 1 or 2

struct DatasetSplit {
    std::string name;  // train | trial | dev | test
    Subtask subtask = Subtask::imperceptibility;
    std::vector<Example> examples;

    bool labeled() const;
    std::size_t size() const { return examples.size(); }
};

struct LengthStats {
    std::size_t p50 = 0;
    std::size_t p90 = 0;
    std::size_t p99 = 0;
    std::size_t max = 0;
};

struct SplitStats {
    std::size_t count = 0;
    std::size_t labeled_count = 0;
    std::array<std::size_t, kNumOptions> label_histogram{};
    LengthStats article_subwords;
    LengthStats question_subwords;
};

// One JSON record per line; keys "article", "question", "option_0".."option_4",
// optional "label" and "id" (id synthesized as "<split>-<line#>").
// Non-test splits must be fully labeled. Duplicate ids are rejected.
DatasetSplit load_jsonl(const std::filesystem::path& path, const std::string& split_name,
                        Subtask subtask = Subtask::imperceptibility,
                        const std::string& placeholder = kDefaultPlaceholder);

void save_jsonl(const DatasetSplit& split, const std::filesystem::path& path);

// Subword lengths are measured with the supplied tokenizer, or with a
// throwaway word-level one when none is given.
SplitStats describe(const DatasetSplit& split, const text::Tokenizer* tokenizer = nullptr);

std::string stats_to_json(const SplitStats& stats);

// Occurrences of `marker` in `question`; loader requires exactly one.
std::size_t count_placeholders(const std::string& question, const std::string& marker);

}  // namespace recam::data
