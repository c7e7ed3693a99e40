#include "recam/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "recam/errors.hpp"
#include "recam/io.hpp"

using nlohmann::json;

namespace recam::data {

const char* subtask_name(Subtask s) {
    return s == Subtask::imperceptibility ? "imperceptibility" : "nonspecificity";
}

Subtask subtask_from_name(const std::string& name) {
    if (name == "imperceptibility") return Subtask::imperceptibility;
    if (name == "nonspecificity") return Subtask::nonspecificity;
    throw ValidationError("unknown subtask: " + name);
}

Subtask subtask_from_index(int index) {
    if (index == 1) return Subtask::imperceptibility;
    if (index == 2) return Subtask::nonspecificity;
    throw ValidationError("subtask index must be 1 or 2, got " + std::to_string(index));
}

bool DatasetSplit::labeled() const {
    return std::all_of(examples.begin(), examples.end(),
                       [](const Example& e) { return e.label.has_value(); });
}

std::size_t count_placeholders(const std::string& question, const std::string& marker) {
    if (marker.empty()) {
        return 0;
    }
    std::size_t count = 0;
    std::size_t pos = question.find(marker);
    while (pos != std::string::npos) {
        ++count;
        pos = question.find(marker, pos + marker.size());
    }
    return count;
}

namespace {

std::string field_as_string(const json& record, const char* key, std::size_t line_no) {
    auto it = record.find(key);
    if (it == record.end()) {
        throw SchemaError("line " + std::to_string(line_no) + ": missing field \"" + key + "\"");
    }
    if (!it->is_string()) {
        throw SchemaError("line " + std::to_string(line_no) + ": field \"" + key + "\" must be a string");
    }
    return it->get<std::string>();
}

}  // namespace

DatasetSplit load_jsonl(const std::filesystem::path& path, const std::string& split_name,
                        Subtask subtask, const std::string& placeholder) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open dataset file: " + path.string());
    }

    DatasetSplit split;
    split.name = split_name;
    split.subtask = subtask;

    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) {
            continue;
        }
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!record.is_object()) {
            throw ParseError("line " + std::to_string(line_no) + ": record is not a JSON object");
        }

        Example ex;
        ex.article = field_as_string(record, "article", line_no);
        ex.question = field_as_string(record, "question", line_no);
        for (int i = 0; i < kNumOptions; ++i) {
            const std::string key = "option_" + std::to_string(i);
            ex.options[static_cast<std::size_t>(i)] = field_as_string(record, key.c_str(), line_no);
        }

        if (auto it = record.find("label"); it != record.end() && !it->is_null()) {
            if (!it->is_number_integer()) {
                throw SchemaError("line " + std::to_string(line_no) + ": field \"label\" must be an integer");
            }
            const int label = it->get<int>();
            if (label < 0 || label >= kNumOptions) {
                throw ValidationError("line " + std::to_string(line_no) + ": label " + std::to_string(label) +
                                      " outside [0," + std::to_string(kNumOptions - 1) + "]");
            }
            ex.label = label;
        } else if (split_name != "test") {
            throw ValidationError("line " + std::to_string(line_no) + ": unlabeled example in split \"" +
                                  split_name + "\" (only \"test\" may be unlabeled)");
        }

        if (auto it = record.find("id"); it != record.end() && !it->is_null()) {
            if (!it->is_string()) {
                throw SchemaError("line " + std::to_string(line_no) + ": field \"id\" must be a string");
            }
            ex.id = it->get<std::string>();
        } else {
            ex.id = split_name + "-" + std::to_string(line_no);
        }

        const std::size_t markers = count_placeholders(ex.question, placeholder);
        if (markers != 1) {
            throw ValidationError("line " + std::to_string(line_no) + ": question contains " +
                                  std::to_string(markers) + " \"" + placeholder + "\" markers (expected 1)");
        }

        if (!seen_ids.insert(ex.id).second) {
            throw IntegrityError("line " + std::to_string(line_no) + ": duplicate id \"" + ex.id + "\"");
        }
        split.examples.push_back(std::move(ex));
    }
    return split;
}

void save_jsonl(const DatasetSplit& split, const std::filesystem::path& path) {
    std::ostringstream out;
    for (const Example& ex : split.examples) {
        json record;
        record["id"] = ex.id;
        record["article"] = ex.article;
        record["question"] = ex.question;
        for (int i = 0; i < kNumOptions; ++i) {
            record["option_" + std::to_string(i)] = ex.options[static_cast<std::size_t>(i)];
        }
        if (ex.label) {
            record["label"] = *ex.label;
        }
        out << record.dump() << "\n";
    }
    io::atomic_write_file(path, out.str());
}

namespace {

LengthStats length_stats(std::vector<std::size_t> lengths) {
    LengthStats stats;
    if (lengths.empty()) {
        return stats;
    }
    std::sort(lengths.begin(), lengths.end());
    auto nearest_rank = [&](double p) {
        std::size_t rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(lengths.size())));
        rank = std::max<std::size_t>(rank, 1);
        return lengths[rank - 1];
    };
    stats.p50 = nearest_rank(0.50);
    stats.p90 = nearest_rank(0.90);
    stats.p99 = nearest_rank(0.99);
    stats.max = lengths.back();
    return stats;
}

}  // namespace

SplitStats describe(const DatasetSplit& split, const text::Tokenizer* tokenizer) {
    text::Tokenizer local;
    const text::Tokenizer& tok = tokenizer != nullptr ? *tokenizer : local;

    SplitStats stats;
    stats.count = split.examples.size();
    std::vector<std::size_t> article_lens;
    std::vector<std::size_t> question_lens;
    article_lens.reserve(stats.count);
    question_lens.reserve(stats.count);
    for (const Example& ex : split.examples) {
        if (ex.label) {
            ++stats.labeled_count;
            ++stats.label_histogram[static_cast<std::size_t>(*ex.label)];
        }
        article_lens.push_back(tok.tokenize(ex.article).size());
        question_lens.push_back(tok.tokenize(ex.question).size());
    }
    stats.article_subwords = length_stats(std::move(article_lens));
    stats.question_subwords = length_stats(std::move(question_lens));
    return stats;
}

std::string stats_to_json(const SplitStats& stats) {
    json j;
    j["count"] = stats.count;
    j["labeled_count"] = stats.labeled_count;
    j["label_histogram"] = stats.label_histogram;
    auto lengths = [](const LengthStats& ls) {
        return json{{"p50", ls.p50}, {"p90", ls.p90}, {"p99", ls.p99}, {"max", ls.max}};
    };
    j["article_subwords"] = lengths(stats.article_subwords);
    j["question_subwords"] = lengths(stats.question_subwords);
    return j.dump(2);
}

}  // namespace recam::data
