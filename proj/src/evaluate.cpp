#include "recam/evaluate.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "recam/errors.hpp"
#include "recam/model.hpp"

using nlohmann::json;

namespace recam::evaluation {

std::string EvalReport::to_json() const {
    json j;
    j["split"] = split_name;
    j["accuracy"] = accuracy;
    json preds = json::array();
    for (const Prediction& p : predictions) {
        json item;
        item["id"] = p.id;
        item["predicted"] = p.predicted;
        if (p.label) {
            item["label"] = *p.label;
        }
        preds.push_back(item);
    }
    j["predictions"] = preds;
    j["config"] = json::parse(config.to_json());
    return j.dump(2);
}

EvalReport EvalReport::from_json(const std::string& text) {
    const json j = json::parse(text);
    EvalReport report;
    report.split_name = j.at("split").get<std::string>();
    report.accuracy = j.at("accuracy").get<double>();
    for (const auto& item : j.at("predictions")) {
        Prediction p;
        p.id = item.at("id").get<std::string>();
        p.predicted = item.at("predicted").get<int>();
        if (item.contains("label")) {
            p.label = item.at("label").get<int>();
        }
        report.predictions.push_back(std::move(p));
    }
    report.config = RunConfig::from_json(j.at("config").dump());
    return report;
}

std::vector<Prediction> predict_split(const training::Checkpoint& checkpoint,
                                      const data::DatasetSplit& split) {
    const std::vector<training::PreparedExample> prepared =
        training::prepare_split(split, checkpoint.tokenizer, checkpoint.config);
    std::vector<Prediction> out;
    out.reserve(prepared.size());
    for (const training::PreparedExample& pe : prepared) {
        const model::ModelOutput scored =
            model::score_candidates(pe.instances, *checkpoint.encoder, checkpoint.head);
        out.push_back({pe.id, model::predict(scored), pe.label});
    }
    return out;
}

EvalReport evaluate(const training::Checkpoint& checkpoint, const data::DatasetSplit& split) {
    if (split.examples.empty()) {
        throw ValidationError("cannot evaluate an empty split");
    }
    if (!split.labeled()) {
        throw ValidationError("split \"" + split.name +
                              "\" has unlabeled examples; use predict-only mode for test data");
    }
    EvalReport report;
    report.split_name = split.name;
    report.config = checkpoint.config;
    report.predictions = predict_split(checkpoint, split);
    std::size_t correct = 0;
    for (const Prediction& p : report.predictions) {
        if (p.label && p.predicted == *p.label) {
            ++correct;
        }
    }
    report.accuracy = static_cast<double>(correct) / static_cast<double>(report.predictions.size());
    return report;
}

namespace {

RunConfig config_with_techniques(const RunConfig& base, const std::vector<std::string>& on) {
    RunConfig cfg = base;
    cfg.use_special_tokens = false;
    cfg.use_sentence_ranking = false;
    cfg.use_label_smoothing = false;
    cfg.use_siamese = false;
    cfg.use_back_translation = false;
    for (const std::string& name : on) {
        if (name == "special_tokens") {
            cfg.use_special_tokens = true;
        } else if (name == "sentence_ranking") {
            cfg.use_sentence_ranking = true;
        } else if (name == "label_smoothing") {
            cfg.use_label_smoothing = true;
        } else if (name == "siamese") {
            cfg.use_siamese = true;
        } else if (name == "back_translation") {
            cfg.use_back_translation = true;
        } else {
            throw ValidationError("unknown technique \"" + name + "\"");
        }
    }
    return cfg;
}

// The published final configuration differs by subtask: special tokens alone
// for imperceptibility, special tokens + label smoothing for nonspecificity.
std::vector<std::string> combo_for_subtask(const std::string& subtask) {
    if (subtask == "nonspecificity") {
        return {"special_tokens", "label_smoothing"};
    }
    return {"special_tokens"};
}

AblationRow run_row(const std::string& name, const RunConfig& cfg, const AblationData& data,
                    const training::TrainOptions& base_options) {
    AblationRow row;
    row.name = name;
    row.config = cfg;
    try {
        training::TrainOptions options = base_options;
        options.back_translated = data.back_translated;
        training::TrainOutput out = training::train(*data.train, *data.dev, cfg, options);
        row.dev_accuracy = out.checkpoint.dev_accuracy;
        if (data.trial != nullptr && !data.trial->examples.empty()) {
            row.trial_accuracy = evaluate(out.checkpoint, *data.trial).accuracy;
        }
        row.ok = true;
    } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
    }
    return row;
}

void check_data(const AblationData& data) {
    if (data.train == nullptr || data.dev == nullptr) {
        throw ValidationError("ablation requires train and dev splits");
    }
}

}  // namespace

std::vector<AblationRow> run_ablation(const RunConfig& base, const std::vector<std::string>& techniques,
                                      const AblationData& data, const training::TrainOptions& options) {
    check_data(data);
    std::unordered_set<std::string> seen;
    for (const std::string& t : techniques) {
        config_with_techniques(base, {t});  // validates the name
        if (!seen.insert(t).second) {
            throw ValidationError("duplicate technique \"" + t + "\" in ablation list");
        }
    }

    std::vector<AblationRow> rows;
    rows.push_back(run_row("baseline", config_with_techniques(base, {}), data, options));
    for (const std::string& t : techniques) {
        rows.push_back(run_row("w/ " + t, config_with_techniques(base, {t}), data, options));
    }
    if (!techniques.empty()) {
        rows.push_back(
            run_row("combined", config_with_techniques(base, combo_for_subtask(base.subtask)), data, options));
    }
    return rows;
}

std::vector<AblationRow> run_token_sweep(const std::vector<textprep::SpecialTokenScheme>& schemes,
                                         const RunConfig& base, const AblationData& data,
                                         const training::TrainOptions& options) {
    check_data(data);
    std::unordered_set<std::string> seen;
    for (const auto& scheme : schemes) {
        if (!seen.insert(scheme.name).second) {
            throw ValidationError("duplicate special token scheme \"" + scheme.name + "\" in sweep");
        }
    }
    std::vector<AblationRow> rows;
    for (const auto& scheme : schemes) {
        RunConfig cfg = base;
        cfg.use_special_tokens = scheme.enabled;
        cfg.special_token_scheme = scheme.name;
        rows.push_back(run_row(scheme.enabled ? scheme.name : "none", cfg, data, options));
    }
    return rows;
}

bool TransferMatrix::complete() const {
    for (const auto& row : filled) {
        for (bool cell : row) {
            if (!cell) {
                return false;
            }
        }
    }
    return true;
}

std::string TransferMatrix::to_json() const {
    static const char* names[2] = {"subtask1", "subtask2"};
    json j;
    j["complete"] = complete();
    json cells = json::array();
    for (int trained = 0; trained < 2; ++trained) {
        for (int tested = 0; tested < 2; ++tested) {
            json cell;
            cell["trained_on"] = names[trained];
            cell["tested_on"] = names[tested];
            cell["filled"] = filled[trained][tested];
            if (filled[trained][tested]) {
                cell["accuracy"] = accuracy[trained][tested];
            }
            cell["reference_accuracy_percent"] = kTransferReference[trained][tested];
            cell["reference_only"] = true;
            cells.push_back(cell);
        }
    }
    j["cells"] = cells;
    return j.dump(2);
}

TransferMatrix run_transfer(const TransferInputs& inputs) {
    TransferMatrix matrix;
    const training::Checkpoint* ckpts[2] = {inputs.checkpoint_subtask1, inputs.checkpoint_subtask2};
    const data::DatasetSplit* tests[2] = {inputs.test_subtask1, inputs.test_subtask2};
    for (int trained = 0; trained < 2; ++trained) {
        for (int tested = 0; tested < 2; ++tested) {
            if (ckpts[trained] == nullptr || tests[tested] == nullptr) {
                continue;
            }
            try {
                matrix.accuracy[trained][tested] = evaluate(*ckpts[trained], *tests[tested]).accuracy;
                matrix.filled[trained][tested] = true;
            } catch (const RecamError&) {
                // leave the cell unfilled; completeness reports it
            }
        }
    }
    return matrix;
}

std::string format_ablation_table(const std::vector<AblationRow>& rows, const std::string& header) {
    std::size_t width = std::string("Models").size();
    for (const AblationRow& row : rows) {
        width = std::max(width, row.name.size());
    }
    std::ostringstream out;
    out << header << "\n";
    out << std::left << std::setw(static_cast<int>(width + 2)) << "Models"
        << std::right << std::setw(12) << "Trial Acc." << std::setw(12) << "Dev Acc." << "\n";
    out << std::string(width + 26, '-') << "\n";
    for (const AblationRow& row : rows) {
        out << std::left << std::setw(static_cast<int>(width + 2)) << row.name;
        if (row.ok) {
            out << std::right << std::fixed << std::setprecision(4) << std::setw(12) << row.trial_accuracy
                << std::setw(12) << row.dev_accuracy;
        } else {
            out << std::right << std::setw(12) << "failed" << std::setw(12) << "-";
        }
        out << "\n";
    }
    return out.str();
}

std::string ablation_rows_to_json(const std::vector<AblationRow>& rows) {
    json j = json::array();
    for (const AblationRow& row : rows) {
        json item;
        item["name"] = row.name;
        item["ok"] = row.ok;
        if (row.ok) {
            item["trial_accuracy"] = row.trial_accuracy;
            item["dev_accuracy"] = row.dev_accuracy;
        } else {
            item["error"] = row.error;
        }
        item["config"] = json::parse(row.config.to_json());
        j.push_back(item);
    }
    return j.dump(2);
}

std::string format_transfer_table(const TransferMatrix& matrix) {
    static const char* names[2] = {"Subtask-1", "Subtask-2"};
    std::ostringstream out;
    out << std::left << std::setw(12) << "Trained on" << std::setw(12) << "Tested on"
        << std::right << std::setw(12) << "Test Acc." << "\n";
    out << std::string(36, '-') << "\n";
    for (int trained = 0; trained < 2; ++trained) {
        for (int tested = 0; tested < 2; ++tested) {
            out << std::left << std::setw(12) << names[trained] << std::setw(12) << names[tested];
            if (matrix.filled[trained][tested]) {
                out << std::right << std::fixed << std::setprecision(4) << std::setw(12)
                    << matrix.accuracy[trained][tested];
            } else {
                out << std::right << std::setw(12) << "missing";
            }
            out << "\n";
        }
    }
    return out.str();
}

}  // namespace recam::evaluation
