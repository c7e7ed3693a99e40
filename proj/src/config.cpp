#include "recam/config.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "recam/errors.hpp"
#include "recam/io.hpp"

using nlohmann::json;

namespace recam {

namespace {

bool near(double a, double b) { return std::abs(a - b) <= 1e-12; }

const char* const kSchemeNames[] = {"<e>", "<#>", "<$>", "#", "$", "none"};

bool known_scheme(const std::string& name) {
    for (const char* s : kSchemeNames) {
        if (name == s) {
            return true;
        }
    }
    return false;
}

}  // namespace

void RunConfig::validate() const {
    std::vector<std::string> violations;
    if (!allow_unsafe) {
        if (!near(learning_rate, 1e-5) && !near(learning_rate, 2e-5)) {
            violations.push_back("learning_rate must be 1e-5 or 2e-5");
        }
        if (batch_size != 16 && batch_size != 32) {
            violations.push_back("batch_size must be 16 or 32");
        }
        if (!near(warmup, 0.1) && !near(warmup, 1.0) && !near(warmup, 2.0)) {
            violations.push_back("warmup must be 0.1, 1 or 2");
        }
        if (epochs < 3 || epochs > 10) {
            violations.push_back("epochs must be in [3, 10]");
        }
        if (!near(grad_clip_norm, 1.0)) {
            violations.push_back("grad_clip_norm must be 1.0");
        }
        if (max_input_length != 200) {
            violations.push_back("max_input_length must be 200");
        }
    }
    if (batch_size <= 0) {
        violations.push_back("batch_size must be positive");
    }
    if (epochs <= 0) {
        violations.push_back("epochs must be positive");
    }
    if (max_input_length < 8) {
        violations.push_back("max_input_length must be at least 8");
    }
    if (learning_rate < 0.0) {
        violations.push_back("learning_rate must be non-negative");
    }
    if (warmup < 0.0) {
        violations.push_back("warmup must be non-negative");
    }
    if (grad_clip_norm <= 0.0) {
        violations.push_back("grad_clip_norm must be positive");
    }
    if (label_smoothing_alpha < 0.0 || label_smoothing_alpha >= 1.0) {
        violations.push_back("label_smoothing_alpha must be in [0, 1)");
    }
    if (!known_scheme(special_token_scheme)) {
        violations.push_back("unknown special_token_scheme \"" + special_token_scheme + "\"");
    }
    if (placeholder.empty()) {
        violations.push_back("placeholder must be non-empty");
    }
    if (head_hidden_layers < 0) {
        violations.push_back("head_hidden_layers must be non-negative");
    }
    if (subtask != "imperceptibility" && subtask != "nonspecificity") {
        violations.push_back("subtask must be imperceptibility or nonspecificity");
    }
    if (!violations.empty()) {
        std::ostringstream msg;
        msg << "invalid RunConfig";
        if (!allow_unsafe) {
            msg << " (set allow_unsafe to override the published grid)";
        }
        for (const std::string& v : violations) {
            msg << "\n  - " << v;
        }
        throw ConfigError(msg.str());
    }
}

std::string RunConfig::to_json() const {
    json j;
    j["learning_rate"] = learning_rate;
    j["batch_size"] = batch_size;
    j["grad_clip_norm"] = grad_clip_norm;
    j["warmup"] = warmup;
    j["max_input_length"] = max_input_length;
    j["epochs"] = epochs;
    j["seed"] = seed;
    j["use_special_tokens"] = use_special_tokens;
    j["use_sentence_ranking"] = use_sentence_ranking;
    j["use_label_smoothing"] = use_label_smoothing;
    j["use_siamese"] = use_siamese;
    j["use_back_translation"] = use_back_translation;
    j["special_token_scheme"] = special_token_scheme;
    j["label_smoothing_alpha"] = label_smoothing_alpha;
    j["smooth_both_branches"] = smooth_both_branches;
    j["placeholder"] = placeholder;
    j["subtask"] = subtask;
    j["ranking_recall_only"] = ranking_recall_only;
    j["ranking_strip_placeholder"] = ranking_strip_placeholder;
    j["head_hidden_layers"] = head_hidden_layers;
    j["allow_unsafe"] = allow_unsafe;
    return j.dump(2);
}

namespace {

template <typename T>
void read_if_present(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) {
        out = it->get<T>();
    }
}

}  // namespace

RunConfig RunConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    RunConfig cfg;
    read_if_present(j, "learning_rate", cfg.learning_rate);
    read_if_present(j, "batch_size", cfg.batch_size);
    read_if_present(j, "grad_clip_norm", cfg.grad_clip_norm);
    read_if_present(j, "warmup", cfg.warmup);
    read_if_present(j, "max_input_length", cfg.max_input_length);
    read_if_present(j, "epochs", cfg.epochs);
    read_if_present(j, "seed", cfg.seed);
    read_if_present(j, "use_special_tokens", cfg.use_special_tokens);
    read_if_present(j, "use_sentence_ranking", cfg.use_sentence_ranking);
    read_if_present(j, "use_label_smoothing", cfg.use_label_smoothing);
    read_if_present(j, "use_siamese", cfg.use_siamese);
    read_if_present(j, "use_back_translation", cfg.use_back_translation);
    read_if_present(j, "special_token_scheme", cfg.special_token_scheme);
    read_if_present(j, "label_smoothing_alpha", cfg.label_smoothing_alpha);
    read_if_present(j, "smooth_both_branches", cfg.smooth_both_branches);
    read_if_present(j, "placeholder", cfg.placeholder);
    read_if_present(j, "subtask", cfg.subtask);
    read_if_present(j, "ranking_recall_only", cfg.ranking_recall_only);
    read_if_present(j, "ranking_strip_placeholder", cfg.ranking_strip_placeholder);
    read_if_present(j, "head_hidden_layers", cfg.head_hidden_layers);
    read_if_present(j, "allow_unsafe", cfg.allow_unsafe);
    return cfg;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".yaml" || ext == ".yml") {
        YAML::Node node;
        try {
            node = YAML::LoadFile(path.string());
        } catch (const YAML::Exception& e) {
            throw ParseError("config " + path.string() + ": " + e.what());
        }
        // Route through JSON so both formats share one field map.
        json j = json::object();
        for (const auto& kv : node) {
            const std::string key = kv.first.as<std::string>();
            const YAML::Node& v = kv.second;
            if (!v.IsScalar()) {
                throw ParseError("config " + path.string() + ": key \"" + key + "\" must be scalar");
            }
            bool b;
            long long i;
            double d;
            if (YAML::convert<bool>::decode(v, b) && (v.Scalar() == "true" || v.Scalar() == "false")) {
                j[key] = b;
            } else if (YAML::convert<long long>::decode(v, i)) {
                j[key] = i;
            } else if (YAML::convert<double>::decode(v, d)) {
                j[key] = d;
            } else {
                j[key] = v.as<std::string>();
            }
        }
        return from_json(j.dump());
    }
    return from_json(io::read_file(path));
}

std::vector<RunConfig> enumerate_grid(const RunConfig& base) {
    std::vector<RunConfig> grid;
    for (double lr : {1e-5, 2e-5}) {
        for (int bs : {16, 32}) {
            for (double wu : {0.1, 1.0, 2.0}) {
                RunConfig cfg = base;
                cfg.learning_rate = lr;
                cfg.batch_size = bs;
                cfg.warmup = wu;
                grid.push_back(cfg);
            }
        }
    }
    return grid;
}

}  // namespace recam
