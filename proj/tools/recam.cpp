// recam: multiple-choice cloze reading-comprehension pipeline.
//
// Subcommands: prepare, rank, augment, train, evaluate, predict, ablate,
// sweep-tokens, transfer. Exit codes: 0 success, 1 user error, 2 internal
// error. Every command that produces files also writes a manifest with the
// exact resolved configuration.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "recam/augment.hpp"
#include "recam/backends.hpp"
#include "recam/config.hpp"
#include "recam/dataset.hpp"
#include "recam/errors.hpp"
#include "recam/evaluate.hpp"
#include "recam/io.hpp"
#include "recam/kernels.hpp"
#include "recam/ranker.hpp"
#include "recam/text.hpp"
#include "recam/textprep.hpp"
#include "recam/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace recam;

namespace {

struct GlobalArgs {
    std::uint64_t seed = 42;
    bool seed_set = false;
    std::string config_path;
    int subtask = 1;
    bool subtask_set = false;
    std::string backend = "tiny";
    std::string translator = "identity";
    std::string kernels = "auto";
    std::string cache_dir;
    std::string pretrained_dir;
};

// Precedence: CLI flag > config file > default.
RunConfig resolve_config(const GlobalArgs& args) {
    RunConfig cfg;
    if (!args.config_path.empty()) {
        cfg = RunConfig::from_file(args.config_path);
    }
    if (args.seed_set) {
        cfg.seed = args.seed;
    }
    if (args.subtask_set) {
        cfg.subtask = data::subtask_name(data::subtask_from_index(args.subtask));
    }
    return cfg;
}

void write_manifest(const fs::path& path, const std::string& command, const RunConfig& cfg,
                    const json& extra = json::object()) {
    json manifest;
    manifest["command"] = command;
    manifest["config"] = json::parse(cfg.to_json());
    for (auto it = extra.begin(); it != extra.end(); ++it) {
        manifest[it.key()] = it.value();
    }
    io::atomic_write_file(path, manifest.dump(2));
}

data::DatasetSplit load_split(const std::string& path, const std::string& split_name,
                              const RunConfig& cfg) {
    return data::load_jsonl(path, split_name, data::subtask_from_name(cfg.subtask), cfg.placeholder);
}

std::unique_ptr<augment::Translator> make_translator(const GlobalArgs& args,
                                                     const augment::HttpTranslatorConfig& http_cfg) {
    if (args.translator == "identity") {
        return std::make_unique<augment::IdentityTranslator>();
    }
    if (args.translator == "mock") {
        return std::make_unique<augment::MockTranslator>();
    }
    if (args.translator == "http") {
        return std::make_unique<augment::HttpTranslator>(http_cfg);
    }
    throw ValidationError("unknown translator \"" + args.translator + "\"");
}

int run_cli(int argc, char** argv) {
    CLI::App app{"multiple-choice cloze reading-comprehension pipeline"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    GlobalArgs g;
    app.add_option("--seed", g.seed, "random seed (overrides config file)")
        ->each([&](const std::string&) { g.seed_set = true; });
    app.add_option("--config", g.config_path, "run config file (.json or .yaml)");
    app.add_option("--subtask", g.subtask, "subtask, 1 (imperceptibility) or 2 (nonspecificity)")
        ->check(CLI::IsMember({1, 2}))
        ->each([&](const std::string&) { g.subtask_set = true; });
    app.add_option("--backend", g.backend, "encoder backend")->check(CLI::IsMember({"tiny", "pretrained"}));
    app.add_option("--translator", g.translator, "translation backend")
        ->check(CLI::IsMember({"identity", "mock", "http"}));
    app.add_option("--kernels", g.kernels, "vector kernel set: auto|scalar|avx2|neon");
    app.add_option("--cache-dir", g.cache_dir, "translation cache directory");
    app.add_option("--pretrained-dir", g.pretrained_dir, "pretrained backend asset directory");

    // ---- prepare ----
    auto* cmd_prepare = app.add_subcommand("prepare", "validate a JSONL split, write canonical copy + stats");
    std::string prep_in, prep_split = "train", prep_out;
    cmd_prepare->add_option("--in", prep_in, "input JSONL")->required();
    cmd_prepare->add_option("--split", prep_split, "split name (train|trial|dev|test)");
    cmd_prepare->add_option("--out-dir", prep_out, "output directory")->required();

    // ---- rank ----
    auto* cmd_rank = app.add_subcommand("rank", "reorder passage sentences by similarity to the question");
    std::string rank_in, rank_out, rank_split = "train";
    cmd_rank->add_option("--in", rank_in, "input JSONL")->required();
    cmd_rank->add_option("--out", rank_out, "output JSONL with article_ranked + sentence_scores")->required();
    cmd_rank->add_option("--split", rank_split, "split name for loading rules");

    // ---- augment ----
    auto* cmd_augment = app.add_subcommand("augment", "back-translate passages into a pseudo corpus");
    std::string aug_in, aug_out, aug_pivot = "fr";
    augment::HttpTranslatorConfig http_cfg;
    cmd_augment->add_option("--in", aug_in, "input JSONL (labeled)")->required();
    cmd_augment->add_option("--out", aug_out, "output JSONL")->required();
    cmd_augment->add_option("--pivot", aug_pivot, "pivot language code");
    cmd_augment->add_option("--http-host", http_cfg.host, "http translator host");
    cmd_augment->add_option("--http-port", http_cfg.port, "http translator port");
    cmd_augment->add_option("--http-path", http_cfg.path, "http translator path");
    cmd_augment->add_option("--http-api-key", http_cfg.api_key, "http translator api key");
    cmd_augment->add_option("--http-min-interval", http_cfg.min_request_interval_seconds,
                            "minimum seconds between requests");

    // ---- train ----
    auto* cmd_train = app.add_subcommand("train", "fine-tune and keep the best-dev checkpoint");
    std::string train_train, train_dev, train_bt, train_out;
    cmd_train->add_option("--train", train_train, "training JSONL")->required();
    cmd_train->add_option("--dev", train_dev, "dev JSONL")->required();
    cmd_train->add_option("--bt-file", train_bt, "back-translated JSONL (for use_back_translation)");
    cmd_train->add_option("--out", train_out, "checkpoint output directory")->required();

    // ---- evaluate ----
    auto* cmd_eval = app.add_subcommand("evaluate", "accuracy of a checkpoint on a labeled split");
    std::string eval_ckpt, eval_data, eval_split = "dev", eval_out;
    cmd_eval->add_option("--ckpt", eval_ckpt, "checkpoint directory")->required();
    cmd_eval->add_option("--data", eval_data, "JSONL split")->required();
    cmd_eval->add_option("--split", eval_split, "split name");
    cmd_eval->add_option("--out", eval_out, "report JSON path");

    // ---- predict ----
    auto* cmd_predict = app.add_subcommand("predict", "write argmax predictions for a split");
    std::string pred_ckpt, pred_in, pred_out, pred_split = "test";
    cmd_predict->add_option("--ckpt", pred_ckpt, "checkpoint directory")->required();
    cmd_predict->add_option("--in", pred_in, "input JSONL")->required();
    cmd_predict->add_option("--out", pred_out, "predictions JSONL")->required();
    cmd_predict->add_option("--split", pred_split, "split name for loading rules");

    // ---- ablate ----
    auto* cmd_ablate = app.add_subcommand("ablate", "baseline + per-technique + combined rows");
    std::string abl_train, abl_dev, abl_trial, abl_bt, abl_out;
    std::vector<std::string> abl_techniques(evaluation::kTechniqueNames.begin(),
                                            evaluation::kTechniqueNames.end());
    cmd_ablate->add_option("--train", abl_train, "training JSONL")->required();
    cmd_ablate->add_option("--dev", abl_dev, "dev JSONL")->required();
    cmd_ablate->add_option("--trial", abl_trial, "trial JSONL");
    cmd_ablate->add_option("--bt-file", abl_bt, "back-translated JSONL");
    cmd_ablate->add_option("--out", abl_out, "output directory")->required();
    cmd_ablate->add_option("--techniques", abl_techniques, "technique subset to ablate");

    // ---- sweep-tokens ----
    auto* cmd_sweep = app.add_subcommand("sweep-tokens", "compare the special-token marker schemes");
    std::string sw_train, sw_dev, sw_trial, sw_out;
    cmd_sweep->add_option("--train", sw_train, "training JSONL")->required();
    cmd_sweep->add_option("--dev", sw_dev, "dev JSONL")->required();
    cmd_sweep->add_option("--trial", sw_trial, "trial JSONL");
    cmd_sweep->add_option("--out", sw_out, "output directory")->required();

    // ---- transfer ----
    auto* cmd_transfer = app.add_subcommand("transfer", "cross-subtask 2x2 accuracy matrix");
    std::string tr_ckpt1, tr_ckpt2, tr_test1, tr_test2, tr_out;
    cmd_transfer->add_option("--ckpt1", tr_ckpt1, "checkpoint trained on subtask 1");
    cmd_transfer->add_option("--ckpt2", tr_ckpt2, "checkpoint trained on subtask 2");
    cmd_transfer->add_option("--test1", tr_test1, "labeled test JSONL for subtask 1");
    cmd_transfer->add_option("--test2", tr_test2, "labeled test JSONL for subtask 2");
    cmd_transfer->add_option("--out", tr_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // --help is success; any parse failure is a user error
    }

    kernels::select(g.kernels);
    RunConfig cfg = resolve_config(g);

    if (cmd_prepare->parsed()) {
        cfg.validate();
        const data::DatasetSplit split = load_split(prep_in, prep_split, cfg);
        fs::create_directories(prep_out);
        data::save_jsonl(split, fs::path(prep_out) / (prep_split + ".jsonl"));
        io::atomic_write_file(fs::path(prep_out) / "stats.json", data::stats_to_json(data::describe(split)));
        write_manifest(fs::path(prep_out) / "manifest.json", "prepare", cfg,
                       {{"split", prep_split}, {"examples", split.size()}});
        std::cout << "prepared " << split.size() << " examples into " << prep_out << "\n";
        return 0;
    }

    if (cmd_rank->parsed()) {
        const data::DatasetSplit split = load_split(rank_in, rank_split, cfg);
        text::Tokenizer tokenizer;
        tokenizer.add_special_token(cfg.placeholder);
        for (const auto& ex : split.examples) {
            tokenizer.fit_text(ex.article);
            tokenizer.fit_text(ex.question);
        }
        const auto encoder = training::make_ranking_encoder(tokenizer, cfg);
        backends::EncoderEmbeddingProvider embedder(*encoder, tokenizer);
        const ranker::SimilarityOptions options = ranker::options_from_config(cfg);

        std::ostringstream out;
        for (const auto& ex : split.examples) {
            json record;
            record["id"] = ex.id;
            record["article"] = ex.article;
            record["question"] = ex.question;
            for (int i = 0; i < data::kNumOptions; ++i) {
                record["option_" + std::to_string(i)] = ex.options[static_cast<std::size_t>(i)];
            }
            if (ex.label) {
                record["label"] = *ex.label;
            }
            if (ex.article.empty()) {
                record["article_ranked"] = "";
                record["sentence_scores"] = json::array();
            } else {
                const ranker::RankedPassage ranked = ranker::rank(ex.article, ex.question, embedder, options);
                record["article_ranked"] = ranked.rearranged_text;
                record["sentence_scores"] = ranked.scores;
            }
            out << record.dump() << "\n";
        }
        io::atomic_write_file(rank_out, out.str());
        write_manifest(rank_out + ".manifest.json", "rank", cfg, {{"examples", split.size()}});
        std::cout << "ranked " << split.size() << " passages into " << rank_out << "\n";
        return 0;
    }

    if (cmd_augment->parsed()) {
        const data::DatasetSplit split = load_split(aug_in, "train", cfg);
        auto inner = make_translator(g, http_cfg);
        const fs::path cache = g.cache_dir.empty() ? augment::default_cache_dir() : fs::path(g.cache_dir);
        augment::CachingTranslator cached(*inner, cache);

        augment::AugmentOptions options;
        options.back_translate.pivot_language = aug_pivot;
        const augment::AugmentResult result = augment::augment_split(split, cached, options);

        std::ostringstream out;
        for (const augment::AugmentedExample& aug : result.examples) {
            json record;
            record["id"] = aug.example.id;
            record["article"] = aug.example.article;
            record["question"] = aug.example.question;
            for (int i = 0; i < data::kNumOptions; ++i) {
                record["option_" + std::to_string(i)] = aug.example.options[static_cast<std::size_t>(i)];
            }
            record["label"] = *aug.example.label;
            record["pivot_language"] = aug.pivot_language;
            record["original_id"] = aug.original_id;
            out << record.dump() << "\n";
        }
        io::atomic_write_file(aug_out, out.str());
        write_manifest(aug_out + ".manifest.json", "augment", cfg,
                       {{"pivot", aug_pivot},
                        {"translator", g.translator},
                        {"augmented", result.examples.size()},
                        {"skipped", result.skipped}});
        std::cout << "augmented " << result.examples.size() << " examples (" << result.skipped
                  << " skipped) into " << aug_out << "\n";
        return 0;
    }

    if (cmd_train->parsed()) {
        cfg.validate();
        const data::DatasetSplit train_split = load_split(train_train, "train", cfg);
        const data::DatasetSplit dev_split = load_split(train_dev, "dev", cfg);
        std::optional<data::DatasetSplit> bt;
        if (!train_bt.empty()) {
            bt = load_split(train_bt, "train", cfg);
        }

        training::TrainOptions options;
        options.backend_kind = g.backend;
        options.pretrained_dir = g.pretrained_dir;
        options.back_translated = bt ? &*bt : nullptr;
        fs::create_directories(train_out);
        options.log_path = fs::path(train_out) / "training_log.jsonl";
        options.verbose = true;

        const training::TrainOutput out = training::train(train_split, dev_split, cfg, options);
        training::save_checkpoint(out.checkpoint, train_out);
        write_manifest(fs::path(train_out) / "run_manifest.json", "train", cfg,
                       {{"dev_accuracy", out.checkpoint.dev_accuracy},
                        {"best_epoch", out.checkpoint.epoch},
                        {"steps", out.steps.size()},
                        {"backend", g.backend}});
        std::cout << "best dev accuracy " << out.checkpoint.dev_accuracy << " at epoch "
                  << out.checkpoint.epoch << "; checkpoint in " << train_out << "\n";
        return 0;
    }

    if (cmd_eval->parsed()) {
        const training::Checkpoint ckpt = training::load_checkpoint(eval_ckpt);
        const data::DatasetSplit split =
            data::load_jsonl(eval_data, eval_split, data::subtask_from_name(ckpt.config.subtask),
                             ckpt.config.placeholder);
        const evaluation::EvalReport report = evaluation::evaluate(ckpt, split);
        if (!eval_out.empty()) {
            io::atomic_write_file(eval_out, report.to_json());
            write_manifest(eval_out + ".manifest.json", "evaluate", ckpt.config,
                           {{"split", eval_split}, {"accuracy", report.accuracy}});
        }
        std::cout << "accuracy on " << eval_split << ": " << report.accuracy << " ("
                  << report.predictions.size() << " examples)\n";
        return 0;
    }

    if (cmd_predict->parsed()) {
        const training::Checkpoint ckpt = training::load_checkpoint(pred_ckpt);
        const data::DatasetSplit split =
            data::load_jsonl(pred_in, pred_split, data::subtask_from_name(ckpt.config.subtask),
                             ckpt.config.placeholder);
        const std::vector<evaluation::Prediction> predictions = evaluation::predict_split(ckpt, split);
        std::ostringstream out;
        for (const evaluation::Prediction& p : predictions) {
            json record;
            record["id"] = p.id;
            record["predicted"] = p.predicted;
            out << record.dump() << "\n";
        }
        io::atomic_write_file(pred_out, out.str());
        write_manifest(pred_out + ".manifest.json", "predict", ckpt.config,
                       {{"examples", predictions.size()}});
        std::cout << "wrote " << predictions.size() << " predictions to " << pred_out << "\n";
        return 0;
    }

    if (cmd_ablate->parsed() || cmd_sweep->parsed()) {
        const bool sweep = cmd_sweep->parsed();
        const std::string in_train = sweep ? sw_train : abl_train;
        const std::string in_dev = sweep ? sw_dev : abl_dev;
        const std::string in_trial = sweep ? sw_trial : abl_trial;
        const std::string out_dir = sweep ? sw_out : abl_out;

        cfg.validate();
        const data::DatasetSplit train_split = load_split(in_train, "train", cfg);
        const data::DatasetSplit dev_split = load_split(in_dev, "dev", cfg);
        std::optional<data::DatasetSplit> trial_split;
        if (!in_trial.empty()) {
            trial_split = load_split(in_trial, "trial", cfg);
        }
        std::optional<data::DatasetSplit> bt;
        if (!sweep && !abl_bt.empty()) {
            bt = load_split(abl_bt, "train", cfg);
        }

        evaluation::AblationData dataspec;
        dataspec.train = &train_split;
        dataspec.dev = &dev_split;
        dataspec.trial = trial_split ? &*trial_split : nullptr;
        dataspec.back_translated = bt ? &*bt : nullptr;

        training::TrainOptions options;
        options.backend_kind = g.backend;
        options.pretrained_dir = g.pretrained_dir;

        std::vector<evaluation::AblationRow> rows;
        std::string stem;
        std::string header;
        if (sweep) {
            rows = evaluation::run_token_sweep(textprep::all_schemes(), cfg, dataspec, options);
            stem = "sweep";
            header = "Special token schemes, subtask " + cfg.subtask;
        } else {
            rows = evaluation::run_ablation(cfg, abl_techniques, dataspec, options);
            stem = "ablation";
            header = "Ablation, subtask " + cfg.subtask;
        }

        fs::create_directories(out_dir);
        io::atomic_write_file(fs::path(out_dir) / (stem + ".json"), evaluation::ablation_rows_to_json(rows));
        const std::string table = evaluation::format_ablation_table(rows, header);
        io::atomic_write_file(fs::path(out_dir) / (stem + ".txt"), table);
        write_manifest(fs::path(out_dir) / "manifest.json", sweep ? "sweep-tokens" : "ablate", cfg,
                       {{"rows", rows.size()}});
        std::cout << table;
        return 0;
    }

    if (cmd_transfer->parsed()) {
        std::optional<training::Checkpoint> ckpt1, ckpt2;
        std::optional<data::DatasetSplit> test1, test2;
        if (!tr_ckpt1.empty()) {
            ckpt1 = training::load_checkpoint(tr_ckpt1);
        }
        if (!tr_ckpt2.empty()) {
            ckpt2 = training::load_checkpoint(tr_ckpt2);
        }
        if (!tr_test1.empty()) {
            test1 = data::load_jsonl(tr_test1, "test", data::Subtask::imperceptibility,
                                     cfg.placeholder);
        }
        if (!tr_test2.empty()) {
            test2 = data::load_jsonl(tr_test2, "test", data::Subtask::nonspecificity, cfg.placeholder);
        }

        evaluation::TransferInputs inputs;
        inputs.checkpoint_subtask1 = ckpt1 ? &*ckpt1 : nullptr;
        inputs.checkpoint_subtask2 = ckpt2 ? &*ckpt2 : nullptr;
        inputs.test_subtask1 = test1 ? &*test1 : nullptr;
        inputs.test_subtask2 = test2 ? &*test2 : nullptr;

        const evaluation::TransferMatrix matrix = evaluation::run_transfer(inputs);
        fs::create_directories(tr_out);
        io::atomic_write_file(fs::path(tr_out) / "transfer.json", matrix.to_json());
        const std::string table = evaluation::format_transfer_table(matrix);
        io::atomic_write_file(fs::path(tr_out) / "transfer.txt", table);
        write_manifest(fs::path(tr_out) / "manifest.json", "transfer", cfg,
                       {{"complete", matrix.complete()}});
        std::cout << table;
        if (!matrix.complete()) {
            std::cout << "matrix incomplete: missing checkpoints or test splits\n";
        }
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const TrainError& e) {
        std::cerr << "training aborted: " << e.what() << "\n";
        return 2;
    } catch (const RecamError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
}
