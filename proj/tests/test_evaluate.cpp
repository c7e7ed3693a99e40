#include <doctest.h>

#include <algorithm>

#include "recam/augment.hpp"
#include "recam/errors.hpp"
#include "recam/evaluate.hpp"
#include "recam/train.hpp"

#include "test_support.hpp"

using namespace recam;
using namespace recam::evaluation;
using recam::testsupport::TempDir;

namespace {

RunConfig tiny_config(int epochs = 1) {
    RunConfig cfg;
    cfg.allow_unsafe = true;
    cfg.learning_rate = 4e-3;
    cfg.batch_size = 4;
    cfg.warmup = 0.1;
    cfg.max_input_length = 64;
    cfg.epochs = epochs;
    cfg.seed = 33;
    return cfg;
}

training::Checkpoint quick_checkpoint(int epochs = 1, RunConfig cfg = tiny_config()) {
    cfg.epochs = epochs;
    const data::DatasetSplit train_split = testsupport::fixture_split(4);
    const data::DatasetSplit dev_split = testsupport::fixture_split(3, "dev");
    return training::train(train_split, dev_split, cfg).checkpoint;
}

}  // namespace

TEST_CASE("accuracy is exactly correct over total") {
    const training::Checkpoint ckpt = quick_checkpoint();
    const data::DatasetSplit dev_split = testsupport::fixture_split(4, "dev");
    const EvalReport report = evaluate(ckpt, dev_split);

    REQUIRE(report.predictions.size() == 4);
    std::size_t correct = 0;
    for (const Prediction& p : report.predictions) {
        REQUIRE(p.label.has_value());
        if (p.predicted == *p.label) {
            ++correct;
        }
    }
    CHECK(report.accuracy == static_cast<double>(correct) / 4.0);
    CHECK(report.accuracy >= 0.0);
    CHECK(report.accuracy <= 1.0);
}

TEST_CASE("evaluation rejects empty and unlabeled splits") {
    const training::Checkpoint ckpt = quick_checkpoint();

    data::DatasetSplit empty;
    empty.name = "dev";
    CHECK_THROWS_AS(evaluate(ckpt, empty), ValidationError);

    data::DatasetSplit unlabeled = testsupport::fixture_split(2, "test");
    unlabeled.examples[0].label.reset();
    CHECK_THROWS_WITH_AS(evaluate(ckpt, unlabeled), doctest::Contains("predict"), ValidationError);

    // predict-only mode handles the same split
    const auto predictions = predict_split(ckpt, unlabeled);
    CHECK(predictions.size() == 2);
    CHECK_FALSE(predictions[0].label.has_value());
}

TEST_CASE("accuracy is invariant under example order") {
    const training::Checkpoint ckpt = quick_checkpoint();
    data::DatasetSplit split = testsupport::fixture_split(5, "dev");
    const double base = evaluate(ckpt, split).accuracy;

    std::reverse(split.examples.begin(), split.examples.end());
    CHECK(evaluate(ckpt, split).accuracy == base);
}

TEST_CASE("eval reports round-trip through json") {
    const training::Checkpoint ckpt = quick_checkpoint();
    const data::DatasetSplit dev_split = testsupport::fixture_split(3, "dev");
    const EvalReport report = evaluate(ckpt, dev_split);
    const EvalReport restored = EvalReport::from_json(report.to_json());
    CHECK(restored == report);
}

TEST_CASE("ablation emits baseline, singles and the combined row") {
    const data::DatasetSplit train_split = testsupport::fixture_split(4);
    const data::DatasetSplit trial_split = testsupport::fixture_split(3, "trial");
    const data::DatasetSplit dev_split = testsupport::fixture_split(3, "dev");
    augment::IdentityTranslator identity;
    const data::DatasetSplit bt =
        augment::augment_split(train_split, identity).as_split("train-bt", train_split.subtask);

    AblationData data;
    data.train = &train_split;
    data.trial = &trial_split;
    data.dev = &dev_split;
    data.back_translated = &bt;

    const RunConfig base = tiny_config();

    SUBCASE("zero techniques -> single baseline row") {
        const auto rows = run_ablation(base, {}, data);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].name == "baseline");
        CHECK(rows[0].ok);
    }

    SUBCASE("five techniques -> seven rows, all in range") {
        const std::vector<std::string> techniques(kTechniqueNames.begin(), kTechniqueNames.end());
        const auto rows = run_ablation(base, techniques, data);
        REQUIRE(rows.size() == 7);
        CHECK(rows[0].name == "baseline");
        CHECK(rows[1].name == "w/ special_tokens");
        CHECK(rows[5].name == "w/ back_translation");
        CHECK(rows[6].name == "combined");
        for (const auto& row : rows) {
            CAPTURE(row.name);
            CAPTURE(row.error);
            CHECK(row.ok);
            CHECK(row.trial_accuracy >= 0.0);
            CHECK(row.trial_accuracy <= 1.0);
            CHECK(row.dev_accuracy >= 0.0);
            CHECK(row.dev_accuracy <= 1.0);
        }
        // every row shares the base seed
        for (const auto& row : rows) {
            CHECK(row.config.seed == base.seed);
        }
        // subtask-1 combo is special tokens only
        CHECK(rows[6].config.use_special_tokens);
        CHECK_FALSE(rows[6].config.use_label_smoothing);

        const std::string table = format_ablation_table(rows, "Ablation");
        CHECK(table.find("baseline") != std::string::npos);
        CHECK(table.find("w/ special_tokens") != std::string::npos);
        CHECK(table.find("Trial Acc.") != std::string::npos);
    }

    SUBCASE("baseline row equals a standalone all-off run") {
        const auto rows = run_ablation(base, {}, data);
        RunConfig off = base;
        const training::TrainOutput standalone = training::train(train_split, dev_split, off);
        CHECK(rows[0].dev_accuracy == standalone.checkpoint.dev_accuracy);
    }

    SUBCASE("nonspecificity combo adds label smoothing") {
        RunConfig base2 = base;
        base2.subtask = "nonspecificity";
        const auto rows = run_ablation(base2, {"special_tokens"}, data);
        REQUIRE(rows.size() == 3);
        CHECK(rows[2].config.use_special_tokens);
        CHECK(rows[2].config.use_label_smoothing);
    }

    SUBCASE("row failures are isolated") {
        AblationData no_bt = data;
        no_bt.back_translated = nullptr;  // back_translation row cannot train
        const std::vector<std::string> techniques(kTechniqueNames.begin(), kTechniqueNames.end());
        const auto rows = run_ablation(base, techniques, no_bt);
        REQUIRE(rows.size() == 7);
        CHECK(rows[0].ok);
        CHECK_FALSE(rows[5].ok);  // w/ back_translation
        CHECK(rows[6].ok);
        CHECK(rows[5].error.find("back_translation") != std::string::npos);
    }

    SUBCASE("duplicate or unknown techniques are rejected") {
        CHECK_THROWS_AS(run_ablation(base, {"siamese", "siamese"}, data), ValidationError);
        CHECK_THROWS_AS(run_ablation(base, {"made_up"}, data), ValidationError);
    }
}

TEST_CASE("token sweep walks the scheme catalogue") {
    const data::DatasetSplit train_split = testsupport::fixture_split(4);
    const data::DatasetSplit dev_split = testsupport::fixture_split(2, "dev");
    AblationData data;
    data.train = &train_split;
    data.dev = &dev_split;

    const auto schemes = textprep::all_schemes();
    const auto rows = run_token_sweep(schemes, tiny_config(), data);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].name == "<e>");
    CHECK(rows[1].name == "<#>");
    CHECK(rows[2].name == "<$>");
    CHECK(rows[3].name == "#");
    CHECK(rows[4].name == "$");
    CHECK(rows[5].name == "none");
    CHECK_FALSE(rows[5].config.use_special_tokens);
    for (const auto& row : rows) {
        CAPTURE(row.name);
        CAPTURE(row.error);
        CHECK(row.ok);
    }

    auto duplicated = schemes;
    duplicated.push_back(schemes[0]);
    CHECK_THROWS_AS(run_token_sweep(duplicated, tiny_config(), data), ValidationError);
}

TEST_CASE("transfer matrix fills when inputs exist") {
    RunConfig cfg1 = tiny_config();
    const training::Checkpoint ckpt1 = quick_checkpoint(1, cfg1);
    RunConfig cfg2 = tiny_config();
    cfg2.subtask = "nonspecificity";
    cfg2.seed = 34;
    const training::Checkpoint ckpt2 = quick_checkpoint(1, cfg2);

    const data::DatasetSplit test1 = testsupport::fixture_split(4, "test", data::Subtask::imperceptibility);
    const data::DatasetSplit test2 =
        testsupport::fixture_split(4, "test", data::Subtask::nonspecificity, "fx2");

    TransferInputs inputs;
    inputs.checkpoint_subtask1 = &ckpt1;
    inputs.checkpoint_subtask2 = &ckpt2;
    inputs.test_subtask1 = &test1;
    inputs.test_subtask2 = &test2;

    const TransferMatrix matrix = run_transfer(inputs);
    CHECK(matrix.complete());
    for (const auto& row : matrix.accuracy) {
        for (double acc : row) {
            CHECK(acc >= 0.0);
            CHECK(acc <= 1.0);
        }
    }

    // identical checkpoints and test sets make every cell equal
    TransferInputs same;
    same.checkpoint_subtask1 = &ckpt1;
    same.checkpoint_subtask2 = &ckpt1;
    same.test_subtask1 = &test1;
    same.test_subtask2 = &test1;
    const TransferMatrix sym = run_transfer(same);
    CHECK(sym.accuracy[0][0] == sym.accuracy[1][1]);
    CHECK(sym.accuracy[0][1] == sym.accuracy[1][0]);

    // missing inputs leave the matrix incomplete
    TransferInputs partial;
    partial.checkpoint_subtask1 = &ckpt1;
    partial.test_subtask1 = &test1;
    const TransferMatrix incomplete = run_transfer(partial);
    CHECK_FALSE(incomplete.complete());
    CHECK(incomplete.filled[0][0]);
    CHECK_FALSE(incomplete.filled[1][0]);

    // reference numbers ride along as metadata only
    const std::string json_text = matrix.to_json();
    CHECK(json_text.find("reference_only") != std::string::npos);
    CHECK(json_text.find("87.51") != std::string::npos);
    const std::string table = format_transfer_table(matrix);
    CHECK(table.find("Subtask-1") != std::string::npos);
}
