#include "recam/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "recam/augment.hpp"
#include "recam/errors.hpp"
#include "recam/io.hpp"
#include "recam/kernels.hpp"
#include "recam/numeric.hpp"
#include "recam/ranker.hpp"
#include "recam/rng.hpp"

using nlohmann::json;

namespace recam::training {

double lr_at(long long step, long long total_steps, long long warmup_steps, double base_lr) {
    if (total_steps <= 0) {
        return 0.0;
    }
    if (warmup_steps > 0 && step < warmup_steps) {
        return base_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
    }
    if (total_steps <= warmup_steps) {
        return base_lr;
    }
    const double progress = static_cast<double>(step - warmup_steps) /
                            static_cast<double>(total_steps - warmup_steps);
    return base_lr * std::max(0.0, 1.0 - progress);
}

long long resolve_warmup_steps(double warmup, long long total_steps, long long steps_per_epoch) {
    if (warmup < 1.0) {
        return std::llround(warmup * static_cast<double>(total_steps));
    }
    return std::llround(warmup) * steps_per_epoch;
}

void AdamW::add_slot(std::span<double> params, std::span<double> grads,
                     const std::vector<model::ParamGroup>& groups) {
    if (params.size() != grads.size()) {
        throw ContractError("optimizer slot parameter/gradient size mismatch");
    }
    std::size_t covered = 0;
    std::vector<char> flags(params.size(), 0);
    for (const model::ParamGroup& g : groups) {
        if (g.offset + g.size > params.size()) {
            throw ContractError("parameter group " + g.name + " exceeds its slot");
        }
        covered += g.size;
        if (g.decay) {
            std::fill_n(flags.begin() + static_cast<std::ptrdiff_t>(g.offset), g.size, 1);
        }
    }
    if (covered != params.size()) {
        throw ContractError("parameter groups do not tile their slot");
    }
    slots_.push_back({params, grads});
    decay_.insert(decay_.end(), flags.begin(), flags.end());
    m_.resize(decay_.size(), 0.0);
    v_.resize(decay_.size(), 0.0);
}

double AdamW::global_grad_norm() const {
    double total = 0.0;
    for (const Slot& slot : slots_) {
        total += l2_norm_squared(slot.grads);
    }
    return std::sqrt(total);
}

void AdamW::clip_global_norm(double max_norm) {
    const double norm = global_grad_norm();
    if (norm <= max_norm || norm == 0.0) {
        return;
    }
    const double factor = max_norm / norm;
    for (const Slot& slot : slots_) {
        kernels::scale(factor, slot.grads.data(), slot.grads.size());
    }
}

void AdamW::step(double lr) {
    ++step_count_;
    const double bc1 = 1.0 - std::pow(hyper_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(hyper_.beta2, static_cast<double>(step_count_));
    std::size_t base = 0;
    for (const Slot& slot : slots_) {
        for (std::size_t i = 0; i < slot.params.size(); ++i) {
            const std::size_t j = base + i;
            const double g = slot.grads[i];
            m_[j] = hyper_.beta1 * m_[j] + (1.0 - hyper_.beta1) * g;
            v_[j] = hyper_.beta2 * v_[j] + (1.0 - hyper_.beta2) * g * g;
            const double m_hat = m_[j] / bc1;
            const double v_hat = v_[j] / bc2;
            double update = m_hat / (std::sqrt(v_hat) + hyper_.eps);
            if (decay_[j] != 0) {
                update += hyper_.weight_decay * slot.params[i];
            }
            slot.params[i] -= lr * update;
        }
        base += slot.params.size();
    }
}

void AdamW::zero_grad() {
    for (const Slot& slot : slots_) {
        std::fill(slot.grads.begin(), slot.grads.end(), 0.0);
    }
}

std::vector<double> AdamW::export_state() const {
    std::vector<double> state;
    state.reserve(m_.size() + v_.size() + 1);
    state.insert(state.end(), m_.begin(), m_.end());
    state.insert(state.end(), v_.begin(), v_.end());
    state.push_back(static_cast<double>(step_count_));
    return state;
}

void AdamW::import_state(const std::vector<double>& state) {
    if (state.size() != m_.size() + v_.size() + 1) {
        throw ContractError("optimizer state size mismatch");
    }
    std::copy(state.begin(), state.begin() + static_cast<std::ptrdiff_t>(m_.size()), m_.begin());
    std::copy(state.begin() + static_cast<std::ptrdiff_t>(m_.size()), state.end() - 1, v_.begin());
    step_count_ = static_cast<long long>(state.back());
}

text::Tokenizer fit_tokenizer(const data::DatasetSplit& split, const RunConfig& config) {
    text::Tokenizer tokenizer;
    tokenizer.add_special_token(config.placeholder);
    if (config.use_special_tokens) {
        textprep::register_scheme(tokenizer, textprep::scheme_by_name(config.special_token_scheme));
    }
    for (const data::Example& ex : split.examples) {
        tokenizer.fit_text(ex.article);
        tokenizer.fit_text(ex.question);
        for (const std::string& option : ex.options) {
            tokenizer.fit_text(option);
        }
    }
    return tokenizer;
}

std::unique_ptr<backends::TransformerEncoder> make_ranking_encoder(const text::Tokenizer& tokenizer,
                                                                   const RunConfig& config) {
    // Frozen, independent of the trained weights: ranking is preprocessing,
    // and must agree between training and later checkpoint evaluation.
    return std::make_unique<backends::TransformerEncoder>(backends::tiny_encoder_config(
        tokenizer.size(), static_cast<std::size_t>(config.max_input_length),
        mix_seed(config.seed, 0x52414e4b)));
}

std::vector<PreparedExample> prepare_split(const data::DatasetSplit& split, const text::Tokenizer& tokenizer,
                                           const RunConfig& config) {
    std::unique_ptr<backends::TransformerEncoder> rank_encoder;
    std::unique_ptr<backends::EncoderEmbeddingProvider> embedder;
    if (config.use_sentence_ranking) {
        rank_encoder = make_ranking_encoder(tokenizer, config);
        embedder = std::make_unique<backends::EncoderEmbeddingProvider>(*rank_encoder, tokenizer);
    }
    const ranker::SimilarityOptions rank_options = ranker::options_from_config(config);

    std::vector<PreparedExample> prepared;
    prepared.reserve(split.examples.size());
    for (const data::Example& ex : split.examples) {
        PreparedExample pe;
        pe.id = ex.id;
        pe.label = ex.label;
        std::string passage = ex.article;
        if (config.use_sentence_ranking && !ex.article.empty()) {
            passage = ranker::rank(ex.article, ex.question, *embedder, rank_options).rearranged_text;
        }
        pe.instances = textprep::assemble_all(ex, passage, tokenizer, config);
        prepared.push_back(std::move(pe));
    }
    return prepared;
}

BatchResult compute_batch(const std::vector<const PreparedExample*>& batch,
                          backends::TransformerEncoder& encoder, model::ClassifierHead& head,
                          std::span<const double> uncertainty_params,
                          std::span<double> uncertainty_grads, const RunConfig& config,
                          bool accumulate_grads) {
    if (batch.empty()) {
        throw ContractError("compute_batch requires a non-empty batch");
    }
    if (uncertainty_params.size() != 2 || (accumulate_grads && uncertainty_grads.size() != 2)) {
        throw ContractError("uncertainty parameter buffers must hold two values");
    }
    const bool siamese = config.use_siamese;
    const int k = data::kNumOptions;
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    const losses::UncertaintyParams uncertainty{uncertainty_params[0], uncertainty_params[1]};

    // Branch weights: d(combined)/d(L1), d(combined)/d(L2).
    double weight1 = 0.0;
    double weight2 = 1.0;
    if (siamese) {
        const losses::UncertaintyGrads ug = losses::uncertainty_grads(0.0, 0.0, uncertainty);
        weight1 = ug.d_l1;
        weight2 = ug.d_l2;
    }

    BatchResult result;
    for (const PreparedExample* example : batch) {
        if (!example->label) {
            throw ContractError("training batch contains an unlabeled example: " + example->id);
        }
        std::vector<std::vector<model::TokenId>> sequences;
        sequences.reserve(siamese ? 2 * k : k);
        for (const auto& inst : example->instances) {
            sequences.push_back(inst.joint_ids);
        }
        if (siamese) {
            for (const auto& inst : example->instances) {
                if (inst.question_only_ids.empty()) {
                    throw ContractError("siamese training requires question_only_ids");
                }
                sequences.push_back(inst.question_only_ids);
            }
        }

        std::vector<std::vector<double>> first_states;
        if (accumulate_grads) {
            first_states = encoder.forward_batch(sequences);
        } else {
            first_states.reserve(sequences.size());
            for (const auto& seq : sequences) {
                const model::Matrix states = encoder.encode(seq);
                std::span<const double> first = states.row(0);
                first_states.emplace_back(first.begin(), first.end());
            }
        }

        std::vector<model::ClassifierHead::Tape> tapes(sequences.size());
        std::vector<double> logits(sequences.size());
        for (std::size_t i = 0; i < sequences.size(); ++i) {
            logits[i] = head.forward(first_states[i], tapes[i]);
        }

        const losses::SmoothingConfig smoothing{
            config.use_label_smoothing ? config.label_smoothing_alpha : 0.0};
        const std::vector<double> target = losses::smooth_labels(example->label.value(), k, smoothing);
        const std::vector<double> target_aux =
            config.use_label_smoothing && !config.smooth_both_branches
                ? losses::smooth_labels(example->label.value(), k, losses::SmoothingConfig{0.0})
                : target;

        const auto joint = losses::softmax_cross_entropy(std::span<const double>(logits.data(), k), target);
        result.loss2 += joint.loss * inv_batch;

        losses::SoftmaxCrossEntropy aux;
        if (siamese) {
            aux = losses::softmax_cross_entropy(std::span<const double>(logits.data() + k, k), target_aux);
            result.loss1 += aux.loss * inv_batch;
        }

        if (accumulate_grads) {
            std::vector<std::vector<double>> d_first(sequences.size(),
                                                     std::vector<double>(encoder.hidden_size(), 0.0));
            for (int i = 0; i < k; ++i) {
                const std::size_t j = static_cast<std::size_t>(i);
                head.backward(tapes[j], joint.d_logits[j] * weight2 * inv_batch, d_first[j]);
            }
            if (siamese) {
                for (int i = 0; i < k; ++i) {
                    const std::size_t j = static_cast<std::size_t>(k + i);
                    head.backward(tapes[j], aux.d_logits[static_cast<std::size_t>(i)] * weight1 * inv_batch,
                                  d_first[j]);
                }
            }
            encoder.backward_batch(d_first);
        }
    }

    if (siamese) {
        result.loss = losses::uncertainty_combine(result.loss1, result.loss2, uncertainty);
        if (accumulate_grads) {
            const losses::UncertaintyGrads ug =
                losses::uncertainty_grads(result.loss1, result.loss2, uncertainty);
            uncertainty_grads[0] += ug.d_log_var1;
            uncertainty_grads[1] += ug.d_log_var2;
        }
    } else {
        result.loss = result.loss2;
    }
    return result;
}

namespace {

double accuracy_on(const std::vector<PreparedExample>& prepared, const backends::TransformerEncoder& encoder,
                   const model::ClassifierHead& head) {
    if (prepared.empty()) {
        throw ValidationError("cannot compute accuracy over an empty split");
    }
    std::size_t correct = 0;
    for (const PreparedExample& pe : prepared) {
        const model::ModelOutput out = model::score_candidates(pe.instances, encoder, head);
        if (pe.label && model::predict(out) == *pe.label) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(prepared.size());
}

}  // namespace

TrainOutput train(const data::DatasetSplit& train_split, const data::DatasetSplit& dev_split,
                  const RunConfig& config, const TrainOptions& options) {
    config.validate();
    if (!train_split.labeled() || train_split.examples.empty()) {
        throw ValidationError("training requires a non-empty labeled train split");
    }
    if (!dev_split.labeled() || dev_split.examples.empty()) {
        throw ValidationError("training requires a non-empty labeled dev split");
    }

    data::DatasetSplit corpus = train_split;
    if (config.use_back_translation) {
        if (options.back_translated == nullptr) {
            throw ContractError(
                "config enables back_translation but no augmented split was supplied");
        }
        corpus = augment::concat_splits(train_split, *options.back_translated);
    }

    text::Tokenizer tokenizer = fit_tokenizer(corpus, config);
    std::unique_ptr<model::EncoderBackend> backend_owner =
        backends::build_backend(options.backend_kind, tokenizer, config, options.pretrained_dir);
    auto* encoder = dynamic_cast<backends::TransformerEncoder*>(backend_owner.get());
    if (encoder == nullptr) {
        throw ContractError("training requires a trainable transformer backend");
    }

    model::ClassifierHead head(encoder->hidden_size(), config.head_hidden_layers, config.seed);
    std::vector<double> uncertainty_params = {0.0, 0.0};
    std::vector<double> uncertainty_grads(2, 0.0);
    const std::vector<model::ParamGroup> uncertainty_groups = {
        {"uncertainty.log_var", 0, 2, false}};

    const std::vector<PreparedExample> prepared_train = prepare_split(corpus, tokenizer, config);
    const std::vector<PreparedExample> prepared_dev = prepare_split(dev_split, tokenizer, config);

    AdamW optimizer;
    optimizer.add_slot(encoder->parameters(), encoder->gradients(), encoder->param_groups());
    optimizer.add_slot(head.parameters(), head.gradients(), head.param_groups());
    optimizer.add_slot(uncertainty_params, uncertainty_grads, uncertainty_groups);

    const long long n = static_cast<long long>(prepared_train.size());
    const long long batch_size = config.batch_size;
    const long long steps_per_epoch = (n + batch_size - 1) / batch_size;
    const long long total_steps = steps_per_epoch * config.epochs;
    const long long warmup_steps = resolve_warmup_steps(config.warmup, total_steps, steps_per_epoch);

    std::ofstream log_stream;
    if (!options.log_path.empty()) {
        if (options.log_path.has_parent_path()) {
            std::filesystem::create_directories(options.log_path.parent_path());
        }
        log_stream.open(options.log_path, std::ios::trunc);
        if (!log_stream) {
            throw IoError("cannot open training log " + options.log_path.string());
        }
    }

    TrainOutput output;
    double best_accuracy = -1.0;
    int best_epoch = 0;
    std::vector<double> best_encoder_params;
    std::vector<double> best_head_params;
    std::vector<double> best_uncertainty;
    std::vector<double> best_optimizer_state;

    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    long long step = 0;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(config.seed, 0x45504f43 + static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        for (long long start = 0; start < n; start += batch_size) {
            const long long end = std::min(n, start + batch_size);

            std::vector<const PreparedExample*> batch;
            batch.reserve(static_cast<std::size_t>(end - start));
            for (long long i = start; i < end; ++i) {
                batch.push_back(&prepared_train[order[static_cast<std::size_t>(i)]]);
            }

            BatchResult result;
            try {
                result = compute_batch(batch, *encoder, head, uncertainty_params, uncertainty_grads,
                                       config, true);
            } catch (const std::bad_alloc&) {
                throw TrainError("out of memory while processing a batch; reduce batch_size (" +
                                 std::to_string(config.batch_size) + ") or max_input_length");
            }

            if (!std::isfinite(result.loss)) {
                std::ostringstream diag;
                diag << "non-finite loss at step " << step << " (loss1=" << result.loss1
                     << ", loss2=" << result.loss2 << "); batch ids:";
                for (const PreparedExample* pe : batch) {
                    diag << " " << pe->id;
                }
                throw TrainError(diag.str());
            }

            StepInfo info;
            info.step = step;
            info.loss = result.loss;
            info.loss1 = result.loss1;
            info.loss2 = result.loss2;
            info.lr = lr_at(step, total_steps, warmup_steps, config.learning_rate);
            info.grad_norm = optimizer.global_grad_norm();
            optimizer.clip_global_norm(config.grad_clip_norm);
            info.grad_norm_postclip = optimizer.global_grad_norm();
            optimizer.step(info.lr);
            optimizer.zero_grad();

            if (log_stream.is_open()) {
                json record;
                record["step"] = info.step;
                record["loss"] = info.loss;
                record["loss1"] = info.loss1;
                record["loss2"] = info.loss2;
                record["lr"] = info.lr;
                record["grad_norm"] = info.grad_norm;
                log_stream << record.dump() << "\n";
            }
            if (options.hook) {
                options.hook(info);
            }
            output.steps.push_back(info);
            ++step;
        }

        const double dev_accuracy = accuracy_on(prepared_dev, *encoder, head);
        output.dev_accuracy_by_epoch.push_back(dev_accuracy);
        if (options.verbose) {
            std::cerr << "[train] epoch " << epoch << " dev_accuracy=" << dev_accuracy << "\n";
        }
        if (dev_accuracy > best_accuracy) {
            best_accuracy = dev_accuracy;
            best_epoch = epoch;
            best_encoder_params.assign(encoder->parameters().begin(), encoder->parameters().end());
            best_head_params.assign(head.parameters().begin(), head.parameters().end());
            best_uncertainty = uncertainty_params;
            best_optimizer_state = optimizer.export_state();
        }
    }

    // Restore the best-epoch weights into the returned checkpoint.
    std::copy(best_encoder_params.begin(), best_encoder_params.end(), encoder->parameters().begin());
    std::copy(best_head_params.begin(), best_head_params.end(), head.parameters().begin());

    Checkpoint ckpt;
    ckpt.encoder_config = encoder->config();
    ckpt.encoder = std::unique_ptr<backends::TransformerEncoder>(
        static_cast<backends::TransformerEncoder*>(backend_owner.release()));
    ckpt.head = std::move(head);
    ckpt.uncertainty = {best_uncertainty[0], best_uncertainty[1]};
    ckpt.tokenizer = std::move(tokenizer);
    ckpt.config = config;
    ckpt.dev_accuracy = best_accuracy;
    ckpt.epoch = best_epoch;
    ckpt.optimizer_state = std::move(best_optimizer_state);
    output.checkpoint = std::move(ckpt);
    return output;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    json manifest;
    manifest["format"] = "recam-checkpoint";
    manifest["version"] = 1;
    manifest["dev_accuracy"] = checkpoint.dev_accuracy;
    manifest["epoch"] = checkpoint.epoch;
    manifest["encoder"] = json::parse(checkpoint.encoder_config.to_json());
    manifest["head"] = {{"hidden", checkpoint.encoder_config.hidden},
                        {"hidden_layers", checkpoint.config.head_hidden_layers}};
    manifest["config"] = json::parse(checkpoint.config.to_json());
    io::atomic_write_file(dir / "manifest.json", manifest.dump(2));

    checkpoint.encoder->save(dir / "encoder.bin");
    checkpoint.head.save(dir / "head.bin");
    io::write_doubles(dir / "uncertainty.bin",
                      {checkpoint.uncertainty.log_var1, checkpoint.uncertainty.log_var2});
    io::write_doubles(dir / "optimizer.bin", checkpoint.optimizer_state);
    checkpoint.tokenizer.save(dir / "tokenizer.json");
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
    try {
        const json manifest = json::parse(io::read_file(dir / "manifest.json"));
        if (manifest.value("format", "") != "recam-checkpoint") {
            throw IoError(dir.string() + " is not a checkpoint directory");
        }

        Checkpoint ckpt;
        ckpt.encoder_config = backends::EncoderConfig::from_json(manifest.at("encoder").dump());
        ckpt.encoder = backends::TransformerEncoder::load(ckpt.encoder_config, dir / "encoder.bin");
        ckpt.config = RunConfig::from_json(manifest.at("config").dump());
        ckpt.head = model::ClassifierHead::load(dir / "head.bin", ckpt.encoder_config.hidden,
                                                ckpt.config.head_hidden_layers);
        const std::vector<double> uncertainty = io::read_doubles(dir / "uncertainty.bin");
        if (uncertainty.size() != 2) {
            throw IoError("uncertainty.bin must hold exactly two values");
        }
        ckpt.uncertainty = {uncertainty[0], uncertainty[1]};
        ckpt.optimizer_state = io::read_doubles(dir / "optimizer.bin");
        ckpt.tokenizer = text::Tokenizer::load(dir / "tokenizer.json");
        ckpt.dev_accuracy = manifest.at("dev_accuracy").get<double>();
        ckpt.epoch = manifest.at("epoch").get<int>();
        return ckpt;
    } catch (const json::exception& e) {
        throw IoError("corrupt checkpoint " + dir.string() + ": " + e.what());
    }
}

GridSearchResult grid_search(const std::vector<RunConfig>& configs, const data::DatasetSplit& train_split,
                             const data::DatasetSplit& dev_split, const TrainOptions& options) {
    if (configs.empty()) {
        throw ValidationError("grid search requires at least one config");
    }
    GridSearchResult result;
    double best = -1.0;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        GridCell cell;
        cell.config_index = i;
        cell.config = configs[i];
        try {
            TrainOutput out = train(train_split, dev_split, configs[i], options);
            cell.ok = true;
            cell.dev_accuracy = out.checkpoint.dev_accuracy;
            if (cell.dev_accuracy > best) {
                best = cell.dev_accuracy;
                result.best_index = i;
                result.best_checkpoint = std::move(out.checkpoint);
            }
        } catch (const std::exception& e) {
            cell.ok = false;
            cell.error = e.what();
        }
        result.cells.push_back(std::move(cell));
    }
    return result;
}

}  // namespace recam::training
