#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "recam/config.hpp"
#include "recam/model.hpp"
#include "recam/ranker.hpp"
#include "recam/text.hpp"

namespace recam::backends {

struct EncoderConfig {
    std::size_t vocab_size = 0;
    std::size_t hidden = 32;
    std::size_t layers = 2;
    std::size_t heads = 2;
    std::size_t ffn_mult = 4;
    std::size_t max_positions = 200;
    double init_std = 0.02;
    double ln_eps = 1e-5;
    std::uint64_t seed = 7;

    std::string to_json() const;
    static EncoderConfig from_json(const std::string& text);
};

// Desk-scale defaults: a real trainable 2-layer encoder, not a stub, so
// gradient and overfit tests exercise the genuine training path.
EncoderConfig tiny_encoder_config(std::size_t vocab_size, std::size_t max_positions, std::uint64_t seed);

// Pre-LN bidirectional transformer encoder over learned token + position
// embeddings, double precision throughout. All inner loops run on the
// kernels dispatch table, so the same model executes scalar or SIMD.
class TransformerEncoder final : public model::EncoderBackend {
public:
    explicit TransformerEncoder(const EncoderConfig& config);

    std::size_t hidden_size() const override { return cfg_.hidden; }
    std::size_t vocab_size() const override { return cfg_.vocab_size; }
    std::size_t max_positions() const override { return cfg_.max_positions; }
    bool deterministic() const override { return true; }

    model::Matrix encode(std::span<const model::TokenId> ids) const override;

    std::vector<std::vector<double>> forward_batch(
        const std::vector<std::vector<model::TokenId>>& sequences) override;
    void backward_batch(const std::vector<std::vector<double>>& d_first_states) override;

    std::span<double> parameters() override { return params_; }
    std::span<const double> parameters() const override { return params_; }
    std::span<double> gradients() override { return grads_; }
    void zero_grad() override;
    const std::vector<model::ParamGroup>& param_groups() const override { return groups_; }

    void grow_vocab(std::size_t new_vocab_size) override;

    const EncoderConfig& config() const { return cfg_; }

    void save(const std::filesystem::path& weights_path) const;
    static std::unique_ptr<TransformerEncoder> load(const EncoderConfig& config,
                                                    const std::filesystem::path& weights_path);

private:
    struct LayerOffsets {
        std::size_t ln1_g, ln1_b;
        std::size_t wq, bq, wk, bk, wv, bv, wo, bo;
        std::size_t ln2_g, ln2_b;
        std::size_t w1, b1, w2, b2;
    };

    struct LayerTape {
        model::Matrix x_in, ln1_out, q, k, v, merged, x_mid, ln2_out;
        model::Matrix ffn_pre, ffn_post;
        std::vector<double> ln1_mean, ln1_rstd, ln2_mean, ln2_rstd;
        std::vector<model::Matrix> att;  // per head, rows = query position
    };

    struct SeqTape {
        std::vector<model::TokenId> ids;
        std::vector<LayerTape> layers;
        model::Matrix x_final;
        std::vector<double> lnf_mean, lnf_rstd;
    };

    EncoderConfig cfg_;
    std::vector<double> params_;
    std::vector<double> grads_;
    std::vector<model::ParamGroup> groups_;
    std::size_t tok_emb_ = 0;
    std::size_t pos_emb_ = 0;
    std::vector<LayerOffsets> layer_offsets_;
    std::size_t lnf_g_ = 0;
    std::size_t lnf_b_ = 0;

    std::vector<SeqTape> pending_;

    void build_layout();
    void init_params();
    model::Matrix forward_impl(std::span<const model::TokenId> ids, SeqTape* tape) const;
    void backward_impl(const SeqTape& tape, std::span<const double> d_first);
    void check_ids(std::span<const model::TokenId> ids) const;
};

// Builds "tiny" (seeded random init over the supplied tokenizer's vocabulary)
// or "pretrained" (weights + config + vocabulary from an asset directory;
// `tokenizer` is then replaced by the stored one).
std::unique_ptr<model::EncoderBackend> build_backend(const std::string& kind, text::Tokenizer& tokenizer,
                                                     const RunConfig& config,
                                                     const std::filesystem::path& pretrained_dir = {});

// Default location checked for pretrained assets: $RECAM_PRETRAINED_DIR.
std::filesystem::path pretrained_dir_from_env();

// Writes encoder.json / encoder.bin / tokenizer.json so a trained encoder can
// later serve as a pretrained backend.
void save_encoder_assets(const std::filesystem::path& dir, const TransformerEncoder& encoder,
                         const text::Tokenizer& tokenizer);

// Contextual per-token embeddings for the ranker, backed by encode().
class EncoderEmbeddingProvider final : public ranker::EmbeddingProvider {
public:
    EncoderEmbeddingProvider(const model::EncoderBackend& backend, const text::Tokenizer& tokenizer)
        : backend_(backend), tokenizer_(tokenizer) {}

    std::size_t dim() const override { return backend_.hidden_size(); }
    std::vector<std::vector<double>> embed(const std::vector<std::string>& tokens) override;
    // encode() on a frozen backend is const and reentrant.
    bool concurrency_safe() const override { return true; }

private:
    const model::EncoderBackend& backend_;
    const text::Tokenizer& tokenizer_;
};

}  // namespace recam::backends
