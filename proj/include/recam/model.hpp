#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "recam/text.hpp"
#include "recam/textprep.hpp"

namespace recam::model {

using text::TokenId;

// Row-major dense matrix; one row per token position in encoder outputs.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
};

// Contiguous slice of a flat parameter vector. `decay` marks tensors that
// take weight decay (everything except biases and normalization gains).
struct ParamGroup {
    std::string name;
    std::size_t offset = 0;
    std::size_t size = 0;
    bool decay = false;
};

// Text encoder abstraction. encode() is const and safe to call concurrently
// on a frozen instance; the forward/backward training surface is
// single-writer: one forward_batch followed by at most one backward_batch.
class EncoderBackend {
public:
    virtual ~EncoderBackend() = default;

    virtual std::size_t hidden_size() const = 0;
    virtual std::size_t vocab_size() const = 0;
    virtual std::size_t max_positions() const = 0;
    virtual bool deterministic() const = 0;

    // Hidden states for every input position; output rows == ids.size().
    virtual Matrix encode(std::span<const TokenId> ids) const = 0;

    // First-token states for a batch of sequences; keeps activation tapes
    // until backward_batch or the next forward_batch.
    virtual std::vector<std::vector<double>> forward_batch(
        const std::vector<std::vector<TokenId>>& sequences) = 0;
    // d_first_states matches the last forward_batch order; accumulates into
    // gradients().
    virtual void backward_batch(const std::vector<std::vector<double>>& d_first_states) = 0;

    virtual std::span<double> parameters() = 0;
    virtual std::span<const double> parameters() const = 0;
    virtual std::span<double> gradients() = 0;
    virtual void zero_grad() = 0;
    virtual const std::vector<ParamGroup>& param_groups() const = 0;

    // Appends embedding rows for newly registered tokens; existing rows are
    // left untouched.
    virtual void grow_vocab(std::size_t new_vocab_size) = 0;
};

// Feed-forward map from the pooled (first-token) state to a scalar logit.
// Depth 0 is a single linear layer; deeper heads insert GELU hidden layers
// of the encoder width.
class ClassifierHead {
public:
    ClassifierHead() = default;
    ClassifierHead(std::size_t hidden_size, int hidden_layers, std::uint64_t seed);

    std::size_t input_size() const { return hidden_; }
    int hidden_layers() const { return layers_; }

    double forward(std::span<const double> state) const;

    struct Tape {
        std::vector<double> input;
        std::vector<std::vector<double>> pre;   // per hidden layer, pre-activation
        std::vector<std::vector<double>> post;  // per hidden layer, post-GELU
    };
    double forward(std::span<const double> state, Tape& tape) const;
    // Accumulates parameter gradients and writes d_loss/d_state.
    void backward(const Tape& tape, double d_logit, std::span<double> d_state);

    std::span<double> parameters() { return params_; }
    std::span<const double> parameters() const { return params_; }
    std::span<double> gradients() { return grads_; }
    void zero_grad();
    const std::vector<ParamGroup>& param_groups() const { return groups_; }

    void save(const std::filesystem::path& path) const;
    static ClassifierHead load(const std::filesystem::path& path, std::size_t hidden_size,
                               int hidden_layers);

private:
    std::size_t hidden_ = 0;
    int layers_ = 0;
    std::vector<double> params_;
    std::vector<double> grads_;
    std::vector<ParamGroup> groups_;

    void build_layout();
};

// Scores and pooled states for the five candidates of one example.
// `scores` is the main P2 distribution; the question_* fields are filled
// only by the siamese path (P1, auxiliary, never used for prediction).
struct ModelOutput {
    std::vector<std::vector<double>> joint_first_token_states;
    std::vector<std::vector<double>> question_first_token_states;
    std::vector<double> joint_logits;
    std::vector<double> question_logits;
    std::vector<double> scores;
    std::vector<double> question_scores;
};

// softmax over the five joint logits f(PLM([Q;A_i;D])[0]).
ModelOutput score_candidates(const std::vector<textprep::EncodedInstance>& instances,
                             const EncoderBackend& backend, const ClassifierHead& head);

// Same joint path plus the completed-question branch through the same
// encoder and head (shared weights).
ModelOutput score_siamese(const std::vector<textprep::EncodedInstance>& instances,
                          const EncoderBackend& backend, const ClassifierHead& head);

// argmax of the joint scores; ties resolve to the lowest index.
int predict(const ModelOutput& output);

}  // namespace recam::model
