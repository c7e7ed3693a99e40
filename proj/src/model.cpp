#include "recam/model.hpp"

#include <algorithm>
#include <cmath>

#include "recam/errors.hpp"
#include "recam/io.hpp"
#include "recam/kernels.hpp"
#include "recam/numeric.hpp"
#include "recam/rng.hpp"

namespace recam::model {

namespace {

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    return cdf + x * pdf;
}

}  // namespace

ClassifierHead::ClassifierHead(std::size_t hidden_size, int hidden_layers, std::uint64_t seed)
    : hidden_(hidden_size), layers_(hidden_layers) {
    build_layout();
    Rng rng(mix_seed(seed, 0x48454144));  // head init stream
    const double std_dev = 0.02;
    for (const ParamGroup& g : groups_) {
        if (!g.decay) {
            continue;  // biases start at zero
        }
        for (std::size_t i = 0; i < g.size; ++i) {
            params_[g.offset + i] = rng.normal(0.0, std_dev);
        }
    }
}

void ClassifierHead::build_layout() {
    groups_.clear();
    std::size_t offset = 0;
    auto push = [&](const std::string& name, std::size_t size, bool decay) {
        groups_.push_back({name, offset, size, decay});
        offset += size;
    };
    for (int l = 0; l < layers_; ++l) {
        push("head.w" + std::to_string(l), hidden_ * hidden_, true);
        push("head.b" + std::to_string(l), hidden_, false);
    }
    push("head.w_out", hidden_, true);
    push("head.b_out", 1, false);
    params_.assign(offset, 0.0);
    grads_.assign(offset, 0.0);
}

double ClassifierHead::forward(std::span<const double> state) const {
    Tape scratch;
    return forward(state, scratch);
}

double ClassifierHead::forward(std::span<const double> state, Tape& tape) const {
    if (state.size() != hidden_) {
        throw ContractError("classifier head expects a state of size " + std::to_string(hidden_));
    }
    tape.input.assign(state.begin(), state.end());
    tape.pre.assign(static_cast<std::size_t>(layers_), {});
    tape.post.assign(static_cast<std::size_t>(layers_), {});

    std::vector<double> x(state.begin(), state.end());
    std::size_t g = 0;
    for (int l = 0; l < layers_; ++l) {
        const ParamGroup& wg = groups_[g++];
        const ParamGroup& bg = groups_[g++];
        std::vector<double> pre(hidden_);
        for (std::size_t j = 0; j < hidden_; ++j) {
            pre[j] = kernels::dot(params_.data() + wg.offset + j * hidden_, x.data(), hidden_) +
                     params_[bg.offset + j];
        }
        std::vector<double> post(hidden_);
        for (std::size_t j = 0; j < hidden_; ++j) {
            post[j] = gelu(pre[j]);
        }
        tape.pre[static_cast<std::size_t>(l)] = pre;
        tape.post[static_cast<std::size_t>(l)] = post;
        x = std::move(post);
    }
    const ParamGroup& wout = groups_[g++];
    const ParamGroup& bout = groups_[g++];
    return kernels::dot(params_.data() + wout.offset, x.data(), hidden_) + params_[bout.offset];
}

void ClassifierHead::backward(const Tape& tape, double d_logit, std::span<double> d_state) {
    if (d_state.size() != hidden_) {
        throw ContractError("d_state size mismatch in classifier head backward");
    }
    const std::size_t n_groups = groups_.size();
    const ParamGroup& wout = groups_[n_groups - 2];
    const ParamGroup& bout = groups_[n_groups - 1];

    const std::vector<double>& last =
        layers_ > 0 ? tape.post[static_cast<std::size_t>(layers_ - 1)] : tape.input;

    // Output layer.
    kernels::axpy(d_logit, last.data(), grads_.data() + wout.offset, hidden_);
    grads_[bout.offset] += d_logit;
    std::vector<double> dx(hidden_, 0.0);
    kernels::axpy(d_logit, params_.data() + wout.offset, dx.data(), hidden_);

    // Hidden layers in reverse.
    for (int l = layers_ - 1; l >= 0; --l) {
        const ParamGroup& wg = groups_[static_cast<std::size_t>(2 * l)];
        const ParamGroup& bg = groups_[static_cast<std::size_t>(2 * l + 1)];
        const std::vector<double>& pre = tape.pre[static_cast<std::size_t>(l)];
        const std::vector<double>& input = l > 0 ? tape.post[static_cast<std::size_t>(l - 1)] : tape.input;

        std::vector<double> d_pre(hidden_);
        for (std::size_t j = 0; j < hidden_; ++j) {
            d_pre[j] = dx[j] * gelu_grad(pre[j]);
        }
        std::vector<double> d_in(hidden_, 0.0);
        for (std::size_t j = 0; j < hidden_; ++j) {
            kernels::axpy(d_pre[j], input.data(), grads_.data() + wg.offset + j * hidden_, hidden_);
            grads_[bg.offset + j] += d_pre[j];
            kernels::axpy(d_pre[j], params_.data() + wg.offset + j * hidden_, d_in.data(), hidden_);
        }
        dx = std::move(d_in);
    }
    for (std::size_t i = 0; i < hidden_; ++i) {
        d_state[i] = dx[i];
    }
}

void ClassifierHead::zero_grad() { std::fill(grads_.begin(), grads_.end(), 0.0); }

void ClassifierHead::save(const std::filesystem::path& path) const { io::write_doubles(path, params_); }

ClassifierHead ClassifierHead::load(const std::filesystem::path& path, std::size_t hidden_size,
                                    int hidden_layers) {
    ClassifierHead head;
    head.hidden_ = hidden_size;
    head.layers_ = hidden_layers;
    head.build_layout();
    std::vector<double> values = io::read_doubles(path);
    if (values.size() != head.params_.size()) {
        throw IoError("classifier head file " + path.string() + " has " + std::to_string(values.size()) +
                      " parameters, expected " + std::to_string(head.params_.size()));
    }
    head.params_ = std::move(values);
    return head;
}

namespace {

void check_instances(const std::vector<textprep::EncodedInstance>& instances) {
    if (instances.size() != data::kNumOptions) {
        throw ContractError("scoring expects exactly 5 instances, got " + std::to_string(instances.size()));
    }
    for (const auto& inst : instances) {
        if (inst.example_id != instances.front().example_id) {
            throw ContractError("scoring expects instances from a single example");
        }
    }
}

}  // namespace

ModelOutput score_candidates(const std::vector<textprep::EncodedInstance>& instances,
                             const EncoderBackend& backend, const ClassifierHead& head) {
    check_instances(instances);
    ModelOutput out;
    for (const auto& inst : instances) {
        const Matrix states = backend.encode(inst.joint_ids);
        std::span<const double> first = states.row(0);
        out.joint_first_token_states.emplace_back(first.begin(), first.end());
        out.joint_logits.push_back(head.forward(first));
    }
    out.scores = softmax(out.joint_logits);
    return out;
}

ModelOutput score_siamese(const std::vector<textprep::EncodedInstance>& instances,
                          const EncoderBackend& backend, const ClassifierHead& head) {
    for (const auto& inst : instances) {
        if (inst.question_only_ids.empty()) {
            throw ContractError("siamese scoring requires question_only_ids on every instance");
        }
    }
    ModelOutput out = score_candidates(instances, backend, head);
    for (const auto& inst : instances) {
        const Matrix states = backend.encode(inst.question_only_ids);
        std::span<const double> first = states.row(0);
        out.question_first_token_states.emplace_back(first.begin(), first.end());
        out.question_logits.push_back(head.forward(first));
    }
    out.question_scores = softmax(out.question_logits);
    return out;
}

int predict(const ModelOutput& output) {
    if (output.scores.empty()) {
        throw ContractError("predict called before scores were populated");
    }
    const auto it = std::max_element(output.scores.begin(), output.scores.end());
    return static_cast<int>(std::distance(output.scores.begin(), it));
}

}  // namespace recam::model
