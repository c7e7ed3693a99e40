#include "recam/backends.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <nlohmann/json.hpp>

#include "recam/errors.hpp"
#include "recam/io.hpp"
#include "recam/kernels.hpp"
#include "recam/rng.hpp"

using nlohmann::json;

namespace recam::backends {

namespace {

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    return cdf + x * pdf;
}

// y[j] = dot(W[j,:], x) + b[j], W row-major [out, in].
void linear_forward(const double* w, const double* b, std::span<const double> x, std::span<double> y) {
    const std::size_t in = x.size();
    for (std::size_t j = 0; j < y.size(); ++j) {
        y[j] = kernels::dot(w + j * in, x.data(), in) + b[j];
    }
}

// Accumulates dW, db and d_x for one position.
void linear_backward(const double* w, double* dw, double* db, std::span<const double> x,
                     std::span<const double> dy, std::span<double> dx) {
    const std::size_t in = x.size();
    for (std::size_t j = 0; j < dy.size(); ++j) {
        if (dy[j] == 0.0) {
            continue;
        }
        kernels::axpy(dy[j], x.data(), dw + j * in, in);
        db[j] += dy[j];
        kernels::axpy(dy[j], w + j * in, dx.data(), in);
    }
}

}  // namespace

std::string EncoderConfig::to_json() const {
    json j;
    j["vocab_size"] = vocab_size;
    j["hidden"] = hidden;
    j["layers"] = layers;
    j["heads"] = heads;
    j["ffn_mult"] = ffn_mult;
    j["max_positions"] = max_positions;
    j["init_std"] = init_std;
    j["ln_eps"] = ln_eps;
    j["seed"] = seed;
    return j.dump(2);
}

EncoderConfig EncoderConfig::from_json(const std::string& text) {
    json j = json::parse(text);
    EncoderConfig cfg;
    cfg.vocab_size = j.at("vocab_size").get<std::size_t>();
    cfg.hidden = j.at("hidden").get<std::size_t>();
    cfg.layers = j.at("layers").get<std::size_t>();
    cfg.heads = j.at("heads").get<std::size_t>();
    cfg.ffn_mult = j.at("ffn_mult").get<std::size_t>();
    cfg.max_positions = j.at("max_positions").get<std::size_t>();
    cfg.init_std = j.at("init_std").get<double>();
    cfg.ln_eps = j.at("ln_eps").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

EncoderConfig tiny_encoder_config(std::size_t vocab_size, std::size_t max_positions, std::uint64_t seed) {
    EncoderConfig cfg;
    cfg.vocab_size = vocab_size;
    cfg.hidden = 32;
    cfg.layers = 2;
    cfg.heads = 2;
    cfg.max_positions = max_positions;
    cfg.seed = seed;
    return cfg;
}

TransformerEncoder::TransformerEncoder(const EncoderConfig& config) : cfg_(config) {
    if (cfg_.vocab_size == 0) {
        throw ValidationError("encoder vocab_size must be positive");
    }
    if (cfg_.hidden % cfg_.heads != 0) {
        throw ValidationError("hidden size must be divisible by head count");
    }
    build_layout();
    init_params();
}

void TransformerEncoder::build_layout() {
    groups_.clear();
    layer_offsets_.clear();
    std::size_t offset = 0;
    auto push = [&](const std::string& name, std::size_t size, bool decay) {
        const std::size_t at = offset;
        groups_.push_back({name, at, size, decay});
        offset += size;
        return at;
    };

    const std::size_t h = cfg_.hidden;
    const std::size_t f = cfg_.ffn_mult * h;

    tok_emb_ = push("tok_emb", cfg_.vocab_size * h, true);
    pos_emb_ = push("pos_emb", cfg_.max_positions * h, true);
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        LayerOffsets lo{};
        lo.ln1_g = push(p + "ln1.g", h, false);
        lo.ln1_b = push(p + "ln1.b", h, false);
        lo.wq = push(p + "attn.wq", h * h, true);
        lo.bq = push(p + "attn.bq", h, false);
        lo.wk = push(p + "attn.wk", h * h, true);
        lo.bk = push(p + "attn.bk", h, false);
        lo.wv = push(p + "attn.wv", h * h, true);
        lo.bv = push(p + "attn.bv", h, false);
        lo.wo = push(p + "attn.wo", h * h, true);
        lo.bo = push(p + "attn.bo", h, false);
        lo.ln2_g = push(p + "ln2.g", h, false);
        lo.ln2_b = push(p + "ln2.b", h, false);
        lo.w1 = push(p + "ffn.w1", f * h, true);
        lo.b1 = push(p + "ffn.b1", f, false);
        lo.w2 = push(p + "ffn.w2", h * f, true);
        lo.b2 = push(p + "ffn.b2", h, false);
        layer_offsets_.push_back(lo);
    }
    lnf_g_ = push("ln_f.g", h, false);
    lnf_b_ = push("ln_f.b", h, false);

    params_.assign(offset, 0.0);
    grads_.assign(offset, 0.0);
}

void TransformerEncoder::init_params() {
    Rng rng(cfg_.seed);
    for (const model::ParamGroup& g : groups_) {
        if (g.decay) {
            for (std::size_t i = 0; i < g.size; ++i) {
                params_[g.offset + i] = rng.normal(0.0, cfg_.init_std);
            }
        } else if (g.name.ends_with(".g")) {
            std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(g.offset), g.size, 1.0);
        }
        // biases stay zero
    }
}

void TransformerEncoder::check_ids(std::span<const model::TokenId> ids) const {
    if (ids.empty()) {
        throw ValidationError("cannot encode an empty sequence");
    }
    if (ids.size() > cfg_.max_positions) {
        throw ValidationError("sequence of length " + std::to_string(ids.size()) +
                              " exceeds max_positions " + std::to_string(cfg_.max_positions));
    }
    for (model::TokenId id : ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= cfg_.vocab_size) {
            throw ValidationError("token id " + std::to_string(id) + " outside vocabulary of size " +
                                  std::to_string(cfg_.vocab_size));
        }
    }
}

namespace {

// LayerNorm over one row; returns mean and reciprocal stddev for the tape.
void layernorm_row(std::span<const double> x, const double* g, const double* b, double eps,
                   std::span<double> y, double& mean, double& rstd) {
    const std::size_t n = x.size();
    mean = kernels::sum(x.data(), n) / static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double c = x[i] - mean;
        var += c * c;
    }
    var /= static_cast<double>(n);
    rstd = 1.0 / std::sqrt(var + eps);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = (x[i] - mean) * rstd * g[i] + b[i];
    }
}

void layernorm_backward_row(std::span<const double> x, double mean, double rstd, const double* g,
                            std::span<const double> dy, double* dg, double* db, std::span<double> dx) {
    const std::size_t n = x.size();
    double m1 = 0.0;  // mean(dxhat)
    double m2 = 0.0;  // mean(dxhat * xhat)
    for (std::size_t i = 0; i < n; ++i) {
        const double xhat = (x[i] - mean) * rstd;
        const double dxhat = dy[i] * g[i];
        m1 += dxhat;
        m2 += dxhat * xhat;
    }
    m1 /= static_cast<double>(n);
    m2 /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double xhat = (x[i] - mean) * rstd;
        const double dxhat = dy[i] * g[i];
        dx[i] += rstd * (dxhat - m1 - xhat * m2);
        dg[i] += dy[i] * xhat;
        db[i] += dy[i];
    }
}

}  // namespace

model::Matrix TransformerEncoder::forward_impl(std::span<const model::TokenId> ids, SeqTape* tape) const {
    check_ids(ids);
    const std::size_t len = ids.size();
    const std::size_t h = cfg_.hidden;
    const std::size_t f = cfg_.ffn_mult * h;
    const std::size_t heads = cfg_.heads;
    const std::size_t hd = h / heads;
    const double att_scale = 1.0 / std::sqrt(static_cast<double>(hd));
    const double* p = params_.data();

    if (tape != nullptr) {
        tape->ids.assign(ids.begin(), ids.end());
        tape->layers.assign(cfg_.layers, LayerTape{});
    }

    model::Matrix x(len, h);
    for (std::size_t t = 0; t < len; ++t) {
        const double* tok = p + tok_emb_ + static_cast<std::size_t>(ids[t]) * h;
        const double* pos = p + pos_emb_ + t * h;
        kernels::add(tok, pos, x.row(t).data(), h);
    }

    model::Matrix ln_out(len, h), q(len, h), k(len, h), v(len, h), merged(len, h);
    std::vector<double> ln_mean(len), ln_rstd(len);
    model::Matrix ffn_pre(len, f), ffn_post(len, f);
    std::vector<double> scratch(std::max(h, f));

    for (std::size_t l = 0; l < cfg_.layers; ++l) {
        const LayerOffsets& lo = layer_offsets_[l];
        LayerTape* lt = tape != nullptr ? &tape->layers[l] : nullptr;
        if (lt != nullptr) {
            lt->x_in = x;
        }

        for (std::size_t t = 0; t < len; ++t) {
            layernorm_row(x.row(t), p + lo.ln1_g, p + lo.ln1_b, cfg_.ln_eps, ln_out.row(t), ln_mean[t],
                          ln_rstd[t]);
        }
        for (std::size_t t = 0; t < len; ++t) {
            linear_forward(p + lo.wq, p + lo.bq, ln_out.row(t), q.row(t));
            linear_forward(p + lo.wk, p + lo.bk, ln_out.row(t), k.row(t));
            linear_forward(p + lo.wv, p + lo.bv, ln_out.row(t), v.row(t));
        }
        if (lt != nullptr) {
            lt->ln1_out = ln_out;
            lt->ln1_mean = ln_mean;
            lt->ln1_rstd = ln_rstd;
            lt->q = q;
            lt->k = k;
            lt->v = v;
            lt->att.assign(heads, model::Matrix(len, len));
        }

        // Bidirectional attention, head by head over contiguous column slices.
        std::vector<double> row_scores(len);
        for (std::size_t head = 0; head < heads; ++head) {
            const std::size_t off = head * hd;
            for (std::size_t t = 0; t < len; ++t) {
                const double* q_t = q.row(t).data() + off;
                for (std::size_t u = 0; u < len; ++u) {
                    row_scores[u] = kernels::dot(q_t, k.row(u).data() + off, hd) * att_scale;
                }
                const double m = kernels::max(row_scores.data(), len);
                double total = 0.0;
                for (std::size_t u = 0; u < len; ++u) {
                    row_scores[u] = std::exp(row_scores[u] - m);
                    total += row_scores[u];
                }
                kernels::scale(1.0 / total, row_scores.data(), len);

                double* out_t = merged.row(t).data() + off;
                std::fill_n(out_t, hd, 0.0);
                for (std::size_t u = 0; u < len; ++u) {
                    kernels::axpy(row_scores[u], v.row(u).data() + off, out_t, hd);
                }
                if (lt != nullptr) {
                    std::copy(row_scores.begin(), row_scores.end(), lt->att[head].row(t).begin());
                }
            }
        }
        if (lt != nullptr) {
            lt->merged = merged;
        }

        for (std::size_t t = 0; t < len; ++t) {
            linear_forward(p + lo.wo, p + lo.bo, merged.row(t), std::span<double>(scratch.data(), h));
            kernels::add(x.row(t).data(), scratch.data(), x.row(t).data(), h);
        }
        if (lt != nullptr) {
            lt->x_mid = x;
        }

        for (std::size_t t = 0; t < len; ++t) {
            layernorm_row(x.row(t), p + lo.ln2_g, p + lo.ln2_b, cfg_.ln_eps, ln_out.row(t), ln_mean[t],
                          ln_rstd[t]);
        }
        for (std::size_t t = 0; t < len; ++t) {
            linear_forward(p + lo.w1, p + lo.b1, ln_out.row(t), ffn_pre.row(t));
            for (std::size_t i = 0; i < f; ++i) {
                ffn_post.row(t)[i] = gelu(ffn_pre.row(t)[i]);
            }
            linear_forward(p + lo.w2, p + lo.b2, ffn_post.row(t), std::span<double>(scratch.data(), h));
            kernels::add(x.row(t).data(), scratch.data(), x.row(t).data(), h);
        }
        if (lt != nullptr) {
            lt->ln2_out = ln_out;
            lt->ln2_mean = ln_mean;
            lt->ln2_rstd = ln_rstd;
            lt->ffn_pre = ffn_pre;
            lt->ffn_post = ffn_post;
        }
    }

    if (tape != nullptr) {
        tape->x_final = x;
        tape->lnf_mean.resize(len);
        tape->lnf_rstd.resize(len);
    }
    model::Matrix out(len, h);
    for (std::size_t t = 0; t < len; ++t) {
        double mean = 0.0;
        double rstd = 0.0;
        layernorm_row(x.row(t), p + lnf_g_, p + lnf_b_, cfg_.ln_eps, out.row(t), mean, rstd);
        if (tape != nullptr) {
            tape->lnf_mean[t] = mean;
            tape->lnf_rstd[t] = rstd;
        }
    }
    return out;
}

model::Matrix TransformerEncoder::encode(std::span<const model::TokenId> ids) const {
    return forward_impl(ids, nullptr);
}

std::vector<std::vector<double>> TransformerEncoder::forward_batch(
    const std::vector<std::vector<model::TokenId>>& sequences) {
    pending_.clear();
    pending_.resize(sequences.size());
    std::vector<std::vector<double>> first_states;
    first_states.reserve(sequences.size());
    for (std::size_t i = 0; i < sequences.size(); ++i) {
        model::Matrix out = forward_impl(sequences[i], &pending_[i]);
        std::span<const double> first = out.row(0);
        first_states.emplace_back(first.begin(), first.end());
    }
    return first_states;
}

void TransformerEncoder::backward_batch(const std::vector<std::vector<double>>& d_first_states) {
    if (d_first_states.size() != pending_.size()) {
        throw ContractError("backward_batch size " + std::to_string(d_first_states.size()) +
                            " does not match pending forward batch of " + std::to_string(pending_.size()));
    }
    for (std::size_t i = 0; i < pending_.size(); ++i) {
        backward_impl(pending_[i], d_first_states[i]);
    }
    pending_.clear();
}

void TransformerEncoder::backward_impl(const SeqTape& tape, std::span<const double> d_first) {
    const std::size_t len = tape.ids.size();
    const std::size_t h = cfg_.hidden;
    const std::size_t f = cfg_.ffn_mult * h;
    const std::size_t heads = cfg_.heads;
    const std::size_t hd = h / heads;
    const double att_scale = 1.0 / std::sqrt(static_cast<double>(hd));
    const double* p = params_.data();
    double* g = grads_.data();

    if (d_first.size() != h) {
        throw ContractError("d_first state size mismatch");
    }

    // Loss reaches the encoder only through the first-token state.
    model::Matrix dx(len, h);
    {
        std::vector<double> dy(h, 0.0);
        std::copy(d_first.begin(), d_first.end(), dy.begin());
        layernorm_backward_row(tape.x_final.row(0), tape.lnf_mean[0], tape.lnf_rstd[0], p + lnf_g_,
                               dy, g + lnf_g_, g + lnf_b_, dx.row(0));
    }

    model::Matrix d_ln(len, h);
    model::Matrix d_q(len, h), d_k(len, h), d_v(len, h), d_merged(len, h);
    std::vector<double> d_ffn_pre(f), d_ffn_post(f);

    for (std::size_t l = cfg_.layers; l-- > 0;) {
        const LayerOffsets& lo = layer_offsets_[l];
        const LayerTape& lt = tape.layers[l];

        // FFN sublayer: x_out = x_mid + W2 gelu(W1 ln2(x_mid) + b1) + b2.
        std::fill(d_ln.data.begin(), d_ln.data.end(), 0.0);
        for (std::size_t t = 0; t < len; ++t) {
            std::span<const double> d_out = dx.row(t);
            bool all_zero = true;
            for (double v : d_out) {
                if (v != 0.0) {
                    all_zero = false;
                    break;
                }
            }
            if (all_zero) {
                continue;
            }
            std::fill(d_ffn_post.begin(), d_ffn_post.end(), 0.0);
            linear_backward(p + lo.w2, g + lo.w2, g + lo.b2, lt.ffn_post.row(t), d_out,
                            std::span<double>(d_ffn_post.data(), f));
            for (std::size_t i = 0; i < f; ++i) {
                d_ffn_pre[i] = d_ffn_post[i] * gelu_grad(lt.ffn_pre.row(t)[i]);
            }
            linear_backward(p + lo.w1, g + lo.w1, g + lo.b1, lt.ln2_out.row(t),
                            std::span<const double>(d_ffn_pre.data(), f), d_ln.row(t));
        }
        for (std::size_t t = 0; t < len; ++t) {
            // Residual passthrough: dx stays; add the LN branch into it.
            layernorm_backward_row(lt.x_mid.row(t), lt.ln2_mean[t], lt.ln2_rstd[t], p + lo.ln2_g,
                                   d_ln.row(t), g + lo.ln2_g, g + lo.ln2_b, dx.row(t));
        }

        // Attention sublayer: x_mid = x_in + Wo merge(attend(q,k,v)) + bo.
        std::fill(d_merged.data.begin(), d_merged.data.end(), 0.0);
        for (std::size_t t = 0; t < len; ++t) {
            linear_backward(p + lo.wo, g + lo.wo, g + lo.bo, lt.merged.row(t), dx.row(t),
                            d_merged.row(t));
        }

        std::fill(d_q.data.begin(), d_q.data.end(), 0.0);
        std::fill(d_k.data.begin(), d_k.data.end(), 0.0);
        std::fill(d_v.data.begin(), d_v.data.end(), 0.0);
        std::vector<double> d_att(len);
        for (std::size_t head = 0; head < heads; ++head) {
            const std::size_t off = head * hd;
            const model::Matrix& att = lt.att[head];
            for (std::size_t t = 0; t < len; ++t) {
                const double* d_merged_t = d_merged.row(t).data() + off;
                for (std::size_t u = 0; u < len; ++u) {
                    d_att[u] = kernels::dot(d_merged_t, lt.v.row(u).data() + off, hd);
                    kernels::axpy(att.row(t)[u], d_merged_t, d_v.row(u).data() + off, hd);
                }
                const double dot_sum = kernels::dot(att.row(t).data(), d_att.data(), len);
                const double* q_t = lt.q.row(t).data() + off;
                double* d_q_t = d_q.row(t).data() + off;
                for (std::size_t u = 0; u < len; ++u) {
                    const double ds = att.row(t)[u] * (d_att[u] - dot_sum) * att_scale;
                    if (ds == 0.0) {
                        continue;
                    }
                    kernels::axpy(ds, lt.k.row(u).data() + off, d_q_t, hd);
                    kernels::axpy(ds, q_t, d_k.row(u).data() + off, hd);
                }
            }
        }

        std::fill(d_ln.data.begin(), d_ln.data.end(), 0.0);
        for (std::size_t t = 0; t < len; ++t) {
            linear_backward(p + lo.wq, g + lo.wq, g + lo.bq, lt.ln1_out.row(t), d_q.row(t), d_ln.row(t));
            linear_backward(p + lo.wk, g + lo.wk, g + lo.bk, lt.ln1_out.row(t), d_k.row(t), d_ln.row(t));
            linear_backward(p + lo.wv, g + lo.wv, g + lo.bv, lt.ln1_out.row(t), d_v.row(t), d_ln.row(t));
        }
        for (std::size_t t = 0; t < len; ++t) {
            layernorm_backward_row(lt.x_in.row(t), lt.ln1_mean[t], lt.ln1_rstd[t], p + lo.ln1_g,
                                   d_ln.row(t), g + lo.ln1_g, g + lo.ln1_b, dx.row(t));
        }
    }

    for (std::size_t t = 0; t < len; ++t) {
        kernels::axpy(1.0, dx.row(t).data(), g + tok_emb_ + static_cast<std::size_t>(tape.ids[t]) * h, h);
        kernels::axpy(1.0, dx.row(t).data(), g + pos_emb_ + t * h, h);
    }
}

void TransformerEncoder::zero_grad() { std::fill(grads_.begin(), grads_.end(), 0.0); }

void TransformerEncoder::grow_vocab(std::size_t new_vocab_size) {
    if (new_vocab_size < cfg_.vocab_size) {
        throw ValidationError("vocabulary can only grow");
    }
    if (new_vocab_size == cfg_.vocab_size) {
        return;
    }
    const std::size_t h = cfg_.hidden;
    const std::size_t old_vocab = cfg_.vocab_size;
    const std::size_t added = new_vocab_size - old_vocab;

    // Fresh rows come from a stream derived from (seed, old size): stable for
    // a given growth history, never touching existing rows.
    Rng rng(mix_seed(cfg_.seed, 0x564f4341 + old_vocab));
    std::vector<double> fresh(added * h);
    for (double& value : fresh) {
        value = rng.normal(0.0, cfg_.init_std);
    }

    params_.insert(params_.begin() + static_cast<std::ptrdiff_t>(tok_emb_ + old_vocab * h),
                   fresh.begin(), fresh.end());
    cfg_.vocab_size = new_vocab_size;

    std::vector<double> saved = std::move(params_);
    build_layout();
    params_ = std::move(saved);
    pending_.clear();
}

void TransformerEncoder::save(const std::filesystem::path& weights_path) const {
    io::write_doubles(weights_path, params_);
}

std::unique_ptr<TransformerEncoder> TransformerEncoder::load(const EncoderConfig& config,
                                                             const std::filesystem::path& weights_path) {
    auto encoder = std::make_unique<TransformerEncoder>(config);
    std::vector<double> values = io::read_doubles(weights_path);
    if (values.size() != encoder->params_.size()) {
        throw IoError("weights file " + weights_path.string() + " holds " + std::to_string(values.size()) +
                      " parameters, expected " + std::to_string(encoder->params_.size()));
    }
    encoder->params_ = std::move(values);
    return encoder;
}

std::filesystem::path pretrained_dir_from_env() {
    if (const char* env = std::getenv("RECAM_PRETRAINED_DIR")) {
        return env;
    }
    return {};
}

std::unique_ptr<model::EncoderBackend> build_backend(const std::string& kind, text::Tokenizer& tokenizer,
                                                     const RunConfig& config,
                                                     const std::filesystem::path& pretrained_dir) {
    if (kind == "tiny") {
        return std::make_unique<TransformerEncoder>(tiny_encoder_config(
            tokenizer.size(), static_cast<std::size_t>(config.max_input_length), config.seed));
    }
    if (kind == "pretrained") {
        std::filesystem::path dir = pretrained_dir.empty() ? pretrained_dir_from_env() : pretrained_dir;
        if (dir.empty()) {
            throw AssetError(
                "pretrained backend requested but no asset directory given; set RECAM_PRETRAINED_DIR or "
                "pass --pretrained-dir (expected files: encoder.json, encoder.bin, tokenizer.json)");
        }
        const auto config_path = dir / "encoder.json";
        const auto weights_path = dir / "encoder.bin";
        const auto tokenizer_path = dir / "tokenizer.json";
        for (const auto& required : {config_path, weights_path, tokenizer_path}) {
            if (!std::filesystem::exists(required)) {
                throw AssetError("pretrained backend asset missing: " + required.string());
            }
        }
        tokenizer = text::Tokenizer::load(tokenizer_path);
        return TransformerEncoder::load(EncoderConfig::from_json(io::read_file(config_path)), weights_path);
    }
    throw ValidationError("unknown backend kind \"" + kind + "\" (expected tiny or pretrained)");
}

void save_encoder_assets(const std::filesystem::path& dir, const TransformerEncoder& encoder,
                         const text::Tokenizer& tokenizer) {
    std::filesystem::create_directories(dir);
    io::atomic_write_file(dir / "encoder.json", encoder.config().to_json());
    encoder.save(dir / "encoder.bin");
    tokenizer.save(dir / "tokenizer.json");
}

std::vector<std::vector<double>> EncoderEmbeddingProvider::embed(const std::vector<std::string>& tokens) {
    std::vector<model::TokenId> ids;
    ids.reserve(tokens.size() + 2);
    ids.push_back(tokenizer_.bos_id());
    for (const std::string& token : tokens) {
        ids.push_back(tokenizer_.token_to_id(token).value_or(tokenizer_.unk_id()));
    }
    ids.push_back(tokenizer_.eos_id());
    if (ids.size() > backend_.max_positions()) {
        ids.resize(backend_.max_positions());
    }
    const model::Matrix states = backend_.encode(ids);
    std::vector<std::vector<double>> out;
    const std::size_t usable = std::min(tokens.size(), states.rows >= 2 ? states.rows - 2 : 0);
    out.reserve(tokens.size());
    for (std::size_t i = 0; i < usable; ++i) {
        std::span<const double> row = states.row(i + 1);
        out.emplace_back(row.begin(), row.end());
    }
    // Tokens truncated away fall back to the last usable state so callers
    // always get one vector per token.
    while (out.size() < tokens.size() && !out.empty()) {
        out.push_back(out.back());
    }
    if (out.empty() && !tokens.empty()) {
        out.assign(tokens.size(), std::vector<double>(backend_.hidden_size(), 0.0));
    }
    return out;
}

}  // namespace recam::backends
