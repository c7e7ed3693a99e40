#include <doctest.h>

#include <cmath>

#include "recam/backends.hpp"
#include "recam/errors.hpp"
#include "recam/io.hpp"
#include "recam/kernels.hpp"
#include "recam/train.hpp"

#include "grad_check.hpp"
#include "test_support.hpp"

using namespace recam;
using namespace recam::backends;
using recam::testsupport::TempDir;

namespace {

std::string param_digest(const TransformerEncoder& encoder) {
    const auto params = encoder.parameters();
    std::string bytes(reinterpret_cast<const char*>(params.data()), params.size() * sizeof(double));
    return io::sha256_hex(bytes);
}

TransformerEncoder make_tiny(std::size_t vocab = 40, std::uint64_t seed = 7) {
    return TransformerEncoder(tiny_encoder_config(vocab, 64, seed));
}

}  // namespace

TEST_CASE("same seed twice gives identical parameters") {
    const TransformerEncoder a = make_tiny();
    const TransformerEncoder b = make_tiny();
    CHECK(param_digest(a) == param_digest(b));
    const TransformerEncoder c = make_tiny(40, 8);
    CHECK(param_digest(a) != param_digest(c));
}

TEST_CASE("encode returns one hidden state per input position") {
    const TransformerEncoder encoder = make_tiny();
    for (std::size_t len : {1u, 2u, 5u, 17u, 64u}) {
        std::vector<model::TokenId> ids(len);
        for (std::size_t i = 0; i < len; ++i) {
            ids[i] = static_cast<model::TokenId>(i % 40);
        }
        const model::Matrix states = encoder.encode(ids);
        CHECK(states.rows == len);
        CHECK(states.cols == 32);
        for (double v : states.data) {
            CHECK(std::isfinite(v));
        }
    }
}

TEST_CASE("encode validates its input") {
    const TransformerEncoder encoder = make_tiny();
    CHECK_THROWS_AS(encoder.encode(std::vector<model::TokenId>{}), ValidationError);
    CHECK_THROWS_AS(encoder.encode(std::vector<model::TokenId>{41}), ValidationError);
    CHECK_THROWS_AS(encoder.encode(std::vector<model::TokenId>{-1}), ValidationError);
    std::vector<model::TokenId> too_long(65, 0);
    CHECK_THROWS_AS(encoder.encode(too_long), ValidationError);
}

TEST_CASE("growing the vocabulary preserves existing rows") {
    TransformerEncoder encoder = make_tiny(40);
    const std::vector<double> before(encoder.parameters().begin(), encoder.parameters().end());
    const std::size_t old_params = before.size();

    encoder.grow_vocab(42);
    CHECK(encoder.vocab_size() == 42);
    CHECK(encoder.parameters().size() == old_params + 2 * 32);

    // token embedding rows 0..39 are byte-identical
    for (std::size_t i = 0; i < 40 * 32; ++i) {
        CHECK(encoder.parameters()[i] == before[i]);
    }
    // everything after the embedding table is shifted but unchanged
    for (std::size_t i = 40 * 32; i < old_params; ++i) {
        CHECK(encoder.parameters()[i + 2 * 32] == before[i]);
    }
    // fresh rows are seeded, not zero
    double fresh_norm = 0.0;
    for (std::size_t i = 40 * 32; i < 42 * 32; ++i) {
        fresh_norm += std::abs(encoder.parameters()[i]);
    }
    CHECK(fresh_norm > 0.0);

    CHECK_NOTHROW(encoder.encode(std::vector<model::TokenId>{40, 41}));
    CHECK_THROWS_AS(encoder.grow_vocab(10), ValidationError);
}

TEST_CASE("parameter groups tile the flat vector") {
    const TransformerEncoder encoder = make_tiny();
    std::size_t covered = 0;
    std::size_t expected_offset = 0;
    for (const model::ParamGroup& g : encoder.param_groups()) {
        CHECK(g.offset == expected_offset);
        expected_offset += g.size;
        covered += g.size;
    }
    CHECK(covered == encoder.parameters().size());
}

TEST_CASE("save and load round-trip bit-exactly") {
    TempDir tmp("encoder-io");
    const TransformerEncoder encoder = make_tiny(33, 123);
    encoder.save(tmp.path() / "weights.bin");
    const auto restored = TransformerEncoder::load(encoder.config(), tmp.path() / "weights.bin");
    CHECK(param_digest(encoder) == param_digest(*restored));

    const std::vector<model::TokenId> probe = {1, 5, 9, 2};
    CHECK(encoder.encode(probe).data == restored->encode(probe).data);
}

TEST_CASE("forward_batch then backward_batch enforces its contract") {
    TransformerEncoder encoder = make_tiny();
    const std::vector<std::vector<model::TokenId>> seqs = {{1, 2, 3}, {4, 5}};
    const auto states = encoder.forward_batch(seqs);
    REQUIRE(states.size() == 2);
    CHECK(states[0].size() == 32);

    // one sequence worth of gradients missing
    CHECK_THROWS_AS(encoder.backward_batch({std::vector<double>(32, 0.0)}), ContractError);

    encoder.forward_batch(seqs);
    encoder.zero_grad();
    std::vector<std::vector<double>> d(2, std::vector<double>(32, 0.5));
    encoder.backward_batch(d);
    double grad_mass = 0.0;
    for (double g : encoder.gradients()) {
        grad_mass += std::abs(g);
    }
    CHECK(grad_mass > 0.0);
}

TEST_CASE("encode agrees with the training forward pass") {
    TransformerEncoder encoder = make_tiny();
    const std::vector<model::TokenId> ids = {3, 1, 4, 1, 5};
    const model::Matrix states = encoder.encode(ids);
    const auto first = encoder.forward_batch({ids});
    for (std::size_t i = 0; i < 32; ++i) {
        CHECK(states.row(0)[i] == first[0][i]);
    }
}

TEST_CASE("pretrained backend demands its assets") {
    text::Tokenizer tokenizer;
    RunConfig cfg;
    cfg.allow_unsafe = true;
    CHECK_THROWS_WITH_AS(backends::build_backend("pretrained", tokenizer, cfg, "/nonexistent/dir"),
                         doctest::Contains("encoder.json"), AssetError);
    CHECK_THROWS_AS(backends::build_backend("bogus", tokenizer, cfg), ValidationError);
}

TEST_CASE("pretrained backend loads exported assets") {
    TempDir tmp("pretrained");
    text::Tokenizer source_tok;
    source_tok.add_special_token("@placeholder");
    source_tok.fit_text("alpha beta gamma");
    const TransformerEncoder encoder(tiny_encoder_config(source_tok.size(), 48, 99));
    save_encoder_assets(tmp.path(), encoder, source_tok);

    text::Tokenizer loaded_tok;
    RunConfig cfg;
    cfg.allow_unsafe = true;
    const auto backend = backends::build_backend("pretrained", loaded_tok, cfg, tmp.path());
    CHECK(loaded_tok == source_tok);
    CHECK(backend->vocab_size() == source_tok.size());

    const std::vector<model::TokenId> probe = {1, 4, 2};
    CHECK(backend->encode(probe).data == encoder.encode(probe).data);
}

TEST_CASE("embedding provider yields one contextual vector per token") {
    text::Tokenizer tok;
    tok.fit_text("alpha beta gamma delta");
    const TransformerEncoder encoder(tiny_encoder_config(tok.size(), 32, 5));
    EncoderEmbeddingProvider provider(encoder, tok);

    const auto vectors = provider.embed({"alpha", "beta", "unknownword"});
    REQUIRE(vectors.size() == 3);
    for (const auto& v : vectors) {
        CHECK(v.size() == 32);
    }
    // Context sensitivity: the same word embeds differently in a different
    // neighborhood.
    const auto a = provider.embed({"alpha", "beta"});
    const auto b = provider.embed({"alpha", "gamma"});
    double diff = 0.0;
    for (std::size_t i = 0; i < 32; ++i) {
        diff += std::abs(a[0][i] - b[0][i]);
    }
    CHECK(diff > 0.0);
}

TEST_CASE("analytic gradients match finite differences (smoke)") {
    const auto result = recam::testsupport::gradient_check(false, 3, 1e-4);
    CAPTURE(result.worst_coordinate);
    CHECK(result.meaningful > 10);
    CHECK(result.max_rel_err <= 1e-3);
}

TEST_CASE("encoder output is kernel-set independent to reduction tolerance") {
    const kernels::Isa before = kernels::active_isa();
    const TransformerEncoder encoder = make_tiny();
    const std::vector<model::TokenId> ids = {3, 17, 4, 0, 25, 9, 9, 31};

    kernels::select(kernels::Isa::scalar);
    const model::Matrix reference = encoder.encode(ids);

    for (kernels::Isa isa : {kernels::Isa::avx2, kernels::Isa::neon}) {
        if (!kernels::isa_available(isa)) {
            continue;
        }
        kernels::select(isa);
        const model::Matrix vectorized = encoder.encode(ids);
        REQUIRE(vectorized.data.size() == reference.data.size());
        for (std::size_t i = 0; i < reference.data.size(); ++i) {
            CHECK(std::abs(vectorized.data[i] - reference.data[i]) <=
                  1e-9 * (1.0 + std::abs(reference.data[i])));
        }
    }
    kernels::select(before);
}
