#include <doctest.h>

#include <algorithm>

#include "recam/errors.hpp"
#include "recam/textprep.hpp"

#include "test_support.hpp"

using namespace recam;
using namespace recam::textprep;

namespace {

bool contains_subsequence(const std::vector<text::TokenId>& haystack,
                          const std::vector<text::TokenId>& needle) {
    if (needle.empty()) {
        return true;
    }
    return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

}  // namespace

TEST_CASE("scheme catalogue") {
    const auto schemes = all_schemes();
    REQUIRE(schemes.size() == 6);
    CHECK(schemes[0].open == "<e>");
    CHECK(schemes[0].close == "</e>");
    CHECK(schemes[3].open == "#");
    CHECK(schemes[3].close == "/#");
    CHECK_FALSE(schemes[5].enabled);
    CHECK_THROWS_AS(scheme_by_name("<x>"), ValidationError);
}

TEST_CASE("wrap_concept") {
    CHECK(wrap_concept("deep", scheme_by_name("<e>")) == "<e> deep </e>");
    CHECK(wrap_concept("deep", scheme_by_name("none")) == "deep");
    CHECK(wrap_concept("deep", scheme_by_name("#")) == "# deep /#");
    CHECK_THROWS_AS(wrap_concept("", scheme_by_name("<e>")), ValidationError);
}

TEST_CASE("build_complete_question") {
    CHECK(build_complete_question("the @placeholder rose", "price", scheme_by_name("none")) ==
          "the price rose");
    CHECK(build_complete_question("the @placeholder rose", "price", scheme_by_name("<e>")) ==
          "the <e> price </e> rose");
    CHECK_THROWS_AS(build_complete_question("no marker here", "x", scheme_by_name("none")),
                    ValidationError);
    CHECK_THROWS_AS(
        build_complete_question("@placeholder and @placeholder", "x", scheme_by_name("none")),
        ValidationError);
}

TEST_CASE("assemble matches a hand-built id sequence") {
    text::Tokenizer tok;
    tok.add_special_token("@placeholder");
    const auto id_q = tok.add_word("q");
    const auto id_w = tok.add_word("w1");
    const auto id_a = tok.add_word("a");
    const auto id_b = tok.add_word("b");
    const auto id_dot = tok.add_word(".");

    data::Example ex;
    ex.id = "hand";
    ex.article = "a b";
    ex.question = "q @placeholder .";
    ex.options = {"w1", "w2", "w3", "w4", "w5"};
    ex.label = 0;

    RunConfig cfg;
    cfg.max_input_length = 32;
    cfg.allow_unsafe = true;

    const EncodedInstance inst = assemble(ex, 0, ex.article, tok, cfg);
    const auto ph = *tok.token_to_id("@placeholder");
    const std::vector<text::TokenId> expected_joint = {
        tok.bos_id(), id_q, ph, id_dot, tok.sep_id(), id_w, tok.sep_id(), id_a, id_b, tok.eos_id()};
    CHECK(inst.joint_ids == expected_joint);
    CHECK(inst.truncated_subwords == 0);

    // Q-hat: placeholder replaced by the candidate, bracketed by <s>/</s>.
    const std::vector<text::TokenId> expected_qhat = {tok.bos_id(), id_q, id_w, id_dot, tok.eos_id()};
    CHECK(inst.question_only_ids == expected_qhat);
}

TEST_CASE("truncation removes only trailing passage tokens") {
    data::Example ex = testsupport::make_example(0);
    std::string long_article;
    for (int i = 0; i < 10000; ++i) {
        long_article += "w" + std::to_string(i % 50) + " ";
    }
    ex.article = long_article;

    RunConfig cfg;  // defaults: max_input_length 200
    text::Tokenizer tok;
    tok.add_special_token(cfg.placeholder);
    tok.fit_text(ex.question);
    for (const auto& o : ex.options) {
        tok.fit_text(o);
    }
    tok.fit_text(long_article);

    const EncodedInstance inst = assemble(ex, 0, ex.article, tok, cfg);
    CHECK(inst.joint_ids.size() == 200);

    const auto q_ids = tok.encode(ex.question);
    const auto a_ids = tok.encode(ex.options[0]);
    const auto d_ids = tok.encode(ex.article);
    CHECK(inst.truncated_subwords == d_ids.size() - (200 - 2 - 2 - q_ids.size() - a_ids.size()));
    CHECK(contains_subsequence(inst.joint_ids, q_ids));
    CHECK(contains_subsequence(inst.joint_ids, a_ids));
}

TEST_CASE("question and candidate alone may exhaust the budget") {
    data::Example ex = testsupport::make_example(0);
    std::string huge_question = "@placeholder";
    for (int i = 0; i < 300; ++i) {
        huge_question += " filler" + std::to_string(i);
    }
    ex.question = huge_question;

    RunConfig cfg;
    text::Tokenizer tok;
    tok.add_special_token(cfg.placeholder);
    tok.fit_text(ex.question);
    CHECK_THROWS_AS(assemble(ex, 0, ex.article, tok, cfg), InstanceTooLongError);
}

TEST_CASE("empty passage still yields a valid layout") {
    data::Example ex = testsupport::make_example(0);
    ex.article = "";

    RunConfig cfg;
    text::Tokenizer tok;
    tok.add_special_token(cfg.placeholder);
    tok.fit_text(ex.question);
    for (const auto& o : ex.options) {
        tok.fit_text(o);
    }

    const EncodedInstance inst = assemble(ex, 0, "", tok, cfg);
    CHECK(inst.truncated_subwords == 0);
    CHECK(inst.joint_ids.front() == tok.bos_id());
    CHECK(inst.joint_ids.back() == tok.eos_id());
    // layout: bos Q sep A sep eos
    const auto q_len = tok.encode(ex.question).size();
    const auto a_len = tok.encode(ex.options[0]).size();
    CHECK(inst.joint_ids.size() == 2 + q_len + a_len + 2);
}

TEST_CASE("five instances differ only in candidate segment and passage cut") {
    const data::Example ex = testsupport::make_example(3);
    RunConfig cfg;
    text::Tokenizer tok;
    tok.add_special_token(cfg.placeholder);
    tok.fit_text(ex.article);
    tok.fit_text(ex.question);
    for (const auto& o : ex.options) {
        tok.fit_text(o);
    }

    const auto instances = assemble_all(ex, ex.article, tok, cfg);
    REQUIRE(instances.size() == 5);
    const auto q_ids = tok.encode(ex.question);
    for (int i = 0; i < 5; ++i) {
        const auto& inst = instances[static_cast<std::size_t>(i)];
        CHECK(inst.candidate_index == i);
        CHECK(inst.example_id == ex.id);
        // shared prefix: bos + question + sep
        REQUIRE(inst.joint_ids.size() > q_ids.size() + 2);
        CHECK(inst.joint_ids[0] == tok.bos_id());
        for (std::size_t t = 0; t < q_ids.size(); ++t) {
            CHECK(inst.joint_ids[t + 1] == q_ids[t]);
        }
        CHECK(inst.joint_ids[q_ids.size() + 1] == tok.sep_id());
        CHECK(contains_subsequence(inst.joint_ids, tok.encode(ex.options[static_cast<std::size_t>(i)])));
    }
}

TEST_CASE("enabled scheme markers appear exactly twice in the joint ids") {
    const data::Example ex = testsupport::make_example(1);
    RunConfig cfg;
    cfg.use_special_tokens = true;
    cfg.special_token_scheme = "<e>";

    text::Tokenizer tok;
    tok.add_special_token(cfg.placeholder);
    register_scheme(tok, scheme_by_name(cfg.special_token_scheme));
    tok.fit_text(ex.article);
    tok.fit_text(ex.question);
    for (const auto& o : ex.options) {
        tok.fit_text(o);
    }

    const auto open_id = *tok.token_to_id("<e>");
    const auto close_id = *tok.token_to_id("</e>");
    for (const auto& inst : assemble_all(ex, ex.article, tok, cfg)) {
        CHECK(std::count(inst.joint_ids.begin(), inst.joint_ids.end(), open_id) == 1);
        CHECK(std::count(inst.joint_ids.begin(), inst.joint_ids.end(), close_id) == 1);
        // Q-hat wraps the candidate too (one open, one close).
        CHECK(std::count(inst.question_only_ids.begin(), inst.question_only_ids.end(), open_id) == 1);
        CHECK(std::count(inst.question_only_ids.begin(), inst.question_only_ids.end(), close_id) == 1);
    }
}

TEST_CASE("assemble rejects an unregistered scheme") {
    const data::Example ex = testsupport::make_example(0);
    RunConfig cfg;
    cfg.use_special_tokens = true;
    text::Tokenizer tok;
    tok.add_special_token(cfg.placeholder);
    tok.fit_text(ex.question);
    CHECK_THROWS_AS(assemble(ex, 0, ex.article, tok, cfg), ContractError);
    CHECK_THROWS_AS(assemble(ex, 9, ex.article, tok, cfg), ValidationError);
}
