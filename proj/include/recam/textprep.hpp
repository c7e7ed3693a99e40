#pragma once

#include <string>
#include <vector>

#include "recam/config.hpp"
#include "recam/dataset.hpp"
#include "recam/text.hpp"

namespace recam::textprep {

// Marker pair wrapped around a candidate concept, e.g. "<e> deep </e>".
struct SpecialTokenScheme {
    std::string name;  // config key
    std::string open;
    std::string close;
    bool enabled = false;

    bool operator==(const SpecialTokenScheme&) const = default;
};

// Resolves "<e>", "<#>", "<$>", "#", "$" or "none".
SpecialTokenScheme scheme_by_name(const std::string& name);
// The five marker pairs plus the disabled scheme, sweep order.
std::vector<SpecialTokenScheme> all_schemes();

// Registers the scheme's markers as atomic tokens. No-op when disabled.
void register_scheme(text::Tokenizer& tokenizer, const SpecialTokenScheme& scheme);

// "<open> concept <close>" when enabled, the concept unchanged otherwise.
std::string wrap_concept(const std::string& concept_text, const SpecialTokenScheme& scheme);

// Replaces the single placeholder in q with the (wrapped) candidate; every
// other byte of q is preserved.
std::string build_complete_question(const std::string& question, const std::string& candidate,
                                    const SpecialTokenScheme& scheme,
                                    const std::string& placeholder = data::kDefaultPlaceholder);

// Per-candidate encoder input: the joint sequence
//   <s> Q <sep> A_i <sep> D </s>
// truncated from the tail of D only, plus the standalone completed question
//   <s> Q-with-candidate </s>.
struct EncodedInstance {
    std::string example_id;
    int candidate_index = 0;
    std::vector<text::TokenId> joint_ids;
    std::vector<text::TokenId> question_only_ids;
    std::size_t truncated_subwords = 0;
};

EncodedInstance assemble(const data::Example& example, int candidate_index, const std::string& passage,
                         const text::Tokenizer& tokenizer, const RunConfig& config);

// All five candidates of one example against the same passage.
std::vector<EncodedInstance> assemble_all(const data::Example& example, const std::string& passage,
                                          const text::Tokenizer& tokenizer, const RunConfig& config);

}  // namespace recam::textprep
