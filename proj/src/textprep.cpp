#include "recam/textprep.hpp"

#include "recam/errors.hpp"

namespace recam::textprep {

SpecialTokenScheme scheme_by_name(const std::string& name) {
    if (name == "<e>") return {name, "<e>", "</e>", true};
    if (name == "<#>") return {name, "<#>", "</#>", true};
    if (name == "<$>") return {name, "<$>", "</$>", true};
    if (name == "#") return {name, "#", "/#", true};
    if (name == "$") return {name, "$", "/$", true};
    if (name == "none") return {name, "", "", false};
    throw ValidationError("unknown special token scheme \"" + name + "\"");
}

std::vector<SpecialTokenScheme> all_schemes() {
    return {scheme_by_name("<e>"), scheme_by_name("<#>"), scheme_by_name("<$>"),
            scheme_by_name("#"),   scheme_by_name("$"),   scheme_by_name("none")};
}

void register_scheme(text::Tokenizer& tokenizer, const SpecialTokenScheme& scheme) {
    if (!scheme.enabled) {
        return;
    }
    if (scheme.open == scheme.close) {
        throw ValidationError("special token scheme must use distinct open/close markers");
    }
    tokenizer.add_special_token(scheme.open);
    tokenizer.add_special_token(scheme.close);
}

std::string wrap_concept(const std::string& concept_text, const SpecialTokenScheme& scheme) {
    if (concept_text.empty()) {
        throw ValidationError("cannot wrap an empty concept");
    }
    if (!scheme.enabled) {
        return concept_text;
    }
    return scheme.open + " " + concept_text + " " + scheme.close;
}

std::string build_complete_question(const std::string& question, const std::string& candidate,
                                    const SpecialTokenScheme& scheme, const std::string& placeholder) {
    const std::size_t markers = data::count_placeholders(question, placeholder);
    if (markers != 1) {
        throw ValidationError("question contains " + std::to_string(markers) + " \"" + placeholder +
                              "\" markers (expected 1)");
    }
    const std::string filled = wrap_concept(candidate, scheme);
    const std::size_t pos = question.find(placeholder);
    std::string out = question;
    out.replace(pos, placeholder.size(), filled);
    return out;
}

EncodedInstance assemble(const data::Example& example, int candidate_index, const std::string& passage,
                         const text::Tokenizer& tokenizer, const RunConfig& config) {
    if (candidate_index < 0 || candidate_index >= data::kNumOptions) {
        throw ValidationError("candidate index " + std::to_string(candidate_index) + " outside [0,4]");
    }
    const SpecialTokenScheme scheme =
        config.use_special_tokens ? scheme_by_name(config.special_token_scheme) : scheme_by_name("none");
    if (scheme.enabled &&
        (!tokenizer.is_special(scheme.open) || !tokenizer.is_special(scheme.close))) {
        throw ContractError("special token scheme \"" + scheme.name +
                            "\" is not registered in the tokenizer");
    }

    const std::string& candidate = example.options[static_cast<std::size_t>(candidate_index)];

    const std::vector<text::TokenId> q_ids = tokenizer.encode(example.question);
    const std::vector<text::TokenId> a_ids = tokenizer.encode(wrap_concept(candidate, scheme));
    const std::vector<text::TokenId> d_ids = tokenizer.encode(passage);
    const std::vector<text::TokenId> sep = tokenizer.sep_block();

    const std::size_t max_len = static_cast<std::size_t>(config.max_input_length);
    const std::size_t fixed = 2 + q_ids.size() + a_ids.size() + 2 * sep.size();
    if (fixed > max_len || (fixed == max_len && !d_ids.empty())) {
        throw InstanceTooLongError("example " + example.id + " candidate " +
                                   std::to_string(candidate_index) + ": question and candidate leave no room " +
                                   "for the passage (" + std::to_string(fixed) + " of " +
                                   std::to_string(max_len) + " subwords)");
    }

    const std::size_t d_budget = max_len - fixed;
    const std::size_t d_kept = std::min(d_ids.size(), d_budget);

    EncodedInstance inst;
    inst.example_id = example.id;
    inst.candidate_index = candidate_index;
    inst.truncated_subwords = d_ids.size() - d_kept;

    inst.joint_ids.reserve(fixed + d_kept);
    inst.joint_ids.push_back(tokenizer.bos_id());
    inst.joint_ids.insert(inst.joint_ids.end(), q_ids.begin(), q_ids.end());
    inst.joint_ids.insert(inst.joint_ids.end(), sep.begin(), sep.end());
    inst.joint_ids.insert(inst.joint_ids.end(), a_ids.begin(), a_ids.end());
    inst.joint_ids.insert(inst.joint_ids.end(), sep.begin(), sep.end());
    inst.joint_ids.insert(inst.joint_ids.end(), d_ids.begin(), d_ids.begin() + static_cast<std::ptrdiff_t>(d_kept));
    inst.joint_ids.push_back(tokenizer.eos_id());

    const std::string complete =
        build_complete_question(example.question, candidate, scheme, config.placeholder);
    std::vector<text::TokenId> qhat = tokenizer.encode(complete);
    if (qhat.size() + 2 > max_len) {
        qhat.resize(max_len - 2);
    }
    inst.question_only_ids.reserve(qhat.size() + 2);
    inst.question_only_ids.push_back(tokenizer.bos_id());
    inst.question_only_ids.insert(inst.question_only_ids.end(), qhat.begin(), qhat.end());
    inst.question_only_ids.push_back(tokenizer.eos_id());

    return inst;
}

std::vector<EncodedInstance> assemble_all(const data::Example& example, const std::string& passage,
                                          const text::Tokenizer& tokenizer, const RunConfig& config) {
    std::vector<EncodedInstance> out;
    out.reserve(data::kNumOptions);
    for (int i = 0; i < data::kNumOptions; ++i) {
        out.push_back(assemble(example, i, passage, tokenizer, config));
    }
    return out;
}

}  // namespace recam::textprep
