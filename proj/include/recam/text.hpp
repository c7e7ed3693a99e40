#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace recam::text {

using TokenId = std::int32_t;

// Whitespace split followed by peeling ASCII punctuation off token edges.
// "report." -> {"report", "."}; interior punctuation stays ("don't").
std::vector<std::string> word_split(std::string_view text);

// True when the token contains at least one word character (letter, digit,
// apostrophe, underscore, or any non-ASCII byte).
bool has_word_chars(std::string_view token);

// Word-level tokenizer with an atomic-token registry. Registered tokens
// (sequence markers, the placeholder, concept wrappers) always encode to
// exactly one id and decode back verbatim, even when punctuation-shaped.
//
// Fixed low ids: 0 <unk>, 1 <s>, 2 </s>, 3 <sep>. The vocabulary grows only
// through fit()/add_word()/add_special_token(), so an encoder built against
// size() stays consistent as long as growth is mirrored (see grow_vocab on
// the backend).
class Tokenizer {
public:
    Tokenizer();

    TokenId unk_id() const { return 0; }
    TokenId bos_id() const { return 1; }
    TokenId eos_id() const { return 2; }
    TokenId sep_id() const { return 3; }

    // Segment separator between Q / A / D, generalized from the backbone's
    // sentence-pair convention.
    std::vector<TokenId> sep_block() const { return {sep_id()}; }

    std::size_t size() const { return id_to_token_.size(); }

    // Registers an atomic marker; idempotent, returns its id.
    TokenId add_special_token(const std::string& token);
    bool is_special(const std::string& token) const;
    bool is_special_id(TokenId id) const;

    TokenId add_word(const std::string& word);
    void fit(std::span<const std::string> texts);
    void fit_text(std::string_view text);

    std::optional<TokenId> token_to_id(const std::string& token) const;
    const std::string& id_to_token(TokenId id) const;

    // No sequence markers added; callers assemble those explicitly.
    std::vector<TokenId> encode(std::string_view text) const;
    // Token strings in encoding order (OOV words keep their surface form).
    std::vector<std::string> tokenize(std::string_view text) const;
    std::string decode(std::span<const TokenId> ids) const;

    std::string to_json() const;
    static Tokenizer from_json(const std::string& json_text);
    void save(const std::filesystem::path& path) const;
    static Tokenizer load(const std::filesystem::path& path);

    bool operator==(const Tokenizer& other) const;

private:
    std::vector<std::string> id_to_token_;
    std::unordered_map<std::string, TokenId> token_to_id_;
    std::unordered_set<std::string> specials_;

    void tokenize_chunk(std::string_view chunk, std::vector<std::string>& out) const;
};

}  // namespace recam::text
