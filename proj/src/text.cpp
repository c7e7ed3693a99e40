#include "recam/text.hpp"

#include <algorithm>
#include <cctype>

#include <nlohmann/json.hpp>

#include "recam/errors.hpp"
#include "recam/io.hpp"

namespace recam::text {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_word_char(char c) {
    const unsigned char u = static_cast<unsigned char>(c);
    // Non-ASCII bytes count as word characters so UTF-8 stays intact.
    return std::isalnum(u) != 0 || c == '\'' || c == '_' || u >= 0x80;
}

void split_plain_chunk(std::string_view chunk, std::vector<std::string>& out) {
    if (chunk.empty()) {
        return;
    }
    // Peel punctuation from the edges, keep interior punctuation in place.
    std::size_t begin = 0;
    std::size_t end = chunk.size();
    std::size_t lead = begin;
    while (lead < end && !is_word_char(chunk[lead])) {
        ++lead;
    }
    if (lead == end) {
        // Pure punctuation run: one token per character.
        for (std::size_t i = begin; i < end; ++i) {
            out.emplace_back(1, chunk[i]);
        }
        return;
    }
    std::size_t tail = end;
    while (tail > lead && !is_word_char(chunk[tail - 1])) {
        --tail;
    }
    for (std::size_t i = begin; i < lead; ++i) {
        out.emplace_back(1, chunk[i]);
    }
    out.emplace_back(chunk.substr(lead, tail - lead));
    for (std::size_t i = tail; i < end; ++i) {
        out.emplace_back(1, chunk[i]);
    }
}

}  // namespace

bool has_word_chars(std::string_view token) {
    for (char c : token) {
        if (is_word_char(c)) {
            return true;
        }
    }
    return false;
}

std::vector<std::string> word_split(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) {
            ++i;
        }
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) {
            ++i;
        }
        if (i > start) {
            split_plain_chunk(text.substr(start, i - start), out);
        }
    }
    return out;
}

Tokenizer::Tokenizer() {
    for (const char* token : {"<unk>", "<s>", "</s>", "<sep>"}) {
        const TokenId id = static_cast<TokenId>(id_to_token_.size());
        id_to_token_.emplace_back(token);
        token_to_id_.emplace(token, id);
        specials_.insert(token);
    }
}

TokenId Tokenizer::add_special_token(const std::string& token) {
    if (token.empty()) {
        throw ValidationError("special token must be non-empty");
    }
    auto it = token_to_id_.find(token);
    if (it != token_to_id_.end()) {
        specials_.insert(token);
        return it->second;
    }
    const TokenId id = static_cast<TokenId>(id_to_token_.size());
    id_to_token_.push_back(token);
    token_to_id_.emplace(token, id);
    specials_.insert(token);
    return id;
}

bool Tokenizer::is_special(const std::string& token) const { return specials_.count(token) != 0; }

bool Tokenizer::is_special_id(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
        return false;
    }
    return specials_.count(id_to_token_[static_cast<std::size_t>(id)]) != 0;
}

TokenId Tokenizer::add_word(const std::string& word) {
    auto it = token_to_id_.find(word);
    if (it != token_to_id_.end()) {
        return it->second;
    }
    const TokenId id = static_cast<TokenId>(id_to_token_.size());
    id_to_token_.push_back(word);
    token_to_id_.emplace(word, id);
    return id;
}

void Tokenizer::fit(std::span<const std::string> texts) {
    for (const std::string& t : texts) {
        fit_text(t);
    }
}

void Tokenizer::fit_text(std::string_view text) {
    for (const std::string& token : tokenize(text)) {
        add_word(token);
    }
}

std::optional<TokenId> Tokenizer::token_to_id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    if (it == token_to_id_.end()) {
        return std::nullopt;
    }
    return it->second;
}

const std::string& Tokenizer::id_to_token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
        throw ValidationError("token id out of range: " + std::to_string(id));
    }
    return id_to_token_[static_cast<std::size_t>(id)];
}

void Tokenizer::tokenize_chunk(std::string_view chunk, std::vector<std::string>& out) const {
    if (chunk.empty()) {
        return;
    }
    // Atomic match wins over punctuation peeling ("@placeholder", "/#", "<e>").
    if (specials_.count(std::string(chunk)) != 0) {
        out.emplace_back(chunk);
        return;
    }
    if (!is_word_char(chunk.back()) && chunk.size() > 1) {
        tokenize_chunk(chunk.substr(0, chunk.size() - 1), out);
        out.emplace_back(1, chunk.back());
        return;
    }
    if (!is_word_char(chunk.front()) && chunk.size() > 1) {
        out.emplace_back(1, chunk.front());
        tokenize_chunk(chunk.substr(1), out);
        return;
    }
    out.emplace_back(chunk);
}

std::vector<std::string> Tokenizer::tokenize(std::string_view text) const {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) {
            ++i;
        }
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) {
            ++i;
        }
        if (i > start) {
            tokenize_chunk(text.substr(start, i - start), out);
        }
    }
    return out;
}

std::vector<TokenId> Tokenizer::encode(std::string_view text) const {
    std::vector<TokenId> ids;
    for (const std::string& token : tokenize(text)) {
        auto it = token_to_id_.find(token);
        ids.push_back(it == token_to_id_.end() ? unk_id() : it->second);
    }
    return ids;
}

std::string Tokenizer::decode(std::span<const TokenId> ids) const {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i > 0) {
            out.push_back(' ');
        }
        out += id_to_token(ids[i]);
    }
    return out;
}

std::string Tokenizer::to_json() const {
    nlohmann::json j;
    j["tokens"] = id_to_token_;
    std::vector<std::string> specials(specials_.begin(), specials_.end());
    std::sort(specials.begin(), specials.end());
    j["special_tokens"] = specials;
    return j.dump(2);
}

Tokenizer Tokenizer::from_json(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    Tokenizer tok;
    const auto& tokens = j.at("tokens");
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::string token = tokens[i].get<std::string>();
        if (i < tok.id_to_token_.size()) {
            if (tok.id_to_token_[i] != token) {
                throw SchemaError("tokenizer file does not start with the reserved tokens");
            }
            continue;
        }
        tok.id_to_token_.push_back(token);
        tok.token_to_id_.emplace(token, static_cast<TokenId>(i));
    }
    for (const auto& s : j.at("special_tokens")) {
        tok.add_special_token(s.get<std::string>());
    }
    return tok;
}

void Tokenizer::save(const std::filesystem::path& path) const { io::atomic_write_file(path, to_json()); }

Tokenizer Tokenizer::load(const std::filesystem::path& path) { return from_json(io::read_file(path)); }

bool Tokenizer::operator==(const Tokenizer& other) const {
    return id_to_token_ == other.id_to_token_ && specials_ == other.specials_;
}

}  // namespace recam::text
