#include "recam/ranker.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <unordered_set>

#include "recam/errors.hpp"
#include "recam/kernels.hpp"
#include "recam/text.hpp"

namespace recam::ranker {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

// Lowercased words a trailing period must not split after.
const std::unordered_set<std::string>& abbreviations() {
    static const std::unordered_set<std::string> table = {
        "mr",  "mrs", "ms",  "dr",   "prof", "sr",  "jr",  "st",  "no",  "vs",
        "etc", "fig", "inc", "ltd",  "co",   "al",  "cf",  "e.g", "i.e", "u.s",
        "u.k", "a.m", "p.m", "dept", "est",  "approx"};
    return table;
}

// The word immediately before position `pos` (exclusive), lowercased.
std::string word_before(const std::string& text, std::size_t pos) {
    std::size_t end = pos;
    std::size_t begin = end;
    while (begin > 0 && !is_space(text[begin - 1])) {
        --begin;
    }
    std::string word = text.substr(begin, end - begin);
    std::transform(word.begin(), word.end(), word.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return word;
}

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return s.substr(b, e - b);
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    const double num = kernels::dot(a.data(), b.data(), n);
    const double na = kernels::dot(a.data(), a.data(), n);
    const double nb = kernels::dot(b.data(), b.data(), n);
    if (na <= 0.0 || nb <= 0.0) {
        return 0.0;
    }
    return num / std::sqrt(na * nb);
}

// Mean over rows of the best cosine match against `others`.
double greedy_side(const std::vector<std::vector<double>>& rows,
                   const std::vector<std::vector<double>>& others) {
    double total = 0.0;
    for (const auto& row : rows) {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& other : others) {
            best = std::max(best, cosine(row, other));
        }
        total += best;
    }
    return total / static_cast<double>(rows.size());
}

}  // namespace

SentenceList split_sentences(const std::string& article) {
    SentenceList out;
    if (article.empty()) {
        return out;
    }

    std::vector<std::size_t> boundaries;  // indices where a new sentence starts
    const std::size_t n = article.size();
    std::size_t i = 0;
    while (i < n) {
        if (is_terminal(article[i])) {
            // Consume the full punctuation run ("?!", "...").
            std::size_t j = i;
            while (j + 1 < n && is_terminal(article[j + 1])) {
                ++j;
            }
            const bool followed_by_space = j + 1 < n && is_space(article[j + 1]);
            bool boundary = followed_by_space;
            if (boundary && article[i] == '.' && j == i) {
                if (abbreviations().count(word_before(article, i)) != 0) {
                    boundary = false;
                }
            }
            std::size_t next = j + 1;
            while (next < n && is_space(article[next])) {
                ++next;
            }
            if (boundary && j > i) {
                // Runs like "..." or "?!" continue the sentence unless the
                // next word starts a fresh one.
                const unsigned char c = next < n ? static_cast<unsigned char>(article[next]) : 0;
                boundary = std::isupper(c) != 0 || std::isdigit(c) != 0 || c == '"' || c == '(';
            }
            if (boundary && next < n) {
                boundaries.push_back(next);
            }
            i = j + 1;
            continue;
        }
        ++i;
    }

    std::size_t begin = 0;
    for (std::size_t b : boundaries) {
        const std::string sentence = trim(article.substr(begin, b - begin));
        if (!sentence.empty()) {
            out.sentences.push_back(sentence);
            out.source_spans.push_back({begin, b});
        } else if (!out.source_spans.empty()) {
            out.source_spans.back().end = b;  // fold whitespace-only stretch into the previous span
        }
        begin = b;
    }
    const std::string last = trim(article.substr(begin));
    if (!last.empty()) {
        out.sentences.push_back(last);
        out.source_spans.push_back({begin, n});
    } else if (!out.source_spans.empty()) {
        out.source_spans.back().end = n;
    }
    return out;
}

double similarity(const std::string& query, const std::string& sentence, EmbeddingProvider& embedder,
                  const SimilarityOptions& options) {
    std::string effective_query = query;
    if (!options.strip_token.empty()) {
        // Strip before word splitting; the marker may not survive splitting
        // as a single token.
        std::size_t pos;
        while ((pos = effective_query.find(options.strip_token)) != std::string::npos) {
            effective_query.erase(pos, options.strip_token.size());
        }
    }
    // Pure punctuation tokens carry no matchable content and would dilute
    // the means; matching runs over word tokens only.
    auto word_tokens = [](const std::string& text_in) {
        std::vector<std::string> tokens = text::word_split(text_in);
        std::erase_if(tokens, [](const std::string& t) { return !text::has_word_chars(t); });
        return tokens;
    };
    const std::vector<std::string> q_tokens = word_tokens(effective_query);
    const std::vector<std::string> s_tokens = word_tokens(sentence);
    if (q_tokens.empty() || s_tokens.empty()) {
        throw UndefinedSimilarityError("similarity is undefined over an empty token sequence");
    }

    const auto q_emb = embedder.embed(q_tokens);
    const auto s_emb = embedder.embed(s_tokens);

    const double recall = greedy_side(q_emb, s_emb);
    if (options.recall_only) {
        return recall;
    }
    const double precision = greedy_side(s_emb, q_emb);
    const double denom = precision + recall;
    if (std::abs(denom) < 1e-12) {
        return 0.0;
    }
    // Mixed-sign P/R make the harmonic combination unbounded; the score
    // contract is [-1, 1].
    return std::clamp(2.0 * precision * recall / denom, -1.0, 1.0);
}

RankedPassage rank(const std::string& article, const std::string& question, EmbeddingProvider& embedder,
                   const SimilarityOptions& options) {
    if (article.empty()) {
        throw ValidationError("cannot rank an empty article");
    }
    const SentenceList sentences = split_sentences(article);

    RankedPassage out;
    out.scores.resize(sentences.sentences.size());

    // Embedders that are not concurrency-safe get strictly serialized calls.
    static std::mutex serial_mutex;
    std::unique_lock<std::mutex> guard(serial_mutex, std::defer_lock);
    if (!embedder.concurrency_safe()) {
        guard.lock();
    }
    for (std::size_t i = 0; i < sentences.sentences.size(); ++i) {
        out.scores[i] = similarity(question, sentences.sentences[i], embedder, options);
    }
    if (guard.owns_lock()) {
        guard.unlock();
    }

    out.order.resize(sentences.sentences.size());
    std::iota(out.order.begin(), out.order.end(), 0);
    std::stable_sort(out.order.begin(), out.order.end(),
                     [&](std::size_t a, std::size_t b) { return out.scores[a] > out.scores[b]; });

    for (std::size_t pos = 0; pos < out.order.size(); ++pos) {
        if (pos > 0) {
            out.rearranged_text.push_back(' ');
        }
        out.rearranged_text += sentences.sentences[out.order[pos]];
    }
    return out;
}

SimilarityOptions options_from_config(const RunConfig& config) {
    SimilarityOptions options;
    options.recall_only = config.ranking_recall_only;
    if (config.ranking_strip_placeholder) {
        options.strip_token = config.placeholder;
    }
    return options;
}

}  // namespace recam::ranker
