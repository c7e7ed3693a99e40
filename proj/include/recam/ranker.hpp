#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "recam/config.hpp"

namespace recam::ranker {

// Per-token embedding source for the similarity score. Production binds the
// encoder's contextual states; tests bind deterministic toy providers.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::size_t dim() const = 0;
    // One vector (of dim() doubles) per input token, in order.
    virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& tokens) = 0;
    // Whether embed() may be called from several threads at once; the ranker
    // serializes calls otherwise.
    virtual bool concurrency_safe() const = 0;
};

struct SentenceSpan {
    std::size_t begin = 0;
    std::size_t end = 0;  // half-open; spans tile the article exactly
};

struct SentenceList {
    std::vector<std::string> sentences;    // trimmed surface text
    std::vector<SentenceSpan> source_spans;
};

// Rule-based split on {. ! ?} followed by whitespace, with an abbreviation
// guard. Spans cover the article without gaps or overlap.
SentenceList split_sentences(const std::string& article);

struct SimilarityOptions {
    bool recall_only = false;            // F-measure by default
    std::string strip_token;             // drop this token from the query, "" keeps all
};

// Greedy token-matching similarity: R recalls query tokens against the
// sentence, P the reverse, combined as F = 2PR/(P+R). Range [-1, 1].
// Matching runs over word tokens; punctuation-only tokens are dropped, and
// a side left empty by that raises UndefinedSimilarityError.
double similarity(const std::string& query, const std::string& sentence, EmbeddingProvider& embedder,
                  const SimilarityOptions& options = {});

struct RankedPassage {
    std::vector<std::size_t> order;    // permutation, best sentence first
    std::vector<double> scores;        // indexed by original sentence position
    std::string rearranged_text;       // sentences joined best-first with single spaces
};

// Scores every sentence against the question and reorders best-first;
// ties keep original order.
RankedPassage rank(const std::string& article, const std::string& question, EmbeddingProvider& embedder,
                   const SimilarityOptions& options = {});

SimilarityOptions options_from_config(const RunConfig& config);

}  // namespace recam::ranker
