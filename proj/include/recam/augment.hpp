#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <mutex>
#include <memory>
#include <string>
#include <vector>

#include "recam/dataset.hpp"

namespace recam::augment {

// Round-trip translation backend. Implementations declare whether translate()
// may be called from several threads at once.
class Translator {
public:
    virtual ~Translator() = default;
    virtual std::string translate(const std::string& text, const std::string& source_lang,
                                  const std::string& target_lang) = 0;
    virtual bool concurrency_safe() const = 0;
    virtual std::string name() const = 0;
};

// Returns the input unchanged; the offline stand-in for tests and dry runs.
class IdentityTranslator final : public Translator {
public:
    std::string translate(const std::string& text, const std::string&, const std::string&) override;
    bool concurrency_safe() const override { return true; }
    std::string name() const override { return "identity"; }
};

// Scripted round trip: en -> pivot uppercases, pivot -> en lowercases. Keeps
// the composition observable without any service.
class MockTranslator final : public Translator {
public:
    std::string translate(const std::string& text, const std::string& source_lang,
                          const std::string& target_lang) override;
    bool concurrency_safe() const override { return true; }
    std::string name() const override { return "mock"; }
};

struct HttpTranslatorConfig {
    std::string host;           // e.g. "localhost"
    int port = 80;
    std::string path = "/translate";
    std::string api_key;        // sent as api_key field when non-empty
    int timeout_seconds = 30;
    // Service request limit; long articles are chunked at sentence
    // boundaries below this size and reassembled.
    std::size_t max_chars_per_request = 4500;
    // Rate limit: minimum spacing between requests across all threads.
    double min_request_interval_seconds = 0.0;
};

// POSTs {"q": text, "source": ..., "target": ...} and reads "translatedText".
class HttpTranslator final : public Translator {
public:
    explicit HttpTranslator(HttpTranslatorConfig config);
    std::string translate(const std::string& text, const std::string& source_lang,
                          const std::string& target_lang) override;
    bool concurrency_safe() const override { return true; }
    std::string name() const override { return "http"; }

private:
    HttpTranslatorConfig cfg_;
    std::mutex rate_mutex_;
    std::chrono::steady_clock::time_point last_request_{};
    std::string translate_chunk(const std::string& text, const std::string& source_lang,
                                const std::string& target_lang);
    void respect_rate_limit();
};

// Disk cache in front of another translator, keyed by
// sha256(source | target | text). Writes are atomic, so reruns and
// concurrent workers are safe; a hit never touches the inner translator.
class CachingTranslator final : public Translator {
public:
    CachingTranslator(Translator& inner, std::filesystem::path cache_dir);
    std::string translate(const std::string& text, const std::string& source_lang,
                          const std::string& target_lang) override;
    bool concurrency_safe() const override { return inner_.concurrency_safe(); }
    std::string name() const override { return inner_.name() + "+cache"; }

    std::size_t hits() const { return hits_; }
    std::size_t misses() const { return misses_; }

private:
    Translator& inner_;
    std::filesystem::path cache_dir_;
    std::atomic<std::size_t> hits_{0};
    std::atomic<std::size_t> misses_{0};
};

std::filesystem::path default_cache_dir();  // $RECAM_CACHE_DIR or .recam_cache/translate

// Packs whole sentences into chunks of at most max_chars characters (a
// sentence longer than the limit is hard-cut). Joining the chunks with
// single spaces reassembles the text sentence-for-sentence.
std::vector<std::string> pack_chunks(const std::string& text, std::size_t max_chars);

struct BackTranslateOptions {
    std::string pivot_language = "fr";
    std::size_t max_attempts = 3;
};

// translate(translate(article, en, pivot), pivot, en). Retries each hop up to
// max_attempts; the final failure carries the attempt count.
std::string back_translate(const std::string& article, Translator& translator,
                           const BackTranslateOptions& options = {});

// A source example whose article was replaced by its round-trip translation.
// Question, options and label are byte-identical to the original.
struct AugmentedExample {
    data::Example example;
    std::string pivot_language;
    std::string original_id;
};

struct AugmentOptions {
    BackTranslateOptions back_translate;
    std::size_t parallelism = 4;  // honored only for concurrency-safe translators
    std::string id_suffix = "-bt";
    // Additional pivot languages; each produces one more augmented copy per
    // example, ids suffixed "-bt-<pivot>". Off by default.
    std::vector<std::string> extra_pivots;
};

struct AugmentResult {
    std::vector<AugmentedExample> examples;
    std::size_t skipped = 0;
    std::vector<std::string> skipped_ids;

    data::DatasetSplit as_split(const std::string& name, data::Subtask subtask) const;
};

// Back-translates every article of a labeled split; failures skip the example
// and are reported, never fatal.
AugmentResult augment_split(const data::DatasetSplit& split, Translator& translator,
                            const AugmentOptions& options = {});

// train + augmented copies, for the training-corpus union.
data::DatasetSplit concat_splits(const data::DatasetSplit& base, const data::DatasetSplit& extra);

}  // namespace recam::augment
