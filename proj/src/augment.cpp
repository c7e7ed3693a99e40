#include "recam/augment.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <iostream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "recam/errors.hpp"
#include "recam/io.hpp"
#include "recam/ranker.hpp"

using nlohmann::json;

namespace recam::augment {

std::string IdentityTranslator::translate(const std::string& text, const std::string&,
                                          const std::string&) {
    if (text.empty()) {
        throw TranslateError("refusing to translate empty text", 1);
    }
    return text;
}

std::string MockTranslator::translate(const std::string& text, const std::string& source_lang,
                                      const std::string& target_lang) {
    if (text.empty()) {
        throw TranslateError("refusing to translate empty text", 1);
    }
    std::string out = text;
    if (target_lang != "en") {
        std::transform(out.begin(), out.end(), out.begin(),
                       [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    } else if (source_lang != "en") {
        std::transform(out.begin(), out.end(), out.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    }
    return out;
}

HttpTranslator::HttpTranslator(HttpTranslatorConfig config) : cfg_(std::move(config)) {
    if (cfg_.host.empty()) {
        throw ConfigError("http translator requires an endpoint host");
    }
}

void HttpTranslator::respect_rate_limit() {
    if (cfg_.min_request_interval_seconds <= 0.0) {
        return;
    }
    std::lock_guard<std::mutex> guard(rate_mutex_);
    const auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(cfg_.min_request_interval_seconds));
    const auto now = std::chrono::steady_clock::now();
    if (last_request_.time_since_epoch().count() != 0 && now - last_request_ < interval) {
        std::this_thread::sleep_for(interval - (now - last_request_));
    }
    last_request_ = std::chrono::steady_clock::now();
}

std::string HttpTranslator::translate_chunk(const std::string& text, const std::string& source_lang,
                                            const std::string& target_lang) {
    respect_rate_limit();
    httplib::Client client(cfg_.host, cfg_.port);
    client.set_connection_timeout(cfg_.timeout_seconds, 0);
    client.set_read_timeout(cfg_.timeout_seconds, 0);

    json body;
    body["q"] = text;
    body["source"] = source_lang;
    body["target"] = target_lang;
    if (!cfg_.api_key.empty()) {
        body["api_key"] = cfg_.api_key;
    }

    auto res = client.Post(cfg_.path, body.dump(), "application/json");
    if (!res) {
        throw TranslateError("translation request to " + cfg_.host + " failed: " +
                                 httplib::to_string(res.error()),
                             1);
    }
    if (res->status != 200) {
        throw TranslateError("translation service returned HTTP " + std::to_string(res->status), 1);
    }
    json parsed;
    try {
        parsed = json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw TranslateError(std::string("translation response is not JSON: ") + e.what(), 1);
    }
    if (!parsed.contains("translatedText") || !parsed["translatedText"].is_string()) {
        throw TranslateError("translation response lacks translatedText", 1);
    }
    const std::string out = parsed["translatedText"].get<std::string>();
    if (out.empty()) {
        throw TranslateError("translation service returned empty text", 1);
    }
    return out;
}

std::vector<std::string> pack_chunks(const std::string& text, std::size_t max_chars) {
    const ranker::SentenceList sentences = ranker::split_sentences(text);
    std::vector<std::string> chunks;
    std::string current;
    auto flush = [&]() {
        if (!current.empty()) {
            chunks.push_back(current);
            current.clear();
        }
    };
    for (const std::string& sentence : sentences.sentences) {
        if (!current.empty() && current.size() + 1 + sentence.size() > max_chars) {
            flush();
        }
        if (!current.empty()) {
            current.push_back(' ');
        }
        current += sentence.size() > max_chars ? sentence.substr(0, max_chars) : sentence;
    }
    flush();
    return chunks;
}

std::string HttpTranslator::translate(const std::string& text, const std::string& source_lang,
                                      const std::string& target_lang) {
    if (text.empty()) {
        throw TranslateError("refusing to translate empty text", 1);
    }
    if (text.size() <= cfg_.max_chars_per_request) {
        return translate_chunk(text, source_lang, target_lang);
    }

    // Whole sentences below the request limit, reassembled in order.
    std::string out;
    for (const std::string& chunk : pack_chunks(text, cfg_.max_chars_per_request)) {
        if (!out.empty()) {
            out.push_back(' ');
        }
        out += translate_chunk(chunk, source_lang, target_lang);
    }
    return out;
}

CachingTranslator::CachingTranslator(Translator& inner, std::filesystem::path cache_dir)
    : inner_(inner), cache_dir_(std::move(cache_dir)) {
    std::filesystem::create_directories(cache_dir_);
}

std::string CachingTranslator::translate(const std::string& text, const std::string& source_lang,
                                         const std::string& target_lang) {
    const std::string key = io::sha256_hex(source_lang + "\x1f" + target_lang + "\x1f" + text);
    const std::filesystem::path entry = cache_dir_ / (key + ".txt");
    if (std::filesystem::exists(entry)) {
        ++hits_;
        return io::read_file(entry);
    }
    const std::string out = inner_.translate(text, source_lang, target_lang);
    io::atomic_write_file(entry, out);
    ++misses_;
    return out;
}

std::filesystem::path default_cache_dir() {
    if (const char* env = std::getenv("RECAM_CACHE_DIR")) {
        return env;
    }
    return ".recam_cache/translate";
}

std::string back_translate(const std::string& article, Translator& translator,
                           const BackTranslateOptions& options) {
    if (article.empty()) {
        throw ValidationError("cannot back-translate an empty article");
    }
    auto with_retries = [&](const std::string& text, const std::string& src, const std::string& tgt) {
        std::size_t attempt = 0;
        for (;;) {
            ++attempt;
            try {
                return translator.translate(text, src, tgt);
            } catch (const TranslateError& e) {
                if (attempt >= options.max_attempts) {
                    throw TranslateError(std::string(e.what()) + " (after " + std::to_string(attempt) +
                                             " attempts)",
                                         attempt);
                }
            }
        }
    };
    const std::string pivot_text = with_retries(article, "en", options.pivot_language);
    return with_retries(pivot_text, options.pivot_language, "en");
}

data::DatasetSplit AugmentResult::as_split(const std::string& name, data::Subtask subtask) const {
    data::DatasetSplit split;
    split.name = name;
    split.subtask = subtask;
    split.examples.reserve(examples.size());
    for (const AugmentedExample& aug : examples) {
        split.examples.push_back(aug.example);
    }
    return split;
}

AugmentResult augment_split(const data::DatasetSplit& split, Translator& translator,
                            const AugmentOptions& options) {
    if (!split.labeled()) {
        throw ValidationError("augmentation requires a labeled split");
    }

    const std::size_t n = split.examples.size();
    std::vector<std::optional<AugmentedExample>> slots(n);
    std::vector<std::string> failures(n);

    auto work = [&](std::size_t index) {
        const data::Example& src = split.examples[index];
        try {
            data::Example out = src;  // question/options/label byte-identical
            out.article = back_translate(src.article, translator, options.back_translate);
            out.id = src.id + options.id_suffix;
            slots[index] = AugmentedExample{std::move(out), options.back_translate.pivot_language, src.id};
        } catch (const RecamError& e) {
            failures[index] = e.what();
        }
    };

    const std::size_t workers =
        translator.concurrency_safe() ? std::min<std::size_t>(std::max<std::size_t>(options.parallelism, 1), n)
                                      : 1;
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            work(i);
        }
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w]() {
                for (std::size_t i = w; i < n; i += workers) {
                    work(i);
                }
            });
        }
        for (std::thread& t : pool) {
            t.join();
        }
    }

    AugmentResult result;
    result.examples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (slots[i]) {
            result.examples.push_back(std::move(*slots[i]));
        } else {
            ++result.skipped;
            result.skipped_ids.push_back(split.examples[i].id);
            std::cerr << "[augment] skipping " << split.examples[i].id << ": " << failures[i] << "\n";
        }
    }
    return result;
}

data::DatasetSplit concat_splits(const data::DatasetSplit& base, const data::DatasetSplit& extra) {
    data::DatasetSplit out = base;
    out.examples.insert(out.examples.end(), extra.examples.begin(), extra.examples.end());
    return out;
}

}  // namespace recam::augment
