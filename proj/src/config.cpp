#include "evolforge/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "evolforge/errors.hpp"
#include "evolforge/rng.hpp"
#include "evolforge/text.hpp"

namespace evolforge {

using nlohmann::json;

PipelineConfig PipelineConfig::from_json_text(const std::string& json_text) {
    json doc = json::parse(json_text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
        throw ConfigError("config/parse", "config is not a JSON object");

    PipelineConfig c;
    c.rng_seed = doc.value("rng_seed", c.rng_seed);
    c.per_language = doc.value("per_language", c.per_language);
    c.per_task_per_language = doc.value("per_task_per_language", c.per_task_per_language);
    if (doc.contains("excluded_tasks")) {
        c.excluded_tasks.clear();
        for (const auto& t : doc["excluded_tasks"]) c.excluded_tasks.insert(t.get<std::string>());
    }
    c.max_followups = doc.value("max_followups", c.max_followups);
    c.conversations_per_task_language =
        doc.value("conversations_per_task_language", c.conversations_per_task_language);
    c.concurrency = doc.value("concurrency", c.concurrency);
    if (doc.contains("rate")) {
        const auto& r = doc["rate"];
        c.limits.requests_per_interval =
            r.value("requests_per_interval", c.limits.requests_per_interval);
        c.limits.interval_ms = r.value("interval_ms", c.limits.interval_ms);
    }
    c.limits.max_in_flight = doc.value("max_in_flight", c.concurrency);
    if (doc.contains("retry")) {
        const auto& r = doc["retry"];
        c.retry.max_attempts = r.value("max_attempts", c.retry.max_attempts);
        c.retry.initial_backoff_ms = r.value("initial_backoff_ms", c.retry.initial_backoff_ms);
        c.retry.backoff_multiplier = r.value("backoff_multiplier", c.retry.backoff_multiplier);
        c.retry.jitter_fraction = r.value("jitter_fraction", c.retry.jitter_fraction);
        c.retry.request_timeout_ms = r.value("request_timeout_ms", c.retry.request_timeout_ms);
    }
    c.model = doc.value("model", c.model);
    c.temperature_instruction = doc.value("temperature_instruction", c.temperature_instruction);
    c.temperature_response = doc.value("temperature_response", c.temperature_response);
    c.max_completion_tokens = doc.value("max_completion_tokens", c.max_completion_tokens);
    c.backend_url = doc.value("backend_url", c.backend_url);
    c.mock_script = doc.value("mock_script", c.mock_script);
    if (doc.contains("filter")) {
        const auto& f = doc["filter"];
        c.filter.ngram_n = f.value("ngram_n", c.filter.ngram_n);
        c.filter.ngram_threshold = f.value("ngram_threshold", c.filter.ngram_threshold);
        c.filter.min_tokens = f.value("min_tokens", c.filter.min_tokens);
        c.filter.max_tokens = f.value("max_tokens", c.filter.max_tokens);
    }
    c.taxonomy_path = doc.value("taxonomy_path", c.taxonomy_path);
    c.languages_path = doc.value("languages_path", c.languages_path);
    if (doc.contains("language_pool")) {
        c.language_pool.clear();
        for (const auto& l : doc["language_pool"]) c.language_pool.push_back(l.get<std::string>());
    }
    return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config/io", "cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::string PipelineConfig::to_json_text() const {
    json doc;
    doc["rng_seed"] = rng_seed;
    doc["per_language"] = per_language;
    doc["per_task_per_language"] = per_task_per_language;
    doc["excluded_tasks"] = excluded_tasks;
    doc["max_followups"] = max_followups;
    doc["conversations_per_task_language"] = conversations_per_task_language;
    doc["concurrency"] = concurrency;
    doc["max_in_flight"] = limits.max_in_flight;
    doc["rate"] = {{"requests_per_interval", limits.requests_per_interval},
                   {"interval_ms", limits.interval_ms}};
    doc["retry"] = {{"max_attempts", retry.max_attempts},
                    {"initial_backoff_ms", retry.initial_backoff_ms},
                    {"backoff_multiplier", retry.backoff_multiplier},
                    {"jitter_fraction", retry.jitter_fraction},
                    {"request_timeout_ms", retry.request_timeout_ms}};
    doc["model"] = model;
    doc["temperature_instruction"] = temperature_instruction;
    doc["temperature_response"] = temperature_response;
    doc["max_completion_tokens"] = max_completion_tokens;
    doc["backend_url"] = backend_url;
    doc["mock_script"] = mock_script;
    doc["filter"] = {{"ngram_n", filter.ngram_n},
                     {"ngram_threshold", filter.ngram_threshold},
                     {"min_tokens", filter.min_tokens},
                     {"max_tokens", filter.max_tokens}};
    doc["taxonomy_path"] = taxonomy_path;
    doc["languages_path"] = languages_path;
    doc["language_pool"] = language_pool;
    return doc.dump();
}

std::string PipelineConfig::fingerprint(const std::string& taxonomy_text) const {
    std::uint64_t h = fnv1a64(to_json_text());
    h = fnv1a64(h, taxonomy_text);
    return to_hex16(h);
}

}  // namespace evolforge
