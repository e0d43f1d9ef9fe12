#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "evolforge/gateway.hpp"

namespace evolforge {

struct FilterPolicy {
    std::size_t ngram_n = 4;
    std::size_t ngram_threshold = 3;
    std::size_t min_tokens = 1;
    std::size_t max_tokens = 8192;
};

/// Every knob of a pipeline run. A run is identified by the fingerprint of
/// this config plus the taxonomy it was loaded with.
struct PipelineConfig {
    std::uint64_t rng_seed = 42;

    // seed sampling
    std::size_t per_language = 100;
    std::size_t per_task_per_language = 6;
    std::set<std::string> excluded_tasks = {"text-simplification",
                                            "multilingual-event-entity"};

    // conversation building
    std::size_t max_followups = 3;
    std::size_t conversations_per_task_language = 0;  // 0 = all records

    // gateway
    int concurrency = 8;
    GatewayLimits limits;
    RetryPolicy retry;
    std::string model = "gpt-4";
    double temperature_instruction = 0.7;
    double temperature_response = 0.3;
    int max_completion_tokens = 1024;
    std::string backend_url;
    std::string mock_script;

    FilterPolicy filter;

    std::string taxonomy_path = "data/taxonomy.json";
    std::string languages_path = "data/languages.json";
    // language_2 sampling pool; empty = every code in the language table
    std::vector<std::string> language_pool;

    static PipelineConfig load(const std::string& path);
    static PipelineConfig from_json_text(const std::string& json_text);
    std::string to_json_text() const;

    /// Hex fingerprint over the canonical config serialization and the
    /// taxonomy document bytes.
    std::string fingerprint(const std::string& taxonomy_text) const;
};

}  // namespace evolforge
