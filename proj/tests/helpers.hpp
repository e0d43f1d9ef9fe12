#pragma once

#include <memory>
#include <string>
#include <vector>

#include "evolforge/clock.hpp"
#include "evolforge/config.hpp"
#include "evolforge/gateway.hpp"
#include "evolforge/prompt.hpp"
#include "evolforge/seeds.hpp"
#include "evolforge/taxonomy.hpp"

namespace testutil {

inline const evolforge::TaxonomyRegistry& registry() {
    static evolforge::TaxonomyRegistry reg =
        evolforge::load_taxonomy(std::string(EVOLFORGE_DATA_DIR) + "/taxonomy.json");
    return reg;
}

inline const evolforge::LanguageTable& languages() {
    static evolforge::LanguageTable table =
        evolforge::LanguageTable::load(std::string(EVOLFORGE_DATA_DIR) + "/languages.json");
    return table;
}

inline evolforge::PipelineConfig small_config(std::uint64_t seed = 42) {
    evolforge::PipelineConfig config;
    config.rng_seed = seed;
    config.concurrency = 4;
    config.retry.initial_backoff_ms = 1;  // keep retries instant on a real clock
    config.language_pool = {"de", "fr", "es", "hi"};
    return config;
}

inline evolforge::SeedRecord general_seed(const std::string& id, const std::string& lang) {
    evolforge::SeedRecord s;
    s.id = id;
    s.source = evolforge::SeedSource::AyaDataset;
    s.language = lang;
    s.instruction = "general instruction " + id;
    s.response = "general response " + id;
    return s;
}

inline evolforge::SeedRecord task_seed(const std::string& id, const std::string& lang,
                                       const std::string& task) {
    evolforge::SeedRecord s;
    s.id = id;
    s.source = evolforge::SeedSource::AyaCollection;
    s.language = lang;
    s.task = task;
    s.instruction = "task instruction " + id;
    s.response = "task response " + id;
    return s;
}

/// Backend decorator failing every request whose tag starts with a prefix.
class TagFailBackend : public evolforge::Backend {
public:
    TagFailBackend(std::shared_ptr<evolforge::Backend> inner, std::string tag_prefix,
                   evolforge::CompletionStatus status = evolforge::CompletionStatus::Timeout)
        : inner_(std::move(inner)), prefix_(std::move(tag_prefix)), status_(status) {}

    evolforge::AttemptOutcome attempt(const evolforge::CompletionRequest& req) override {
        if (req.tag.rfind(prefix_, 0) == 0) return {status_, ""};
        return inner_->attempt(req);
    }
    std::string describe() const override { return "tag-fail"; }

private:
    std::shared_ptr<evolforge::Backend> inner_;
    std::string prefix_;
    evolforge::CompletionStatus status_;
};

/// Backend answering every request with fixed content (for malformed-JSON cases).
class FixedBackend : public evolforge::Backend {
public:
    FixedBackend(std::shared_ptr<evolforge::Backend> inner, std::string tag_prefix,
                 std::string content)
        : inner_(std::move(inner)), prefix_(std::move(tag_prefix)),
          content_(std::move(content)) {}

    evolforge::AttemptOutcome attempt(const evolforge::CompletionRequest& req) override {
        if (req.tag.rfind(prefix_, 0) == 0)
            return {evolforge::CompletionStatus::Ok, content_};
        return inner_->attempt(req);
    }
    std::string describe() const override { return "fixed"; }

private:
    std::shared_ptr<evolforge::Backend> inner_;
    std::string prefix_;
    std::string content_;
};

inline evolforge::Gateway make_gateway(std::shared_ptr<evolforge::Backend> backend,
                                       int in_flight = 8) {
    evolforge::GatewayLimits limits;
    limits.max_in_flight = in_flight;
    return evolforge::Gateway(std::move(backend), limits,
                              std::make_shared<evolforge::RealClock>());
}

}  // namespace testutil
