#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "evolforge/config.hpp"
#include "evolforge/gateway.hpp"
#include "evolforge/prompt.hpp"
#include "evolforge/seeds.hpp"
#include "evolforge/taxonomy.hpp"

namespace evolforge {

enum class EvolStatus { InstructionOk, Complete, FailedGeneration, FailedResponse, Filtered };

const char* to_string(EvolStatus s);
EvolStatus evol_status_from_string(const std::string& s);

struct Provenance {
    std::string model;
    double temperature_instruction = 0.0;
    double temperature_response = 0.0;
    int attempts_generation = 0;
    int attempts_response = 0;
};

/// One evolved instruction (optionally with its generated response) plus
/// full lineage back to the seed and condition that produced it.
struct EvolRecord {
    std::string id;  // "<seed_id>/<evol_id>"
    std::string seed_id;
    std::string evol_id;
    SeedSource seed_source = SeedSource::AyaDataset;
    std::string seed_task;
    std::string language;
    std::optional<std::string> language_2;
    std::string instruction;
    std::string response;
    EvolStatus status = EvolStatus::FailedGeneration;
    std::string failure_cause;  // e.g. "generation-timeout", empty when healthy
    Provenance provenance;
    std::map<std::string, std::string> resolved_placeholders;
};

nlohmann::json evol_to_json(const EvolRecord& record);
EvolRecord evol_from_json(const nlohmann::json& obj);

/// Append-only fingerprint -> payload log; re-running a step skips every
/// fingerprint already present, which is what makes interrupted runs resumable.
class CheckpointLog {
public:
    explicit CheckpointLog(std::string path);

    std::optional<nlohmann::json> get(const std::string& fingerprint) const;
    void put(const std::string& fingerprint, const nlohmann::json& payload);

    std::size_t size() const;

private:
    std::string path_;
    mutable std::mutex mu_;
    std::unordered_map<std::string, nlohmann::json> entries_;
};

/// Per-step counts for audit; conservation (attempted = complete +
/// failed-generation + failed-response + filtered) is checked downstream.
struct RunManifest {
    std::string config_fingerprint;
    std::uint64_t rng_seed = 0;
    std::size_t attempted = 0;
    std::map<std::string, std::size_t> by_status;
    std::map<std::string, std::size_t> by_language;
    std::map<std::string, std::size_t> by_task;
    std::map<std::string, std::size_t> drop_causes;
};

RunManifest make_manifest(const std::vector<EvolRecord>& records,
                          const std::string& config_fingerprint, std::uint64_t rng_seed);
std::string manifest_to_json(const RunManifest& manifest);
std::string render_manifest_table(const RunManifest& manifest);

/// Apply every applicable condition to every seed, one completion per
/// (seed, condition) pair. Per-record failures become statuses, never
/// exceptions; output is sorted by record id regardless of completion order.
std::vector<EvolRecord> run_instruction_evol(const SeedSet& seedset,
                                             const TaxonomyRegistry& registry,
                                             Gateway& gateway,
                                             const PipelineConfig& config,
                                             const LanguageTable& languages,
                                             CheckpointLog* checkpoint = nullptr);

/// Generate a response for every instruction-ok record (single user-message
/// completion of the evolved instruction). Other statuses pass through.
std::vector<EvolRecord> generate_responses(std::vector<EvolRecord> records,
                                           Gateway& gateway,
                                           const PipelineConfig& config,
                                           CheckpointLog* checkpoint = nullptr);

/// Shared fan-out helper: runs fn(0..n) on up to `workers` threads.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace evolforge
