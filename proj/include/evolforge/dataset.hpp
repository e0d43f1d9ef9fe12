#pragma once

#include <functional>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "evolforge/chat.hpp"
#include "evolforge/dialogue.hpp"
#include "evolforge/evolve.hpp"
#include "evolforge/seeds.hpp"

namespace evolforge {

enum class Stage { Seed, Evoled, MultiTurn };

const char* to_string(Stage s);
Stage stage_from_string(const std::string& s);

/// One record of the unified dataset stream: a seed pair, an evolved pair,
/// or a grown conversation, all in turn form.
struct UnifiedRecord {
    std::string id;  // globally unique, stage-prefixed
    Stage stage = Stage::Seed;
    std::string language;
    std::string source;
    std::string seed_id;
    std::string evol_id;
    std::string task;
    std::vector<Turn> turns;
};

/// Run identity carried by each stage output, checked at assembly.
struct ManifestFragment {
    std::string stage;
    std::string config_fingerprint;
};

struct DatasetManifest {
    std::map<std::string, std::size_t> stage_counts;
    std::map<std::string, std::map<std::string, std::size_t>> per_language;  // stage -> lang
    std::map<std::string, std::map<std::string, std::size_t>> per_task;      // stage -> task
    std::string config_fingerprint;
    std::uint64_t rng_seed = 0;
};

struct AssembledDataset {
    DatasetManifest manifest;
    std::vector<UnifiedRecord> records;
};

/// Unify the three stages into one stream (seeds, complete evol records,
/// all response-terminated conversations). All fragments must carry the
/// same config fingerprint.
AssembledDataset assemble(const SeedSet& seedset,
                          const std::vector<EvolRecord>& evol_records,
                          const std::vector<Conversation>& conversations,
                          const std::vector<ManifestFragment>& fragments,
                          std::uint64_t rng_seed);

using TokenCounter = std::function<std::size_t(std::string_view)>;

struct StageStats {
    std::size_t count = 0;
    double avg_instruction_tokens = 0.0;
    double avg_response_tokens = 0.0;
};

struct StatsReport {
    std::map<std::string, StageStats> per_stage;
    std::string tokenizer_id = "whitespace";
    std::vector<Rejection> rejections;
};

/// Per-stage counts and average token lengths. Instruction length is the
/// user-turn total per record, response length the assistant-turn total.
StatsReport compute_stats(const std::vector<UnifiedRecord>& records,
                          const TokenCounter& tokenizer = nullptr,
                          const std::string& tokenizer_id = "whitespace");

/// Key mapping for ingesting datasets whose field names differ from the
/// chat-turns schema. Candidate lists are tried in order; maintained as data.
struct FieldProfile {
    std::vector<std::string> id_keys = {"id"};
    std::vector<std::string> language_keys = {"language"};
    std::vector<std::string> source_keys = {"source"};
    std::vector<std::string> seed_id_keys = {"seed_id"};
    std::vector<std::string> evol_id_keys = {"evol_id"};
    std::vector<std::string> task_keys = {"task"};
    std::vector<std::string> stage_keys = {"stage"};
    std::map<std::string, std::string> stage_values;  // raw -> seed|evoled|multi-turn
    std::vector<std::string> turns_keys = {"turns"};
    std::vector<std::string> role_keys = {"role"};
    std::vector<std::string> content_keys = {"content"};
    std::vector<std::string> followup_keys = {"follow_up_type"};
    std::map<std::string, std::string> role_values;  // raw -> user|assistant|system
    std::vector<std::string> instruction_keys = {"instruction"};  // pair layout
    std::vector<std::string> response_keys = {"response"};

    static FieldProfile load(const std::string& path);
    static FieldProfile from_json_text(const std::string& json_text);
};

UnifiedRecord unified_from_json(const nlohmann::json& obj, const FieldProfile& profile);
nlohmann::json unified_to_json(const UnifiedRecord& record);

struct IngestResult {
    std::vector<UnifiedRecord> records;
    std::vector<Rejection> rejections;
};

IngestResult read_unified(const std::string& path, const FieldProfile& profile = {});

/// Streaming stats over a line-delimited file; malformed lines become
/// line-numbered rejections, excluded from the averages.
StatsReport compute_stats_file(const std::string& path, const FieldProfile& profile = {},
                               const TokenCounter& tokenizer = nullptr,
                               const std::string& tokenizer_id = "whitespace");

enum class ExportFormat { FlatPairs, ChatTurns };

ExportFormat export_format_from_string(const std::string& s);

/// Line-delimited export; byte-stable for identical input ordering.
/// Returns the number of records written.
std::size_t export_dataset(const std::vector<UnifiedRecord>& records,
                           const std::string& path, ExportFormat format);

std::string manifest_to_json(const DatasetManifest& manifest);
std::string render_manifest_table(const DatasetManifest& manifest);
std::string stats_to_json(const StatsReport& report);
std::string render_stats_table(const StatsReport& report);

}  // namespace evolforge
