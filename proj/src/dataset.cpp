#include "evolforge/dataset.hpp"

#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "evolforge/errors.hpp"
#include "evolforge/text.hpp"

namespace evolforge {

using nlohmann::json;

const char* to_string(Stage s) {
    switch (s) {
        case Stage::Seed: return "seed";
        case Stage::Evoled: return "evoled";
        case Stage::MultiTurn: return "multi-turn";
    }
    return "seed";
}

Stage stage_from_string(const std::string& s) {
    if (s == "seed") return Stage::Seed;
    if (s == "evoled") return Stage::Evoled;
    if (s == "multi-turn") return Stage::MultiTurn;
    throw DataError("dataset/bad-stage", "unknown stage: " + s);
}

AssembledDataset assemble(const SeedSet& seedset,
                          const std::vector<EvolRecord>& evol_records,
                          const std::vector<Conversation>& conversations,
                          const std::vector<ManifestFragment>& fragments,
                          std::uint64_t rng_seed) {
    std::string fingerprint;
    for (const auto& frag : fragments) {
        if (fingerprint.empty()) fingerprint = frag.config_fingerprint;
        if (frag.config_fingerprint != fingerprint)
            throw DataError("dataset/fingerprint-mismatch",
                            "stage \"" + frag.stage + "\" carries fingerprint " +
                                frag.config_fingerprint + ", expected " + fingerprint);
    }

    AssembledDataset out;
    out.manifest.config_fingerprint = fingerprint;
    out.manifest.rng_seed = rng_seed;
    std::set<std::string> ids;

    auto add = [&](UnifiedRecord rec) {
        if (!ids.insert(rec.id).second)
            throw DataError("dataset/duplicate-id", "duplicate unified id: " + rec.id);
        const std::string stage = to_string(rec.stage);
        ++out.manifest.stage_counts[stage];
        ++out.manifest.per_language[stage][rec.language];
        if (!rec.task.empty()) ++out.manifest.per_task[stage][rec.task];
        out.records.push_back(std::move(rec));
    };

    for (const auto& seed : seedset.records) {
        UnifiedRecord rec;
        rec.id = "seed/" + seed.id;
        rec.stage = Stage::Seed;
        rec.language = seed.language;
        rec.source = to_string(seed.source);
        rec.seed_id = seed.id;
        rec.task = seed.task;
        rec.turns = {{Role::User, seed.instruction, ""},
                     {Role::Assistant, seed.response, ""}};
        add(std::move(rec));
    }
    for (const auto& evol : evol_records) {
        if (evol.status != EvolStatus::Complete) continue;
        UnifiedRecord rec;
        rec.id = "evol/" + evol.id;
        rec.stage = Stage::Evoled;
        rec.language = evol.language;
        rec.source = to_string(evol.seed_source);
        rec.seed_id = evol.seed_id;
        rec.evol_id = evol.evol_id;
        rec.task = evol.seed_task;
        rec.turns = {{Role::User, evol.instruction, ""},
                     {Role::Assistant, evol.response, ""}};
        add(std::move(rec));
    }

    std::map<std::string, const EvolRecord*> evol_by_id;
    for (const auto& evol : evol_records) evol_by_id[evol.id] = &evol;
    for (const auto& conv : conversations) {
        UnifiedRecord rec;
        rec.id = conv.id;  // already "mt/" prefixed
        rec.stage = Stage::MultiTurn;
        rec.language = conv.language;
        rec.seed_id = conv.root;
        rec.turns = conv.turns;
        if (auto it = evol_by_id.find(conv.root); it != evol_by_id.end()) {
            rec.source = to_string(it->second->seed_source);
            rec.seed_id = it->second->seed_id;
            rec.evol_id = it->second->evol_id;
            rec.task = it->second->seed_task;
        }
        add(std::move(rec));
    }
    return out;
}

namespace {

std::size_t default_token_counter(std::string_view text) {
    return whitespace_token_count(text);
}

struct StatsAccumulator {
    std::size_t count = 0;
    std::size_t instruction_records = 0;
    std::size_t response_records = 0;
    std::size_t instruction_tokens = 0;
    std::size_t response_tokens = 0;
};

void accumulate(StatsAccumulator& acc, const UnifiedRecord& rec,
                const TokenCounter& counter) {
    ++acc.count;
    std::size_t instruction = 0, response = 0;
    bool has_instruction = false, has_response = false;
    for (const auto& turn : rec.turns) {
        if (turn.content.empty()) continue;
        if (turn.role == Role::User) {
            instruction += counter(turn.content);
            has_instruction = true;
        } else if (turn.role == Role::Assistant) {
            response += counter(turn.content);
            has_response = true;
        }
    }
    if (has_instruction) {
        ++acc.instruction_records;
        acc.instruction_tokens += instruction;
    }
    if (has_response) {
        ++acc.response_records;
        acc.response_tokens += response;
    }
}

StatsReport finalize(const std::map<std::string, StatsAccumulator>& accs,
                     const std::string& tokenizer_id, std::vector<Rejection> rejections) {
    StatsReport report;
    report.tokenizer_id = tokenizer_id;
    report.rejections = std::move(rejections);
    for (const auto& [stage, acc] : accs) {
        StageStats s;
        s.count = acc.count;
        s.avg_instruction_tokens =
            acc.instruction_records == 0
                ? 0.0
                : static_cast<double>(acc.instruction_tokens) /
                      static_cast<double>(acc.instruction_records);
        s.avg_response_tokens = acc.response_records == 0
                                    ? 0.0
                                    : static_cast<double>(acc.response_tokens) /
                                          static_cast<double>(acc.response_records);
        report.per_stage[stage] = s;
    }
    return report;
}

}  // namespace

StatsReport compute_stats(const std::vector<UnifiedRecord>& records,
                          const TokenCounter& tokenizer, const std::string& tokenizer_id) {
    const TokenCounter counter = tokenizer ? tokenizer : default_token_counter;
    std::map<std::string, StatsAccumulator> accs;
    for (const auto& rec : records) accumulate(accs[to_string(rec.stage)], rec, counter);
    return finalize(accs, tokenizer_id, {});
}

FieldProfile FieldProfile::from_json_text(const std::string& json_text) {
    json doc = json::parse(json_text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
        throw ConfigError("dataset/profile", "field profile is not a JSON object");
    FieldProfile p;
    auto list = [&](const char* key, std::vector<std::string>& target) {
        if (doc.contains(key)) target = doc[key].get<std::vector<std::string>>();
    };
    list("id_keys", p.id_keys);
    list("language_keys", p.language_keys);
    list("source_keys", p.source_keys);
    list("seed_id_keys", p.seed_id_keys);
    list("evol_id_keys", p.evol_id_keys);
    list("task_keys", p.task_keys);
    list("stage_keys", p.stage_keys);
    list("turns_keys", p.turns_keys);
    list("role_keys", p.role_keys);
    list("content_keys", p.content_keys);
    list("followup_keys", p.followup_keys);
    list("instruction_keys", p.instruction_keys);
    list("response_keys", p.response_keys);
    if (doc.contains("stage_values"))
        p.stage_values = doc["stage_values"].get<std::map<std::string, std::string>>();
    if (doc.contains("role_values"))
        p.role_values = doc["role_values"].get<std::map<std::string, std::string>>();
    return p;
}

FieldProfile FieldProfile::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("dataset/profile", "cannot open field profile: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

namespace {

const json* first_key(const json& obj, const std::vector<std::string>& keys) {
    for (const auto& key : keys)
        if (obj.contains(key)) return &obj[key];
    return nullptr;
}

std::string string_or_empty(const json* value) {
    if (value == nullptr) return "";
    if (value->is_string()) return value->get<std::string>();
    if (value->is_number_integer()) return std::to_string(value->get<long long>());
    return "";
}

}  // namespace

UnifiedRecord unified_from_json(const json& obj, const FieldProfile& profile) {
    if (!obj.is_object()) throw DataError("dataset/parse", "record is not a JSON object");
    UnifiedRecord rec;
    rec.id = string_or_empty(first_key(obj, profile.id_keys));
    rec.language = string_or_empty(first_key(obj, profile.language_keys));
    rec.source = string_or_empty(first_key(obj, profile.source_keys));
    rec.seed_id = string_or_empty(first_key(obj, profile.seed_id_keys));
    rec.evol_id = string_or_empty(first_key(obj, profile.evol_id_keys));
    rec.task = string_or_empty(first_key(obj, profile.task_keys));

    std::string raw_stage = string_or_empty(first_key(obj, profile.stage_keys));
    if (auto it = profile.stage_values.find(raw_stage); it != profile.stage_values.end())
        raw_stage = it->second;
    if (raw_stage.empty())
        throw DataError("dataset/parse", "record has no recognizable stage");
    rec.stage = stage_from_string(raw_stage);

    const json* turns = first_key(obj, profile.turns_keys);
    if (turns != nullptr && turns->is_array()) {
        for (const auto& t : *turns) {
            Turn turn;
            std::string raw_role = string_or_empty(first_key(t, profile.role_keys));
            if (auto it = profile.role_values.find(raw_role); it != profile.role_values.end())
                raw_role = it->second;
            turn.role = role_from_string(raw_role);
            const json* content = first_key(t, profile.content_keys);
            if (content == nullptr || !content->is_string())
                throw DataError("dataset/parse", "turn without string content");
            turn.content = content->get<std::string>();
            turn.follow_up_type = string_or_empty(first_key(t, profile.followup_keys));
            rec.turns.push_back(std::move(turn));
        }
    } else {
        // flat instruction/response pair layout
        const json* instruction = first_key(obj, profile.instruction_keys);
        const json* response = first_key(obj, profile.response_keys);
        if (instruction == nullptr || !instruction->is_string())
            throw DataError("dataset/parse", "record has neither turns nor instruction");
        rec.turns.push_back({Role::User, instruction->get<std::string>(), ""});
        if (response != nullptr && response->is_string())
            rec.turns.push_back({Role::Assistant, response->get<std::string>(), ""});
    }
    return rec;
}

json unified_to_json(const UnifiedRecord& rec) {
    json obj;
    obj["id"] = rec.id;
    obj["stage"] = to_string(rec.stage);
    obj["language"] = rec.language;
    obj["source"] = rec.source;
    obj["seed_id"] = rec.seed_id;
    obj["evol_id"] = rec.evol_id;
    if (!rec.task.empty()) obj["task"] = rec.task;
    obj["turns"] = json::array();
    for (const auto& turn : rec.turns) {
        json t;
        t["role"] = to_string(turn.role);
        t["content"] = turn.content;
        if (!turn.follow_up_type.empty()) t["follow_up_type"] = turn.follow_up_type;
        obj["turns"].push_back(std::move(t));
    }
    return obj;
}

IngestResult read_unified(const std::string& path, const FieldProfile& profile) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("dataset/io", "cannot open dataset file: " + path);
    IngestResult out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded()) {
            out.rejections.push_back({line_no, "malformed line: not valid JSON"});
            continue;
        }
        try {
            out.records.push_back(unified_from_json(obj, profile));
        } catch (const Error& e) {
            out.rejections.push_back({line_no, e.what()});
        }
    }
    return out;
}

StatsReport compute_stats_file(const std::string& path, const FieldProfile& profile,
                               const TokenCounter& tokenizer,
                               const std::string& tokenizer_id) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("dataset/io", "cannot open dataset file: " + path);
    const TokenCounter counter = tokenizer ? tokenizer : default_token_counter;

    std::map<std::string, StatsAccumulator> accs;
    std::vector<Rejection> rejections;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded()) {
            rejections.push_back({line_no, "malformed line: not valid JSON"});
            continue;
        }
        try {
            UnifiedRecord rec = unified_from_json(obj, profile);
            accumulate(accs[to_string(rec.stage)], rec, counter);
        } catch (const Error& e) {
            rejections.push_back({line_no, e.what()});
        }
    }
    return finalize(accs, tokenizer_id, std::move(rejections));
}

ExportFormat export_format_from_string(const std::string& s) {
    if (s == "flat-pairs") return ExportFormat::FlatPairs;
    if (s == "chat-turns") return ExportFormat::ChatTurns;
    throw ConfigError("dataset/bad-format", "unknown export format: " + s);
}

std::size_t export_dataset(const std::vector<UnifiedRecord>& records,
                           const std::string& path, ExportFormat format) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("dataset/io", "cannot open output file: " + path);
    for (const auto& rec : records) {
        if (format == ExportFormat::ChatTurns) {
            out << unified_to_json(rec).dump() << "\n";
        } else {
            // Flat view: the record's root exchange.
            json obj;
            obj["id"] = rec.id;
            obj["stage"] = to_string(rec.stage);
            obj["language"] = rec.language;
            obj["source"] = rec.source;
            obj["seed_id"] = rec.seed_id;
            obj["evol_id"] = rec.evol_id;
            obj["instruction"] = rec.turns.empty() ? "" : rec.turns.front().content;
            obj["response"] = rec.turns.size() > 1 ? rec.turns[1].content : "";
            out << obj.dump() << "\n";
        }
    }
    out.flush();
    if (!out) throw DataError("dataset/io", "write failure: " + path);
    return records.size();
}

std::string manifest_to_json(const DatasetManifest& m) {
    json doc;
    doc["config_fingerprint"] = m.config_fingerprint;
    doc["rng_seed"] = m.rng_seed;
    doc["stage_counts"] = m.stage_counts;
    doc["per_language"] = m.per_language;
    doc["per_task"] = m.per_task;
    return doc.dump();
}

std::string render_manifest_table(const DatasetManifest& m) {
    std::ostringstream out;
    out << "dataset " << m.config_fingerprint << " (rng_seed " << m.rng_seed << ")\n";
    std::size_t total = 0;
    for (const auto& [stage, n] : m.stage_counts) {
        out << std::left << std::setw(12) << stage << std::right << std::setw(10) << n
            << "\n";
        total += n;
    }
    out << std::left << std::setw(12) << "total" << std::right << std::setw(10) << total
        << "\n";
    return out.str();
}

std::string stats_to_json(const StatsReport& report) {
    json doc;
    doc["tokenizer"] = report.tokenizer_id;
    doc["stages"] = json::object();
    for (const auto& [stage, s] : report.per_stage)
        doc["stages"][stage] = {{"count", s.count},
                                {"avg_instruction_tokens", s.avg_instruction_tokens},
                                {"avg_response_tokens", s.avg_response_tokens}};
    doc["rejections"] = json::array();
    for (const auto& r : report.rejections)
        doc["rejections"].push_back({{"line", r.line}, {"reason", r.reason}});
    return doc.dump();
}

std::string render_stats_table(const StatsReport& report) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2);
    out << std::left << std::setw(12) << "stage" << std::right << std::setw(10) << "count"
        << std::setw(12) << "avg inst" << std::setw(12) << "avg resp" << "\n";
    static const char* order[] = {"seed", "evoled", "multi-turn"};
    for (const char* stage : order) {
        auto it = report.per_stage.find(stage);
        if (it == report.per_stage.end()) continue;
        out << std::left << std::setw(12) << stage << std::right << std::setw(10)
            << it->second.count << std::setw(12) << it->second.avg_instruction_tokens
            << std::setw(12) << it->second.avg_response_tokens << "\n";
    }
    for (const auto& [stage, s] : report.per_stage) {
        if (std::string(stage) == "seed" || stage == "evoled" || stage == "multi-turn")
            continue;
        out << std::left << std::setw(12) << stage << std::right << std::setw(10) << s.count
            << std::setw(12) << s.avg_instruction_tokens << std::setw(12)
            << s.avg_response_tokens << "\n";
    }
    out << "tokenizer: " << report.tokenizer_id << "; rejected lines: "
        << report.rejections.size() << "\n";
    return out.str();
}

}  // namespace evolforge
