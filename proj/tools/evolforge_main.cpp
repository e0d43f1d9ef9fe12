// Taxonomy-guided synthetic IFT data pipeline CLI.
//
// Subcommands: seeds sample, evolve, converse, filter, moderate, stats,
// export. Every subcommand reads a shared JSON config plus flag overrides;
// the deterministic mock backend is the default when no backend url is set.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "evolforge/dataset.hpp"
#include "evolforge/dialogue.hpp"
#include "evolforge/errors.hpp"
#include "evolforge/evolve.hpp"
#include "evolforge/filter.hpp"
#include "evolforge/moderation.hpp"

using namespace evolforge;
using nlohmann::json;

namespace {

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> rng_seed;
    std::optional<int> concurrency;
    std::string backend_url;
    std::optional<std::string> mock;  // set (possibly empty) when --mock given
    std::string out;
    std::string format = "chat-turns";
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "pipeline config file (JSON)");
    cmd->add_option("--rng-seed", opts.rng_seed, "override the run seed");
    cmd->add_option("--concurrency", opts.concurrency, "worker / in-flight ceiling");
    cmd->add_option("--backend-url", opts.backend_url, "chat-completions base url");
    cmd->add_option("--mock", opts.mock, "use the mock backend (optional script file)")
        ->expected(0, 1);
    cmd->add_option("--out", opts.out, "output path");
}

struct Runtime {
    PipelineConfig config;
    TaxonomyRegistry registry;
    LanguageTable languages;
    std::string fingerprint;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cli/io", "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Runtime load_runtime(const CommonOptions& opts) {
    Runtime rt;
    rt.config = opts.config_path.empty() ? PipelineConfig{}
                                         : PipelineConfig::load(opts.config_path);
    if (opts.rng_seed) rt.config.rng_seed = *opts.rng_seed;
    if (opts.concurrency) {
        rt.config.concurrency = *opts.concurrency;
        rt.config.limits.max_in_flight = *opts.concurrency;
    }
    if (!opts.backend_url.empty()) rt.config.backend_url = opts.backend_url;
    if (opts.mock) {
        rt.config.backend_url.clear();
        rt.config.mock_script = *opts.mock;
    }

    auto resolve = [](const std::string& path) {
        std::ifstream probe(path);
        if (probe) return path;
        return std::string(EVOLFORGE_DATA_DIR) + "/" + path.substr(path.rfind('/') + 1);
    };
    const std::string taxonomy_path = resolve(rt.config.taxonomy_path);
    const std::string taxonomy_text = read_file(taxonomy_path);
    rt.registry = parse_taxonomy(taxonomy_text);
    rt.languages = LanguageTable::load(resolve(rt.config.languages_path));
    rt.fingerprint = rt.config.fingerprint(taxonomy_text);
    return rt;
}

std::shared_ptr<Backend> make_backend(const PipelineConfig& config) {
    if (!config.backend_url.empty()) {
        const char* key = std::getenv("EVOLFORGE_API_KEY");
        return std::make_shared<HttpBackend>(config.backend_url, key ? key : "",
                                             config.retry.request_timeout_ms);
    }
    MockScript script;
    if (!config.mock_script.empty()) script = MockScript::load(config.mock_script);
    return std::make_shared<MockBackend>(std::move(script));
}

Gateway make_gateway(const PipelineConfig& config) {
    return Gateway(make_backend(config), config.limits, std::make_shared<RealClock>(),
                   config.rng_seed);
}

void write_sidecar_manifest(const std::string& out_path, const json& manifest) {
    std::ofstream out(out_path + ".manifest.json", std::ios::trunc);
    out << manifest.dump(1) << "\n";
}

std::string sidecar_fingerprint(const std::string& input_path, const std::string& fallback) {
    std::ifstream in(input_path + ".manifest.json");
    if (!in) return fallback;
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.contains("config_fingerprint")) return fallback;
    return doc["config_fingerprint"].get<std::string>();
}

void report_rejections(const std::vector<Rejection>& rejections) {
    for (const auto& r : rejections)
        std::cerr << "rejected line " << r.line << ": " << r.reason << "\n";
}

std::vector<EvolRecord> load_evol_records(const std::string& path) {
    std::vector<EvolRecord> out;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cli/io", "cannot open " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded())
            throw DataError("cli/parse",
                            path + ":" + std::to_string(line_no) + ": invalid JSON");
        out.push_back(evol_from_json(obj));
    }
    return out;
}

std::vector<Conversation> load_conversations(const std::string& path) {
    std::vector<Conversation> out;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cli/io", "cannot open " + path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded()) throw DataError("cli/parse", path + ": invalid JSON line");
        out.push_back(conversation_from_json(obj));
    }
    return out;
}

template <typename T, typename Fn>
void write_jsonl(const std::string& path, const std::vector<T>& items, Fn to_json_fn) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cli/io", "cannot open " + path);
    for (const auto& item : items) out << to_json_fn(item).dump() << "\n";
}

int cmd_seeds_sample(const CommonOptions& opts, const std::string& seeds_path) {
    Runtime rt = load_runtime(opts);
    ReadSeedsResult input = read_seeds(seeds_path);
    report_rejections(input.rejections);

    auto kept = apply_exclusions(input.records, rt.config.excluded_tasks);
    SeedSet set = sample_balanced(kept, rt.config.per_language,
                                  rt.config.per_task_per_language, rt.config.rng_seed);

    write_jsonl(opts.out, set.records, [](const SeedRecord& s) {
        json obj;
        obj["id"] = s.id;
        obj["source"] = to_string(s.source);
        obj["language"] = s.language;
        if (!s.task.empty()) obj["task"] = s.task;
        obj["instruction"] = s.instruction;
        obj["response"] = s.response;
        return obj;
    });

    json manifest;
    manifest["stage"] = "seed";
    manifest["config_fingerprint"] = rt.fingerprint;
    manifest["rng_seed"] = rt.config.rng_seed;
    manifest["selected"] = set.records.size();
    manifest["rejected_lines"] = input.rejections.size();
    manifest["deficits"] = set.deficits;
    write_sidecar_manifest(opts.out, manifest);

    std::cout << "selected " << set.records.size() << " seeds ("
              << set.deficits.size() << " buckets short)\n";
    return 0;
}

int cmd_evolve(const CommonOptions& opts, const std::string& seedset_path,
               const std::string& checkpoint_path) {
    Runtime rt = load_runtime(opts);
    ReadSeedsResult input = read_seeds(seedset_path);
    report_rejections(input.rejections);
    SeedSet set;
    set.records = std::move(input.records);

    Gateway gateway = make_gateway(rt.config);
    std::unique_ptr<CheckpointLog> checkpoint;
    if (!checkpoint_path.empty()) checkpoint = std::make_unique<CheckpointLog>(checkpoint_path);

    auto records = run_instruction_evol(set, rt.registry, gateway, rt.config, rt.languages,
                                        checkpoint.get());
    records = generate_responses(std::move(records), gateway, rt.config, checkpoint.get());

    write_jsonl(opts.out, records, evol_to_json);
    RunManifest manifest = make_manifest(records, rt.fingerprint, rt.config.rng_seed);
    json sidecar = json::parse(manifest_to_json(manifest));
    sidecar["stage"] = "evoled";
    write_sidecar_manifest(opts.out, sidecar);
    std::cout << render_manifest_table(manifest);
    return 0;
}

int cmd_converse(const CommonOptions& opts, const std::string& records_path,
                 const std::string& checkpoint_path) {
    Runtime rt = load_runtime(opts);
    auto records = load_evol_records(records_path);

    Gateway gateway = make_gateway(rt.config);
    std::unique_ptr<CheckpointLog> checkpoint;
    if (!checkpoint_path.empty()) checkpoint = std::make_unique<CheckpointLog>(checkpoint_path);

    auto conversations = build_conversations(records, rt.registry, gateway, rt.config,
                                             rt.languages, checkpoint.get());
    write_jsonl(opts.out, conversations, conversation_to_json);

    std::size_t complete = 0;
    for (const auto& c : conversations)
        if (c.status == ConversationStatus::Complete) ++complete;
    json sidecar;
    sidecar["stage"] = "multi-turn";
    sidecar["config_fingerprint"] = rt.fingerprint;
    sidecar["rng_seed"] = rt.config.rng_seed;
    sidecar["attempted"] = conversations.size();
    sidecar["complete"] = complete;
    sidecar["truncated"] = conversations.size() - complete;
    write_sidecar_manifest(opts.out, sidecar);

    std::cout << "built " << conversations.size() << " conversations (" << complete
              << " complete)\n";
    return 0;
}

int cmd_filter(const CommonOptions& opts, const std::string& in_path,
               const std::string& dropped_path) {
    Runtime rt = load_runtime(opts);
    const std::string drop_out =
        dropped_path.empty() ? opts.out + ".dropped.jsonl" : dropped_path;

    // conversations carry a "turns" array; evol records an "instruction"
    std::ifstream probe(in_path);
    if (!probe) throw DataError("cli/io", "cannot open " + in_path);
    std::string first_line;
    std::getline(probe, first_line);
    json first = json::parse(first_line.empty() ? "{}" : first_line, nullptr, false);
    const bool is_conversations = !first.is_discarded() && first.contains("turns");

    std::size_t kept_count = 0, dropped_count = 0;
    if (is_conversations) {
        auto filtered = filter_records(load_conversations(in_path), rt.config.filter);
        write_jsonl(opts.out, filtered.kept, conversation_to_json);
        write_jsonl(drop_out, filtered.dropped, [](const auto& pair) {
            json obj = conversation_to_json(pair.first);
            obj["drop_reason"] = {{"reason", pair.second.reason},
                                  {"detail", pair.second.detail}};
            return obj;
        });
        kept_count = filtered.kept.size();
        dropped_count = filtered.dropped.size();
    } else {
        auto filtered = filter_records(load_evol_records(in_path), rt.config.filter);
        write_jsonl(opts.out, filtered.kept, evol_to_json);
        write_jsonl(drop_out, filtered.dropped, [](const auto& pair) {
            json obj = evol_to_json(pair.first);
            obj["drop_reason"] = {{"reason", pair.second.reason},
                                  {"detail", pair.second.detail}};
            return obj;
        });
        kept_count = filtered.kept.size();
        dropped_count = filtered.dropped.size();
    }

    json sidecar;
    sidecar["stage"] = "filter";
    sidecar["config_fingerprint"] = rt.fingerprint;
    sidecar["kept"] = kept_count;
    sidecar["dropped"] = dropped_count;
    sidecar["filter"] = {{"ngram_n", rt.config.filter.ngram_n},
                         {"ngram_threshold", rt.config.filter.ngram_threshold},
                         {"min_tokens", rt.config.filter.min_tokens},
                         {"max_tokens", rt.config.filter.max_tokens}};
    write_sidecar_manifest(opts.out, sidecar);
    std::cout << "kept " << kept_count << ", dropped " << dropped_count << "\n";
    return 0;
}

int cmd_moderate(const CommonOptions& opts, const std::string& in_path,
                 const std::string& classifier_spec, bool strip,
                 const std::string& report_path) {
    auto conversations = load_conversations(in_path);

    std::unique_ptr<ModerationClient> client;
    if (classifier_spec.rfind("mock:", 0) == 0) {
        client = std::make_unique<SentinelClassifier>(
            SentinelClassifier::load(classifier_spec.substr(5)));
    } else if (classifier_spec.rfind("http", 0) == 0) {
        const char* key = std::getenv("EVOLFORGE_API_KEY");
        client = std::make_unique<HttpModerationClient>(classifier_spec, key ? key : "");
    } else {
        throw ConfigError("cli/classifier",
                          "classifier must be mock:<rules.json> or an http(s) url");
    }

    ModerationReport report = moderate(conversations, *client);
    std::cout << render_moderation_table(report);

    if (!report_path.empty()) {
        json doc;
        doc["rate_user"] = report.rate_user;
        doc["rate_assistant"] = report.rate_assistant;
        doc["rate_avg"] = report.rate_avg;
        doc["user_turns"] = report.user_turns;
        doc["assistant_turns"] = report.assistant_turns;
        doc["flagged"] = json::array();
        for (const auto& v : report.verdicts)
            if (v.flagged)
                doc["flagged"].push_back({{"conversation", v.ref.conversation_id},
                                          {"turn", v.ref.turn_index}});
        doc["unscanned"] = report.unscanned.size();
        std::ofstream out(report_path, std::ios::trunc);
        out << doc.dump(1) << "\n";
    }
    if (strip) {
        if (opts.out.empty())
            throw ConfigError("cli/out", "--strip needs --out for the cleaned corpus");
        auto cleaned = strip_flagged(conversations, report);
        write_jsonl(opts.out, cleaned, conversation_to_json);
        std::cout << "stripped corpus: " << cleaned.size() << " conversations kept\n";
    }
    return 0;
}

int cmd_stats(const CommonOptions& opts, const std::string& in_path,
              const std::string& profile_path, const std::string& json_out) {
    FieldProfile profile;
    if (!profile_path.empty()) profile = FieldProfile::load(profile_path);
    StatsReport report = compute_stats_file(in_path, profile);
    std::cout << render_stats_table(report);
    report_rejections(report.rejections);
    if (!json_out.empty()) {
        std::ofstream out(json_out, std::ios::trunc);
        out << stats_to_json(report) << "\n";
    }
    return 0;
}

int cmd_export(const CommonOptions& opts, const std::string& seedset_path,
               const std::string& records_path, const std::string& conversations_path) {
    Runtime rt = load_runtime(opts);

    SeedSet set;
    if (!seedset_path.empty()) {
        ReadSeedsResult input = read_seeds(seedset_path);
        report_rejections(input.rejections);
        set.records = std::move(input.records);
    }
    std::vector<EvolRecord> records;
    if (!records_path.empty()) records = load_evol_records(records_path);
    std::vector<Conversation> conversations;
    if (!conversations_path.empty()) conversations = load_conversations(conversations_path);

    std::vector<ManifestFragment> fragments;
    if (!seedset_path.empty())
        fragments.push_back({"seed", sidecar_fingerprint(seedset_path, rt.fingerprint)});
    if (!records_path.empty())
        fragments.push_back({"evoled", sidecar_fingerprint(records_path, rt.fingerprint)});
    if (!conversations_path.empty())
        fragments.push_back(
            {"multi-turn", sidecar_fingerprint(conversations_path, rt.fingerprint)});

    AssembledDataset data =
        assemble(set, records, conversations, fragments, rt.config.rng_seed);
    const std::size_t written =
        export_dataset(data.records, opts.out, export_format_from_string(opts.format));

    write_sidecar_manifest(opts.out, json::parse(manifest_to_json(data.manifest)));
    std::cout << render_manifest_table(data.manifest);
    std::cout << "wrote " << written << " records to " << opts.out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"taxonomy-guided multilingual instruction data pipeline"};
    app.require_subcommand(1);

    CommonOptions opts;

    auto* seeds = app.add_subcommand("seeds", "seed corpus operations");
    seeds->require_subcommand(1);
    auto* sample = seeds->add_subcommand("sample", "balanced per-language sampling");
    std::string seeds_path;
    sample->add_option("--seeds", seeds_path, "seed corpus (JSONL)")->required();
    add_common(sample, opts);

    auto* evolve = app.add_subcommand("evolve", "apply instruction evols to a seed set");
    std::string seedset_path, checkpoint_path;
    evolve->add_option("--seedset", seedset_path, "sampled seed set (JSONL)")->required();
    evolve->add_option("--checkpoint", checkpoint_path, "resumable checkpoint log");
    add_common(evolve, opts);

    auto* converse = app.add_subcommand("converse", "grow multi-turn conversations");
    std::string records_path, conv_checkpoint;
    converse->add_option("--records", records_path, "evolved records (JSONL)")->required();
    converse->add_option("--checkpoint", conv_checkpoint, "resumable checkpoint log");
    add_common(converse, opts);

    auto* filter = app.add_subcommand("filter", "repetition and length screening");
    std::string filter_in, dropped_path;
    filter->add_option("--in", filter_in, "records or conversations (JSONL)")->required();
    filter->add_option("--dropped", dropped_path, "where to write dropped items");
    add_common(filter, opts);

    auto* moderate_cmd = app.add_subcommand("moderate", "content moderation scan");
    std::string moderate_in, classifier_spec, report_path;
    bool strip = false;
    moderate_cmd->add_option("--in", moderate_in, "conversations (JSONL)")->required();
    moderate_cmd->add_option("--classifier", classifier_spec,
                             "mock:<rules.json> or moderation endpoint url")
        ->required();
    moderate_cmd->add_flag("--strip", strip, "write a cleaned corpus to --out");
    moderate_cmd->add_option("--report", report_path, "write the JSON report here");
    add_common(moderate_cmd, opts);

    auto* stats = app.add_subcommand("stats", "per-stage counts and token averages");
    std::string stats_in, profile_path, stats_json;
    stats->add_option("--in", stats_in, "dataset file (JSONL)")->required();
    stats->add_option("--profile", profile_path, "field-mapping profile (JSON)");
    stats->add_option("--json", stats_json, "also write the report as JSON");
    add_common(stats, opts);

    auto* export_cmd = app.add_subcommand("export", "assemble and export the dataset");
    std::string export_seeds, export_records, export_conversations;
    export_cmd->add_option("--seedset", export_seeds, "sampled seed set (JSONL)");
    export_cmd->add_option("--records", export_records, "evolved records (JSONL)");
    export_cmd->add_option("--conversations", export_conversations, "conversations (JSONL)");
    export_cmd->add_option("--format", opts.format, "flat-pairs or chat-turns");
    add_common(export_cmd, opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sample->parsed()) {
            if (opts.out.empty()) throw ConfigError("cli/out", "--out is required");
            return cmd_seeds_sample(opts, seeds_path);
        }
        if (evolve->parsed()) {
            if (opts.out.empty()) throw ConfigError("cli/out", "--out is required");
            return cmd_evolve(opts, seedset_path, checkpoint_path);
        }
        if (converse->parsed()) {
            if (opts.out.empty()) throw ConfigError("cli/out", "--out is required");
            return cmd_converse(opts, records_path, conv_checkpoint);
        }
        if (filter->parsed()) {
            if (opts.out.empty()) throw ConfigError("cli/out", "--out is required");
            return cmd_filter(opts, filter_in, dropped_path);
        }
        if (moderate_cmd->parsed())
            return cmd_moderate(opts, moderate_in, classifier_spec, strip, report_path);
        if (stats->parsed()) return cmd_stats(opts, stats_in, profile_path, stats_json);
        if (export_cmd->parsed()) {
            if (opts.out.empty()) throw ConfigError("cli/out", "--out is required");
            return cmd_export(opts, export_seeds, export_records, export_conversations);
        }
    } catch (const Error& e) {
        std::cerr << "error [" << e.kind() << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
