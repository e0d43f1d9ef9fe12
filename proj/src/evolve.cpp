#include "evolforge/evolve.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "evolforge/errors.hpp"
#include "evolforge/rng.hpp"
#include "evolforge/text.hpp"

namespace evolforge {

using nlohmann::json;

const char* to_string(EvolStatus s) {
    switch (s) {
        case EvolStatus::InstructionOk: return "instruction-ok";
        case EvolStatus::Complete: return "complete";
        case EvolStatus::FailedGeneration: return "failed-generation";
        case EvolStatus::FailedResponse: return "failed-response";
        case EvolStatus::Filtered: return "filtered";
    }
    return "failed-generation";
}

EvolStatus evol_status_from_string(const std::string& s) {
    if (s == "instruction-ok") return EvolStatus::InstructionOk;
    if (s == "complete") return EvolStatus::Complete;
    if (s == "failed-generation") return EvolStatus::FailedGeneration;
    if (s == "failed-response") return EvolStatus::FailedResponse;
    if (s == "filtered") return EvolStatus::Filtered;
    throw DataError("evolve/bad-status", "unknown evol status: " + s);
}

json evol_to_json(const EvolRecord& r) {
    json obj;
    obj["id"] = r.id;
    obj["seed_id"] = r.seed_id;
    obj["evol_id"] = r.evol_id;
    obj["seed_source"] = to_string(r.seed_source);
    if (!r.seed_task.empty()) obj["seed_task"] = r.seed_task;
    obj["language"] = r.language;
    if (r.language_2) obj["language_2"] = *r.language_2;
    obj["instruction"] = r.instruction;
    obj["response"] = r.response;
    obj["status"] = to_string(r.status);
    if (!r.failure_cause.empty()) obj["failure_cause"] = r.failure_cause;
    obj["provenance"] = {{"model", r.provenance.model},
                         {"temperature_instruction", r.provenance.temperature_instruction},
                         {"temperature_response", r.provenance.temperature_response},
                         {"attempts_generation", r.provenance.attempts_generation},
                         {"attempts_response", r.provenance.attempts_response}};
    obj["resolved_placeholders"] = r.resolved_placeholders;
    return obj;
}

EvolRecord evol_from_json(const json& obj) {
    EvolRecord r;
    try {
        r.id = obj.at("id").get<std::string>();
        r.seed_id = obj.at("seed_id").get<std::string>();
        r.evol_id = obj.at("evol_id").get<std::string>();
        r.seed_source = obj.at("seed_source").get<std::string>() == "aya-dataset"
                            ? SeedSource::AyaDataset
                            : SeedSource::AyaCollection;
        r.seed_task = obj.value("seed_task", "");
        r.language = obj.at("language").get<std::string>();
        if (obj.contains("language_2")) r.language_2 = obj["language_2"].get<std::string>();
        r.instruction = obj.value("instruction", "");
        r.response = obj.value("response", "");
        r.status = evol_status_from_string(obj.at("status").get<std::string>());
        r.failure_cause = obj.value("failure_cause", "");
        if (obj.contains("provenance")) {
            const auto& p = obj["provenance"];
            r.provenance.model = p.value("model", "");
            r.provenance.temperature_instruction = p.value("temperature_instruction", 0.0);
            r.provenance.temperature_response = p.value("temperature_response", 0.0);
            r.provenance.attempts_generation = p.value("attempts_generation", 0);
            r.provenance.attempts_response = p.value("attempts_response", 0);
        }
        if (obj.contains("resolved_placeholders"))
            r.resolved_placeholders =
                obj["resolved_placeholders"].get<std::map<std::string, std::string>>();
    } catch (const json::exception& e) {
        throw DataError("evolve/parse", std::string("bad evol record: ") + e.what());
    }
    return r;
}

CheckpointLog::CheckpointLog(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_, std::ios::binary);
    if (!in) return;  // fresh log
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.contains("fingerprint")) continue;
        entries_[obj["fingerprint"].get<std::string>()] = obj.value("payload", json());
    }
}

std::optional<json> CheckpointLog::get(const std::string& fingerprint) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(fingerprint);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void CheckpointLog::put(const std::string& fingerprint, const json& payload) {
    std::lock_guard<std::mutex> lock(mu_);
    if (entries_.count(fingerprint)) return;
    entries_[fingerprint] = payload;
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    json line;
    line["fingerprint"] = fingerprint;
    line["payload"] = payload;
    out << line.dump() << "\n";
}

std::size_t CheckpointLog::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_.size();
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const int count = std::max(1, std::min<int>(workers, static_cast<int>(n)));
    if (count == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(count));
    for (int w = 0; w < count; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

namespace {

// Resume is keyed by the request fingerprint, so it survives a backend
// change but not a change to anything that alters the prompt or tag.
// Only successes are checkpointed: a resumed run retries failures.
std::string checkpoint_key(const CompletionRequest& request) {
    return to_hex16(request_fingerprint(request));
}

}  // namespace

std::vector<EvolRecord> run_instruction_evol(const SeedSet& seedset,
                                             const TaxonomyRegistry& registry,
                                             Gateway& gateway,
                                             const PipelineConfig& config,
                                             const LanguageTable& languages,
                                             CheckpointLog* checkpoint) {
    struct Job {
        const SeedRecord* seed;
        const EvolCondition* condition;
    };
    std::vector<Job> jobs;
    for (const auto& seed : seedset.records)
        for (const EvolCondition* cond : conditions_for(seed, registry))
            jobs.push_back({&seed, cond});

    const std::vector<std::string>& pool =
        config.language_pool.empty() ? languages.codes() : config.language_pool;
    const std::vector<std::string>& translit_pool = languages.romanization_codes();

    std::vector<EvolRecord> out(jobs.size());
    parallel_for(jobs.size(), config.concurrency, [&](std::size_t i) {
        const Job& job = jobs[i];
        EvolRecord rec;
        rec.id = job.seed->id + "/" + job.condition->id;
        rec.seed_id = job.seed->id;
        rec.evol_id = job.condition->id;
        rec.seed_source = job.seed->source;
        rec.seed_task = job.seed->task;
        rec.language = job.seed->language;
        rec.provenance.model = config.model;
        rec.provenance.temperature_instruction = config.temperature_instruction;
        rec.provenance.temperature_response = config.temperature_response;

        try {
            SplitMix64 rng = derive_rng(config.rng_seed, "langs/" + rec.id);
            LanguageAssignment langs =
                assign_languages(*job.seed, *job.condition, pool, translit_pool, rng);
            PromptText prompt = render_evol_prompt(*job.condition, *job.seed, langs, languages);
            rec.language_2 = langs.language_2;
            rec.resolved_placeholders = prompt.resolved_placeholders;

            CompletionRequest request;
            request.messages = {{Role::User, prompt.text}};
            request.model = config.model;
            request.temperature = config.temperature_instruction;
            request.max_tokens = config.max_completion_tokens;
            request.tag = "evol/" + rec.id;

            const std::string key = checkpoint_key(request);
            if (checkpoint) {
                if (auto payload = checkpoint->get(key)) {
                    out[i] = evol_from_json(*payload);
                    return;
                }
            }

            CompletionResult result = gateway.complete(request, config.retry);
            rec.provenance.attempts_generation = result.attempts;
            if (result.ok()) {
                rec.instruction = result.content;
                rec.status = EvolStatus::InstructionOk;
                if (checkpoint) checkpoint->put(key, evol_to_json(rec));
            } else {
                rec.status = EvolStatus::FailedGeneration;
                rec.failure_cause = std::string("generation-") + to_string(result.status);
            }
        } catch (const Error& e) {
            rec.status = EvolStatus::FailedGeneration;
            rec.failure_cause = std::string("render:") + e.kind();
        }

        out[i] = std::move(rec);
    });

    std::sort(out.begin(), out.end(),
              [](const EvolRecord& a, const EvolRecord& b) { return a.id < b.id; });
    return out;
}

std::vector<EvolRecord> generate_responses(std::vector<EvolRecord> records,
                                           Gateway& gateway,
                                           const PipelineConfig& config,
                                           CheckpointLog* checkpoint) {
    parallel_for(records.size(), config.concurrency, [&](std::size_t i) {
        EvolRecord& rec = records[i];
        if (rec.status != EvolStatus::InstructionOk) return;

        const std::string key = checkpoint_key("resp", rec.id);
        if (checkpoint) {
            if (auto payload = checkpoint->get(key)) {
                rec = evol_from_json(*payload);
                return;
            }
        }

        CompletionRequest request;
        request.messages = {{Role::User, rec.instruction}};
        request.model = config.model;
        request.temperature = config.temperature_response;
        request.max_tokens = config.max_completion_tokens;
        request.tag = "resp/" + rec.id;

        CompletionResult result = gateway.complete(request, config.retry);
        rec.provenance.attempts_response = result.attempts;
        if (result.ok()) {
            rec.response = result.content;
            rec.status = EvolStatus::Complete;
        } else {
            rec.status = EvolStatus::FailedResponse;
            rec.failure_cause = std::string("response-") + to_string(result.status);
        }
        if (checkpoint) checkpoint->put(key, evol_to_json(rec));
    });

    std::sort(records.begin(), records.end(),
              [](const EvolRecord& a, const EvolRecord& b) { return a.id < b.id; });
    return records;
}

RunManifest make_manifest(const std::vector<EvolRecord>& records,
                          const std::string& config_fingerprint, std::uint64_t rng_seed) {
    RunManifest m;
    m.config_fingerprint = config_fingerprint;
    m.rng_seed = rng_seed;
    m.attempted = records.size();
    for (const auto& r : records) {
        ++m.by_status[to_string(r.status)];
        ++m.by_language[r.language];
        if (!r.seed_task.empty()) ++m.by_task[r.seed_task];
        if (!r.failure_cause.empty()) ++m.drop_causes[r.failure_cause];
    }
    return m;
}

std::string manifest_to_json(const RunManifest& m) {
    json doc;
    doc["config_fingerprint"] = m.config_fingerprint;
    doc["rng_seed"] = m.rng_seed;
    doc["attempted"] = m.attempted;
    doc["by_status"] = m.by_status;
    doc["by_language"] = m.by_language;
    doc["by_task"] = m.by_task;
    doc["drop_causes"] = m.drop_causes;
    return doc.dump();
}

std::string render_manifest_table(const RunManifest& m) {
    std::ostringstream out;
    out << "run " << m.config_fingerprint << " (rng_seed " << m.rng_seed << ")\n";
    out << "attempted: " << m.attempted << "\n";
    for (const auto& [status, n] : m.by_status)
        out << "  " << status << ": " << n << "\n";
    if (!m.drop_causes.empty()) {
        out << "drop causes:\n";
        for (const auto& [cause, n] : m.drop_causes)
            out << "  " << cause << ": " << n << "\n";
    }
    return out.str();
}

}  // namespace evolforge
