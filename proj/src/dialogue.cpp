#include "evolforge/dialogue.hpp"

#include <algorithm>
#include <map>

#include "evolforge/errors.hpp"
#include "evolforge/rng.hpp"
#include "evolforge/text.hpp"

namespace evolforge {

using nlohmann::json;

ConversationPlan plan_conversation(const EvolRecord& record,
                                   const std::vector<DialogueVariation>& variations,
                                   SplitMix64& rng, std::size_t max_followups) {
    if (record.status != EvolStatus::Complete)
        throw DataError("dialogue/record-not-complete",
                        "record " + record.id + " has status " + to_string(record.status));
    if (max_followups < 1 || max_followups > 3)
        throw ConfigError("dialogue/bad-max-followups",
                          "max_followups must be in [1,3] to keep user turns <= 4");
    if (variations.empty())
        throw ConfigError("dialogue/no-variations", "no dialogue variations to sample");

    ConversationPlan plan;
    plan.record_id = record.id;
    plan.depth = 1 + static_cast<std::size_t>(rng.next_below(max_followups));
    const std::size_t take = std::min(plan.depth, variations.size());
    for (std::size_t idx : sample_indices(variations.size(), take, rng))
        plan.variation_ids.push_back(variations[idx].id);
    plan.depth = plan.variation_ids.size();
    return plan;
}

Conversation extend_conversation(const ConversationPlan& plan, const EvolRecord& record,
                                 Gateway& gateway, const TaxonomyRegistry& registry,
                                 const PipelineConfig& config,
                                 const LanguageTable& languages) {
    if (plan.record_id != record.id)
        throw DataError("dialogue/plan-mismatch",
                        "plan is for " + plan.record_id + ", got record " + record.id);

    Conversation conv;
    conv.id = "mt/" + record.id;
    conv.root = record.id;
    conv.language = record.language;
    conv.turns = {{Role::User, record.instruction, ""},
                  {Role::Assistant, record.response, ""}};
    conv.status = ConversationStatus::Complete;

    const std::string language_name = languages.name_for(conv.language);
    for (std::size_t k = 0; k < plan.variation_ids.size(); ++k) {
        const std::string& var_id = plan.variation_ids[k];
        const DialogueVariation* variation = registry.variation_by_id(var_id);
        if (variation == nullptr)
            throw DataError("dialogue/unknown-variation",
                            "plan references unknown variation " + var_id);

        SplitMix64 rng = derive_rng(config.rng_seed, "prop/" + record.id + "/" + var_id);
        PromptText prompt =
            render_followup_prompt(record.instruction, *variation, language_name, rng);

        CompletionRequest followup_request;
        followup_request.messages = {{Role::User, prompt.text}};
        followup_request.model = config.model;
        followup_request.temperature = config.temperature_instruction;
        followup_request.max_tokens = config.max_completion_tokens;
        followup_request.tag = "followup/" + record.id + "/" + std::to_string(k);

        CompletionResult generated = gateway.complete(followup_request, config.retry);
        if (!generated.ok()) {
            conv.status = ConversationStatus::TruncatedFailure;
            break;
        }
        FollowUpInstruction followup;
        try {
            followup = parse_followup_json(generated.content);
        } catch (const Error&) {
            conv.status = ConversationStatus::TruncatedFailure;
            break;
        }
        conv.turns.push_back({Role::User, followup.text, var_id});

        CompletionRequest response_request;
        response_request.messages = render_response_request(conv);
        response_request.model = config.model;
        response_request.temperature = config.temperature_response;
        response_request.max_tokens = config.max_completion_tokens;
        response_request.tag = "turn-resp/" + record.id + "/" + std::to_string(k);

        CompletionResult answered = gateway.complete(response_request, config.retry);
        if (!answered.ok()) {
            conv.turns.pop_back();  // never export a dangling user turn
            conv.status = ConversationStatus::TruncatedFailure;
            break;
        }
        conv.turns.push_back({Role::Assistant, answered.content, ""});
    }
    return conv;
}

std::vector<Conversation> build_conversations(const std::vector<EvolRecord>& records,
                                              const TaxonomyRegistry& registry,
                                              Gateway& gateway,
                                              const PipelineConfig& config,
                                              const LanguageTable& languages,
                                              CheckpointLog* checkpoint) {
    // General records all convert; collection records are balanced per
    // (task, language) when a subset size is configured.
    std::vector<const EvolRecord*> selected;
    std::map<std::string, std::vector<const EvolRecord*>> collection_buckets;
    for (const auto& rec : records) {
        if (rec.status != EvolStatus::Complete) continue;
        if (rec.seed_source == SeedSource::AyaDataset) {
            selected.push_back(&rec);
        } else {
            collection_buckets[rec.seed_task + "/" + rec.language].push_back(&rec);
        }
    }
    for (auto& [key, bucket] : collection_buckets) {
        std::sort(bucket.begin(), bucket.end(),
                  [](const EvolRecord* a, const EvolRecord* b) { return a->id < b->id; });
        if (config.conversations_per_task_language > 0) {
            SplitMix64 rng = derive_rng(config.rng_seed, "mtsubset/" + key);
            fisher_yates_shuffle(bucket, rng);
            if (bucket.size() > config.conversations_per_task_language)
                bucket.resize(config.conversations_per_task_language);
        }
        selected.insert(selected.end(), bucket.begin(), bucket.end());
    }
    std::sort(selected.begin(), selected.end(),
              [](const EvolRecord* a, const EvolRecord* b) { return a->id < b->id; });

    const auto& variations = dialogue_variations(registry);
    std::vector<Conversation> out(selected.size());
    parallel_for(selected.size(), config.concurrency, [&](std::size_t i) {
        const EvolRecord& rec = *selected[i];
        const std::string key = to_hex16(fnv1a64("conv/" + rec.id));
        if (checkpoint) {
            if (auto payload = checkpoint->get(key)) {
                out[i] = conversation_from_json(*payload);
                return;
            }
        }
        SplitMix64 rng = derive_rng(config.rng_seed, "plan/" + rec.id);
        ConversationPlan plan = plan_conversation(rec, variations, rng, config.max_followups);
        Conversation conv =
            extend_conversation(plan, rec, gateway, registry, config, languages);
        if (checkpoint) checkpoint->put(key, conversation_to_json(conv));
        out[i] = std::move(conv);
    });

    std::sort(out.begin(), out.end(),
              [](const Conversation& a, const Conversation& b) { return a.id < b.id; });
    return out;
}

json conversation_to_json(const Conversation& conv) {
    json obj;
    obj["id"] = conv.id;
    obj["root"] = conv.root;
    obj["language"] = conv.language;
    obj["status"] = to_string(conv.status);
    obj["turns"] = json::array();
    for (const auto& turn : conv.turns) {
        json t;
        t["role"] = to_string(turn.role);
        t["content"] = turn.content;
        if (!turn.follow_up_type.empty()) t["follow_up_type"] = turn.follow_up_type;
        obj["turns"].push_back(std::move(t));
    }
    return obj;
}

Conversation conversation_from_json(const json& obj) {
    Conversation conv;
    try {
        conv.id = obj.at("id").get<std::string>();
        conv.root = obj.value("root", "");
        conv.language = obj.at("language").get<std::string>();
        conv.status = conversation_status_from_string(obj.value("status", "complete"));
        for (const auto& t : obj.at("turns")) {
            Turn turn;
            turn.role = role_from_string(t.at("role").get<std::string>());
            turn.content = t.at("content").get<std::string>();
            turn.follow_up_type = t.value("follow_up_type", "");
            conv.turns.push_back(std::move(turn));
        }
    } catch (const json::exception& e) {
        throw DataError("dialogue/parse", std::string("bad conversation: ") + e.what());
    }
    return conv;
}

}  // namespace evolforge
