#pragma once

#include <string>
#include <vector>

#include "evolforge/chat.hpp"
#include "evolforge/config.hpp"
#include "evolforge/evolve.hpp"
#include "evolforge/gateway.hpp"
#include "evolforge/prompt.hpp"
#include "evolforge/taxonomy.hpp"

namespace evolforge {

/// Growth plan for one conversation: how many follow-up user turns and
/// which variation shapes each of them. 1 + depth user turns <= 4.
struct ConversationPlan {
    std::string record_id;
    std::size_t depth = 1;
    std::vector<std::string> variation_ids;  // length == depth, no repeats
};

ConversationPlan plan_conversation(const EvolRecord& record,
                                   const std::vector<DialogueVariation>& variations,
                                   SplitMix64& rng, std::size_t max_followups);

/// Grow one conversation: root turns come from the record, then per planned
/// variation a follow-up user turn and an assistant turn over the full
/// history. A terminal failure truncates growth; the dangling user turn, if
/// any, is removed so every conversation stays response-terminated.
Conversation extend_conversation(const ConversationPlan& plan, const EvolRecord& record,
                                 Gateway& gateway, const TaxonomyRegistry& registry,
                                 const PipelineConfig& config,
                                 const LanguageTable& languages);

/// Select per config (all general records, seeded balanced subset per
/// (task, language) for collection records), then plan + extend each.
/// Deterministic ordering by conversation id.
std::vector<Conversation> build_conversations(const std::vector<EvolRecord>& records,
                                              const TaxonomyRegistry& registry,
                                              Gateway& gateway,
                                              const PipelineConfig& config,
                                              const LanguageTable& languages,
                                              CheckpointLog* checkpoint = nullptr);

nlohmann::json conversation_to_json(const Conversation& conversation);
Conversation conversation_from_json(const nlohmann::json& obj);

}  // namespace evolforge
