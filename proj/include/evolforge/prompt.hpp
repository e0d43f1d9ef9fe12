#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evolforge/chat.hpp"
#include "evolforge/rng.hpp"
#include "evolforge/seeds.hpp"
#include "evolforge/taxonomy.hpp"

namespace evolforge {

/// code -> display name table; templates receive names ("French"),
/// not codes ("fr"). Unknown codes fall back to the code itself.
class LanguageTable {
public:
    LanguageTable() = default;
    static LanguageTable load(const std::string& path);
    static LanguageTable from_json_text(const std::string& json_text);

    std::string name_for(const std::string& code) const;
    const std::vector<std::string>& codes() const { return codes_; }
    /// Codes with a conventional Latin romanization.
    const std::vector<std::string>& romanization_codes() const {
        return romanization_codes_;
    }

private:
    std::map<std::string, std::string> names_;
    std::vector<std::string> codes_;
    std::vector<std::string> romanization_codes_;
};

struct LanguageAssignment {
    std::string language_1;
    std::optional<std::string> language_2;
    std::optional<std::string> transliteration_language;
};

/// Language choices for one (seed, condition) pair. language_2 is sampled
/// uniformly from pool \ {seed.language} when the condition declares it;
/// the transliteration language prefers the seed's own language when it is
/// romanization-capable, otherwise a uniform draw from translit_pool.
LanguageAssignment assign_languages(const SeedRecord& seed,
                                    const EvolCondition& condition,
                                    const std::vector<std::string>& pool,
                                    const std::vector<std::string>& translit_pool,
                                    SplitMix64& rng);

struct PromptText {
    std::string text;
    std::string origin_condition;
    std::map<std::string, std::string> resolved_placeholders;
};

PromptText render_evol_prompt(const EvolCondition& condition,
                              const SeedRecord& seed,
                              const LanguageAssignment& langs,
                              const LanguageTable& table);

/// The {property} pool for the generic-rewriting variation.
inline const std::vector<std::string>& property_pool() {
    static const std::vector<std::string> pool = {"tone", "length", "formality",
                                                  "structure", "vocabulary"};
    return pool;
}

PromptText render_followup_prompt(const std::string& head_instruction,
                                  const DialogueVariation& variation,
                                  const std::string& language_name,
                                  SplitMix64& rng);

/// Full alternating history as a role-tagged message list; the
/// conversation must end with a user turn.
MessageSequence render_response_request(const Conversation& conversation);

}  // namespace evolforge
