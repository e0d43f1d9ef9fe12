#pragma once

#include <array>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "evolforge/seeds.hpp"

namespace evolforge {

/// The placeholder grammar. Templates may not contain any of these tokens
/// undeclared, and rendering must resolve all of them.
inline constexpr std::array<std::string_view, 9> kPlaceholderTokens = {
    "<prompt>",          "<prompt_language>", "<translit_language>",
    "<language_1>",      "<language_2>",      "{instruction}",
    "{follow_up_type}",  "{language}",        "{property}",
};

/// Placeholders only task conditions may use.
inline constexpr std::array<std::string_view, 2> kTaskOnlyPlaceholders = {
    "<language_1>", "<language_2>"};

std::vector<std::string> find_placeholder_tokens(std::string_view text);
bool has_placeholder_token(std::string_view text);

/// One instruction-evol entry: a transformation prompt template plus
/// applicability (generic, or bound to a single task).
struct EvolCondition {
    std::string id;
    std::string name;
    std::string stage = "instruction-evol";
    bool generic = false;
    std::string task;  // set iff !generic
    std::string template_text;
    std::vector<std::string> placeholders;  // tokens, verbatim

    bool needs(std::string_view token) const {
        for (const auto& p : placeholders)
            if (p == token) return true;
        return false;
    }
};

enum class DialogueCategory { FollowUp, Refinement, Expansion, Recollection };

const char* to_string(DialogueCategory c);
DialogueCategory dialogue_category_from_string(const std::string& s);

/// One multi-turn variation: a directive fragment spliced into the fixed
/// follow-up scaffold.
struct DialogueVariation {
    std::string id;
    std::string name;
    DialogueCategory category = DialogueCategory::FollowUp;
    std::string directive;
    std::vector<std::string> placeholders;
};

class TaxonomyRegistry {
public:
    const std::vector<EvolCondition>& instruction_conditions() const {
        return instruction_conditions_;
    }
    /// All variations, in stable id order.
    const std::vector<DialogueVariation>& dialogue_variations() const {
        return dialogue_variations_;
    }
    const std::set<std::string>& task_names() const { return task_names_; }

    std::vector<const EvolCondition*> generic_conditions() const;
    std::vector<const EvolCondition*> task_conditions(const std::string& task) const;
    const DialogueVariation* variation_by_id(const std::string& id) const;

    /// Validates every registry invariant; throws TaxonomyError on violation.
    static TaxonomyRegistry build(std::vector<EvolCondition> conditions,
                                  std::vector<DialogueVariation> variations);

private:
    std::vector<EvolCondition> instruction_conditions_;
    std::vector<DialogueVariation> dialogue_variations_;
    std::set<std::string> task_names_;
};

/// Load and validate a taxonomy document (JSON with `instruction_evols`
/// and `dialogue_evols` arrays).
TaxonomyRegistry load_taxonomy(const std::string& path);
TaxonomyRegistry parse_taxonomy(const std::string& json_text);

/// Inverse of parse_taxonomy: load_taxonomy(serialize(r)) == r field-for-field.
std::string serialize_taxonomy(const TaxonomyRegistry& registry);

/// The condition set a seed is evolved with: the generic conditions for
/// general seeds, the task's nine for collection seeds.
std::vector<const EvolCondition*> conditions_for(const SeedRecord& seed,
                                                 const TaxonomyRegistry& registry);

/// All variations in stable id order (registry accessor, kept as a free
/// function to match the rest of the operation surface).
const std::vector<DialogueVariation>& dialogue_variations(const TaxonomyRegistry& registry);

}  // namespace evolforge
