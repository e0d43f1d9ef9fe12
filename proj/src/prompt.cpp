#include "evolforge/prompt.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "evolforge/errors.hpp"
#include "evolforge/text.hpp"

namespace evolforge {

using nlohmann::json;

namespace {

// Fixed scaffold for growing the next user turn. {instruction} is always
// the root evolved instruction: the follow-up must stand on its own
// regardless of the assistant's intermediate answers.
const char* kFollowupScaffold =
    "Your goal is to create a follow-up instruction to an INITIAL INSTRUCTION "
    "given to an AI model. You must design the follow-up using these specifications:\n"
    "\n"
    "- The follow-up instruction must read like it's addressed to an AI model and "
    "not to another human. As such it should exclude requests impossible for an AI "
    "model to do (e.g. watch a movie or build a house).\n"
    "- The follow-up instruction should be fully relevant and make sense regardless "
    "of the AI model's previous answer to the INITIAL INSTRUCTION. As such, it "
    "should rely on the INITIAL INSTRUCTION only and not on a hypothetical, unknown "
    "response by the AI model.\n"
    "- The follow-up instruction should be in <{language}> and should be a natural "
    "continuation of the INITIAL INSTRUCTION.\n"
    "\n"
    "{follow_up_type}\n"
    "\n"
    "INITIAL INSTRUCTION: \"{instruction} \"\n"
    "\n"
    "Provide directly the follow-up instruction requested with no additional "
    "comment, text or explanation, strictly in a valid json object:\n"
    "\n"
    "{\n"
    "    \"follow_up_user_prompt\": \"...\"\n"
    "}\n";

// Single left-to-right pass: substituted values are never re-scanned, so
// placeholder-looking text inside a seed instruction stays data. Any grammar
// token in the template that has no value is an error, which keeps the
// rendered text free of unresolved placeholders by construction.
std::string render(const std::string& template_text,
                   const std::map<std::string, std::string>& values,
                   const std::string& origin) {
    std::string out;
    out.reserve(template_text.size());
    std::size_t i = 0;
    while (i < template_text.size()) {
        bool matched = false;
        for (auto token : kPlaceholderTokens) {
            if (template_text.compare(i, token.size(), token) != 0) continue;
            auto it = values.find(std::string(token));
            if (it == values.end())
                throw RenderError("prompt/missing-placeholder",
                                  origin + ": no value for placeholder " +
                                      std::string(token));
            out += it->second;
            i += token.size();
            matched = true;
            break;
        }
        if (!matched) out += template_text[i++];
    }
    return out;
}

}  // namespace

LanguageTable LanguageTable::from_json_text(const std::string& json_text) {
    json doc = json::parse(json_text, nullptr, false);
    if (doc.is_discarded() || !doc.contains("languages"))
        throw DataError("languages/parse", "language table is not a JSON object with \"languages\"");
    LanguageTable table;
    for (const auto& item : doc["languages"]) {
        std::string code = item.at("code").get<std::string>();
        table.names_[code] = item.at("name").get<std::string>();
        table.codes_.push_back(code);
        if (item.value("romanization", false)) table.romanization_codes_.push_back(code);
    }
    return table;
}

LanguageTable LanguageTable::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("languages/io", "cannot open language table: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::string LanguageTable::name_for(const std::string& code) const {
    auto it = names_.find(code);
    return it == names_.end() ? code : it->second;
}

LanguageAssignment assign_languages(const SeedRecord& seed,
                                    const EvolCondition& condition,
                                    const std::vector<std::string>& pool,
                                    const std::vector<std::string>& translit_pool,
                                    SplitMix64& rng) {
    if (pool.empty())
        throw RenderError("prompt/empty-pool", "language pool is empty");

    LanguageAssignment out;
    out.language_1 = seed.language;

    if (condition.needs("<language_2>")) {
        std::vector<std::string> partners;
        partners.reserve(pool.size());
        for (const auto& code : pool)
            if (code != seed.language) partners.push_back(code);
        if (partners.empty())
            throw RenderError("prompt/no-partner",
                              "no partner language available for " + seed.language);
        out.language_2 = partners[rng.next_below(partners.size())];
    }

    if (condition.needs("<translit_language>")) {
        if (translit_pool.empty())
            throw RenderError("prompt/no-transliteration-language",
                              "romanization-capable language list is empty");
        bool own = std::find(translit_pool.begin(), translit_pool.end(), seed.language) !=
                   translit_pool.end();
        out.transliteration_language =
            own ? seed.language : translit_pool[rng.next_below(translit_pool.size())];
    }

    return out;
}

PromptText render_evol_prompt(const EvolCondition& condition,
                              const SeedRecord& seed,
                              const LanguageAssignment& langs,
                              const LanguageTable& table) {
    std::map<std::string, std::string> values;
    values["<prompt>"] = seed.instruction;
    values["<prompt_language>"] = table.name_for(seed.language);
    values["<language_1>"] = table.name_for(langs.language_1);
    if (langs.language_2) values["<language_2>"] = table.name_for(*langs.language_2);
    if (langs.transliteration_language)
        values["<translit_language>"] = table.name_for(*langs.transliteration_language);

    PromptText out;
    out.origin_condition = condition.id;
    for (const auto& token : condition.placeholders) {
        auto it = values.find(token);
        if (it == values.end())
            throw RenderError("prompt/missing-placeholder",
                              condition.id + ": no value for placeholder " + token);
        out.resolved_placeholders[token] = it->second;
    }
    out.text = render(condition.template_text, out.resolved_placeholders, condition.id);
    return out;
}

PromptText render_followup_prompt(const std::string& head_instruction,
                                  const DialogueVariation& variation,
                                  const std::string& language_name,
                                  SplitMix64& rng) {
    if (trim(head_instruction).empty())
        throw RenderError("prompt/empty-instruction",
                          "follow-up prompt needs a non-empty head instruction");

    PromptText out;
    out.origin_condition = variation.id;

    std::string directive = variation.directive;
    if (std::find(variation.placeholders.begin(), variation.placeholders.end(),
                  "{property}") != variation.placeholders.end()) {
        const auto& pool = property_pool();
        std::string property = pool[rng.next_below(pool.size())];
        out.resolved_placeholders["{property}"] = property;
        directive = render(directive, {{"{property}", property}}, variation.id);
    }

    out.resolved_placeholders["{instruction}"] = head_instruction;
    out.resolved_placeholders["{follow_up_type}"] = directive;
    out.resolved_placeholders["{language}"] = language_name;

    out.text = render(kFollowupScaffold,
                      {{"{instruction}", head_instruction},
                       {"{follow_up_type}", directive},
                       {"{language}", language_name}},
                      variation.id);
    return out;
}

MessageSequence render_response_request(const Conversation& conversation) {
    if (conversation.turns.empty() || conversation.turns.back().role != Role::User)
        throw RenderError("prompt/turn-order",
                          "response request needs a conversation ending on a user turn");
    MessageSequence messages;
    messages.reserve(conversation.turns.size());
    for (const auto& turn : conversation.turns)
        messages.push_back({turn.role, turn.content});
    return messages;
}

}  // namespace evolforge
