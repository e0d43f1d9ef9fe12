#include "evolforge/taxonomy.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "evolforge/errors.hpp"
#include "evolforge/text.hpp"

namespace evolforge {

using nlohmann::json;

std::vector<std::string> find_placeholder_tokens(std::string_view text) {
    std::vector<std::string> found;
    for (auto token : kPlaceholderTokens) {
        if (text.find(token) != std::string_view::npos)
            found.emplace_back(token);
    }
    return found;
}

bool has_placeholder_token(std::string_view text) {
    for (auto token : kPlaceholderTokens)
        if (text.find(token) != std::string_view::npos) return true;
    return false;
}

const char* to_string(DialogueCategory c) {
    switch (c) {
        case DialogueCategory::FollowUp: return "Follow-up";
        case DialogueCategory::Refinement: return "Refinement";
        case DialogueCategory::Expansion: return "Expansion";
        case DialogueCategory::Recollection: return "Recollection";
    }
    return "Follow-up";
}

DialogueCategory dialogue_category_from_string(const std::string& s) {
    if (s == "Follow-up") return DialogueCategory::FollowUp;
    if (s == "Refinement") return DialogueCategory::Refinement;
    if (s == "Expansion") return DialogueCategory::Expansion;
    if (s == "Recollection") return DialogueCategory::Recollection;
    throw TaxonomyError("taxonomy/unknown-category", "unknown dialogue category: " + s);
}

namespace {

void check_placeholders(const std::string& id, const std::string& text,
                        const std::vector<std::string>& declared) {
    for (const auto& p : declared) {
        bool known = std::find(kPlaceholderTokens.begin(), kPlaceholderTokens.end(), p) !=
                     kPlaceholderTokens.end();
        if (!known)
            throw TaxonomyError("taxonomy/placeholder-mismatch",
                                id + ": unknown placeholder token " + p);
        if (text.find(p) == std::string::npos)
            throw TaxonomyError("taxonomy/placeholder-mismatch",
                                id + ": declared placeholder " + p + " absent from template");
    }
    for (auto token : kPlaceholderTokens) {
        if (text.find(token) == std::string_view::npos) continue;
        if (std::find(declared.begin(), declared.end(), token) == declared.end())
            throw TaxonomyError("taxonomy/placeholder-mismatch",
                                id + ": template uses undeclared placeholder " +
                                    std::string(token));
    }
}

}  // namespace

TaxonomyRegistry TaxonomyRegistry::build(std::vector<EvolCondition> conditions,
                                         std::vector<DialogueVariation> variations) {
    TaxonomyRegistry reg;

    std::set<std::string> ids;
    for (const auto& c : conditions) {
        if (c.id.empty())
            throw TaxonomyError("taxonomy/parse", "instruction condition with empty id");
        if (!ids.insert(c.id).second)
            throw TaxonomyError("taxonomy/duplicate-id", "duplicate id: " + c.id);
        check_placeholders(c.id, c.template_text, c.placeholders);
        if (c.generic) {
            for (auto token : kTaskOnlyPlaceholders)
                if (c.needs(token))
                    throw TaxonomyError(
                        "taxonomy/placeholder-mismatch",
                        c.id + ": generic condition uses task-only placeholder " +
                            std::string(token));
        } else if (c.task.empty()) {
            throw TaxonomyError("taxonomy/parse", c.id + ": task condition without a task");
        }
    }
    for (const auto& v : variations) {
        if (v.id.empty())
            throw TaxonomyError("taxonomy/parse", "dialogue variation with empty id");
        if (!ids.insert(v.id).second)
            throw TaxonomyError("taxonomy/duplicate-id", "duplicate id: " + v.id);
        check_placeholders(v.id, v.directive, v.placeholders);
    }

    std::map<std::string, std::size_t> per_task;
    for (const auto& c : conditions)
        if (!c.generic) ++per_task[c.task];
    for (const auto& [task, n] : per_task) {
        if (n != 9)
            throw TaxonomyError("taxonomy/task-cardinality",
                                "task \"" + task + "\" has " + std::to_string(n) +
                                    " conditions, expected 9");
        reg.task_names_.insert(task);
    }

    std::sort(variations.begin(), variations.end(),
              [](const DialogueVariation& a, const DialogueVariation& b) {
                  return a.id < b.id;
              });

    reg.instruction_conditions_ = std::move(conditions);
    reg.dialogue_variations_ = std::move(variations);
    return reg;
}

std::vector<const EvolCondition*> TaxonomyRegistry::generic_conditions() const {
    std::vector<const EvolCondition*> out;
    for (const auto& c : instruction_conditions_)
        if (c.generic) out.push_back(&c);
    return out;
}

std::vector<const EvolCondition*> TaxonomyRegistry::task_conditions(
    const std::string& task) const {
    std::vector<const EvolCondition*> out;
    for (const auto& c : instruction_conditions_)
        if (!c.generic && c.task == task) out.push_back(&c);
    return out;
}

const DialogueVariation* TaxonomyRegistry::variation_by_id(const std::string& id) const {
    for (const auto& v : dialogue_variations_)
        if (v.id == id) return &v;
    return nullptr;
}

TaxonomyRegistry parse_taxonomy(const std::string& json_text) {
    json doc = json::parse(json_text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
        throw TaxonomyError("taxonomy/parse", "taxonomy document is not a JSON object");
    if (!doc.contains("instruction_evols") || !doc.contains("dialogue_evols"))
        throw TaxonomyError("taxonomy/parse",
                            "missing instruction_evols or dialogue_evols array");

    std::vector<EvolCondition> conditions;
    for (const auto& item : doc["instruction_evols"]) {
        EvolCondition c;
        try {
            c.id = item.at("id").get<std::string>();
            c.name = item.at("name").get<std::string>();
            c.stage = item.value("stage", "instruction-evol");
            std::string app = item.at("applicability").get<std::string>();
            if (app == "generic") {
                c.generic = true;
            } else if (app.rfind("task:", 0) == 0) {
                c.generic = false;
                c.task = app.substr(5);
            } else {
                throw TaxonomyError("taxonomy/parse",
                                    c.id + ": bad applicability \"" + app + "\"");
            }
            c.template_text = item.at("template").get<std::string>();
            c.placeholders = item.value("placeholders", std::vector<std::string>{});
        } catch (const json::exception& e) {
            throw TaxonomyError("taxonomy/parse",
                                std::string("bad instruction condition: ") + e.what());
        }
        if (c.stage != "instruction-evol")
            throw TaxonomyError("taxonomy/parse", c.id + ": unknown stage " + c.stage);
        conditions.push_back(std::move(c));
    }

    std::vector<DialogueVariation> variations;
    for (const auto& item : doc["dialogue_evols"]) {
        DialogueVariation v;
        try {
            v.id = item.at("id").get<std::string>();
            v.name = item.at("name").get<std::string>();
            v.category = dialogue_category_from_string(item.at("category").get<std::string>());
            v.directive = item.at("directive").get<std::string>();
            v.placeholders = item.value("placeholders", std::vector<std::string>{});
        } catch (const json::exception& e) {
            throw TaxonomyError("taxonomy/parse",
                                std::string("bad dialogue variation: ") + e.what());
        }
        variations.push_back(std::move(v));
    }

    return TaxonomyRegistry::build(std::move(conditions), std::move(variations));
}

TaxonomyRegistry load_taxonomy(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw TaxonomyError("taxonomy/parse", "cannot open taxonomy file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_taxonomy(buf.str());
}

std::string serialize_taxonomy(const TaxonomyRegistry& registry) {
    json doc;
    doc["instruction_evols"] = json::array();
    for (const auto& c : registry.instruction_conditions()) {
        json item;
        item["id"] = c.id;
        item["name"] = c.name;
        item["stage"] = c.stage;
        item["applicability"] = c.generic ? "generic" : "task:" + c.task;
        item["template"] = c.template_text;
        item["placeholders"] = c.placeholders;
        doc["instruction_evols"].push_back(std::move(item));
    }
    doc["dialogue_evols"] = json::array();
    for (const auto& v : registry.dialogue_variations()) {
        json item;
        item["id"] = v.id;
        item["name"] = v.name;
        item["category"] = to_string(v.category);
        item["directive"] = v.directive;
        item["placeholders"] = v.placeholders;
        doc["dialogue_evols"].push_back(std::move(item));
    }
    return doc.dump(1);
}

std::vector<const EvolCondition*> conditions_for(const SeedRecord& seed,
                                                 const TaxonomyRegistry& registry) {
    if (seed.source == SeedSource::AyaDataset) return registry.generic_conditions();
    if (seed.task.empty())
        throw TaxonomyError("taxonomy/unsupported-task",
                            "collection seed " + seed.id + " has no task");
    if (!registry.task_names().count(seed.task))
        throw TaxonomyError("taxonomy/unsupported-task",
                            "unsupported task \"" + seed.task + "\" (seed " + seed.id + ")");
    return registry.task_conditions(seed.task);
}

const std::vector<DialogueVariation>& dialogue_variations(const TaxonomyRegistry& registry) {
    return registry.dialogue_variations();
}

}  // namespace evolforge
