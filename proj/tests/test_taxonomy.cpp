#include <doctest.h>

#include <map>
#include <set>

#include <json.hpp>

#include "evolforge/errors.hpp"
#include "evolforge/taxonomy.hpp"
#include "evolforge/text.hpp"

using namespace evolforge;
using nlohmann::json;

namespace {

const TaxonomyRegistry& default_registry() {
    static TaxonomyRegistry reg =
        load_taxonomy(std::string(EVOLFORGE_DATA_DIR) + "/taxonomy.json");
    return reg;
}

std::string default_taxonomy_text() {
    return serialize_taxonomy(default_registry());
}

}  // namespace

TEST_CASE("default registry has the full cardinality") {
    const auto& reg = default_registry();
    std::size_t generic = 0, task_conditions = 0;
    for (const auto& c : reg.instruction_conditions())
        (c.generic ? generic : task_conditions) += 1;
    CHECK(generic == 6);
    CHECK(task_conditions == 153);
    CHECK(reg.task_names().size() == 17);
    CHECK(reg.dialogue_variations().size() == 21);
    for (const auto& task : reg.task_names())
        CHECK(reg.task_conditions(task).size() == 9);
}

TEST_CASE("empty file is a parse error") {
    CHECK_THROWS_AS(parse_taxonomy(""), TaxonomyError);
    try {
        parse_taxonomy("");
    } catch (const TaxonomyError& e) {
        CHECK(e.kind() == "taxonomy/parse");
    }
}

TEST_CASE("task with eight conditions is a cardinality error naming the task") {
    json doc = json::parse(default_taxonomy_text());
    auto& evols = doc["instruction_evols"];
    for (auto it = evols.begin(); it != evols.end(); ++it) {
        if ((*it)["applicability"] == "task:soda") {
            evols.erase(it);
            break;
        }
    }
    try {
        parse_taxonomy(doc.dump());
        FAIL("expected cardinality error");
    } catch (const TaxonomyError& e) {
        CHECK(e.kind() == "taxonomy/task-cardinality");
        CHECK(contains(e.what(), "soda"));
        CHECK(contains(e.what(), "8"));
    }
}

TEST_CASE("duplicate id is rejected") {
    json doc = json::parse(default_taxonomy_text());
    doc["instruction_evols"].push_back(doc["instruction_evols"][0]);
    try {
        parse_taxonomy(doc.dump());
        FAIL("expected duplicate-id error");
    } catch (const TaxonomyError& e) {
        CHECK(e.kind() == "taxonomy/duplicate-id");
    }
}

TEST_CASE("declared-but-absent placeholder is rejected") {
    json doc = json::parse(default_taxonomy_text());
    doc["instruction_evols"][0]["placeholders"].push_back("<language_2>");
    try {
        parse_taxonomy(doc.dump());
        FAIL("expected placeholder mismatch");
    } catch (const TaxonomyError& e) {
        CHECK(e.kind() == "taxonomy/placeholder-mismatch");
    }
}

TEST_CASE("undeclared placeholder in template is rejected") {
    json doc = json::parse(default_taxonomy_text());
    std::string tpl = doc["instruction_evols"][0]["template"].get<std::string>();
    doc["instruction_evols"][0]["template"] = tpl + " <language_2>";
    CHECK_THROWS_AS(parse_taxonomy(doc.dump()), TaxonomyError);
}

TEST_CASE("generic conditions may not use task-only placeholders") {
    json doc = json::parse(default_taxonomy_text());
    json cond;
    cond["id"] = "generic-bogus";
    cond["name"] = "Bogus";
    cond["stage"] = "instruction-evol";
    cond["applicability"] = "generic";
    cond["template"] = "Rewrite <prompt> in <language_2>.";
    cond["placeholders"] = {"<prompt>", "<language_2>"};
    doc["instruction_evols"].push_back(cond);
    CHECK_THROWS_AS(parse_taxonomy(doc.dump()), TaxonomyError);
}

TEST_CASE("conditions_for: general seeds get the six generic conditions in order") {
    SeedRecord seed;
    seed.id = "s1";
    seed.source = SeedSource::AyaDataset;
    seed.language = "fr";
    seed.instruction = "Bonjour";

    auto conds = conditions_for(seed, default_registry());
    REQUIRE(conds.size() == 6);
    std::vector<std::string> names;
    for (auto* c : conds) names.push_back(c->name);
    CHECK(names == std::vector<std::string>{"Transliteration", "Dialect", "Concise",
                                            "Deepen", "Concretize", "Increase Reasoning"});
}

TEST_CASE("conditions_for: collection seeds get their task's nine") {
    SeedRecord seed;
    seed.id = "s2";
    seed.source = SeedSource::AyaCollection;
    seed.language = "de";
    seed.task = "joke-explain";
    seed.instruction = "Explain this joke";

    auto conds = conditions_for(seed, default_registry());
    CHECK(conds.size() == 9);
    for (auto* c : conds) CHECK(c->task == "joke-explain");
}

TEST_CASE("conditions_for: unknown task is an unsupported-task error") {
    SeedRecord seed;
    seed.id = "s3";
    seed.source = SeedSource::AyaCollection;
    seed.language = "de";
    seed.task = "unknown-task";
    seed.instruction = "x";
    try {
        conditions_for(seed, default_registry());
        FAIL("expected unsupported-task");
    } catch (const TaxonomyError& e) {
        CHECK(e.kind() == "taxonomy/unsupported-task");
        CHECK(contains(e.what(), "unknown-task"));
    }
}

TEST_CASE("dialogue variations: stable id order and documented entries") {
    const auto& vars = dialogue_variations(default_registry());
    REQUIRE(vars.size() == 21);
    for (std::size_t i = 1; i < vars.size(); ++i) CHECK(vars[i - 1].id < vars[i].id);

    const DialogueVariation* rewriting = default_registry().variation_by_id("generic-rewriting");
    REQUIRE(rewriting != nullptr);
    CHECK(contains(rewriting->directive, "{property}"));

    const DialogueVariation* challenging = default_registry().variation_by_id("challenging");
    REQUIRE(challenging != nullptr);
    CHECK(challenging->category == DialogueCategory::FollowUp);
    CHECK(contains(challenging->directive, "challenging in terms of difficulty"));

    std::map<DialogueCategory, int> per_category;
    for (const auto& v : vars) ++per_category[v.category];
    CHECK(per_category.size() == 4);
}

TEST_CASE("round-trip: serialize then load is field-for-field identical") {
    const auto& reg = default_registry();
    TaxonomyRegistry again = parse_taxonomy(serialize_taxonomy(reg));
    REQUIRE(again.instruction_conditions().size() == reg.instruction_conditions().size());
    for (std::size_t i = 0; i < reg.instruction_conditions().size(); ++i) {
        const auto& a = reg.instruction_conditions()[i];
        const auto& b = again.instruction_conditions()[i];
        CHECK(a.id == b.id);
        CHECK(a.name == b.name);
        CHECK(a.generic == b.generic);
        CHECK(a.task == b.task);
        CHECK(a.template_text == b.template_text);
        CHECK(a.placeholders == b.placeholders);
    }
    REQUIRE(again.dialogue_variations().size() == reg.dialogue_variations().size());
    for (std::size_t i = 0; i < reg.dialogue_variations().size(); ++i) {
        const auto& a = reg.dialogue_variations()[i];
        const auto& b = again.dialogue_variations()[i];
        CHECK(a.id == b.id);
        CHECK(a.category == b.category);
        CHECK(a.directive == b.directive);
    }
}

TEST_CASE("every template resolves cleanly with a dummy covering map") {
    for (const auto& c : default_registry().instruction_conditions()) {
        std::string text = c.template_text;
        for (const auto& token : c.placeholders) {
            std::size_t pos;
            while ((pos = text.find(token)) != std::string::npos)
                text.replace(pos, token.size(), "X");
        }
        CHECK_MESSAGE(!has_placeholder_token(text), c.id);
    }
}

TEST_CASE("partition: generic/task buckets cover each condition exactly once") {
    const auto& reg = default_registry();
    std::size_t generic = reg.generic_conditions().size();
    std::size_t by_task = 0;
    for (const auto& task : reg.task_names()) by_task += reg.task_conditions(task).size();
    CHECK(generic + by_task == reg.instruction_conditions().size());

    std::set<std::string> seen;
    for (auto* c : reg.generic_conditions()) seen.insert(c->id);
    for (const auto& task : reg.task_names())
        for (auto* c : reg.task_conditions(task)) CHECK(seen.insert(c->id).second);
    CHECK(seen.size() == reg.instruction_conditions().size());
}
