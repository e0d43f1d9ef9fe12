#include <doctest.h>

#include <set>

#include "evolforge/errors.hpp"
#include "evolforge/prompt.hpp"
#include "evolforge/text.hpp"

using namespace evolforge;

namespace {

const TaxonomyRegistry& registry() {
    static TaxonomyRegistry reg =
        load_taxonomy(std::string(EVOLFORGE_DATA_DIR) + "/taxonomy.json");
    return reg;
}

const LanguageTable& languages() {
    static LanguageTable table =
        LanguageTable::load(std::string(EVOLFORGE_DATA_DIR) + "/languages.json");
    return table;
}

SeedRecord seed_fr() {
    SeedRecord s;
    s.id = "s1";
    s.source = SeedSource::AyaDataset;
    s.language = "fr";
    s.instruction = "Quelle est la plus longue piece de Broadway ?";
    s.response = "Le Fantome de l'Opera.";
    return s;
}

const EvolCondition& condition(const std::string& id) {
    for (const auto& c : registry().instruction_conditions())
        if (c.id == id) return c;
    throw std::runtime_error("no such condition: " + id);
}

}  // namespace

TEST_CASE("assign_languages: partner language excludes the seed language") {
    SeedRecord seed = seed_fr();
    seed.language = "de";
    const EvolCondition& cross = condition("abstract-summarization-multiple-languages");
    for (std::uint64_t i = 0; i < 50; ++i) {
        SplitMix64 rng(i);
        auto langs = assign_languages(seed, cross, {"de", "fr", "es"}, {"hi"}, rng);
        CHECK(langs.language_1 == "de");
        REQUIRE(langs.language_2.has_value());
        CHECK(*langs.language_2 != "de");
        CHECK((*langs.language_2 == "fr" || *langs.language_2 == "es"));
    }
}

TEST_CASE("assign_languages: no partner available is an error") {
    SeedRecord seed = seed_fr();
    seed.language = "de";
    const EvolCondition& cross = condition("abstract-summarization-multiple-languages");
    SplitMix64 rng(1);
    try {
        assign_languages(seed, cross, {"de"}, {"hi"}, rng);
        FAIL("expected no-partner error");
    } catch (const RenderError& e) {
        CHECK(e.kind() == "prompt/no-partner");
    }
}

TEST_CASE("assign_languages: conditions without language_2 leave it unset") {
    SeedRecord seed = seed_fr();
    const EvolCondition& concise = condition("generic-concise");
    SplitMix64 rng(1);
    auto langs = assign_languages(seed, concise, {"de", "fr"}, {"hi"}, rng);
    CHECK(!langs.language_2.has_value());
    CHECK(!langs.transliteration_language.has_value());
}

TEST_CASE("assign_languages: transliteration prefers the seed's own language") {
    SeedRecord seed = seed_fr();
    seed.language = "hi";
    const EvolCondition& translit = condition("generic-transliteration");
    SplitMix64 rng(3);
    auto langs = assign_languages(seed, translit, {"hi", "fr"}, {"hi", "ar", "ja"}, rng);
    REQUIRE(langs.transliteration_language.has_value());
    CHECK(*langs.transliteration_language == "hi");

    seed.language = "fr";  // not romanization-capable: sampled from the list
    SplitMix64 rng2(3);
    auto langs2 = assign_languages(seed, translit, {"hi", "fr"}, {"hi", "ar", "ja"}, rng2);
    REQUIRE(langs2.transliteration_language.has_value());
    std::set<std::string> pool{"hi", "ar", "ja"};
    CHECK(pool.count(*langs2.transliteration_language) == 1);
}

TEST_CASE("render_evol_prompt: concise prompt asks for concision in the display language") {
    SeedRecord seed = seed_fr();
    const EvolCondition& concise = condition("generic-concise");
    SplitMix64 rng(1);
    auto langs = assign_languages(seed, concise, {"fr", "de"}, {"hi"}, rng);
    PromptText prompt = render_evol_prompt(concise, seed, langs, languages());

    CHECK(contains(prompt.text, "respond concisely"));
    CHECK(contains(prompt.text, "French"));
    CHECK(contains(prompt.text, seed.instruction));  // verbatim embedding
    CHECK(!has_placeholder_token(prompt.text));
    CHECK(prompt.origin_condition == "generic-concise");
    CHECK(prompt.resolved_placeholders.at("<prompt>") == seed.instruction);
}

TEST_CASE("render_evol_prompt: increase-reasoning requests multi-step reasoning") {
    SeedRecord seed = seed_fr();
    const EvolCondition& reasoning = condition("generic-increase-reasoning");
    SplitMix64 rng(1);
    auto langs = assign_languages(seed, reasoning, {"fr"}, {"hi"}, rng);
    PromptText prompt = render_evol_prompt(reasoning, seed, langs, languages());
    CHECK(contains(prompt.text, "multi-step reasoning"));
}

TEST_CASE("render_evol_prompt: missing transliteration language is an error") {
    SeedRecord seed = seed_fr();
    const EvolCondition& translit = condition("generic-transliteration");
    LanguageAssignment langs;
    langs.language_1 = seed.language;  // transliteration_language left unset
    try {
        render_evol_prompt(translit, seed, langs, languages());
        FAIL("expected missing-placeholder error");
    } catch (const RenderError& e) {
        CHECK(e.kind() == "prompt/missing-placeholder");
    }
}

TEST_CASE("render_evol_prompt: every default condition renders closed") {
    SeedRecord seed = seed_fr();
    for (const auto& c : registry().instruction_conditions()) {
        SplitMix64 rng(11);
        auto langs = assign_languages(seed, c, {"fr", "de", "es"}, {"hi", "ar"}, rng);
        PromptText prompt = render_evol_prompt(c, seed, langs, languages());
        CHECK_MESSAGE(!has_placeholder_token(prompt.text), c.id);
        CHECK_MESSAGE(contains(prompt.text, seed.instruction), c.id);
    }
}

TEST_CASE("render_followup_prompt: directive, language, and contract in place") {
    const DialogueVariation* redirection = registry().variation_by_id("redirection");
    REQUIRE(redirection != nullptr);
    SplitMix64 rng(5);
    PromptText prompt =
        render_followup_prompt("Scrivi una poesia", *redirection, "Italian", rng);

    CHECK(contains(prompt.text, "abruptly change the type"));
    CHECK(contains(prompt.text, "<Italian>"));
    CHECK(contains(prompt.text, "INITIAL INSTRUCTION: \"Scrivi una poesia \""));
    CHECK(contains(prompt.text, "follow_up_user_prompt"));
    CHECK(!has_placeholder_token(prompt.text));
}

TEST_CASE("render_followup_prompt: {property} resolves from the fixed pool") {
    const DialogueVariation* rewriting = registry().variation_by_id("generic-rewriting");
    REQUIRE(rewriting != nullptr);
    std::set<std::string> seen;
    for (std::uint64_t i = 0; i < 64; ++i) {
        SplitMix64 rng(i);
        PromptText prompt = render_followup_prompt("Hello", *rewriting, "English", rng);
        const std::string& property = prompt.resolved_placeholders.at("{property}");
        bool in_pool = false;
        for (const auto& p : property_pool()) in_pool |= (p == property);
        CHECK(in_pool);
        CHECK(contains(prompt.text, "change in the " + property));
        seen.insert(property);
    }
    CHECK(seen.size() == property_pool().size());
}

TEST_CASE("render_followup_prompt: deterministic under the same rng state") {
    const DialogueVariation* rewriting = registry().variation_by_id("generic-rewriting");
    SplitMix64 a(17), b(17);
    PromptText p1 = render_followup_prompt("Hola", *rewriting, "Spanish", a);
    PromptText p2 = render_followup_prompt("Hola", *rewriting, "Spanish", b);
    CHECK(p1.text == p2.text);
}

TEST_CASE("render_followup_prompt: empty head instruction is rejected") {
    const DialogueVariation* challenging = registry().variation_by_id("challenging");
    SplitMix64 rng(1);
    CHECK_THROWS_AS(render_followup_prompt("  ", *challenging, "English", rng), RenderError);
}

TEST_CASE("render_response_request: full history in order, user-terminated only") {
    Conversation conv;
    conv.id = "c";
    conv.language = "fr";
    conv.turns = {{Role::User, "q1", ""}};
    auto one = render_response_request(conv);
    REQUIRE(one.size() == 1);
    CHECK(one[0].content == "q1");

    conv.turns.push_back({Role::Assistant, "a1", ""});
    conv.turns.push_back({Role::User, "q2", "challenging"});
    auto three = render_response_request(conv);
    REQUIRE(three.size() == 3);
    CHECK(three[0].content == "q1");
    CHECK(three[1].content == "a1");
    CHECK(three[2].content == "q2");

    conv.turns.push_back({Role::Assistant, "a2", ""});
    try {
        render_response_request(conv);
        FAIL("expected ordering error");
    } catch (const RenderError& e) {
        CHECK(e.kind() == "prompt/turn-order");
    }
}

TEST_CASE("placeholder-looking text inside the seed stays data") {
    SeedRecord seed = seed_fr();
    seed.instruction = "Explain what <prompt> and {language} mean in templating.";
    const EvolCondition& deepen = condition("generic-deepen");
    SplitMix64 rng(1);
    auto langs = assign_languages(seed, deepen, {"fr"}, {"hi"}, rng);
    PromptText prompt = render_evol_prompt(deepen, seed, langs, languages());
    // the tokens from the seed survive untouched
    CHECK(contains(prompt.text, "what <prompt> and {language} mean"));
}
