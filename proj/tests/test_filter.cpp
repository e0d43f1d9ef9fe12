#include <doctest.h>

#include <map>

#include "evolforge/filter.hpp"
#include "evolforge/rng.hpp"
#include "evolforge/text.hpp"
#include "helpers.hpp"

using namespace evolforge;
using namespace testutil;

namespace {

// Quadratic reference counter: every n-gram compared against every other.
// Stays independent of the map-based implementation path it checks.
struct BruteForceResult {
    bool flagged = false;
    std::size_t count = 0;
    std::vector<std::string> worst;
};

BruteForceResult brute_force_ngram(const std::string& text, std::size_t n,
                                   std::size_t threshold) {
    BruteForceResult result;
    std::vector<std::string> tokens = tokenize_lower(text);
    if (tokens.size() < n) return result;

    const std::size_t grams = tokens.size() - n + 1;
    auto gram_at = [&](std::size_t i) {
        std::vector<std::string> g(tokens.begin() + i, tokens.begin() + i + n);
        return g;
    };
    for (std::size_t i = 0; i < grams; ++i) {
        std::vector<std::string> gi = gram_at(i);
        std::size_t count = 0;
        for (std::size_t j = 0; j < grams; ++j)
            if (gi == gram_at(j)) ++count;
        if (count > result.count || (count == result.count && gi < result.worst)) {
            result.count = count;
            result.worst = gi;
        }
    }
    result.flagged = result.count >= threshold;
    return result;
}

std::string random_text(SplitMix64& rng, std::size_t length, std::size_t alphabet) {
    std::string out;
    for (std::size_t i = 0; i < length; ++i) {
        if (i) out.push_back(' ');
        out += "w" + std::to_string(rng.next_below(alphabet));
    }
    return out;
}

EvolRecord record_with(const std::string& id, const std::string& instruction,
                       const std::string& response) {
    EvolRecord r;
    r.id = id;
    r.seed_id = id;
    r.evol_id = "generic-concise";
    r.language = "en";
    r.instruction = instruction;
    r.response = response;
    r.status = EvolStatus::Complete;
    return r;
}

}  // namespace

TEST_CASE("ngram flag: repeated trigram is caught with the right worst gram") {
    auto report = ngram_repetition_flag("the cat sat the cat sat the cat sat", 3, 3);
    CHECK(report.flagged);
    CHECK(report.count == 3);
    CHECK(report.worst_ngram == std::vector<std::string>{"the", "cat", "sat"});
}

TEST_CASE("ngram flag: degenerate and clean inputs stay unflagged") {
    auto single = ngram_repetition_flag("word", 2, 2);
    CHECK(!single.flagged);
    CHECK(single.count == 0);

    auto clean = ngram_repetition_flag("a b c d e", 2, 2);
    CHECK(!clean.flagged);
    CHECK(clean.count == 1);

    auto empty = ngram_repetition_flag("", 4, 3);
    CHECK(!empty.flagged);
}

TEST_CASE("ngram flag: lowercasing folds case before counting") {
    auto report = ngram_repetition_flag("The Cat THE CAT the cat", 2, 3);
    CHECK(report.flagged);
    CHECK(report.count == 3);
    CHECK(report.worst_ngram == std::vector<std::string>{"the", "cat"});
}

TEST_CASE("ngram flag: preconditions") {
    CHECK_THROWS_AS(ngram_repetition_flag("a b", 0, 2), ConfigError);
    CHECK_THROWS_AS(ngram_repetition_flag("a b", 2, 1), ConfigError);
}

TEST_CASE("ngram flag agrees with the quadratic brute force on random inputs") {
    SplitMix64 rng(20240601);
    int checked = 0;
    for (int round = 0; round < 1200; ++round) {
        const std::size_t length = rng.next_below(201);
        const std::size_t alphabet = 2 + rng.next_below(49);
        const std::size_t n = 2 + rng.next_below(3);
        const std::size_t threshold = 2 + rng.next_below(2);
        std::string text = random_text(rng, length, alphabet);

        auto fast = ngram_repetition_flag(text, n, threshold);
        auto slow = brute_force_ngram(text, n, threshold);
        REQUIRE_MESSAGE(fast.flagged == slow.flagged, text);
        REQUIRE(fast.count == slow.count);
        if (slow.count > 0) REQUIRE(fast.worst_ngram == slow.worst);
        ++checked;
    }
    CHECK(checked >= 1000);
}

TEST_CASE("filter_records: repetition drop carries a machine-readable reason") {
    std::string repeated;
    for (int i = 0; i < 5; ++i) repeated += "lorem ipsum dolor sit ";
    std::vector<EvolRecord> records = {
        record_with("clean", "a perfectly normal question", "a perfectly normal answer"),
        record_with("spam", "fine instruction", repeated),
    };
    FilterPolicy policy;  // n=4, threshold=3
    auto result = filter_records(records, policy);
    REQUIRE(result.kept.size() == 1);
    REQUIRE(result.dropped.size() == 1);
    CHECK(result.kept[0].id == "clean");
    CHECK(result.dropped[0].second.reason == "repetition");
    CHECK(result.dropped[0].first.status == EvolStatus::Filtered);

    // kept records are byte-identical to the inputs
    CHECK(evol_to_json(result.kept[0]).dump() == evol_to_json(records[0]).dump());
}

TEST_CASE("filter_records: length bounds") {
    FilterPolicy policy;
    policy.min_tokens = 2;
    policy.max_tokens = 5;
    std::vector<EvolRecord> records = {
        record_with("short", "one", "two words"),
        record_with("long", "this instruction has too many words entirely", "ok fine"),
        record_with("good", "two words", "three words here"),
    };
    auto result = filter_records(records, policy);
    REQUIRE(result.kept.size() == 1);
    CHECK(result.kept[0].id == "good");
    std::map<std::string, std::string> reasons;
    for (const auto& [rec, reason] : result.dropped) reasons[rec.id] = reason.reason;
    CHECK(reasons["short"] == "too-short");
    CHECK(reasons["long"] == "too-long");
}

TEST_CASE("filter_records: empty input -> empty output") {
    auto result = filter_records(std::vector<EvolRecord>{}, FilterPolicy{});
    CHECK(result.kept.empty());
    CHECK(result.dropped.empty());
}

TEST_CASE("filter_records on conversations scans every turn") {
    std::string repeated;
    for (int i = 0; i < 4; ++i) repeated += "again and again and ";

    Conversation clean;
    clean.id = "mt/ok";
    clean.language = "en";
    clean.turns = {{Role::User, "hi there", ""}, {Role::Assistant, "hello back", ""}};

    Conversation spammy = clean;
    spammy.id = "mt/spam";
    spammy.turns.push_back({Role::User, "more please", "challenging"});
    spammy.turns.push_back({Role::Assistant, repeated, ""});

    auto result = filter_records(std::vector<Conversation>{clean, spammy}, FilterPolicy{});
    REQUIRE(result.kept.size() == 1);
    CHECK(result.kept[0].id == "mt/ok");
    REQUIRE(result.dropped.size() == 1);
    CHECK(result.dropped[0].second.reason == "repetition");
}

TEST_CASE("parallel and serial corpus filtering agree") {
    SplitMix64 rng(77);
    std::vector<EvolRecord> records;
    for (int i = 0; i < 500; ++i) {
        std::string instruction = random_text(rng, 5 + rng.next_below(60), 4);
        std::string response = random_text(rng, 5 + rng.next_below(60), 4);
        records.push_back(record_with("r" + std::to_string(i), instruction, response));
    }
    auto parallel = filter_records(records, FilterPolicy{}, true);
    auto serial = filter_records(records, FilterPolicy{}, false);
    REQUIRE(parallel.kept.size() == serial.kept.size());
    REQUIRE(parallel.dropped.size() == serial.dropped.size());
    for (std::size_t i = 0; i < parallel.kept.size(); ++i)
        CHECK(parallel.kept[i].id == serial.kept[i].id);
    for (std::size_t i = 0; i < parallel.dropped.size(); ++i) {
        CHECK(parallel.dropped[i].first.id == serial.dropped[i].first.id);
        CHECK(parallel.dropped[i].second.reason == serial.dropped[i].second.reason);
    }
}
