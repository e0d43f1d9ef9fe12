#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "evolforge/dataset.hpp"
#include "evolforge/text.hpp"
#include "helpers.hpp"

using namespace evolforge;
using namespace testutil;

namespace {

struct SmallRun {
    SeedSet seeds;
    std::vector<EvolRecord> evols;
    std::vector<Conversation> conversations;
    std::vector<ManifestFragment> fragments;
};

SmallRun small_run(const std::string& fingerprint = "fp1") {
    SmallRun run;
    run.seeds.records = {general_seed("g1", "fr"), task_seed("t1", "de", "soda")};

    EvolRecord evol;
    evol.seed_id = "g1";
    evol.evol_id = "generic-concise";
    evol.id = "g1/generic-concise";
    evol.seed_source = SeedSource::AyaDataset;
    evol.language = "fr";
    evol.instruction = "evolved q";
    evol.response = "evolved a";
    evol.status = EvolStatus::Complete;
    run.evols.push_back(evol);

    EvolRecord failed = evol;
    failed.evol_id = "generic-deepen";
    failed.id = "g1/generic-deepen";
    failed.status = EvolStatus::FailedGeneration;
    run.evols.push_back(failed);

    Conversation conv;
    conv.id = "mt/g1/generic-concise";
    conv.root = "g1/generic-concise";
    conv.language = "fr";
    conv.turns = {{Role::User, "evolved q", ""},
                  {Role::Assistant, "evolved a", ""},
                  {Role::User, "follow up", "challenging"},
                  {Role::Assistant, "more", ""}};
    run.conversations.push_back(conv);

    run.fragments = {{"seed", fingerprint}, {"evoled", fingerprint},
                     {"multi-turn", fingerprint}};
    return run;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("assemble: stage counts, lineage fields, globally unique ids") {
    SmallRun run = small_run();
    AssembledDataset data = assemble(run.seeds, run.evols, run.conversations,
                                     run.fragments, 42);

    CHECK(data.manifest.stage_counts.at("seed") == 2);
    CHECK(data.manifest.stage_counts.at("evoled") == 1);  // failed one excluded
    CHECK(data.manifest.stage_counts.at("multi-turn") == 1);
    CHECK(data.records.size() == 4);

    // per-language conservation per stage
    for (const auto& [stage, n] : data.manifest.stage_counts) {
        std::size_t sum = 0;
        for (const auto& [lang, c] : data.manifest.per_language.at(stage)) sum += c;
        CHECK(sum == n);
    }

    const UnifiedRecord* mt = nullptr;
    for (const auto& rec : data.records)
        if (rec.stage == Stage::MultiTurn) mt = &rec;
    REQUIRE(mt != nullptr);
    CHECK(mt->seed_id == "g1");
    CHECK(mt->evol_id == "generic-concise");
    CHECK(mt->source == "aya-dataset");
}

TEST_CASE("assemble: empty inputs give a zero-count manifest") {
    AssembledDataset data = assemble(SeedSet{}, {}, {}, {}, 1);
    CHECK(data.records.empty());
    CHECK(data.manifest.stage_counts.empty());
}

TEST_CASE("assemble: mixed fingerprints are an error") {
    SmallRun run = small_run();
    run.fragments[2].config_fingerprint = "other";
    CHECK_THROWS_AS(assemble(run.seeds, run.evols, run.conversations, run.fragments, 42),
                    DataError);
}

TEST_CASE("compute_stats: handcrafted averages") {
    UnifiedRecord a;
    a.id = "seed/a";
    a.stage = Stage::Seed;
    a.language = "en";
    a.turns = {{Role::User, "one two three", ""}, {Role::Assistant, "x y", ""}};
    UnifiedRecord b = a;
    b.id = "seed/b";
    b.turns = {{Role::User, "one two three four five", ""}, {Role::Assistant, "x y z w", ""}};

    StatsReport report = compute_stats({a, b});
    const StageStats& s = report.per_stage.at("seed");
    CHECK(s.count == 2);
    CHECK(s.avg_instruction_tokens == doctest::Approx(4.0));
    CHECK(s.avg_response_tokens == doctest::Approx(3.0));
}

TEST_CASE("compute_stats: multi-turn sums user and assistant sides") {
    UnifiedRecord conv;
    conv.id = "mt/x";
    conv.stage = Stage::MultiTurn;
    conv.language = "en";
    conv.turns = {{Role::User, "a b", ""},
                  {Role::Assistant, "c", ""},
                  {Role::User, "d e f", "challenging"},
                  {Role::Assistant, "g h", ""}};
    StatsReport report = compute_stats({conv});
    CHECK(report.per_stage.at("multi-turn").avg_instruction_tokens == doctest::Approx(5.0));
    CHECK(report.per_stage.at("multi-turn").avg_response_tokens == doctest::Approx(3.0));
}

TEST_CASE("export chat-turns: round-trip and byte-stable re-export") {
    SmallRun run = small_run();
    AssembledDataset data = assemble(run.seeds, run.evols, run.conversations,
                                     run.fragments, 42);
    const std::string path = "/tmp/evolforge_export_test.jsonl";
    CHECK(export_dataset(data.records, path, ExportFormat::ChatTurns) == 4);

    IngestResult back = read_unified(path);
    CHECK(back.rejections.empty());
    REQUIRE(back.records.size() == data.records.size());
    for (std::size_t i = 0; i < back.records.size(); ++i) {
        CHECK(unified_to_json(back.records[i]).dump() ==
              unified_to_json(data.records[i]).dump());
    }

    std::string first = slurp(path);
    export_dataset(data.records, path, ExportFormat::ChatTurns);
    CHECK(slurp(path) == first);
    std::remove(path.c_str());
}

TEST_CASE("export flat-pairs: one instruction/response object per record") {
    SmallRun run = small_run();
    AssembledDataset data = assemble(run.seeds, run.evols, run.conversations,
                                     run.fragments, 42);
    const std::string path = "/tmp/evolforge_flat_test.jsonl";
    CHECK(export_dataset(data.records, path, ExportFormat::FlatPairs) == 4);
    std::ifstream in(path);
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) {
        auto obj = nlohmann::json::parse(line);
        CHECK(obj.contains("instruction"));
        CHECK(obj.contains("response"));
        ++lines;
    }
    CHECK(lines == 4);
    std::remove(path.c_str());
}

TEST_CASE("export: empty stream writes a valid empty file") {
    const std::string path = "/tmp/evolforge_empty_test.jsonl";
    CHECK(export_dataset({}, path, ExportFormat::ChatTurns) == 0);
    CHECK(slurp(path).empty());
    std::remove(path.c_str());
}

TEST_CASE("read_unified: malformed lines become line-numbered rejections") {
    const std::string path = "/tmp/evolforge_badlines_test.jsonl";
    {
        std::ofstream out(path);
        UnifiedRecord rec;
        rec.id = "seed/a";
        rec.stage = Stage::Seed;
        rec.language = "en";
        rec.turns = {{Role::User, "hi", ""}};
        out << unified_to_json(rec).dump() << "\n";
        out << "{broken json\n";
        out << "{\"id\": \"x\", \"language\": \"en\"}\n";  // no stage
    }
    IngestResult result = read_unified(path);
    CHECK(result.records.size() == 1);
    REQUIRE(result.rejections.size() == 2);
    CHECK(result.rejections[0].line == 2);
    CHECK(result.rejections[1].line == 3);

    StatsReport stats = compute_stats_file(path);
    CHECK(stats.rejections.size() == 2);
    CHECK(stats.per_stage.at("seed").count == 1);
    std::remove(path.c_str());
}

TEST_CASE("field profile maps foreign key names onto the schema") {
    FieldProfile profile = FieldProfile::from_json_text(R"({
        "id_keys": ["uid"],
        "stage_keys": ["data_type"],
        "stage_values": {"sft_seed": "seed", "sft_mt": "multi-turn"},
        "turns_keys": ["conversation"],
        "role_keys": ["from"],
        "content_keys": ["value"],
        "role_values": {"human": "user", "gpt": "assistant"}
    })");

    nlohmann::json obj = nlohmann::json::parse(R"({
        "uid": "r1", "language": "fr", "data_type": "sft_mt",
        "conversation": [
            {"from": "human", "value": "salut"},
            {"from": "gpt", "value": "bonjour"}
        ]
    })");
    UnifiedRecord rec = unified_from_json(obj, profile);
    CHECK(rec.id == "r1");
    CHECK(rec.stage == Stage::MultiTurn);
    REQUIRE(rec.turns.size() == 2);
    CHECK(rec.turns[0].role == Role::User);
    CHECK(rec.turns[1].content == "bonjour");
}

TEST_CASE("pair-layout records ingest without a turns array") {
    nlohmann::json obj = nlohmann::json::parse(R"({
        "id": "p1", "language": "en", "stage": "evoled",
        "instruction": "ask", "response": "answer"
    })");
    UnifiedRecord rec = unified_from_json(obj, {});
    REQUIRE(rec.turns.size() == 2);
    CHECK(rec.turns[0].content == "ask");
    CHECK(rec.turns[1].content == "answer");
}

TEST_CASE("manifest and stats render tables") {
    SmallRun run = small_run();
    AssembledDataset data = assemble(run.seeds, run.evols, run.conversations,
                                     run.fragments, 42);
    std::string table = render_manifest_table(data.manifest);
    CHECK(contains(table, "seed"));
    CHECK(contains(table, "total"));

    std::string stats = render_stats_table(compute_stats(data.records));
    CHECK(contains(stats, "multi-turn"));
    CHECK(contains(stats, "tokenizer: whitespace"));
}
