#include "evolforge/seeds.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "evolforge/errors.hpp"
#include "evolforge/rng.hpp"

namespace evolforge {

using nlohmann::json;

namespace {

SeedRecord parse_seed_line(const json& obj) {
    SeedRecord rec;
    if (!obj.contains("id") || !obj["id"].is_string() || obj["id"].get<std::string>().empty())
        throw DataError("seeds/missing-field", "missing required field \"id\"");
    rec.id = obj["id"].get<std::string>();

    if (!obj.contains("source") || !obj["source"].is_string())
        throw DataError("seeds/missing-field", "missing required field \"source\"");
    std::string source = obj["source"].get<std::string>();
    if (source == "aya-dataset") {
        rec.source = SeedSource::AyaDataset;
    } else if (source == "aya-collection") {
        rec.source = SeedSource::AyaCollection;
    } else {
        throw DataError("seeds/bad-source", "unknown source \"" + source + "\"");
    }

    if (!obj.contains("language") || !obj["language"].is_string() ||
        obj["language"].get<std::string>().empty())
        throw DataError("seeds/missing-field", "missing required field \"language\"");
    rec.language = obj["language"].get<std::string>();

    rec.task = obj.value("task", "");
    if (rec.source == SeedSource::AyaCollection && rec.task.empty())
        throw DataError("seeds/missing-field", "collection record without \"task\"");

    if (!obj.contains("instruction") || !obj["instruction"].is_string() ||
        obj["instruction"].get<std::string>().empty())
        throw DataError("seeds/missing-field", "missing required field \"instruction\"");
    rec.instruction = obj["instruction"].get<std::string>();

    rec.response = obj.value("response", "");
    return rec;
}

}  // namespace

ReadSeedsResult parse_seeds(const std::string& content) {
    ReadSeedsResult out;
    std::unordered_set<std::string> seen_ids;
    std::istringstream in(content);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) {
            out.rejections.push_back({line_no, "malformed line: not a JSON object"});
            continue;
        }
        try {
            SeedRecord rec = parse_seed_line(obj);
            if (!seen_ids.insert(rec.id).second) {
                out.rejections.push_back({line_no, "duplicate id \"" + rec.id + "\""});
                continue;
            }
            out.records.push_back(std::move(rec));
        } catch (const DataError& e) {
            out.rejections.push_back({line_no, e.what()});
        }
    }
    return out;
}

ReadSeedsResult read_seeds(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("seeds/io", "cannot open seed file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_seeds(buf.str());
}

std::vector<SeedRecord> apply_exclusions(const std::vector<SeedRecord>& seeds,
                                         const std::set<std::string>& excluded_tasks) {
    std::vector<SeedRecord> out;
    out.reserve(seeds.size());
    for (const auto& s : seeds)
        if (s.task.empty() || !excluded_tasks.count(s.task)) out.push_back(s);
    return out;
}

SeedSet sample_balanced(const std::vector<SeedRecord>& seeds,
                        std::size_t per_language,
                        std::size_t per_task_per_language,
                        std::uint64_t rng_seed) {
    // Bucket key doubles as the deficit key and the per-bucket RNG salt.
    // First occurrence wins on duplicate ids so selected ids stay distinct.
    std::unordered_map<std::string, std::vector<const SeedRecord*>> buckets;
    std::vector<std::string> bucket_order;
    std::unordered_set<std::string> seen_ids;
    for (const auto& s : seeds) {
        if (!seen_ids.insert(s.id).second) continue;
        std::string key = s.source == SeedSource::AyaDataset
                              ? s.language
                              : s.task + "/" + s.language;
        auto [it, inserted] = buckets.try_emplace(key);
        if (inserted) bucket_order.push_back(key);
        it->second.push_back(&s);
    }
    std::sort(bucket_order.begin(), bucket_order.end());

    SeedSet out;
    for (const auto& key : bucket_order) {
        auto& bucket = buckets[key];
        std::sort(bucket.begin(), bucket.end(),
                  [](const SeedRecord* a, const SeedRecord* b) { return a->id < b->id; });
        const bool general = bucket.front()->source == SeedSource::AyaDataset;
        const std::size_t quota = general ? per_language : per_task_per_language;

        SplitMix64 rng = derive_rng(rng_seed, "sample/" + key);
        fisher_yates_shuffle(bucket, rng);
        const std::size_t take = std::min(quota, bucket.size());
        for (std::size_t i = 0; i < take; ++i) out.records.push_back(*bucket[i]);
        if (quota > bucket.size()) out.deficits[key] = quota - bucket.size();
    }

    std::sort(out.records.begin(), out.records.end(),
              [](const SeedRecord& a, const SeedRecord& b) { return a.id < b.id; });
    return out;
}

}  // namespace evolforge
