#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace evolforge {

enum class SeedSource { AyaDataset, AyaCollection };

inline const char* to_string(SeedSource s) {
    return s == SeedSource::AyaDataset ? "aya-dataset" : "aya-collection";
}

/// One instruction-response pair from a seed corpus.
struct SeedRecord {
    std::string id;
    SeedSource source = SeedSource::AyaDataset;
    std::string language;     // ISO-style code
    std::string task;         // required iff source == AyaCollection
    std::string instruction;
    std::string response;
};

/// A rejected input line, reported rather than silently dropped.
struct Rejection {
    std::size_t line = 0;
    std::string reason;
};

struct ReadSeedsResult {
    std::vector<SeedRecord> records;
    std::vector<Rejection> rejections;
};

/// Balanced sample with per-bucket shortfalls.
/// Deficit keys: "<language>" for general seeds,
/// "<task>/<language>" for task seeds.
struct SeedSet {
    std::vector<SeedRecord> records;
    std::map<std::string, std::size_t> deficits;
};

/// Parse a line-delimited seed file. Every line yields a record or a
/// line-numbered rejection; duplicate ids are rejected on their later line.
ReadSeedsResult read_seeds(const std::string& path);

/// Same, over an already-loaded buffer (used by tests and converters).
ReadSeedsResult parse_seeds(const std::string& content);

/// Remove records whose task is excluded; order preserved.
std::vector<SeedRecord> apply_exclusions(const std::vector<SeedRecord>& seeds,
                                         const std::set<std::string>& excluded_tasks);

/// Per-language (general) and per-task-per-language (collection) balanced
/// sampling: splitmix64 sub-seeded per bucket, Fisher-Yates shuffle over the
/// id-sorted bucket, prefix take. Shortfall is recorded, never an error.
/// Output records are sorted by id.
SeedSet sample_balanced(const std::vector<SeedRecord>& seeds,
                        std::size_t per_language,
                        std::size_t per_task_per_language,
                        std::uint64_t rng_seed);

}  // namespace evolforge
