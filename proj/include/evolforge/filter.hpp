#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evolforge/chat.hpp"
#include "evolforge/config.hpp"
#include "evolforge/evolve.hpp"

namespace evolforge {

struct RepetitionReport {
    bool flagged = false;
    std::vector<std::string> worst_ngram;
    std::size_t count = 0;
    std::size_t n = 0;
};

/// Lowercase, whitespace-tokenize, count all contiguous n-grams; flagged iff
/// some n-gram occurs at least `threshold` times. Ties on the max count break
/// to the lexicographically smallest n-gram.
RepetitionReport ngram_repetition_flag(std::string_view text, std::size_t n,
                                       std::size_t threshold);

struct DropReason {
    std::string id;
    std::string reason;  // "repetition" | "too-short" | "too-long"
    std::string detail;
};

template <typename T>
struct Filtered {
    std::vector<T> kept;
    std::vector<std::pair<T, DropReason>> dropped;
};

/// Repetition + length screening of evolved records (instruction and
/// response) or conversations (every turn). Kept items are byte-identical to
/// the inputs; dropped evol records are re-stamped status=filtered. The
/// per-item scan is embarrassingly parallel; `parallel=false` selects the
/// serial reference path, kept for testing and benchmarking.
Filtered<EvolRecord> filter_records(const std::vector<EvolRecord>& records,
                                    const FilterPolicy& policy, bool parallel = true);
Filtered<Conversation> filter_records(const std::vector<Conversation>& conversations,
                                      const FilterPolicy& policy, bool parallel = true);

/// Decision core shared by both overloads, exposed for the benchmark.
std::optional<DropReason> screen_texts(const std::string& id,
                                       const std::vector<std::string_view>& texts,
                                       const FilterPolicy& policy);

}  // namespace evolforge
