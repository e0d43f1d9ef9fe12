#include "evolforge/filter.hpp"

#include <algorithm>
#include <unordered_map>

#include "evolforge/errors.hpp"
#include "evolforge/text.hpp"

namespace evolforge {

RepetitionReport ngram_repetition_flag(std::string_view text, std::size_t n,
                                       std::size_t threshold) {
    if (n < 1) throw ConfigError("filter/bad-n", "ngram size must be >= 1");
    if (threshold < 2) throw ConfigError("filter/bad-threshold", "threshold must be >= 2");

    RepetitionReport report;
    report.n = n;

    const std::vector<std::string> tokens = tokenize_lower(text);
    if (tokens.size() < n) return report;

    // Join with an unlikely separator so the map key is one string.
    std::unordered_map<std::string, std::size_t> counts;
    counts.reserve(tokens.size());
    std::string best_key;
    std::size_t best_count = 0;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key = tokens[i];
        for (std::size_t j = 1; j < n; ++j) {
            key.push_back('\x1f');
            key += tokens[i + j];
        }
        const std::size_t c = ++counts[key];
        if (c > best_count || (c == best_count && key < best_key)) {
            best_count = c;
            best_key = key;
        }
    }

    report.count = best_count;
    report.flagged = best_count >= threshold;
    std::size_t start = 0;
    for (std::size_t end = 0; end <= best_key.size(); ++end) {
        if (end == best_key.size() || best_key[end] == '\x1f') {
            report.worst_ngram.push_back(best_key.substr(start, end - start));
            start = end + 1;
        }
    }
    return report;
}

std::optional<DropReason> screen_texts(const std::string& id,
                                       const std::vector<std::string_view>& texts,
                                       const FilterPolicy& policy) {
    for (const auto& text : texts) {
        const std::size_t tokens = whitespace_token_count(text);
        if (tokens < policy.min_tokens)
            return DropReason{id, "too-short",
                              std::to_string(tokens) + " tokens < " +
                                  std::to_string(policy.min_tokens)};
        if (tokens > policy.max_tokens)
            return DropReason{id, "too-long",
                              std::to_string(tokens) + " tokens > " +
                                  std::to_string(policy.max_tokens)};
        RepetitionReport rep =
            ngram_repetition_flag(text, policy.ngram_n, policy.ngram_threshold);
        if (rep.flagged) {
            std::string ngram;
            for (std::size_t i = 0; i < rep.worst_ngram.size(); ++i) {
                if (i) ngram.push_back(' ');
                ngram += rep.worst_ngram[i];
            }
            return DropReason{id, "repetition",
                              "\"" + ngram + "\" x" + std::to_string(rep.count)};
        }
    }
    return std::nullopt;
}

namespace {

template <typename T, typename TextsFn, typename IdFn>
Filtered<T> filter_impl(const std::vector<T>& items, const FilterPolicy& policy,
                        bool parallel, TextsFn texts_of, IdFn id_of) {
    std::vector<std::optional<DropReason>> verdicts(items.size());
    const long total = static_cast<long>(items.size());
#pragma omp parallel for schedule(dynamic, 16) if (parallel)
    for (long i = 0; i < total; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        verdicts[idx] = screen_texts(id_of(items[idx]), texts_of(items[idx]), policy);
    }

    Filtered<T> out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (verdicts[i])
            out.dropped.emplace_back(items[i], *verdicts[i]);
        else
            out.kept.push_back(items[i]);
    }
    return out;
}

}  // namespace

Filtered<EvolRecord> filter_records(const std::vector<EvolRecord>& records,
                                    const FilterPolicy& policy, bool parallel) {
    auto result = filter_impl(
        records, policy, parallel,
        [](const EvolRecord& r) {
            std::vector<std::string_view> texts;
            texts.push_back(r.instruction);
            if (!r.response.empty()) texts.push_back(r.response);
            return texts;
        },
        [](const EvolRecord& r) { return r.id; });
    for (auto& [record, reason] : result.dropped) {
        record.status = EvolStatus::Filtered;
        record.failure_cause = "filter-" + reason.reason;
    }
    return result;
}

Filtered<Conversation> filter_records(const std::vector<Conversation>& conversations,
                                      const FilterPolicy& policy, bool parallel) {
    return filter_impl(
        conversations, policy, parallel,
        [](const Conversation& c) {
            std::vector<std::string_view> texts;
            texts.reserve(c.turns.size());
            for (const auto& turn : c.turns) texts.push_back(turn.content);
            return texts;
        },
        [](const Conversation& c) { return c.id; });
}

}  // namespace evolforge
