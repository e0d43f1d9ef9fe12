#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "evolforge/chat.hpp"

namespace evolforge {

struct ModerationScore {
    bool flagged = false;
    std::map<std::string, double> categories;
};

/// Content-safety classifier boundary. The backend's boolean verdict is
/// authoritative; category cutoffs live behind this interface.
class ModerationClient {
public:
    virtual ~ModerationClient() = default;
    virtual std::vector<ModerationScore> classify(const std::vector<std::string>& texts) = 0;
    virtual std::size_t batch_limit() const = 0;
};

/// Deterministic mock: an utterance is flagged iff it contains one of the
/// configured sentinel tokens.
class SentinelClassifier : public ModerationClient {
public:
    struct Rule {
        std::string token;
        std::string category = "sentinel";
        double score = 1.0;
    };

    SentinelClassifier() = default;
    explicit SentinelClassifier(std::vector<Rule> rules, std::size_t batch = 32)
        : rules_(std::move(rules)), batch_(batch) {}

    static SentinelClassifier load(const std::string& path);
    static SentinelClassifier from_json_text(const std::string& json_text);

    std::vector<ModerationScore> classify(const std::vector<std::string>& texts) override;
    std::size_t batch_limit() const override { return batch_; }

private:
    std::vector<Rule> rules_;
    std::size_t batch_ = 32;
};

/// Batch POST of input texts to a moderation endpoint; per-input
/// {flagged, category scores} comes back.
class HttpModerationClient : public ModerationClient {
public:
    HttpModerationClient(std::string base_url, std::string api_key,
                         std::size_t batch = 32, std::int64_t timeout_ms = 120000);

    std::vector<ModerationScore> classify(const std::vector<std::string>& texts) override;
    std::size_t batch_limit() const override { return batch_; }

private:
    std::string host_;
    std::string path_;
    std::string api_key_;
    std::size_t batch_;
    std::int64_t timeout_ms_;
};

struct UtteranceRef {
    std::string conversation_id;
    std::size_t turn_index = 0;
};

struct ModerationVerdict {
    UtteranceRef ref;
    Role role = Role::User;
    bool flagged = false;
    std::map<std::string, double> categories;
};

struct ModerationReport {
    double rate_user = 0.0;
    double rate_assistant = 0.0;
    double rate_avg = 0.0;
    std::size_t user_turns = 0;
    std::size_t assistant_turns = 0;
    std::size_t flagged_user = 0;
    std::size_t flagged_assistant = 0;
    std::vector<ModerationVerdict> verdicts;
    std::vector<UtteranceRef> unscanned;  // client failures, never silent
};

/// Scan every turn once, batched up to the client's limit; per-role flag
/// rates over user vs assistant turns.
ModerationReport moderate(const std::vector<Conversation>& conversations,
                          ModerationClient& client);

/// Remove flagged turns, re-trim each conversation to the longest valid
/// alternating response-terminated prefix, drop emptied conversations.
std::vector<Conversation> strip_flagged(const std::vector<Conversation>& conversations,
                                        const ModerationReport& report);

/// User / Chatbot / Avg table.
std::string render_moderation_table(const ModerationReport& report);

}  // namespace evolforge
