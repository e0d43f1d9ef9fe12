#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "evolforge/chat.hpp"
#include "evolforge/clock.hpp"

namespace evolforge {

struct CompletionRequest {
    MessageSequence messages;
    std::string model = "gpt-4";
    double temperature = 0.7;
    int max_tokens = 1024;
    std::string tag;  // caller-supplied correlation id
};

enum class CompletionStatus { Ok, Timeout, RateLimited, Failed };

const char* to_string(CompletionStatus s);

struct CompletionResult {
    std::string content;
    CompletionStatus status = CompletionStatus::Failed;
    int attempts = 0;
    std::int64_t latency_ms = 0;

    bool ok() const { return status == CompletionStatus::Ok; }
};

/// Hash of messages + tag; the mock's scripting key and the resume key.
std::uint64_t request_fingerprint(const CompletionRequest& request);

struct RetryPolicy {
    int max_attempts = 3;
    std::int64_t initial_backoff_ms = 500;
    double backoff_multiplier = 2.0;
    // Random extra delay in [0, jitter_fraction] of the base delay. Kept
    // below multiplier-1 so per-request delays stay non-decreasing.
    double jitter_fraction = 0.25;
    std::int64_t request_timeout_ms = 120000;
};

struct AttemptOutcome {
    CompletionStatus status = CompletionStatus::Failed;
    std::string content;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual AttemptOutcome attempt(const CompletionRequest& request) = 0;
    virtual std::string describe() const = 0;
};

struct MockStep {
    CompletionStatus status = CompletionStatus::Ok;
    std::string content;
};

/// Deterministic rule set for the mock backend. Scripted fingerprints walk
/// their schedule call by call (last step repeats); everything else gets the
/// echo rule. timeout_hash_mod > 0 injects a timeout into roughly 1/mod of
/// unscripted calls, keyed on (fingerprint, call index) so retries can recover.
struct MockScript {
    std::map<std::uint64_t, std::vector<MockStep>> entries;
    unsigned timeout_hash_mod = 0;

    static MockScript from_json_text(const std::string& json_text);
    static MockScript load(const std::string& path);
};

class MockBackend : public Backend {
public:
    MockBackend() = default;
    explicit MockBackend(MockScript script) : script_(std::move(script)) {}

    AttemptOutcome attempt(const CompletionRequest& request) override;
    std::string describe() const override { return "mock"; }

    void script_fingerprint(std::uint64_t fingerprint, std::vector<MockStep> schedule);

    /// The echo transform applied to unmatched requests.
    static std::string echo_content(const CompletionRequest& request);

private:
    MockScript script_;
    std::mutex mu_;
    std::unordered_map<std::uint64_t, std::size_t> calls_;
};

/// Chat-completions-compatible HTTP backend. Auth comes from the
/// EVOLFORGE_API_KEY environment variable (resolved by the caller).
class HttpBackend : public Backend {
public:
    HttpBackend(std::string base_url, std::string api_key, std::int64_t timeout_ms);
    AttemptOutcome attempt(const CompletionRequest& request) override;
    std::string describe() const override { return "http:" + base_url_; }

    static std::string request_body(const CompletionRequest& request);

private:
    std::string base_url_;
    std::string host_;
    std::string path_;
    std::string api_key_;
    std::int64_t timeout_ms_;
};

struct GatewayLimits {
    int max_in_flight = 8;
    int requests_per_interval = 0;  // 0 = unlimited
    std::int64_t interval_ms = 60000;
};

/// Shared completion front door: retries with jittered exponential backoff,
/// a global in-flight ceiling, and a sliding-window rate limit. Transport
/// failure is data (CompletionResult.status), never an exception.
class Gateway {
public:
    Gateway(std::shared_ptr<Backend> backend, GatewayLimits limits,
            std::shared_ptr<Clock> clock, std::uint64_t jitter_seed = 0);

    CompletionResult complete(const CompletionRequest& request, const RetryPolicy& policy);

    /// Rate-slot grant times, for ceiling assertions in tests.
    std::vector<std::int64_t> issue_times() const;

private:
    void wait_for_rate_slot();

    std::shared_ptr<Backend> backend_;
    GatewayLimits limits_;
    std::shared_ptr<Clock> clock_;
    std::uint64_t jitter_seed_;

    mutable std::mutex rate_mu_;
    std::deque<std::int64_t> window_;
    std::vector<std::int64_t> issue_log_;

    std::mutex flight_mu_;
    std::condition_variable flight_cv_;
    int in_flight_ = 0;
};

struct FollowUpInstruction {
    std::string text;
};

/// Extract the "follow_up_user_prompt" value from a (possibly fenced,
/// possibly prose-wrapped) model reply.
FollowUpInstruction parse_followup_json(const std::string& raw);

}  // namespace evolforge
