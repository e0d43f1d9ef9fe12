#include "evolforge/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "evolforge/errors.hpp"
#include "evolforge/rng.hpp"
#include "evolforge/text.hpp"

namespace evolforge {

using nlohmann::json;

const char* to_string(CompletionStatus s) {
    switch (s) {
        case CompletionStatus::Ok: return "ok";
        case CompletionStatus::Timeout: return "timeout";
        case CompletionStatus::RateLimited: return "rate-limited";
        case CompletionStatus::Failed: return "failed";
    }
    return "failed";
}

namespace {

CompletionStatus status_from_string(const std::string& s) {
    if (s == "ok") return CompletionStatus::Ok;
    if (s == "timeout") return CompletionStatus::Timeout;
    if (s == "rate-limited") return CompletionStatus::RateLimited;
    if (s == "failed") return CompletionStatus::Failed;
    throw ConfigError("gateway/bad-status", "unknown completion status: " + s);
}

void validate_request(const CompletionRequest& request) {
    if (request.messages.empty())
        throw ConfigError("gateway/invalid-request", "empty message list");
    if (request.temperature < 0.0 || request.temperature > 2.0)
        throw ConfigError("gateway/invalid-request", "temperature outside [0,2]");
    if (request.max_tokens <= 0)
        throw ConfigError("gateway/invalid-request", "max_tokens must be positive");
    std::size_t i = 0;
    if (request.messages[0].role == Role::System) i = 1;
    for (std::size_t k = i; k < request.messages.size(); ++k) {
        Role expect = ((k - i) % 2 == 0) ? Role::User : Role::Assistant;
        if (request.messages[k].role != expect)
            throw ConfigError("gateway/invalid-request",
                              "roles must alternate user/assistant after any leading "
                              "system message");
    }
}

void validate_policy(const RetryPolicy& policy) {
    if (policy.max_attempts < 1)
        throw ConfigError("gateway/invalid-policy", "max_attempts must be >= 1");
    if (policy.initial_backoff_ms < 0)
        throw ConfigError("gateway/invalid-policy", "initial_backoff_ms must be >= 0");
    if (policy.jitter_fraction < 0.0 || policy.jitter_fraction >= 1.0)
        throw ConfigError("gateway/invalid-policy", "jitter_fraction must be in [0,1)");
    if (policy.backoff_multiplier < 1.0 + policy.jitter_fraction)
        throw ConfigError("gateway/invalid-policy",
                          "backoff_multiplier must be >= 1 + jitter_fraction to keep "
                          "delays non-decreasing");
}

const Message* last_user_message(const CompletionRequest& request) {
    for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it)
        if (it->role == Role::User) return &*it;
    return nullptr;
}

}  // namespace

std::uint64_t request_fingerprint(const CompletionRequest& request) {
    std::uint64_t h = fnv1a64("req");
    for (const auto& m : request.messages) {
        h = fnv1a64(h, to_string(m.role));
        h = fnv1a64(h, "\x1f");
        h = fnv1a64(h, m.content);
        h = fnv1a64(h, "\x1e");
    }
    h = fnv1a64(h, request.tag);
    return h;
}

MockScript MockScript::from_json_text(const std::string& json_text) {
    json doc = json::parse(json_text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
        throw ConfigError("gateway/mock-script", "mock script is not a JSON object");
    MockScript script;
    script.timeout_hash_mod = doc.value("timeout_hash_mod", 0u);
    for (const auto& entry : doc.value("entries", json::array())) {
        std::uint64_t fp = std::stoull(entry.at("fingerprint").get<std::string>(), nullptr, 16);
        std::vector<MockStep> schedule;
        for (const auto& step : entry.at("schedule")) {
            MockStep s;
            s.status = status_from_string(step.at("status").get<std::string>());
            s.content = step.value("content", "");
            schedule.push_back(std::move(s));
        }
        if (schedule.empty())
            throw ConfigError("gateway/mock-script", "empty schedule in mock script");
        script.entries[fp] = std::move(schedule);
    }
    return script;
}

MockScript MockScript::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("gateway/mock-script", "cannot open mock script: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::string MockBackend::echo_content(const CompletionRequest& request) {
    const Message* last = last_user_message(request);
    const std::string fp = to_hex16(request_fingerprint(request));
    if (last == nullptr) return "echo:" + fp + ":";
    if (contains(last->content, "follow_up_user_prompt")) {
        // The caller asked for the follow-up JSON contract; honor it so a
        // default-scripted mock can drive the full pipeline.
        json reply;
        reply["follow_up_user_prompt"] = "Echo follow-up " + fp;
        return reply.dump();
    }
    return "echo:" + fp + ":" + last->content;
}

AttemptOutcome MockBackend::attempt(const CompletionRequest& request) {
    const std::uint64_t fp = request_fingerprint(request);
    std::size_t call_idx;
    {
        std::lock_guard<std::mutex> lock(mu_);
        call_idx = calls_[fp]++;
    }
    auto it = script_.entries.find(fp);
    if (it != script_.entries.end()) {
        const auto& schedule = it->second;
        const MockStep& step = schedule[std::min(call_idx, schedule.size() - 1)];
        return {step.status, step.content};
    }
    if (script_.timeout_hash_mod > 0) {
        std::uint64_t h = fnv1a64(to_hex16(fp) + ":" + std::to_string(call_idx));
        if (h % script_.timeout_hash_mod == 0) return {CompletionStatus::Timeout, ""};
    }
    return {CompletionStatus::Ok, echo_content(request)};
}

void MockBackend::script_fingerprint(std::uint64_t fingerprint,
                                     std::vector<MockStep> schedule) {
    std::lock_guard<std::mutex> lock(mu_);
    script_.entries[fingerprint] = std::move(schedule);
}

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayLimits limits,
                 std::shared_ptr<Clock> clock, std::uint64_t jitter_seed)
    : backend_(std::move(backend)),
      limits_(limits),
      clock_(std::move(clock)),
      jitter_seed_(jitter_seed) {
    if (!backend_) throw ConfigError("gateway/no-backend", "gateway needs a backend");
    if (!clock_) throw ConfigError("gateway/no-clock", "gateway needs a clock");
    if (limits_.max_in_flight < 1)
        throw ConfigError("gateway/invalid-limits", "max_in_flight must be >= 1");
    if (limits_.requests_per_interval > 0 && limits_.interval_ms <= 0)
        throw ConfigError("gateway/invalid-limits", "interval_ms must be positive");
}

void Gateway::wait_for_rate_slot() {
    if (limits_.requests_per_interval <= 0) {
        std::lock_guard<std::mutex> lock(rate_mu_);
        issue_log_.push_back(clock_->now_ms());
        return;
    }
    std::unique_lock<std::mutex> lock(rate_mu_);
    for (;;) {
        const std::int64_t now = clock_->now_ms();
        while (!window_.empty() && window_.front() <= now - limits_.interval_ms)
            window_.pop_front();
        if (static_cast<int>(window_.size()) < limits_.requests_per_interval) {
            window_.push_back(now);
            issue_log_.push_back(now);
            return;
        }
        const std::int64_t wait = window_.front() + limits_.interval_ms - now;
        lock.unlock();
        clock_->sleep_ms(std::max<std::int64_t>(1, wait));
        lock.lock();
    }
}

std::vector<std::int64_t> Gateway::issue_times() const {
    std::lock_guard<std::mutex> lock(rate_mu_);
    return issue_log_;
}

CompletionResult Gateway::complete(const CompletionRequest& request,
                                   const RetryPolicy& policy) {
    validate_request(request);
    validate_policy(policy);

    SplitMix64 jitter_rng(jitter_seed_ ^ request_fingerprint(request));
    const std::int64_t start = clock_->now_ms();

    AttemptOutcome out;
    int attempt = 0;
    while (attempt < policy.max_attempts) {
        ++attempt;
        wait_for_rate_slot();
        {
            std::unique_lock<std::mutex> lock(flight_mu_);
            flight_cv_.wait(lock, [&] { return in_flight_ < limits_.max_in_flight; });
            ++in_flight_;
        }
        out = backend_->attempt(request);
        {
            std::lock_guard<std::mutex> lock(flight_mu_);
            --in_flight_;
        }
        flight_cv_.notify_one();

        if (out.status == CompletionStatus::Ok && out.content.empty())
            out.status = CompletionStatus::Failed;
        if (out.status == CompletionStatus::Ok) break;
        if (attempt < policy.max_attempts) {
            const double base = static_cast<double>(policy.initial_backoff_ms) *
                                std::pow(policy.backoff_multiplier, attempt - 1);
            const double jitter = 1.0 + policy.jitter_fraction * jitter_rng.next_unit();
            clock_->sleep_ms(std::llround(base * jitter));
        }
    }

    CompletionResult result;
    result.content = out.status == CompletionStatus::Ok ? out.content : "";
    result.status = out.status;
    result.attempts = attempt;
    result.latency_ms = clock_->now_ms() - start;
    return result;
}

FollowUpInstruction parse_followup_json(const std::string& raw) {
    std::string body = trim(raw);
    if (body.rfind("```", 0) == 0) {
        std::size_t first_newline = body.find('\n');
        std::size_t closing = body.rfind("```");
        if (first_newline != std::string::npos && closing > first_newline)
            body = body.substr(first_newline + 1, closing - first_newline - 1);
    }
    const std::size_t open = body.find('{');
    const std::size_t close = body.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open)
        throw DataError("gateway/followup-parse", "no JSON object in follow-up reply");
    json doc = json::parse(body.substr(open, close - open + 1), nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
        throw DataError("gateway/followup-parse", "follow-up reply is not a JSON object");
    if (!doc.contains("follow_up_user_prompt"))
        throw DataError("gateway/followup-key",
                        "follow-up reply lacks \"follow_up_user_prompt\"");
    const auto& value = doc["follow_up_user_prompt"];
    if (!value.is_string())
        throw DataError("gateway/followup-empty", "follow_up_user_prompt is not a string");
    std::string text = trim(value.get<std::string>());
    if (text.empty())
        throw DataError("gateway/followup-empty", "follow_up_user_prompt is empty");
    return {std::move(text)};
}

}  // namespace evolforge
