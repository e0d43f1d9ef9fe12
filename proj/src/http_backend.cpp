#include <json.hpp>

#define CPPHTTPLIB_NO_EXCEPTIONS
#include <httplib.h>

#include "evolforge/errors.hpp"
#include "evolforge/gateway.hpp"

namespace evolforge {

using nlohmann::json;

namespace {

// "http://host:port/some/path" -> ("http://host:port", "/some/path")
std::pair<std::string, std::string> split_url(const std::string& url) {
    std::size_t scheme = url.find("://");
    if (scheme == std::string::npos)
        throw ConfigError("gateway/bad-url", "backend url needs a scheme: " + url);
    std::size_t path = url.find('/', scheme + 3);
    if (path == std::string::npos) return {url, "/v1/chat/completions"};
    return {url.substr(0, path), url.substr(path)};
}

}  // namespace

HttpBackend::HttpBackend(std::string base_url, std::string api_key,
                         std::int64_t timeout_ms)
    : base_url_(std::move(base_url)),
      api_key_(std::move(api_key)),
      timeout_ms_(timeout_ms) {
    auto [host, path] = split_url(base_url_);
    host_ = host;
    path_ = path;
}

std::string HttpBackend::request_body(const CompletionRequest& request) {
    json body;
    body["model"] = request.model;
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    body["messages"] = json::array();
    for (const auto& m : request.messages)
        body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
    return body.dump();
}

AttemptOutcome HttpBackend::attempt(const CompletionRequest& request) {
    // httplib clients are not thread-safe; one per attempt keeps the
    // backend shareable across workers.
    httplib::Client client(host_);
    client.set_connection_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
    client.set_read_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    auto res = client.Post(path_, headers, request_body(request), "application/json");
    if (!res) {
        const auto err = res.error();
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
            err == httplib::Error::Write)
            return {CompletionStatus::Timeout, ""};
        return {CompletionStatus::Failed, ""};
    }
    if (res->status == 429) return {CompletionStatus::RateLimited, ""};
    if (res->status != 200) return {CompletionStatus::Failed, ""};

    json doc = json::parse(res->body, nullptr, false);
    if (doc.is_discarded()) return {CompletionStatus::Failed, ""};
    try {
        std::string content =
            doc.at("choices").at(0).at("message").at("content").get<std::string>();
        if (content.empty()) return {CompletionStatus::Failed, ""};
        return {CompletionStatus::Ok, std::move(content)};
    } catch (const json::exception&) {
        return {CompletionStatus::Failed, ""};
    }
}

}  // namespace evolforge
