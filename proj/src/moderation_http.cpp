#include <json.hpp>

#define CPPHTTPLIB_NO_EXCEPTIONS
#include <httplib.h>

#include "evolforge/errors.hpp"
#include "evolforge/moderation.hpp"

namespace evolforge {

using nlohmann::json;

HttpModerationClient::HttpModerationClient(std::string base_url, std::string api_key,
                                           std::size_t batch, std::int64_t timeout_ms)
    : api_key_(std::move(api_key)), batch_(batch), timeout_ms_(timeout_ms) {
    std::size_t scheme = base_url.find("://");
    if (scheme == std::string::npos)
        throw ConfigError("moderation/bad-url", "moderation url needs a scheme: " + base_url);
    std::size_t path = base_url.find('/', scheme + 3);
    if (path == std::string::npos) {
        host_ = base_url;
        path_ = "/v1/moderations";
    } else {
        host_ = base_url.substr(0, path);
        path_ = base_url.substr(path);
    }
}

std::vector<ModerationScore> HttpModerationClient::classify(
    const std::vector<std::string>& texts) {
    httplib::Client client(host_);
    client.set_connection_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
    client.set_read_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    json body;
    body["input"] = texts;
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res || res->status != 200)
        throw DataError("moderation/transport", "moderation request failed");

    json doc = json::parse(res->body, nullptr, false);
    if (doc.is_discarded() || !doc.contains("results"))
        throw DataError("moderation/transport", "moderation reply is not parseable");

    std::vector<ModerationScore> out;
    for (const auto& r : doc["results"]) {
        ModerationScore score;
        score.flagged = r.value("flagged", false);
        if (r.contains("category_scores"))
            score.categories = r["category_scores"].get<std::map<std::string, double>>();
        out.push_back(std::move(score));
    }
    if (out.size() != texts.size())
        throw DataError("moderation/transport", "moderation reply size mismatch");
    return out;
}

}  // namespace evolforge
