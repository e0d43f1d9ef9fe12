#include "evolforge/moderation.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "evolforge/errors.hpp"
#include "evolforge/text.hpp"

namespace evolforge {

using nlohmann::json;

SentinelClassifier SentinelClassifier::from_json_text(const std::string& json_text) {
    json doc = json::parse(json_text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
        throw ConfigError("moderation/config", "sentinel config is not a JSON object");
    std::vector<Rule> rules;
    for (const auto& r : doc.value("rules", json::array())) {
        Rule rule;
        rule.token = r.at("token").get<std::string>();
        rule.category = r.value("category", "sentinel");
        rule.score = r.value("score", 1.0);
        if (rule.token.empty())
            throw ConfigError("moderation/config", "sentinel rule with empty token");
        rules.push_back(std::move(rule));
    }
    return SentinelClassifier(std::move(rules), doc.value("batch_limit", 32u));
}

SentinelClassifier SentinelClassifier::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("moderation/config", "cannot open sentinel config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::vector<ModerationScore> SentinelClassifier::classify(
    const std::vector<std::string>& texts) {
    std::vector<ModerationScore> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        ModerationScore score;
        for (const auto& rule : rules_) {
            if (contains(text, rule.token)) {
                score.flagged = true;
                double& s = score.categories[rule.category];
                s = std::max(s, rule.score);
            }
        }
        out.push_back(std::move(score));
    }
    return out;
}

ModerationReport moderate(const std::vector<Conversation>& conversations,
                          ModerationClient& client) {
    struct Item {
        UtteranceRef ref;
        Role role;
        const std::string* text;
    };
    std::vector<Item> items;
    for (const auto& conv : conversations)
        for (std::size_t i = 0; i < conv.turns.size(); ++i)
            items.push_back({{conv.id, i}, conv.turns[i].role, &conv.turns[i].content});

    ModerationReport report;
    const std::size_t batch = std::max<std::size_t>(1, client.batch_limit());
    for (std::size_t start = 0; start < items.size(); start += batch) {
        const std::size_t end = std::min(items.size(), start + batch);
        std::vector<std::string> texts;
        texts.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) texts.push_back(*items[i].text);

        std::vector<ModerationScore> scores;
        try {
            scores = client.classify(texts);
        } catch (const std::exception&) {
            for (std::size_t i = start; i < end; ++i)
                report.unscanned.push_back(items[i].ref);
            continue;
        }
        if (scores.size() != texts.size()) {
            for (std::size_t i = start; i < end; ++i)
                report.unscanned.push_back(items[i].ref);
            continue;
        }
        for (std::size_t i = start; i < end; ++i) {
            ModerationVerdict verdict;
            verdict.ref = items[i].ref;
            verdict.role = items[i].role;
            verdict.flagged = scores[i - start].flagged;
            verdict.categories = std::move(scores[i - start].categories);
            report.verdicts.push_back(std::move(verdict));
        }
    }

    for (const auto& v : report.verdicts) {
        if (v.role == Role::User) {
            ++report.user_turns;
            if (v.flagged) ++report.flagged_user;
        } else if (v.role == Role::Assistant) {
            ++report.assistant_turns;
            if (v.flagged) ++report.flagged_assistant;
        }
    }
    report.rate_user = report.user_turns == 0
                           ? 0.0
                           : static_cast<double>(report.flagged_user) /
                                 static_cast<double>(report.user_turns);
    report.rate_assistant = report.assistant_turns == 0
                                ? 0.0
                                : static_cast<double>(report.flagged_assistant) /
                                      static_cast<double>(report.assistant_turns);
    report.rate_avg = (report.rate_user + report.rate_assistant) / 2.0;
    return report;
}

std::vector<Conversation> strip_flagged(const std::vector<Conversation>& conversations,
                                        const ModerationReport& report) {
    std::set<std::pair<std::string, std::size_t>> flagged;
    for (const auto& v : report.verdicts)
        if (v.flagged) flagged.insert({v.ref.conversation_id, v.ref.turn_index});

    std::vector<Conversation> out;
    out.reserve(conversations.size());
    for (const auto& conv : conversations) {
        Conversation trimmed = conv;
        trimmed.turns.clear();
        for (std::size_t i = 0; i < conv.turns.size(); ++i) {
            if (flagged.count({conv.id, i})) continue;
            // Longest alternating prefix of what remains after removal.
            const Role expect =
                (trimmed.turns.size() % 2 == 0) ? Role::User : Role::Assistant;
            if (conv.turns[i].role != expect) break;
            trimmed.turns.push_back(conv.turns[i]);
        }
        if (!trimmed.turns.empty() && trimmed.turns.back().role == Role::User)
            trimmed.turns.pop_back();
        if (trimmed.turns.empty()) continue;
        out.push_back(std::move(trimmed));
    }
    return out;
}

std::string render_moderation_table(const ModerationReport& report) {
    std::ostringstream out;
    out << std::fixed;
    auto row = [&](const char* label, double rate, int precision) {
        out << std::left << std::setw(8) << label << std::right << std::setw(8)
            << std::setprecision(precision) << rate * 100.0 << "%\n";
    };
    row("User", report.rate_user, 2);
    row("Chatbot", report.rate_assistant, 2);
    row("Avg", report.rate_avg, 3);
    if (!report.unscanned.empty())
        out << "unscanned turns: " << report.unscanned.size() << "\n";
    return out.str();
}

}  // namespace evolforge
