#pragma once

#include <string>
#include <vector>

#include "evolforge/errors.hpp"

namespace evolforge {

enum class Role { System, User, Assistant };

inline const char* to_string(Role r) {
    switch (r) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

inline Role role_from_string(const std::string& s) {
    if (s == "system") return Role::System;
    if (s == "user") return Role::User;
    if (s == "assistant") return Role::Assistant;
    throw DataError("chat/bad-role", "unknown role: " + s);
}

/// One chat-completion message.
struct Message {
    Role role = Role::User;
    std::string content;
};

using MessageSequence = std::vector<Message>;

/// One conversation turn. follow_up_type is set only on user turns
/// generated from a dialogue variation (never on the opening turn).
struct Turn {
    Role role = Role::User;
    std::string content;
    std::string follow_up_type;  // variation id, empty when not applicable
};

enum class ConversationStatus { Complete, TruncatedFailure };

inline const char* to_string(ConversationStatus s) {
    return s == ConversationStatus::Complete ? "complete" : "truncated-failure";
}

inline ConversationStatus conversation_status_from_string(const std::string& s) {
    if (s == "complete") return ConversationStatus::Complete;
    if (s == "truncated-failure") return ConversationStatus::TruncatedFailure;
    throw DataError("chat/bad-status", "unknown conversation status: " + s);
}

/// A grown multi-turn conversation rooted at one evolved record.
struct Conversation {
    std::string id;
    std::string root;      // EvolRecord id
    std::string language;  // constant across the conversation
    std::vector<Turn> turns;
    ConversationStatus status = ConversationStatus::Complete;

    std::size_t user_turn_count() const {
        std::size_t n = 0;
        for (const auto& t : turns)
            if (t.role == Role::User) ++n;
        return n;
    }
};

/// Strict alternation starting with a user turn.
inline bool roles_alternate(const std::vector<Turn>& turns) {
    for (std::size_t i = 0; i < turns.size(); ++i) {
        Role expect = (i % 2 == 0) ? Role::User : Role::Assistant;
        if (turns[i].role != expect) return false;
    }
    return true;
}

}  // namespace evolforge
