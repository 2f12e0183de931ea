#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace ctxroute {

struct ToolCall {
  std::string name;
  nlohmann::json arguments = nlohmann::json::object();

  // Canonical text form used for token accounting and digests. nlohmann
  // objects keep keys sorted, so dump() is deterministic.
  std::string serialized() const { return name + "(" + arguments.dump() + ")"; }

  bool operator==(const ToolCall& o) const {
    return name == o.name && arguments == o.arguments;
  }
};

enum class Role { System, User, Assistant, Tool };

inline const char* role_name(Role r) {
  switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    case Role::Tool: return "tool";
  }
  return "unknown";
}

struct Message {
  Role role = Role::User;
  std::string content;
  std::optional<ToolCall> tool_call;      // assistant messages only
  std::optional<std::string> tool_call_id;  // pairs assistant call with tool reply

  static Message system(std::string text) { return Message{Role::System, std::move(text), {}, {}}; }
  static Message user(std::string text) { return Message{Role::User, std::move(text), {}, {}}; }
  static Message assistant(std::string text) { return Message{Role::Assistant, std::move(text), {}, {}}; }
};

using MessageSequence = std::vector<Message>;

// Flat text view of a message sequence. Used for digests, scripted-backend
// expectation checks and the router's raw-context view.
inline std::string render_plain_text(const MessageSequence& msgs) {
  std::string out;
  for (const auto& m : msgs) {
    out += role_name(m.role);
    out += ": ";
    out += m.content;
    if (m.tool_call) {
      if (!m.content.empty()) out += "\n";
      out += "-> ";
      out += m.tool_call->serialized();
    }
    out += "\n";
  }
  return out;
}

}  // namespace ctxroute
