#include <catch2/catch_amalgamated.hpp>

#include "ctxroute/message.hpp"

using namespace ctxroute;

TEST_CASE("tool call serialization is canonical", "[message]") {
  ToolCall call{"search", nlohmann::json{{"queries", {"alpha"}}}};
  CHECK(call.serialized() == "search({\"queries\":[\"alpha\"]})");
  // nlohmann objects iterate in key order, so the dump is stable regardless
  // of insertion order.
  ToolCall scrambled{"visit", nlohmann::json{{"urls", {"u"}}, {"goal", "g"}}};
  CHECK(scrambled.serialized() == "visit({\"goal\":\"g\",\"urls\":[\"u\"]})");
}

TEST_CASE("tool call equality ignores nothing", "[message]") {
  ToolCall a{"search", nlohmann::json{{"q", 1}}};
  ToolCall b{"search", nlohmann::json{{"q", 1}}};
  ToolCall c{"search", nlohmann::json{{"q", 2}}};
  CHECK(a == b);
  CHECK_FALSE(a == c);
}

TEST_CASE("role names match the wire protocol", "[message]") {
  CHECK(std::string(role_name(Role::System)) == "system");
  CHECK(std::string(role_name(Role::User)) == "user");
  CHECK(std::string(role_name(Role::Assistant)) == "assistant");
  CHECK(std::string(role_name(Role::Tool)) == "tool");
}

TEST_CASE("message factories set role and content", "[message]") {
  auto m = Message::assistant("done");
  CHECK(m.role == Role::Assistant);
  CHECK(m.content == "done");
  CHECK_FALSE(m.tool_call.has_value());
  CHECK_FALSE(m.tool_call_id.has_value());
}

TEST_CASE("render_plain_text is line oriented and stable", "[message]") {
  MessageSequence msgs;
  msgs.push_back(Message::system("be brief"));
  msgs.push_back(Message::user("find it"));
  Message call = Message::assistant("looking");
  call.tool_call = ToolCall{"search", nlohmann::json{{"queries", {"x"}}}};
  msgs.push_back(call);
  Message reply{Role::Tool, "RESULTS", {}, std::string("call_0")};
  msgs.push_back(reply);

  std::string expected =
      "system: be brief\n"
      "user: find it\n"
      "assistant: looking\n"
      "-> search({\"queries\":[\"x\"]})\n"
      "tool: RESULTS\n";
  CHECK(render_plain_text(msgs) == expected);
}

TEST_CASE("render_plain_text omits the blank line for empty content", "[message]") {
  Message call = Message::assistant("");
  call.tool_call = ToolCall{"noop", nlohmann::json::object()};
  CHECK(render_plain_text({call}) == "assistant: -> noop({})\n");
}
