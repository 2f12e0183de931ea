#include <catch2/catch_amalgamated.hpp>

#include "ctxroute/message.hpp"
#include "ctxroute/token_counter.hpp"

using namespace ctxroute;

TEST_CASE("heuristic counter is ceil of bytes over four", "[tokens]") {
  HeuristicTokenCounter counter;
  CHECK(counter.count_text("") == 0);
  CHECK(counter.count_text("a") == 1);
  CHECK(counter.count_text("abcd") == 1);
  CHECK(counter.count_text("abcde") == 2);
  CHECK(counter.count_text(std::string(400, 'x')) == 100);
  CHECK(counter.count_text(std::string(401, 'x')) == 101);
  CHECK(counter.name() == "heuristic_bytes_4");
}

TEST_CASE("count_messages sums every piece", "[tokens]") {
  HeuristicTokenCounter counter;
  MessageSequence msgs;
  msgs.push_back(Message::system(std::string(40, 's')));
  msgs.push_back(Message::user(std::string(23, 'u')));
  Message call = Message::assistant(std::string(9, 't'));
  call.tool_call = ToolCall{"search", nlohmann::json{{"queries", {"abc"}}}};
  msgs.push_back(call);

  long long expected = counter.count_text(std::string(40, 's')) +
                       counter.count_text(std::string(23, 'u')) +
                       counter.count_text(std::string(9, 't')) +
                       counter.count_text(call.tool_call->serialized());
  CHECK(counter.count_messages(msgs) == expected);
}

TEST_CASE("count_messages is additive over appends", "[tokens]") {
  HeuristicTokenCounter counter;
  MessageSequence msgs;
  msgs.push_back(Message::system("sys prompt"));
  long long before = counter.count_messages(msgs);
  msgs.push_back(Message::user("a longer user question here"));
  long long after = counter.count_messages(msgs);
  CHECK(after - before == counter.count_text("a longer user question here"));
}

TEST_CASE("heuristic_counter returns a stable singleton", "[tokens]") {
  CHECK(&heuristic_counter() == &heuristic_counter());
  CHECK(heuristic_counter().count_text("abcd") == 1);
}

TEST_CASE("backend usage counter prefers fresh backend counts", "[tokens]") {
  auto state = std::make_shared<UsageState>();
  BackendUsageCounter counter(state);
  MessageSequence msgs;
  msgs.push_back(Message::user(std::string(80, 'q')));

  // no backend report yet: falls back to the heuristic sum.
  CHECK(counter.count_messages(msgs) == heuristic_counter().count_messages(msgs));

  state->last_prompt_tokens.store(1234);
  state->fresh.store(true);
  CHECK(counter.count_messages(msgs) == 1234);
  state->fresh.store(false);
  CHECK(counter.count_messages(msgs) == heuristic_counter().count_messages(msgs));

  // plain text counting never consults the backend.
  CHECK(counter.count_text("abcd") == 1);
  CHECK(counter.name() == "backend_usage");
}
