#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctxroute/errors.hpp"
#include "ctxroute/message.hpp"
#include "ctxroute/token_counter.hpp"
#include "ctxroute/tools.hpp"

namespace ctxroute {

struct SamplingParams {
  double temperature = 0.7;
  double top_p = 1.0;
  int max_output_tokens = 4096;
};

struct CompletionRequest {
  MessageSequence messages;
  std::vector<ToolSpec> tool_schemas;
  SamplingParams sampling;
  std::string model_id;
  // Routing scope for scripted matching and capture logs: "main", a branch
  // label, "router", "summarizer", "judge".
  std::string scope = "main";
};

struct Usage {
  long long prompt_tokens = 0;
  long long output_tokens = 0;
  long long total() const { return prompt_tokens + output_tokens; }
};

struct CompletionResult {
  std::string thinking;
  std::vector<ToolCall> tool_calls;
  std::optional<std::string> final_answer;
  Usage usage;
  long long latency_ms = 0;
  int attempts = 1;
  // Set when the model produced neither a tool call nor an answer twice in a
  // row; the caller records a thinking-only turn and moves on.
  bool degenerate = false;
};

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  virtual CompletionResult complete(const CompletionRequest& request) = 0;
  virtual std::string name() const = 0;
};

// Maps one OpenAI-style chat.completions payload to a CompletionResult.
// Exactly one of {tool calls, final answer} comes back; a reply with neither
// raises MalformedResponse so the caller can re-ask once.
inline CompletionResult parse_tool_calls(const nlohmann::json& payload) {
  CompletionResult out;
  if (!payload.contains("choices") || payload["choices"].empty())
    throw MalformedResponse("completion payload has no choices");
  const auto& message = payload["choices"][0]["message"];

  std::string content;
  if (message.contains("content") && message["content"].is_string())
    content = message["content"].get<std::string>();
  std::string reasoning;
  if (message.contains("reasoning_content") && message["reasoning_content"].is_string())
    reasoning = message["reasoning_content"].get<std::string>();

  if (message.contains("tool_calls") && message["tool_calls"].is_array() &&
      !message["tool_calls"].empty()) {
    for (const auto& tc : message["tool_calls"]) {
      if (!tc.contains("function")) continue;
      ToolCall call;
      call.name = tc["function"].value("name", "");
      const auto& args = tc["function"]["arguments"];
      if (args.is_string()) {
        auto parsed = nlohmann::json::parse(args.get<std::string>(), nullptr, false);
        call.arguments = parsed.is_discarded() ? nlohmann::json::object() : parsed;
      } else if (args.is_object()) {
        call.arguments = args;
      }
      out.tool_calls.push_back(std::move(call));
    }
    out.thinking = reasoning.empty() ? content : reasoning;
  } else if (!content.empty()) {
    out.final_answer = content;
    out.thinking = reasoning;
  } else {
    throw MalformedResponse("completion carried neither tool calls nor content");
  }

  if (payload.contains("usage")) {
    out.usage.prompt_tokens = payload["usage"].value("prompt_tokens", 0ll);
    out.usage.output_tokens = payload["usage"].value("completion_tokens", 0ll);
  }
  return out;
}

// One canned reply for the scripted backend.
struct ScriptedReply {
  std::string thinking;
  std::vector<ToolCall> tool_calls;
  std::optional<std::string> final_answer;
  // When set, the rendered request must contain this substring; lets a
  // scenario assert what the agent actually sent.
  std::optional<std::string> expect_contains;
};

// Deterministic replay backend. Replies are keyed by request scope and popped
// in order within each scope; an unknown scope falls back to the "" scope.
// Branch rollouts run under their own scope, so concurrent expansion stays
// reproducible.
class ScriptedBackend : public ModelBackend {
 public:
  void add(const std::string& scope, ScriptedReply reply) {
    std::lock_guard<std::mutex> lock(mutex_);
    scripts_[scope].push_back(std::move(reply));
  }

  CompletionResult complete(const CompletionRequest& request) override {
    ScriptedReply reply;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = scripts_.find(request.scope);
      if (it == scripts_.end() || it->second.empty()) it = scripts_.find("");
      if (it == scripts_.end() || it->second.empty())
        throw ScriptExhausted("script exhausted for scope '" + request.scope + "'");
      reply = std::move(it->second.front());
      it->second.pop_front();
      ++calls_;
    }
    if (reply.expect_contains) {
      std::string rendered = render_plain_text(request.messages);
      if (rendered.find(*reply.expect_contains) == std::string::npos)
        throw ScriptExpectationFailed("request in scope '" + request.scope +
                                      "' does not contain: " + *reply.expect_contains);
    }
    CompletionResult out;
    out.thinking = reply.thinking;
    out.tool_calls = reply.tool_calls;
    out.final_answer = reply.final_answer;
    out.usage.prompt_tokens = counter_.count_messages(request.messages);
    out.usage.output_tokens =
        counter_.count_text(reply.thinking) +
        (reply.final_answer ? counter_.count_text(*reply.final_answer) : 0);
    for (const auto& c : reply.tool_calls) out.usage.output_tokens += counter_.count_text(c.serialized());
    return out;
  }

  std::string name() const override { return "scripted"; }

  int calls() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return calls_;
  }

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::deque<ScriptedReply>> scripts_;
  HeuristicTokenCounter counter_;
  int calls_ = 0;
};

// Pure-function backend: the reply is computed from the request alone. Used
// for rule-driven fake models in tests and anywhere a deterministic
// content-dependent responder is needed.
class CallbackBackend : public ModelBackend {
 public:
  using Fn = std::function<CompletionResult(const CompletionRequest&)>;
  explicit CallbackBackend(Fn fn, std::string name = "callback")
      : fn_(std::move(fn)), name_(std::move(name)) {}

  CompletionResult complete(const CompletionRequest& request) override {
    CompletionResult out = fn_(request);
    if (out.usage.prompt_tokens == 0 && out.usage.output_tokens == 0) {
      out.usage.prompt_tokens = counter_.count_messages(request.messages);
      out.usage.output_tokens =
          counter_.count_text(out.thinking) +
          (out.final_answer ? counter_.count_text(*out.final_answer) : 0);
      for (const auto& c : out.tool_calls) out.usage.output_tokens += counter_.count_text(c.serialized());
    }
    return out;
  }

  std::string name() const override { return name_; }

 private:
  Fn fn_;
  std::string name_;
  HeuristicTokenCounter counter_;
};

// Loads a scripted backend from a JSON file:
//   {"scopes": {"": [{"thinking": "...", "tool_call": {"name": "...", "arguments": {...}}},
//                    {"final_answer": "..."}],
//               "router": [...]}}
inline std::shared_ptr<ScriptedBackend> scripted_backend_from_json(const nlohmann::json& doc) {
  auto backend = std::make_shared<ScriptedBackend>();
  if (!doc.contains("scopes") || !doc["scopes"].is_object())
    throw ConfigInvalid("script file needs a top-level 'scopes' object");
  for (const auto& [scope, replies] : doc["scopes"].items()) {
    if (!replies.is_array()) throw ConfigInvalid("script scope '" + scope + "' must be an array");
    for (const auto& r : replies) {
      ScriptedReply reply;
      reply.thinking = r.value("thinking", "");
      if (r.contains("final_answer")) reply.final_answer = r["final_answer"].get<std::string>();
      if (r.contains("tool_call")) {
        ToolCall call;
        call.name = r["tool_call"].value("name", "");
        if (r["tool_call"].contains("arguments")) call.arguments = r["tool_call"]["arguments"];
        reply.tool_calls.push_back(std::move(call));
      }
      if (r.contains("expect_contains")) reply.expect_contains = r["expect_contains"].get<std::string>();
      backend->add(scope, std::move(reply));
    }
  }
  return backend;
}

}  // namespace ctxroute
