#pragma once

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "ctxroute/backend.hpp"
#include "ctxroute/errors.hpp"
#include "ctxroute/token_counter.hpp"

namespace ctxroute {

struct HttpBackendConfig {
  std::string base_url;   // http://host:port, path /v1/chat/completions is appended
  std::string api_key;
  std::string model_id;
  int max_attempts = 3;
  int timeout_seconds = 120;
  double backoff_base_seconds = 0.5;
  std::string capture_path;  // when set, request/response pairs are mirrored as JSONL
};

inline nlohmann::json chat_request_payload(const CompletionRequest& req,
                                           const std::string& default_model) {
  nlohmann::json body;
  body["model"] = req.model_id.empty() ? default_model : req.model_id;
  body["temperature"] = req.sampling.temperature;
  body["top_p"] = req.sampling.top_p;
  body["max_tokens"] = req.sampling.max_output_tokens;
  auto messages = nlohmann::json::array();
  for (const auto& m : req.messages) {
    nlohmann::json jm;
    jm["role"] = role_name(m.role);
    jm["content"] = m.content;
    if (m.tool_call) {
      nlohmann::json call;
      call["id"] = m.tool_call_id ? *m.tool_call_id : "call_0";
      call["type"] = "function";
      call["function"] = {{"name", m.tool_call->name},
                          {"arguments", m.tool_call->arguments.dump()}};
      jm["tool_calls"] = nlohmann::json::array({call});
    }
    if (m.role == Role::Tool && m.tool_call_id) jm["tool_call_id"] = *m.tool_call_id;
    messages.push_back(std::move(jm));
  }
  body["messages"] = std::move(messages);
  if (!req.tool_schemas.empty()) {
    auto tools = nlohmann::json::array();
    for (const auto& t : req.tool_schemas) {
      tools.push_back({{"type", "function"},
                       {"function", {{"name", t.name},
                                     {"description", t.description},
                                     {"parameters", t.parameters}}}});
    }
    body["tools"] = std::move(tools);
  }
  return body;
}

// OpenAI-compatible chat client. Retries 429/5xx/transport errors with
// exponential backoff plus jitter; a reply with neither tool calls nor
// content gets one re-ask before the turn is declared degenerate.
class HttpBackend : public ModelBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config,
                       std::shared_ptr<UsageState> usage = nullptr)
      : config_(std::move(config)), usage_(std::move(usage)),
        rng_(std::random_device{}()) {}

  CompletionResult complete(const CompletionRequest& request) override {
    nlohmann::json body = chat_request_payload(request, config_.model_id);
    auto started = std::chrono::steady_clock::now();
    for (int ask = 0; ask < 2; ++ask) {
      nlohmann::json payload = post_with_retry(body, request.scope);
      try {
        CompletionResult out = parse_tool_calls(payload);
        out.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - started).count();
        out.attempts = attempts_used_;
        publish_usage(out);
        return out;
      } catch (const MalformedResponse&) {
        if (ask == 1) {
          CompletionResult out;
          out.degenerate = true;
          out.thinking = payload.dump();
          out.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - started).count();
          return out;
        }
      }
    }
    throw BackendUnavailable("unreachable");
  }

  std::string name() const override { return "http:" + config_.model_id; }

 private:
  nlohmann::json post_with_retry(const nlohmann::json& body, const std::string& scope) {
    std::string last_error;
    attempts_used_ = 0;
    for (int attempt = 0; attempt < config_.max_attempts; ++attempt) {
      ++attempts_used_;
      if (attempt > 0) {
        double sleep_s = config_.backoff_base_seconds * (1 << (attempt - 1));
        std::uniform_real_distribution<double> jitter(0.0, sleep_s / 2.0);
        {
          std::lock_guard<std::mutex> lock(rng_mutex_);
          sleep_s += jitter(rng_);
        }
        std::this_thread::sleep_for(std::chrono::duration<double>(sleep_s));
      }
      httplib::Client client(config_.base_url);
      client.set_read_timeout(config_.timeout_seconds, 0);
      client.set_connection_timeout(10, 0);
      httplib::Headers headers;
      if (!config_.api_key.empty())
        headers.emplace("Authorization", "Bearer " + config_.api_key);
      auto res = client.Post("/v1/chat/completions", headers, body.dump(), "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "http " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200)
        throw BackendUnavailable("chat completion failed with http " +
                                 std::to_string(res->status) + ": " + res->body);
      auto payload = nlohmann::json::parse(res->body, nullptr, false);
      if (payload.is_discarded()) {
        last_error = "unparseable response body";
        continue;
      }
      capture(scope, body, payload);
      return payload;
    }
    throw BackendUnavailable("chat completion gave up after " +
                             std::to_string(config_.max_attempts) + " attempts; last: " +
                             last_error);
  }

  void publish_usage(const CompletionResult& out) {
    if (!usage_) return;
    usage_->last_prompt_tokens.store(out.usage.prompt_tokens);
    usage_->fresh.store(true);
  }

  void capture(const std::string& scope, const nlohmann::json& request,
               const nlohmann::json& response) {
    if (config_.capture_path.empty()) return;
    std::lock_guard<std::mutex> lock(capture_mutex_);
    std::ofstream out(config_.capture_path, std::ios::app);
    nlohmann::json line;
    line["scope"] = scope;
    line["request"] = request;
    line["response"] = response;
    out << line.dump() << "\n";
  }

  HttpBackendConfig config_;
  std::shared_ptr<UsageState> usage_;
  std::mt19937_64 rng_;
  std::mutex rng_mutex_;
  std::mutex capture_mutex_;
  int attempts_used_ = 0;
};

// Environment-variable fallbacks: CTXROUTE_<ROLE>_BASE_URL / _API_KEY /
// _MODEL, with CTXROUTE_BASE_URL etc. as the shared default.
inline void apply_env_overrides(HttpBackendConfig& config, const std::string& role) {
  auto read = [](const std::string& key) -> std::string {
    const char* v = std::getenv(key.c_str());
    return v ? v : "";
  };
  std::string upper_role = role;
  for (auto& c : upper_role) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  auto pick = [&](const std::string& suffix, std::string& field) {
    if (!field.empty()) return;
    std::string scoped = read("CTXROUTE_" + upper_role + "_" + suffix);
    if (!scoped.empty()) { field = scoped; return; }
    std::string shared = read("CTXROUTE_" + suffix);
    if (!shared.empty()) field = shared;
  };
  pick("BASE_URL", config.base_url);
  pick("API_KEY", config.api_key);
  pick("MODEL", config.model_id);
}

}  // namespace ctxroute
