#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctxroute/assets.hpp"
#include "ctxroute/errors.hpp"
#include "ctxroute/router.hpp"
#include "ctxroute/strategy.hpp"
#include "ctxroute/tools.hpp"
#include "ctxroute/trajectory.hpp"
#include "ctxroute/util.hpp"

namespace ctxroute {

struct BackendSpec {
  std::string kind = "http";  // http | scripted
  std::string base_url;
  std::string api_key;
  std::string model_id;
  std::string script_path;  // scripted only
  int max_attempts = 3;
  int timeout_seconds = 120;
  std::string capture_path;
};

inline void to_json(nlohmann::json& j, const BackendSpec& b) {
  j = nlohmann::json{{"kind", b.kind},
                     {"base_url", b.base_url},
                     {"model_id", b.model_id},
                     {"script_path", b.script_path},
                     {"max_attempts", b.max_attempts},
                     {"timeout_seconds", b.timeout_seconds},
                     {"capture_path", b.capture_path}};
  // api_key deliberately left out: digests and persisted configs must never
  // embed credentials.
}
inline void from_json(const nlohmann::json& j, BackendSpec& b) {
  b.kind = j.value("kind", "http");
  b.base_url = j.value("base_url", "");
  b.api_key = j.value("api_key", "");
  b.model_id = j.value("model_id", "");
  b.script_path = j.value("script_path", "");
  b.max_attempts = j.value("max_attempts", 3);
  b.timeout_seconds = j.value("timeout_seconds", 120);
  b.capture_path = j.value("capture_path", "");
}

struct PolicySpec {
  std::string kind = "adaptive";  // baseline | static | adaptive
  Strategy static_strategy = Strategy::discard_all();
  std::vector<Strategy> candidates = {Strategy::discard_all(), Strategy::keep_last_n(5),
                                      Strategy::summary()};
  RouterPolicy router;
  bool allow_singleton = false;  // ablation switch: adaptive with one candidate
  std::vector<StrategyKind> fallback_order = {StrategyKind::KeepLastN, StrategyKind::Summary,
                                              StrategyKind::DiscardAll};

  bool managed() const { return kind != "baseline"; }

  std::string label() const {
    if (kind == "baseline") return "baseline";
    if (kind == "static") return "static:" + static_strategy.spec_string();
    return "adaptive";
  }
};

inline const char* strategy_kind_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::DiscardAll: return "discard_all";
    case StrategyKind::KeepLastN: return "keep_last_n";
    case StrategyKind::Summary: return "summary";
  }
  return "unknown";
}

inline void to_json(nlohmann::json& j, const PolicySpec& p) {
  std::vector<std::string> cands;
  for (const auto& c : p.candidates) cands.push_back(c.spec_string());
  std::vector<std::string> fb;
  for (auto k : p.fallback_order) fb.emplace_back(strategy_kind_name(k));
  j = nlohmann::json{{"kind", p.kind},
                     {"static_strategy", p.static_strategy.spec_string()},
                     {"candidates", cands},
                     {"router", p.router.label()},
                     {"allow_singleton", p.allow_singleton},
                     {"fallback_order", fb}};
}
inline void from_json(const nlohmann::json& j, PolicySpec& p) {
  p.kind = j.value("kind", "adaptive");
  if (j.contains("static_strategy")) {
    auto s = Strategy::parse(j["static_strategy"].get<std::string>());
    if (!s) throw ConfigInvalid("unparseable static_strategy");
    p.static_strategy = *s;
  }
  if (j.contains("candidates")) {
    p.candidates.clear();
    for (const auto& c : j["candidates"]) {
      auto s = Strategy::parse(c.get<std::string>());
      if (!s) throw ConfigInvalid("unparseable candidate strategy: " + c.dump());
      p.candidates.push_back(*s);
    }
  }
  if (j.contains("router")) {
    auto r = RouterPolicy::parse(j["router"].get<std::string>());
    if (!r) throw ConfigInvalid("unparseable router policy");
    p.router = *r;
  }
  p.allow_singleton = j.value("allow_singleton", false);
  if (j.contains("fallback_order")) {
    p.fallback_order.clear();
    for (const auto& f : j["fallback_order"]) {
      std::string name = f.get<std::string>();
      auto s = Strategy::parse(name);
      if (!s) throw ConfigInvalid("unparseable fallback_order entry: " + name);
      p.fallback_order.push_back(s->kind);
    }
  }
}

inline void to_json(nlohmann::json& j, const Budget& b) {
  j = nlohmann::json{{"max_context_tokens", b.max_context_tokens},
                     {"trigger_ratio", b.trigger_ratio},
                     {"max_turns", b.max_turns},
                     {"lookahead_depth", b.lookahead_depth}};
}
inline void from_json(const nlohmann::json& j, Budget& b) {
  b.max_context_tokens = j.value("max_context_tokens", 131072ll);
  b.trigger_ratio = j.value("trigger_ratio", 0.4);
  b.max_turns = j.value("max_turns", 400ll);
  b.lookahead_depth = j.value("lookahead_depth", 3);
}

inline void to_json(nlohmann::json& j, const ToolCaps& c) {
  j = nlohmann::json{{"search", c.search},
                     {"visit", c.visit},
                     {"scholar", c.scholar},
                     {"sandbox", c.sandbox}};
}
inline void from_json(const nlohmann::json& j, ToolCaps& c) {
  c.search = j.value("search", 2000ll);
  c.visit = j.value("visit", 4000ll);
  c.scholar = j.value("scholar", 2000ll);
  c.sandbox = j.value("sandbox", 2000ll);
}

struct RunConfig {
  std::string benchmark_path;
  std::string output_dir = "runs/out";
  std::string system_prompt = assets::kAgentSystemPromptText;
  PolicySpec policy;
  Budget budget;
  BackendSpec agent;
  std::optional<BackendSpec> summarizer;  // default: agent backend
  std::optional<BackendSpec> router;      // default: agent backend
  std::optional<BackendSpec> judge;       // default: agent backend
  std::string tools_mode = "mock";        // mock | live
  std::string corpus_dir;
  std::vector<std::string> enabled_tools = {"search", "visit"};
  ToolCaps caps;
  std::string judge_mode = "exact";  // exact | llm | none
  SamplingParams sampling;
  std::uint64_t seed = 0;
  int task_parallelism = 4;
  bool deterministic = false;
  // 0 means "use max_context_tokens" for the routing call.
  long long router_token_budget = 0;
  std::string counter = "heuristic";  // heuristic | backend_usage
  long long max_tasks = 0;            // 0 = run everything
  // live tools
  std::string search_endpoint;
  std::string scholar_endpoint;
  std::string sandbox_endpoint;

  long long effective_router_budget() const {
    return router_token_budget > 0 ? router_token_budget : budget.max_context_tokens;
  }
};

inline void to_json(nlohmann::json& j, const SamplingParams& s) {
  j = nlohmann::json{{"temperature", s.temperature},
                     {"top_p", s.top_p},
                     {"max_output_tokens", s.max_output_tokens}};
}
inline void from_json(const nlohmann::json& j, SamplingParams& s) {
  s.temperature = j.value("temperature", 0.7);
  s.top_p = j.value("top_p", 1.0);
  s.max_output_tokens = j.value("max_output_tokens", 4096);
}

inline void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json{{"benchmark", c.benchmark_path},
                     {"output_dir", c.output_dir},
                     {"system_prompt", c.system_prompt},
                     {"policy", c.policy},
                     {"budget", c.budget},
                     {"agent", c.agent},
                     {"tools_mode", c.tools_mode},
                     {"corpus_dir", c.corpus_dir},
                     {"enabled_tools", c.enabled_tools},
                     {"caps", c.caps},
                     {"judge_mode", c.judge_mode},
                     {"sampling", c.sampling},
                     {"seed", c.seed},
                     {"task_parallelism", c.task_parallelism},
                     {"deterministic", c.deterministic},
                     {"router_token_budget", c.router_token_budget},
                     {"counter", c.counter},
                     {"max_tasks", c.max_tasks},
                     {"search_endpoint", c.search_endpoint},
                     {"scholar_endpoint", c.scholar_endpoint},
                     {"sandbox_endpoint", c.sandbox_endpoint}};
  if (c.summarizer) j["summarizer"] = *c.summarizer;
  if (c.router) j["router_backend"] = *c.router;
  if (c.judge) j["judge_backend"] = *c.judge;
}
inline void from_json(const nlohmann::json& j, RunConfig& c) {
  c.benchmark_path = j.value("benchmark", "");
  c.output_dir = j.value("output_dir", "runs/out");
  c.system_prompt = j.value("system_prompt", std::string(assets::kAgentSystemPromptText));
  if (j.contains("policy")) c.policy = j["policy"].get<PolicySpec>();
  if (j.contains("budget")) c.budget = j["budget"].get<Budget>();
  if (j.contains("agent")) c.agent = j["agent"].get<BackendSpec>();
  if (j.contains("summarizer")) c.summarizer = j["summarizer"].get<BackendSpec>();
  if (j.contains("router_backend")) c.router = j["router_backend"].get<BackendSpec>();
  if (j.contains("judge_backend")) c.judge = j["judge_backend"].get<BackendSpec>();
  c.tools_mode = j.value("tools_mode", "mock");
  c.corpus_dir = j.value("corpus_dir", "");
  c.enabled_tools = j.value("enabled_tools", std::vector<std::string>{"search", "visit"});
  if (j.contains("caps")) c.caps = j["caps"].get<ToolCaps>();
  c.judge_mode = j.value("judge_mode", "exact");
  if (j.contains("sampling")) c.sampling = j["sampling"].get<SamplingParams>();
  c.seed = j.value("seed", 0ull);
  c.task_parallelism = j.value("task_parallelism", 4);
  c.deterministic = j.value("deterministic", false);
  c.router_token_budget = j.value("router_token_budget", 0ll);
  c.counter = j.value("counter", "heuristic");
  c.max_tasks = j.value("max_tasks", 0ll);
  c.search_endpoint = j.value("search_endpoint", "");
  c.scholar_endpoint = j.value("scholar_endpoint", "");
  c.sandbox_endpoint = j.value("sandbox_endpoint", "");
}

// Digest identifying "the same experiment": excludes fields that change where
// results land or how fast they are produced but not what they are
// (output_dir, task_parallelism, max_tasks).
inline std::string config_digest(const RunConfig& c) {
  nlohmann::json j = c;
  j.erase("output_dir");
  j.erase("task_parallelism");
  j.erase("max_tasks");
  return "cfg-" + fnv1a64_hex(j.dump());
}

inline void validate_config(const RunConfig& c) {
  if (c.benchmark_path.empty()) throw ConfigInvalid("benchmark task file is required");
  if (c.budget.max_context_tokens <= 0) throw ConfigInvalid("max_context_tokens must be positive");
  if (c.budget.max_turns <= 0) throw ConfigInvalid("max_turns must be positive");
  if (!(c.budget.trigger_ratio > 0.0 && c.budget.trigger_ratio <= 1.0))
    throw ConfigInvalid("trigger_ratio must lie in (0, 1]");
  if (c.budget.lookahead_depth < 0) throw ConfigInvalid("lookahead_depth must be >= 0");

  if (c.policy.kind != "baseline" && c.policy.kind != "static" && c.policy.kind != "adaptive")
    throw ConfigInvalid("policy kind must be baseline, static or adaptive");
  if (c.policy.kind == "adaptive") {
    if (c.policy.candidates.empty()) throw ConfigInvalid("adaptive policy has no candidates");
    if (c.policy.candidates.size() == 1 && !c.policy.allow_singleton)
      throw ConfigInvalid("adaptive policy needs >= 2 candidates (or allow_singleton)");
    std::set<std::string> labels;
    for (const auto& s : c.policy.candidates)
      if (!labels.insert(s.label()).second)
        throw ConfigInvalid("duplicate candidate strategy: " + s.label());
    for (const auto& s : c.policy.candidates)
      if (s.kind == StrategyKind::Summary &&
          s.summary_token_cap >= c.budget.trigger_threshold())
        throw ConfigInvalid("summary token cap must sit below the trigger threshold");
  }
  if (c.policy.kind == "static" && c.policy.static_strategy.kind == StrategyKind::Summary &&
      c.policy.static_strategy.summary_token_cap >= c.budget.trigger_threshold())
    throw ConfigInvalid("summary token cap must sit below the trigger threshold");

  if (c.tools_mode != "mock" && c.tools_mode != "live")
    throw ConfigInvalid("tools_mode must be mock or live");
  if (c.tools_mode == "mock" && c.corpus_dir.empty())
    throw ConfigInvalid("mock tools need corpus_dir");
  if (c.judge_mode != "exact" && c.judge_mode != "llm" && c.judge_mode != "none")
    throw ConfigInvalid("judge_mode must be exact, llm or none");
  if (c.counter != "heuristic" && c.counter != "backend_usage")
    throw ConfigInvalid("counter must be heuristic or backend_usage");
  if (c.task_parallelism < 1) throw ConfigInvalid("task_parallelism must be >= 1");
  if (c.agent.kind != "http" && c.agent.kind != "scripted")
    throw ConfigInvalid("agent backend kind must be http or scripted");
  if (c.agent.kind == "scripted" && c.agent.script_path.empty())
    throw ConfigInvalid("scripted backend needs script_path");
  if (c.caps.search <= 0 || c.caps.visit <= 0 || c.caps.scholar <= 0 || c.caps.sandbox <= 0)
    throw ConfigInvalid("tool result caps must be positive");
}

}  // namespace ctxroute
