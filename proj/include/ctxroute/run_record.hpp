#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctxroute/agent_step.hpp"
#include "ctxroute/errors.hpp"
#include "ctxroute/judge.hpp"
#include "ctxroute/router.hpp"
#include "ctxroute/trajectory.hpp"
#include "ctxroute/version.hpp"

namespace ctxroute {

// Snapshot of one branch at routing time, as persisted.
struct BranchRecord {
  std::string strategy;  // spec string, e.g. keep_last_n:5
  std::string label;
  std::string status;
  long long token_spend = 0;
  long long managed_tokens = 0;
  int retained_turns = 0;
  bool summary_truncated = false;
  bool fallback_applied = false;
  std::string fallback_note;
  std::optional<std::string> answer;
  std::string failure_reason;
  std::optional<std::string> summary_text;
  std::vector<Turn> lookahead_turns;
};

struct RoutingRecord {
  int trigger_index = 0;
  std::vector<std::string> candidates;  // labels in configured order
  std::string chosen;
  std::string policy;
  std::vector<int> permutation;
  std::string rationale;
  bool fallback_used = false;
  bool raw_view_truncated = false;
  long long router_tokens = 0;
  std::vector<BranchRecord> branches;
};

struct VerdictRecord {
  std::string mode;  // exact_match | llm_judge | simulated
  bool correct = false;
  std::string rationale;
  bool parse_failure = false;
};

// One task execution, self-contained: every aggregate metric is recomputable
// from these records alone.
struct RunRecord {
  int schema_version = kRecordSchemaVersion;
  std::string task_id;
  std::optional<std::string> gold;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::string policy;  // baseline | static:<strategy> | adaptive
  std::string counter;
  std::string backend;
  std::string status = "finished";  // finished | exhausted | error
  std::optional<std::string> exhaust_reason;
  std::optional<std::string> final_answer;
  std::optional<VerdictRecord> verdict;  // absent on exhausted or unjudged runs
  long long turns_consumed = 0;
  long long total_tokens = 0;  // includes every discarded branch's spend
  long long final_context_tokens = 0;
  double wall_time_ms = 0.0;  // zeroed in deterministic mode
  std::vector<TriggerEvent> trigger_events;
  std::vector<RoutingRecord> routing;
  std::vector<Turn> turns;  // final context window
  RunFlags flags;
  std::map<std::string, std::string> assets;  // asset name -> version#hash
  std::string error;  // set when status == "error"

  bool finished() const { return status == "finished"; }
  bool judged() const { return verdict.has_value(); }
  bool correct() const { return verdict && verdict->correct; }
};

struct RunSet {
  std::string label;  // strategy/policy label this set represents
  std::vector<RunRecord> records;
};

// ---- JSON mapping. nlohmann keeps object keys sorted, so dump() of these is
// byte-stable for identical content.

inline void to_json(nlohmann::json& j, const ToolCall& c) {
  j = nlohmann::json{{"name", c.name}, {"arguments", c.arguments}};
}
inline void from_json(const nlohmann::json& j, ToolCall& c) {
  c.name = j.value("name", "");
  c.arguments = j.value("arguments", nlohmann::json::object());
}

inline void to_json(nlohmann::json& j, const Turn& t) {
  j = nlohmann::json{{"index", t.index}, {"thinking", t.thinking}, {"token_cost", t.token_cost}};
  if (t.tool_call) j["tool_call"] = *t.tool_call;
  if (t.tool_response) j["tool_response"] = *t.tool_response;
  if (t.origin_index) j["origin_index"] = *t.origin_index;
}
inline void from_json(const nlohmann::json& j, Turn& t) {
  t.index = j.value("index", 0);
  t.thinking = j.value("thinking", "");
  t.token_cost = j.value("token_cost", 0ll);
  if (j.contains("tool_call")) t.tool_call = j["tool_call"].get<ToolCall>();
  if (j.contains("tool_response")) t.tool_response = j["tool_response"].get<std::string>();
  if (j.contains("origin_index")) t.origin_index = j["origin_index"].get<int>();
}

inline void to_json(nlohmann::json& j, const TriggerEvent& e) {
  j = nlohmann::json{{"at_turn", e.at_turn}, {"context_tokens", e.context_tokens}};
}
inline void from_json(const nlohmann::json& j, TriggerEvent& e) {
  e.at_turn = j.value("at_turn", 0ll);
  e.context_tokens = j.value("context_tokens", 0ll);
}

inline void to_json(nlohmann::json& j, const RunFlags& f) {
  j = nlohmann::json{{"response_truncations", f.response_truncations},
                     {"degenerate_turns", f.degenerate_turns},
                     {"summary_truncations", f.summary_truncations},
                     {"strategy_fallbacks", f.strategy_fallbacks},
                     {"router_fallbacks", f.router_fallbacks}};
}
inline void from_json(const nlohmann::json& j, RunFlags& f) {
  f.response_truncations = j.value("response_truncations", 0);
  f.degenerate_turns = j.value("degenerate_turns", 0);
  f.summary_truncations = j.value("summary_truncations", 0);
  f.strategy_fallbacks = j.value("strategy_fallbacks", 0);
  f.router_fallbacks = j.value("router_fallbacks", 0);
}

inline void to_json(nlohmann::json& j, const VerdictRecord& v) {
  j = nlohmann::json{{"mode", v.mode},
                     {"correct", v.correct},
                     {"rationale", v.rationale},
                     {"parse_failure", v.parse_failure}};
}
inline void from_json(const nlohmann::json& j, VerdictRecord& v) {
  v.mode = j.value("mode", "exact_match");
  v.correct = j.value("correct", false);
  v.rationale = j.value("rationale", "");
  v.parse_failure = j.value("parse_failure", false);
}

inline void to_json(nlohmann::json& j, const BranchRecord& b) {
  j = nlohmann::json{{"strategy", b.strategy},
                     {"label", b.label},
                     {"status", b.status},
                     {"token_spend", b.token_spend},
                     {"managed_tokens", b.managed_tokens},
                     {"retained_turns", b.retained_turns},
                     {"summary_truncated", b.summary_truncated},
                     {"fallback_applied", b.fallback_applied},
                     {"lookahead_turns", b.lookahead_turns}};
  if (!b.fallback_note.empty()) j["fallback_note"] = b.fallback_note;
  if (b.answer) j["answer"] = *b.answer;
  if (!b.failure_reason.empty()) j["failure_reason"] = b.failure_reason;
  if (b.summary_text) j["summary_text"] = *b.summary_text;
}
inline void from_json(const nlohmann::json& j, BranchRecord& b) {
  b.strategy = j.value("strategy", "");
  b.label = j.value("label", "");
  b.status = j.value("status", "");
  b.token_spend = j.value("token_spend", 0ll);
  b.managed_tokens = j.value("managed_tokens", 0ll);
  b.retained_turns = j.value("retained_turns", 0);
  b.summary_truncated = j.value("summary_truncated", false);
  b.fallback_applied = j.value("fallback_applied", false);
  b.fallback_note = j.value("fallback_note", "");
  if (j.contains("answer")) b.answer = j["answer"].get<std::string>();
  b.failure_reason = j.value("failure_reason", "");
  if (j.contains("summary_text")) b.summary_text = j["summary_text"].get<std::string>();
  if (j.contains("lookahead_turns")) b.lookahead_turns = j["lookahead_turns"].get<std::vector<Turn>>();
}

inline void to_json(nlohmann::json& j, const RoutingRecord& r) {
  j = nlohmann::json{{"trigger_index", r.trigger_index},
                     {"candidates", r.candidates},
                     {"chosen", r.chosen},
                     {"policy", r.policy},
                     {"permutation", r.permutation},
                     {"rationale", r.rationale},
                     {"fallback_used", r.fallback_used},
                     {"raw_view_truncated", r.raw_view_truncated},
                     {"router_tokens", r.router_tokens},
                     {"branches", r.branches}};
}
inline void from_json(const nlohmann::json& j, RoutingRecord& r) {
  r.trigger_index = j.value("trigger_index", 0);
  r.candidates = j.value("candidates", std::vector<std::string>{});
  r.chosen = j.value("chosen", "");
  r.policy = j.value("policy", "");
  r.permutation = j.value("permutation", std::vector<int>{});
  r.rationale = j.value("rationale", "");
  r.fallback_used = j.value("fallback_used", false);
  r.raw_view_truncated = j.value("raw_view_truncated", false);
  r.router_tokens = j.value("router_tokens", 0ll);
  if (j.contains("branches")) r.branches = j["branches"].get<std::vector<BranchRecord>>();
}

inline void to_json(nlohmann::json& j, const RunRecord& r) {
  j = nlohmann::json{{"schema_version", r.schema_version},
                     {"task_id", r.task_id},
                     {"config_digest", r.config_digest},
                     {"seed", r.seed},
                     {"policy", r.policy},
                     {"counter", r.counter},
                     {"backend", r.backend},
                     {"status", r.status},
                     {"turns_consumed", r.turns_consumed},
                     {"total_tokens", r.total_tokens},
                     {"final_context_tokens", r.final_context_tokens},
                     {"wall_time_ms", r.wall_time_ms},
                     {"trigger_events", r.trigger_events},
                     {"routing", r.routing},
                     {"turns", r.turns},
                     {"flags", r.flags},
                     {"assets", r.assets}};
  if (r.gold) j["gold"] = *r.gold;
  if (r.exhaust_reason) j["exhaust_reason"] = *r.exhaust_reason;
  if (r.final_answer) j["final_answer"] = *r.final_answer;
  if (r.verdict) j["verdict"] = *r.verdict;
  if (!r.error.empty()) j["error"] = r.error;
}
inline void from_json(const nlohmann::json& j, RunRecord& r) {
  r.schema_version = j.value("schema_version", 0);
  if (r.schema_version != kRecordSchemaVersion)
    throw SchemaMismatch("run record schema_version " + std::to_string(r.schema_version) +
                         " != supported " + std::to_string(kRecordSchemaVersion));
  r.task_id = j.value("task_id", "");
  if (j.contains("gold")) r.gold = j["gold"].get<std::string>();
  r.config_digest = j.value("config_digest", "");
  r.seed = j.value("seed", 0ull);
  r.policy = j.value("policy", "");
  r.counter = j.value("counter", "");
  r.backend = j.value("backend", "");
  r.status = j.value("status", "");
  if (j.contains("exhaust_reason")) r.exhaust_reason = j["exhaust_reason"].get<std::string>();
  if (j.contains("final_answer")) r.final_answer = j["final_answer"].get<std::string>();
  if (j.contains("verdict")) r.verdict = j["verdict"].get<VerdictRecord>();
  r.turns_consumed = j.value("turns_consumed", 0ll);
  r.total_tokens = j.value("total_tokens", 0ll);
  r.final_context_tokens = j.value("final_context_tokens", 0ll);
  r.wall_time_ms = j.value("wall_time_ms", 0.0);
  if (j.contains("trigger_events"))
    r.trigger_events = j["trigger_events"].get<std::vector<TriggerEvent>>();
  if (j.contains("routing")) r.routing = j["routing"].get<std::vector<RoutingRecord>>();
  if (j.contains("turns")) r.turns = j["turns"].get<std::vector<Turn>>();
  if (j.contains("flags")) r.flags = j["flags"].get<RunFlags>();
  if (j.contains("assets")) r.assets = j["assets"].get<std::map<std::string, std::string>>();
  r.error = j.value("error", "");
}

inline BranchRecord make_branch_record(const Branch& b) {
  BranchRecord rec;
  rec.strategy = b.strategy.spec_string();
  rec.label = b.strategy.label();
  rec.status = branch_status_name(b.status);
  rec.token_spend = b.token_spend;
  rec.managed_tokens = b.managed.token_count;
  rec.retained_turns = static_cast<int>(b.managed.retained_turns.size());
  rec.summary_truncated = b.managed.summary_truncated;
  rec.fallback_applied = b.managed.fallback_applied;
  rec.fallback_note = b.managed.fallback_note;
  if (b.status == BranchStatus::FinishedEarly) rec.answer = b.answer;
  rec.failure_reason = b.failure_reason;
  rec.summary_text = b.managed.summary_text;
  rec.lookahead_turns = b.lookahead_turns;
  return rec;
}

}  // namespace ctxroute
