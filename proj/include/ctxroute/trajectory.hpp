#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ctxroute/errors.hpp"
#include "ctxroute/message.hpp"
#include "ctxroute/token_counter.hpp"

namespace ctxroute {

// One agent step: thinking, optionally a tool call, optionally the tool's
// observation. A turn with a call but no response is "in flight" and only
// legal as the last turn of an active trajectory.
struct Turn {
  int index = 0;
  std::string thinking;
  std::optional<ToolCall> tool_call;
  std::optional<std::string> tool_response;
  long long token_cost = 0;
  // Original position before a keep-last-n re-base; provenance only.
  std::optional<int> origin_index;

  bool in_flight() const { return tool_call.has_value() && !tool_response.has_value(); }
};

inline long long turn_token_cost(const Turn& t, const TokenCounter& counter) {
  long long cost = counter.count_text(t.thinking);
  if (t.tool_call) cost += counter.count_text(t.tool_call->serialized());
  if (t.tool_response) cost += counter.count_text(*t.tool_response);
  return cost;
}

// Everything except position: retained turns must survive compaction with
// their bytes intact even though their index gets re-based.
inline bool turn_content_equal(const Turn& a, const Turn& b) {
  return a.thinking == b.thinking && a.tool_call == b.tool_call &&
         a.tool_response == b.tool_response && a.token_cost == b.token_cost;
}

struct Budget {
  long long max_context_tokens = 131072;
  double trigger_ratio = 0.4;
  long long max_turns = 400;
  int lookahead_depth = 3;

  // Integer threshold so the strict comparison is reproducible: 0.2 * 128000
  // must mean exactly 25600 regardless of float representation.
  long long trigger_threshold() const {
    return static_cast<long long>(
        std::llround(trigger_ratio * static_cast<double>(max_context_tokens)));
  }
};

enum class RunStatus { Active, Finished, Exhausted };

enum class ExhaustReason { TurnBudget, ContextOverflowUnmanaged, BackendFailure };

inline const char* run_status_name(RunStatus s) {
  switch (s) {
    case RunStatus::Active: return "active";
    case RunStatus::Finished: return "finished";
    case RunStatus::Exhausted: return "exhausted";
  }
  return "unknown";
}

inline const char* exhaust_reason_name(ExhaustReason r) {
  switch (r) {
    case ExhaustReason::TurnBudget: return "turn_budget";
    case ExhaustReason::ContextOverflowUnmanaged: return "context_overflow_unmanaged";
    case ExhaustReason::BackendFailure: return "backend_failure";
  }
  return "unknown";
}

struct TriggerEvent {
  long long at_turn = 0;         // turns_consumed when the threshold was crossed
  long long context_tokens = 0;  // context size at that moment
};

// Value type; every operation returns a fresh copy so concurrent branch
// expansion can hold snapshots without locking.
struct Trajectory {
  std::string task_id;
  std::string system_prompt;
  std::string user_prompt;
  // Installed when a summary-based swap replaces the turn history; rendered
  // right after the user prompt.
  std::optional<std::string> summary_note;
  std::vector<Turn> turns;
  long long context_tokens = 0;
  RunStatus status = RunStatus::Active;
  std::string final_answer;
  std::optional<ExhaustReason> exhaust_reason;
  // Total turns ever consumed, across compactions. >= turns.size().
  long long turns_consumed = 0;
  std::vector<TriggerEvent> trigger_events;
  // Strategy label applied at each trigger, in order.
  std::vector<std::string> applied_strategies;
};

inline MessageSequence render_messages(const Trajectory& t) {
  MessageSequence msgs;
  msgs.push_back(Message::system(t.system_prompt));
  msgs.push_back(Message::user(t.user_prompt));
  if (t.summary_note)
    msgs.push_back(Message::user(*t.summary_note));
  for (const auto& turn : t.turns) {
    Message a = Message::assistant(turn.thinking);
    if (turn.tool_call) {
      a.tool_call = turn.tool_call;
      a.tool_call_id = "call_" + std::to_string(turn.index);
    }
    msgs.push_back(std::move(a));
    if (turn.tool_response) {
      Message r{Role::Tool, *turn.tool_response, {}, "call_" + std::to_string(turn.index)};
      msgs.push_back(std::move(r));
    }
  }
  return msgs;
}

inline Trajectory make_trajectory(std::string task_id, std::string system_prompt,
                                  std::string user_prompt, const TokenCounter& counter) {
  Trajectory t;
  t.task_id = std::move(task_id);
  t.system_prompt = std::move(system_prompt);
  t.user_prompt = std::move(user_prompt);
  t.context_tokens = counter.count_messages(render_messages(t));
  return t;
}

inline bool should_trigger(const Trajectory& t, const Budget& budget) {
  return t.context_tokens > budget.trigger_threshold();
}

// Appends one turn. The turn's index must continue the sequence
// (turns_consumed), token_cost is recomputed from the counter, and crossing
// the turn budget flips the trajectory to Exhausted(turn_budget).
inline Trajectory append_turn(const Trajectory& t, Turn turn, const TokenCounter& counter,
                              const Budget& budget) {
  if (t.status != RunStatus::Active)
    throw NonActiveTrajectory("append_turn on " + std::string(run_status_name(t.status)) +
                              " trajectory " + t.task_id);
  if (!t.turns.empty() && t.turns.back().in_flight())
    throw NonActiveTrajectory("append_turn while last turn is awaiting its tool_response");
  if (turn.index != static_cast<int>(t.turns.size()))
    throw IndexMismatch("turn index " + std::to_string(turn.index) + " does not continue " +
                        std::to_string(t.turns.size()));
  turn.token_cost = turn_token_cost(turn, counter);

  Trajectory out = t;
  out.context_tokens += turn.token_cost;
  out.turns.push_back(std::move(turn));
  out.turns_consumed += 1;
  if (out.turns_consumed > budget.max_turns) {
    out.status = RunStatus::Exhausted;
    out.exhaust_reason = ExhaustReason::TurnBudget;
  }
  return out;
}

// Fills the tool_response of the trailing in-flight turn.
inline Trajectory complete_last_turn(const Trajectory& t, std::string tool_response,
                                     const TokenCounter& counter) {
  if (t.turns.empty() || !t.turns.back().in_flight())
    throw NonActiveTrajectory("complete_last_turn without an in-flight turn");
  Trajectory out = t;
  Turn& last = out.turns.back();
  long long response_cost = counter.count_text(tool_response);
  last.tool_response = std::move(tool_response);
  last.token_cost += response_cost;
  out.context_tokens += response_cost;
  return out;
}

inline Trajectory finish(const Trajectory& t, std::string answer) {
  if (t.status != RunStatus::Active)
    throw NonActiveTrajectory("finish on non-active trajectory " + t.task_id);
  Trajectory out = t;
  out.status = RunStatus::Finished;
  out.final_answer = std::move(answer);
  return out;
}

inline Trajectory exhaust(const Trajectory& t, ExhaustReason reason) {
  if (t.status != RunStatus::Active)
    throw NonActiveTrajectory("exhaust on non-active trajectory " + t.task_id);
  Trajectory out = t;
  out.status = RunStatus::Exhausted;
  out.exhaust_reason = reason;
  return out;
}

}  // namespace ctxroute
