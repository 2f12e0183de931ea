#pragma once

#include <string>

#include "ctxroute/backend.hpp"
#include "ctxroute/tools.hpp"
#include "ctxroute/trajectory.hpp"

namespace ctxroute {

// Noteworthy events accumulated while stepping; they end up in the run
// record's flags block.
struct RunFlags {
  int response_truncations = 0;
  int degenerate_turns = 0;
  int summary_truncations = 0;
  int strategy_fallbacks = 0;
  int router_fallbacks = 0;
};

// Turns one completion into the next trajectory state:
//  - final answer        -> answer turn appended, trajectory finished
//  - tool call           -> first call executed, observation appended
//  - degenerate (twice-  -> thinking-only turn, run continues
//    malformed reply)
// When truncate_overflow is set (any managed policy), an observation that
// would push the context past C_max is cut to fit and flagged; without it
// (baseline) the oversized turn goes in untouched and the caller handles the
// overflow.
inline Trajectory apply_completion(const Trajectory& t, const CompletionResult& res,
                                   ToolEnvironment& tools, const TokenCounter& counter,
                                   const Budget& budget, bool truncate_overflow,
                                   RunFlags& flags) {
  Turn turn;
  turn.index = static_cast<int>(t.turns.size());
  turn.thinking = res.thinking;

  if (res.final_answer) {
    Trajectory out = append_turn(t, std::move(turn), counter, budget);
    if (out.status != RunStatus::Active) return out;  // answer arrived past the turn budget
    return finish(out, *res.final_answer);
  }

  if (res.degenerate || res.tool_calls.empty()) {
    ++flags.degenerate_turns;
    return append_turn(t, std::move(turn), counter, budget);
  }

  turn.tool_call = res.tool_calls.front();
  std::string observation = tools.execute(*turn.tool_call);

  if (truncate_overflow) {
    long long fixed_cost = counter.count_text(turn.thinking) +
                           counter.count_text(turn.tool_call->serialized());
    long long room = budget.max_context_tokens - t.context_tokens - fixed_cost;
    if (counter.count_text(observation) > room) {
      ++flags.response_truncations;
      observation = truncate_to_tokens(std::move(observation), room > 1 ? room : 1, counter);
    }
  }
  turn.tool_response = std::move(observation);
  return append_turn(t, std::move(turn), counter, budget);
}

}  // namespace ctxroute
