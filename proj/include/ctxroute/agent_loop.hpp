#pragma once

#include <chrono>
#include <future>
#include <string>
#include <vector>

#include "ctxroute/agent_step.hpp"
#include "ctxroute/backend.hpp"
#include "ctxroute/config.hpp"
#include "ctxroute/judge.hpp"
#include "ctxroute/metrics.hpp"
#include "ctxroute/router.hpp"
#include "ctxroute/run_record.hpp"
#include "ctxroute/strategy.hpp"
#include "ctxroute/tools.hpp"
#include "ctxroute/trajectory.hpp"

namespace ctxroute {

struct TaskSpec {
  std::string id;
  std::string prompt;
  std::optional<std::string> gold;
  std::optional<std::vector<std::string>> tools;
};

// The backends one task execution talks to. Roles may share an instance;
// request scopes keep scripted replies separable.
struct LoopBackends {
  ModelBackend* agent = nullptr;
  ModelBackend* summarizer = nullptr;
  ModelBackend* router = nullptr;
  ModelBackend* judge = nullptr;
  std::string agent_model_id;
  std::string summarizer_model_id;
  std::string router_model_id;
  std::string judge_model_id;
};

namespace detail {

inline void fill_asset_refs(RunRecord& rec) {
  rec.assets[assets::kAgentSystemPrompt.name] = assets::kAgentSystemPrompt.ref();
  rec.assets[assets::kSummaryPrompt.name] = assets::kSummaryPrompt.ref();
  rec.assets[assets::kRoutingPrompt.name] = assets::kRoutingPrompt.ref();
  rec.assets[assets::kJudgePrompt.name] = assets::kJudgePrompt.ref();
}

inline ManagedContext apply_static_strategy(const Trajectory& traj, const Strategy& s,
                                            const LoopBackends& backends,
                                            const TokenCounter& counter, const Budget& budget) {
  ManagedContext mc;
  switch (s.kind) {
    case StrategyKind::DiscardAll:
      mc = apply_discard_all(traj, counter);
      break;
    case StrategyKind::KeepLastN:
      mc = apply_keep_last_n(traj, s.keep_n, counter);
      break;
    case StrategyKind::Summary:
      if (!backends.summarizer) throw SummarizerUnavailable("no summarizer backend");
      mc = apply_summary(traj, *backends.summarizer, s.summary_token_cap, counter,
                         backends.summarizer_model_id);
      break;
  }
  return ensure_under_threshold(std::move(mc), traj, budget, counter);
}

}  // namespace detail

// Runs one task to Finished/Exhausted under the configured policy and writes
// the full story into a RunRecord. Never throws for in-run failures; hard
// setup errors come back as status == "error" records.
inline RunRecord run_single_task(const TaskSpec& task, const RunConfig& cfg,
                                 const LoopBackends& backends, ToolEnvironment& tools,
                                 const TokenCounter& counter, std::uint64_t task_seed) {
  const Budget& budget = cfg.budget;
  const bool managed = cfg.policy.managed();

  RunRecord rec;
  rec.task_id = task.id;
  rec.gold = task.gold;
  rec.config_digest = config_digest(cfg);
  rec.seed = task_seed;
  rec.policy = cfg.policy.label();
  rec.counter = counter.name();
  rec.backend = backends.agent ? backends.agent->name() : "none";
  detail::fill_asset_refs(rec);

  auto started = std::chrono::steady_clock::now();
  auto finalize = [&](const Trajectory& traj, long long total_tokens, RunFlags flags,
                      std::vector<RoutingRecord> routing) {
    rec.status = run_status_name(traj.status);
    if (traj.exhaust_reason) rec.exhaust_reason = exhaust_reason_name(*traj.exhaust_reason);
    if (traj.status == RunStatus::Finished) rec.final_answer = traj.final_answer;
    rec.turns_consumed = traj.turns_consumed;
    rec.total_tokens = total_tokens;
    rec.final_context_tokens = traj.context_tokens;
    rec.trigger_events = traj.trigger_events;
    rec.routing = std::move(routing);
    rec.turns = traj.turns;
    rec.flags = flags;
    rec.wall_time_ms =
        cfg.deterministic
            ? 0.0
            : std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                        started).count();
  };

  Trajectory traj = make_trajectory(task.id, cfg.system_prompt, task.prompt, counter);
  long long total_tokens = 0;
  RunFlags flags;
  std::vector<RoutingRecord> routing;

  // A base prompt that already busts the working budget cannot be run.
  const long long start_limit =
      managed ? budget.trigger_threshold() : budget.max_context_tokens;
  if (traj.context_tokens >= start_limit) {
    rec.status = "error";
    rec.error = "config_invalid: base prompt (" + std::to_string(traj.context_tokens) +
                " tokens) does not fit under the working limit of " +
                std::to_string(start_limit);
    finalize(traj, 0, flags, {});
    rec.status = "error";
    return rec;
  }

  auto detect_trigger = [&](Trajectory& t) -> bool {
    if (!managed || t.status != RunStatus::Active) return false;
    if (!should_trigger(t, budget)) return false;
    t.trigger_events.push_back(TriggerEvent{t.turns_consumed, t.context_tokens});
    return true;
  };

  StrategyRuntime rt;
  rt.summarizer = backends.summarizer;
  rt.summarizer_model_id = backends.summarizer_model_id;
  rt.counter = &counter;
  rt.budget = budget;

  // Applies the configured policy at a trigger point; returns the
  // continuation trajectory.
  auto handle_trigger = [&](Trajectory t) -> Trajectory {
    const int trigger_index = static_cast<int>(t.trigger_events.size()) - 1;

    if (cfg.policy.kind == "static") {
      ManagedContext mc;
      try {
        mc = detail::apply_static_strategy(t, cfg.policy.static_strategy, backends, counter,
                                           budget);
      } catch (const Error& e) {
        // The lone configured strategy could not be applied (summarizer
        // down); nothing to route around, the run dies as a backend failure.
        flags.strategy_fallbacks++;
        (void)e;
        return exhaust(t, ExhaustReason::BackendFailure);
      }
      if (mc.fallback_applied) flags.strategy_fallbacks++;
      if (mc.summary_truncated) flags.summary_truncations++;
      total_tokens += mc.summarizer_tokens;
      Trajectory next = trajectory_from_managed(mc, t, counter);
      next.applied_strategies.push_back(cfg.policy.static_strategy.label());
      return next;
    }

    // adaptive
    std::vector<Branch> branches;
    try {
      branches = expand_branches(t, cfg.policy.candidates, rt);
    } catch (const AllBranchesFailed&) {
      // Last resort: continue the main line on the cheapest compaction.
      RoutingRecord rr;
      rr.trigger_index = trigger_index;
      for (const auto& c : cfg.policy.candidates) rr.candidates.push_back(c.label());
      rr.chosen = "discard_all";
      rr.policy = cfg.policy.router.label();
      rr.fallback_used = true;
      rr.rationale = "all branches failed during expansion; discard_all continuation";
      routing.push_back(std::move(rr));
      flags.strategy_fallbacks++;
      ManagedContext mc = apply_discard_all(t, counter);
      Trajectory next = trajectory_from_managed(mc, t, counter);
      next.applied_strategies.push_back("discard_all");
      return next;
    }

    const bool with_lookahead = cfg.policy.router.kind == RouterPolicyKind::Lookahead;
    if (with_lookahead) {
      const int k = cfg.policy.router.lookahead_depth;
      if (!cfg.deterministic && branches.size() > 1) {
        std::vector<std::future<void>> jobs;
        for (auto& b : branches)
          jobs.push_back(std::async(std::launch::async, [&b, k, &backends, &tools, &counter,
                                                         &budget]() {
            rollout_lookahead(b, k, *backends.agent, tools, counter, budget,
                              backends.agent_model_id);
          }));
        for (auto& j : jobs) j.get();
      } else {
        for (auto& b : branches)
          rollout_lookahead(b, k, *backends.agent, tools, counter, budget,
                            backends.agent_model_id);
      }
    }

    for (const auto& b : branches) {
      total_tokens += b.token_spend;
      if (b.managed.fallback_applied) flags.strategy_fallbacks++;
      if (b.managed.summary_truncated) flags.summary_truncations++;
    }

    std::uint64_t trigger_seed =
        derive_seed(task_seed, 0x1000u + static_cast<std::uint64_t>(trigger_index));
    RoutingPrompt prompt = build_routing_prompt(t, branches, trigger_seed,
                                                cfg.effective_router_budget(), counter,
                                                with_lookahead);
    RoutingDecision decision;
    try {
      decision = select_branch(branches, prompt, cfg.policy.router, backends.router,
                               derive_seed(trigger_seed, 1), cfg.policy.fallback_order,
                               backends.router_model_id);
    } catch (const NoViableBranch&) {
      RoutingRecord rr;
      rr.trigger_index = trigger_index;
      for (const auto& b : branches) rr.candidates.push_back(b.strategy.label());
      rr.chosen = "discard_all";
      rr.policy = cfg.policy.router.label();
      rr.fallback_used = true;
      rr.rationale = "no viable branch after rollout; discard_all continuation";
      for (const auto& b : branches) rr.branches.push_back(make_branch_record(b));
      routing.push_back(std::move(rr));
      flags.strategy_fallbacks++;
      ManagedContext mc = apply_discard_all(t, counter);
      Trajectory next = trajectory_from_managed(mc, t, counter);
      next.applied_strategies.push_back("discard_all");
      return next;
    }
    decision.trigger_index = trigger_index;
    total_tokens += decision.router_usage.total();
    if (decision.fallback_used) flags.router_fallbacks++;

    const Branch* chosen = nullptr;
    for (const auto& b : branches)
      if (b.strategy.label() == decision.chosen.label()) chosen = &b;

    RoutingRecord rr;
    rr.trigger_index = trigger_index;
    for (const auto& b : branches) rr.candidates.push_back(b.strategy.label());
    rr.chosen = decision.chosen.label();
    rr.policy = decision.policy.label();
    rr.permutation = decision.permutation;
    rr.rationale = decision.rationale;
    rr.fallback_used = decision.fallback_used;
    rr.raw_view_truncated = decision.raw_view_truncated;
    rr.router_tokens = decision.router_usage.total();
    for (const auto& b : branches) rr.branches.push_back(make_branch_record(b));
    routing.push_back(std::move(rr));

    return merge_selected(t, decision, *chosen, counter, budget);
  };

  bool trigger_pending = detect_trigger(traj);
  while (traj.status == RunStatus::Active) {
    if (trigger_pending) {
      traj = handle_trigger(std::move(traj));
      trigger_pending = detect_trigger(traj);
      continue;
    }

    CompletionRequest req;
    req.messages = render_messages(traj);
    req.tool_schemas = tools.specs();
    req.sampling = cfg.sampling;
    req.model_id = backends.agent_model_id;
    req.scope = "main";
    CompletionResult res;
    try {
      res = backends.agent->complete(req);
    } catch (const BackendUnavailable&) {
      traj = exhaust(traj, ExhaustReason::BackendFailure);
      break;
    }
    total_tokens += res.usage.total();

    traj = apply_completion(traj, res, tools, counter, budget, managed, flags);
    if (traj.status != RunStatus::Active) break;
    if (traj.context_tokens > budget.max_context_tokens) {
      // Baseline growing past the window, or a managed run whose fixed turn
      // cost alone overflowed: either way the context no longer fits.
      traj = exhaust(traj, ExhaustReason::ContextOverflowUnmanaged);
      break;
    }
    if (!traj.turns.empty() && traj.turns.back().tool_response.has_value())
      trigger_pending = detect_trigger(traj);
  }

  finalize(traj, total_tokens, flags, std::move(routing));

  // Judging: only finished runs, and only when a verdict is actually
  // obtainable; anything else stays unjudged rather than guessed.
  if (traj.status == RunStatus::Finished && cfg.judge_mode != "none") {
    if (cfg.judge_mode == "exact") {
      if (task.gold) {
        JudgeVerdict v = judge_exact(traj.final_answer, *task.gold);
        rec.verdict = VerdictRecord{judge_mode_name(v.mode), v.correct, v.rationale,
                                    v.parse_failure};
      }
    } else if (cfg.judge_mode == "llm" && backends.judge && task.gold) {
      try {
        JudgeVerdict v = judge_llm(task.prompt, traj.final_answer, *task.gold, *backends.judge,
                                   backends.judge_model_id);
        rec.verdict = VerdictRecord{judge_mode_name(v.mode), v.correct, v.rationale,
                                    v.parse_failure};
      } catch (const BackendUnavailable&) {
        // left unjudged
      }
    }
  }
  return rec;
}

}  // namespace ctxroute
