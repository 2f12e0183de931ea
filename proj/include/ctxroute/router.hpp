#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ctxroute/agent_step.hpp"
#include "ctxroute/assets.hpp"
#include "ctxroute/backend.hpp"
#include "ctxroute/strategy.hpp"
#include "ctxroute/trajectory.hpp"
#include "ctxroute/util.hpp"

namespace ctxroute {

enum class BranchStatus { Pending, Rolled, FinishedEarly, Failed };

inline const char* branch_status_name(BranchStatus s) {
  switch (s) {
    case BranchStatus::Pending: return "pending";
    case BranchStatus::Rolled: return "rolled";
    case BranchStatus::FinishedEarly: return "finished_early";
    case BranchStatus::Failed: return "failed";
  }
  return "unknown";
}

struct Branch {
  Strategy strategy;
  ManagedContext managed;
  std::vector<Turn> lookahead_turns;
  BranchStatus status = BranchStatus::Pending;
  std::string answer;          // FinishedEarly only
  std::string failure_reason;  // Failed only
  long long token_spend = 0;   // every token this branch consumed, kept or not
};

enum class RouterPolicyKind { Lookahead, NoLookahead, Random };

struct RouterPolicy {
  RouterPolicyKind kind = RouterPolicyKind::Lookahead;
  int lookahead_depth = 3;

  std::string label() const {
    switch (kind) {
      case RouterPolicyKind::Lookahead:
        return "lookahead:" + std::to_string(lookahead_depth);
      case RouterPolicyKind::NoLookahead: return "no_lookahead";
      case RouterPolicyKind::Random: return "random";
    }
    return "unknown";
  }

  static std::optional<RouterPolicy> parse(const std::string& text) {
    auto parts = split(text, ':');
    if (parts[0] == "lookahead") {
      RouterPolicy p{RouterPolicyKind::Lookahead, 3};
      if (parts.size() == 2) {
        try { p.lookahead_depth = std::stoi(parts[1]); } catch (...) { return std::nullopt; }
      } else if (parts.size() > 2) {
        return std::nullopt;
      }
      return p;
    }
    if (text == "no_lookahead") return RouterPolicy{RouterPolicyKind::NoLookahead, 0};
    if (text == "random") return RouterPolicy{RouterPolicyKind::Random, 0};
    return std::nullopt;
  }
};

struct RoutingDecision {
  int trigger_index = 0;
  std::vector<Strategy> candidates;  // original order
  Strategy chosen;
  std::string rationale;
  RouterPolicy policy;
  std::vector<int> permutation;  // presentation order used in the prompt
  bool fallback_used = false;
  bool raw_view_truncated = false;
  Usage router_usage;
};

struct StrategyRuntime {
  ModelBackend* summarizer = nullptr;
  std::string summarizer_model_id;
  const TokenCounter* counter = nullptr;
  Budget budget;
};

// Builds one managed context per candidate from the same snapshot. A failing
// summarizer poisons only its own branch; every other candidate still comes
// back usable. Throws AllBranchesFailed when nothing survived.
inline std::vector<Branch> expand_branches(const Trajectory& snapshot,
                                           const std::vector<Strategy>& candidates,
                                           const StrategyRuntime& rt) {
  if (candidates.empty()) throw EmptyCandidateSet("no context strategies to expand");
  {
    std::set<std::string> labels;
    for (const auto& c : candidates)
      if (!labels.insert(c.label()).second)
        throw DuplicateCandidate("duplicate candidate strategy: " + c.label());
  }
  if (!should_trigger(snapshot, rt.budget))
    throw Error("expand_branches called below the trigger threshold");

  std::vector<Branch> branches;
  branches.reserve(candidates.size());
  for (const auto& candidate : candidates) {
    Branch b;
    b.strategy = candidate;
    try {
      switch (candidate.kind) {
        case StrategyKind::DiscardAll:
          b.managed = apply_discard_all(snapshot, *rt.counter);
          break;
        case StrategyKind::KeepLastN:
          b.managed = apply_keep_last_n(snapshot, candidate.keep_n, *rt.counter);
          break;
        case StrategyKind::Summary:
          if (!rt.summarizer)
            throw SummarizerUnavailable("no summarizer backend configured");
          b.managed = apply_summary(snapshot, *rt.summarizer, candidate.summary_token_cap,
                                    *rt.counter, rt.summarizer_model_id);
          break;
      }
      b.managed = ensure_under_threshold(std::move(b.managed), snapshot, rt.budget, *rt.counter);
      b.token_spend += b.managed.summarizer_tokens;
    } catch (const BackendUnavailable& e) {
      b.status = BranchStatus::Failed;
      b.failure_reason = e.what();
    } catch (const SummarizerUnavailable& e) {
      b.status = BranchStatus::Failed;
      b.failure_reason = e.what();
    }
    branches.push_back(std::move(b));
  }
  if (std::all_of(branches.begin(), branches.end(),
                  [](const Branch& b) { return b.status == BranchStatus::Failed; }))
    throw AllBranchesFailed("every candidate failed during expansion");
  return branches;
}

// Probes one branch: resume from its managed context and run the normal agent
// step up to k turns. Probe turns do not touch the caller's turn budget; they
// are charged only if this branch is merged. All tokens spent here count.
inline void rollout_lookahead(Branch& branch, int k, ModelBackend& agent, ToolEnvironment& tools,
                              const TokenCounter& counter, const Budget& budget,
                              const std::string& model_id = "") {
  if (branch.status == BranchStatus::Failed) return;

  Trajectory probe;
  probe.task_id = branch.managed.source_task_id;
  probe.system_prompt = branch.managed.system_prompt;
  probe.user_prompt = branch.managed.user_prompt;
  if (branch.managed.summary_text) probe.summary_note = *branch.managed.summary_text;
  probe.turns = branch.managed.retained_turns;
  probe.turns_consumed = static_cast<long long>(probe.turns.size());
  probe.context_tokens = counter.count_messages(render_messages(probe));

  Budget probe_budget = budget;
  probe_budget.max_turns = probe.turns_consumed + k + 1;  // budget is settled at merge time
  RunFlags scratch;

  size_t base_turns = probe.turns.size();
  for (int step = 0; step < k; ++step) {
    CompletionRequest req;
    req.messages = render_messages(probe);
    req.tool_schemas = tools.specs();
    req.model_id = model_id;
    req.scope = branch.strategy.label();
    CompletionResult res;
    try {
      res = agent.complete(req);
    } catch (const BackendUnavailable& e) {
      branch.status = BranchStatus::Failed;
      branch.failure_reason = e.what();
      return;
    }
    branch.token_spend += res.usage.total();
    probe = apply_completion(probe, res, tools, counter, probe_budget, true, scratch);
    if (probe.status == RunStatus::Finished) {
      branch.status = BranchStatus::FinishedEarly;
      branch.answer = probe.final_answer;
      break;
    }
  }
  if (branch.status == BranchStatus::Pending) branch.status = BranchStatus::Rolled;
  branch.lookahead_turns.assign(probe.turns.begin() + static_cast<long>(base_turns),
                                probe.turns.end());
}

namespace detail {

inline std::string describe_compaction(const Strategy& s) {
  switch (s.kind) {
    case StrategyKind::DiscardAll: return "drop all prior turns, restart from the task prompt";
    case StrategyKind::KeepLastN:
      return "keep the last " + std::to_string(s.keep_n) + " turns verbatim";
    case StrategyKind::Summary: return "replace the turn history with a structured summary";
  }
  return "unknown";
}

inline std::string render_turn_compact(const Turn& t) {
  std::ostringstream out;
  out << "  turn " << t.index << " thinking: " << t.thinking << "\n";
  if (t.tool_call) out << "  turn " << t.index << " call: " << t.tool_call->serialized() << "\n";
  if (t.tool_response)
    out << "  turn " << t.index << " observation: " << *t.tool_response << "\n";
  return out.str();
}

}  // namespace detail

struct RoutingPrompt {
  MessageSequence messages;
  std::vector<int> permutation;
  bool raw_view_truncated = false;
};

// Assembles the router's view: task statement, the raw pre-compaction context
// (tail-fitted to the router budget), then one section per branch in a seeded
// presentation order. Labels, not positions, identify branches.
inline RoutingPrompt build_routing_prompt(const Trajectory& raw,
                                          const std::vector<Branch>& branches,
                                          std::uint64_t seed, long long router_token_budget,
                                          const TokenCounter& counter, bool include_lookahead) {
  RoutingPrompt out;
  out.permutation = seeded_permutation(branches.size(), seed);

  std::ostringstream candidate_text;
  candidate_text << "CANDIDATES:\n";
  for (int pos : out.permutation) {
    const Branch& b = branches[static_cast<size_t>(pos)];
    candidate_text << "=== candidate '" << b.strategy.label() << "' ===\n";
    candidate_text << "compaction: " << detail::describe_compaction(b.strategy) << "\n";
    if (b.status == BranchStatus::Failed) {
      candidate_text << "status: failed (" << b.failure_reason << ")\n";
      continue;
    }
    candidate_text << "managed context: " << b.managed.token_count << " tokens, "
                   << b.managed.retained_turns.size() << " retained turns\n";
    if (b.managed.summary_text)
      candidate_text << "summary:\n" << *b.managed.summary_text << "\n";
    if (include_lookahead) {
      candidate_text << "probe turns:\n";
      for (const auto& t : b.lookahead_turns) candidate_text << detail::render_turn_compact(t);
      if (b.status == BranchStatus::FinishedEarly)
        candidate_text << "probe outcome: proposed final answer: " << b.answer << "\n";
      else
        candidate_text << "probe outcome: still working after " << b.lookahead_turns.size()
                       << " turns\n";
    }
  }

  const std::string task_text = "TASK:\n" + raw.user_prompt + "\n\n";
  const std::string raw_full = render_plain_text(render_messages(raw));

  long long fixed = counter.count_text(assets::kRoutingPrompt.text) +
                    counter.count_text(task_text) + counter.count_text(candidate_text.str());
  long long raw_room = router_token_budget - fixed - 64;  // head line + framing margin
  if (raw_room < 0) raw_room = 0;

  std::string raw_view;
  std::ostringstream head;
  head << "CONTEXT BEFORE COMPACTION (" << raw.turns.size() << " turns in window, "
       << raw.context_tokens << " tokens):\n";
  if (counter.count_text(raw_full) <= raw_room) {
    raw_view = head.str() + raw_full;
  } else {
    out.raw_view_truncated = true;
    size_t keep_bytes = static_cast<size_t>(raw_room) * 4;
    std::string tail =
        keep_bytes >= raw_full.size() ? raw_full : raw_full.substr(raw_full.size() - keep_bytes);
    size_t line_break = tail.find('\n');
    if (line_break != std::string::npos && line_break + 1 < tail.size())
      tail = tail.substr(line_break + 1);
    raw_view = head.str() + "[earlier context elided]\n" + tail;
  }

  out.messages.push_back(Message::system(assets::kRoutingPrompt.text));
  out.messages.push_back(Message::user(task_text + raw_view + "\n" + candidate_text.str()));
  return out;
}

// Strict grammar: a line "CHOICE: <label>" naming a non-failed candidate. One
// malformed reply earns a re-ask; after that the configured fallback order
// picks among viable candidates and the decision is flagged.
inline RoutingDecision select_branch(const std::vector<Branch>& branches,
                                     const RoutingPrompt& prompt, const RouterPolicy& policy,
                                     ModelBackend* router, std::uint64_t seed,
                                     const std::vector<StrategyKind>& fallback_order,
                                     const std::string& model_id = "") {
  RoutingDecision decision;
  decision.policy = policy;
  decision.permutation = prompt.permutation;
  decision.raw_view_truncated = prompt.raw_view_truncated;
  for (const auto& b : branches) decision.candidates.push_back(b.strategy);

  std::vector<const Branch*> viable;
  for (const auto& b : branches)
    if (b.status != BranchStatus::Failed) viable.push_back(&b);
  if (viable.empty()) throw NoViableBranch("no candidate survived expansion/rollout");

  auto find_viable = [&](const std::string& label) -> const Branch* {
    for (const Branch* b : viable)
      if (b->strategy.label() == label) return b;
    return nullptr;
  };

  if (policy.kind == RouterPolicyKind::Random) {
    std::mt19937_64 rng(seed);
    const Branch* pick = viable[static_cast<size_t>(rng() % viable.size())];
    decision.chosen = pick->strategy;
    decision.rationale = "random policy draw";
    return decision;
  }

  if (!router) throw BackendUnavailable("router backend not configured");

  auto ask = [&](bool retry) -> std::string {
    CompletionRequest req;
    req.messages = prompt.messages;
    if (retry) req.messages.back().content += assets::kRoutingRetrySuffix;
    req.sampling.temperature = 0.0;
    req.model_id = model_id;
    req.scope = "router";
    CompletionResult res = router->complete(req);
    decision.router_usage.prompt_tokens += res.usage.prompt_tokens;
    decision.router_usage.output_tokens += res.usage.output_tokens;
    return res.final_answer ? *res.final_answer : res.thinking;
  };

  for (int attempt = 0; attempt < 2; ++attempt) {
    std::string reply;
    try {
      reply = ask(attempt == 1);
    } catch (const BackendUnavailable&) {
      break;  // treat like a parse failure: fall back deterministically
    }
    for (const auto& line : split_lines(reply)) {
      std::string t = trim(line);
      if (t.rfind(assets::kChoicePrefix, 0) != 0) continue;
      std::string label = trim(t.substr(std::string(assets::kChoicePrefix).size()));
      if (const Branch* pick = find_viable(label)) {
        decision.chosen = pick->strategy;
        decision.rationale = trim(reply);
        return decision;
      }
    }
  }

  for (StrategyKind kind : fallback_order) {
    for (const Branch* b : viable) {
      if (b->strategy.kind == kind) {
        decision.chosen = b->strategy;
        decision.fallback_used = true;
        decision.rationale = "router reply unusable; fallback order selected " +
                             b->strategy.label();
        return decision;
      }
    }
  }
  // Fallback order exhausted (custom order missing the viable kinds): take
  // the first viable branch in candidate order.
  decision.chosen = viable.front()->strategy;
  decision.fallback_used = true;
  decision.rationale = "router reply unusable; first viable candidate selected";
  return decision;
}

// Installs the selected branch as the new main line. Only now do the chosen
// lookahead turns hit the turn budget; an answer found during lookahead
// finishes the run unless the budget ran out first.
inline Trajectory merge_selected(const Trajectory& main_line, const RoutingDecision& decision,
                                 const Branch& branch, const TokenCounter& counter,
                                 const Budget& budget) {
  if (branch.strategy.label() != decision.chosen.label())
    throw StrategyMismatch("merge of branch '" + branch.strategy.label() +
                           "' against decision '" + decision.chosen.label() + "'");
  if (branch.status == BranchStatus::Failed)
    throw StrategyMismatch("cannot merge failed branch '" + branch.strategy.label() + "'");

  Trajectory merged = trajectory_from_managed(branch.managed, main_line, counter);
  merged.applied_strategies.push_back(decision.chosen.label());
  for (Turn turn : branch.lookahead_turns) {
    turn.index = static_cast<int>(merged.turns.size());
    merged = append_turn(merged, std::move(turn), counter, budget);
    if (merged.status != RunStatus::Active) return merged;
  }
  if (branch.status == BranchStatus::FinishedEarly) return finish(merged, branch.answer);
  return merged;
}

}  // namespace ctxroute
