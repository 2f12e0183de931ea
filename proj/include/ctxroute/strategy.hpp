#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ctxroute/assets.hpp"
#include "ctxroute/backend.hpp"
#include "ctxroute/errors.hpp"
#include "ctxroute/trajectory.hpp"
#include "ctxroute/util.hpp"

namespace ctxroute {

enum class StrategyKind { DiscardAll, KeepLastN, Summary };

struct Strategy {
  StrategyKind kind = StrategyKind::DiscardAll;
  int keep_n = 5;
  long long summary_token_cap = 2048;

  std::string label() const {
    switch (kind) {
      case StrategyKind::DiscardAll: return "discard_all";
      case StrategyKind::KeepLastN: return "keep_last_n";
      case StrategyKind::Summary: return "summary";
    }
    return "unknown";
  }

  // Label plus parameters, for configs and reports: keep_last_n:5.
  std::string spec_string() const {
    switch (kind) {
      case StrategyKind::DiscardAll: return "discard_all";
      case StrategyKind::KeepLastN: return "keep_last_n:" + std::to_string(keep_n);
      case StrategyKind::Summary: return "summary:" + std::to_string(summary_token_cap);
    }
    return "unknown";
  }

  static Strategy discard_all() { return Strategy{StrategyKind::DiscardAll, 0, 0}; }
  static Strategy keep_last_n(int n) { return Strategy{StrategyKind::KeepLastN, n, 0}; }
  static Strategy summary(long long cap = 2048) { return Strategy{StrategyKind::Summary, 0, cap}; }

  // Accepts "discard_all", "keep_last_n", "keep_last_n:8", "summary",
  // "summary:1024".
  static std::optional<Strategy> parse(const std::string& text) {
    auto parts = split(text, ':');
    const std::string& head = parts[0];
    if (head == "discard_all" && parts.size() == 1) return discard_all();
    if (head == "keep_last_n") {
      if (parts.size() == 1) return keep_last_n(5);
      if (parts.size() == 2) {
        try {
          return keep_last_n(std::stoi(parts[1]));
        } catch (...) { return std::nullopt; }
      }
      return std::nullopt;
    }
    if (head == "summary") {
      if (parts.size() == 1) return summary();
      if (parts.size() == 2) {
        try {
          return summary(std::stoll(parts[1]));
        } catch (...) { return std::nullopt; }
      }
      return std::nullopt;
    }
    return std::nullopt;
  }
};

// The compacted context a strategy produces: what the agent will see if this
// branch is selected. Always keeps the system and user prompts.
struct ManagedContext {
  std::string source_task_id;
  Strategy strategy;
  std::string system_prompt;
  std::string user_prompt;
  std::vector<Turn> retained_turns;     // indices re-based to 0..k-1
  std::vector<int> original_indices;    // provenance, parallel to retained_turns
  std::optional<std::string> summary_text;
  long long token_count = 0;
  bool summary_truncated = false;
  long long summarizer_tokens = 0;      // spend charged to building this context
  bool fallback_applied = false;        // keep-last-n had to shrink or degrade
  std::string fallback_note;
};

inline long long managed_context_tokens(const ManagedContext& mc, const TokenCounter& counter) {
  long long total = counter.count_text(mc.system_prompt) + counter.count_text(mc.user_prompt);
  if (mc.summary_text) total += counter.count_text(*mc.summary_text);
  for (const auto& t : mc.retained_turns) total += t.token_cost;
  return total;
}

namespace detail {

inline void require_compactable(const Trajectory& t) {
  if (t.status != RunStatus::Active)
    throw NonActiveTrajectory("context strategy applied to non-active trajectory " + t.task_id);
  if (t.turns.empty())
    throw NonActiveTrajectory("context strategy applied before any turn exists");
}

}  // namespace detail

inline ManagedContext apply_discard_all(const Trajectory& t, const TokenCounter& counter) {
  detail::require_compactable(t);
  ManagedContext mc;
  mc.source_task_id = t.task_id;
  mc.strategy = Strategy::discard_all();
  mc.system_prompt = t.system_prompt;
  mc.user_prompt = t.user_prompt;
  mc.token_count = managed_context_tokens(mc, counter);
  return mc;
}

inline ManagedContext apply_keep_last_n(const Trajectory& t, int n, const TokenCounter& counter) {
  detail::require_compactable(t);
  if (n <= 0) throw InvalidN("keep_last_n requires n >= 1, got " + std::to_string(n));
  ManagedContext mc;
  mc.source_task_id = t.task_id;
  mc.strategy = Strategy::keep_last_n(n);
  mc.system_prompt = t.system_prompt;
  mc.user_prompt = t.user_prompt;
  size_t keep = std::min(static_cast<size_t>(n), t.turns.size());
  size_t first = t.turns.size() - keep;
  for (size_t i = first; i < t.turns.size(); ++i) {
    Turn kept = t.turns[i];  // bytes untouched, only position changes
    mc.original_indices.push_back(kept.index);
    kept.origin_index = kept.index;
    kept.index = static_cast<int>(i - first);
    mc.retained_turns.push_back(std::move(kept));
  }
  mc.token_count = managed_context_tokens(mc, counter);
  return mc;
}

// One summarizer call over the rendered trajectory. If the summary overshoots
// the cap the summarizer is re-asked once with an explicit length bound, then
// the text is hard-truncated at a sentence boundary as a last resort.
inline ManagedContext apply_summary(const Trajectory& t, ModelBackend& summarizer,
                                    long long summary_token_cap, const TokenCounter& counter,
                                    const std::string& model_id = "") {
  detail::require_compactable(t);
  if (summary_token_cap <= 0)
    throw InvalidN("summary token cap must be positive");

  ManagedContext mc;
  mc.source_task_id = t.task_id;
  mc.strategy = Strategy::summary(summary_token_cap);
  mc.system_prompt = t.system_prompt;
  mc.user_prompt = t.user_prompt;

  const std::string transcript = render_plain_text(render_messages(t));
  auto ask = [&](const std::string& prompt_text) {
    CompletionRequest req;
    req.messages.push_back(Message::system("You compress agent transcripts into summaries."));
    req.messages.push_back(Message::user(prompt_text));
    req.sampling.temperature = 0.0;
    req.model_id = model_id;
    req.scope = "summarizer";
    CompletionResult res = summarizer.complete(req);
    mc.summarizer_tokens += res.usage.total();
    if (!res.final_answer)
      throw SummarizerUnavailable("summarizer returned no text for " + t.task_id);
    return *res.final_answer;
  };

  std::string prompt = expand_placeholder(assets::kSummaryPrompt.text, "transcript", transcript);
  std::string summary = ask(prompt);
  if (counter.count_text(summary) > summary_token_cap) {
    std::string retry = prompt + expand_placeholder(assets::kSummaryRetrySuffix, "max_tokens",
                                                    std::to_string(summary_token_cap));
    summary = ask(retry);
    if (counter.count_text(summary) > summary_token_cap) {
      // Trim whole sentences from the end until the cap holds, then give up
      // and cut mid-text if a single sentence is still too large.
      mc.summary_truncated = true;
      while (counter.count_text(summary) > summary_token_cap) {
        size_t cut = summary.find_last_of(".!?\n", summary.size() - 2);
        if (cut == std::string::npos || cut == 0) {
          summary.resize(static_cast<size_t>(summary_token_cap) * 4);
          break;
        }
        summary.resize(cut + 1);
      }
    }
  }
  mc.summary_text = std::move(summary);
  mc.token_count = managed_context_tokens(mc, counter);
  return mc;
}

// Guarantees a managed context fits under the trigger threshold. keep_last_n
// shrinks n one step at a time and degrades to discard_all when even n == 1
// does not fit; every adjustment is recorded on the context itself.
inline ManagedContext ensure_under_threshold(ManagedContext mc, const Trajectory& source,
                                             const Budget& budget, const TokenCounter& counter) {
  const long long threshold = budget.trigger_threshold();
  if (mc.token_count < threshold) return mc;

  if (mc.strategy.kind == StrategyKind::KeepLastN) {
    int n = static_cast<int>(mc.retained_turns.size());
    while (n > 1) {
      --n;
      ManagedContext smaller = apply_keep_last_n(source, n, counter);
      if (smaller.token_count < threshold) {
        smaller.fallback_applied = true;
        smaller.fallback_note = "keep_last_n shrunk to n=" + std::to_string(n);
        smaller.strategy = mc.strategy;  // label identity is preserved for routing
        return smaller;
      }
    }
    ManagedContext degraded = apply_discard_all(source, counter);
    degraded.fallback_applied = true;
    degraded.fallback_note = "keep_last_n degraded to discard_all";
    degraded.strategy = mc.strategy;
    return degraded;
  }

  if (mc.strategy.kind == StrategyKind::Summary && mc.summary_text) {
    // The cap is required to sit below the threshold, so trimming to the cap
    // is always enough.
    mc.summary_truncated = true;
    std::string s = *mc.summary_text;
    long long room = threshold - 1 -
                     (counter.count_text(mc.system_prompt) + counter.count_text(mc.user_prompt));
    if (room < 1) room = 1;
    while (!s.empty() && counter.count_text(s) > room) {
      size_t cut = s.find_last_of(".!?\n", s.size() - 2);
      if (cut == std::string::npos || cut == 0) {
        s.resize(static_cast<size_t>(room) * 4);
        break;
      }
      s.resize(cut + 1);
    }
    mc.summary_text = std::move(s);
    mc.fallback_applied = true;
    mc.fallback_note = "summary trimmed to fit threshold";
    mc.token_count = managed_context_tokens(mc, counter);
    return mc;
  }

  // discard_all: the base prompt is checked against the threshold at run
  // start, so reaching this point means that check was skipped.
  throw ConfigInvalid("base prompt alone does not fit under the trigger threshold for " +
                      mc.source_task_id);
}

// Builds the continuation trajectory the agent actually resumes on. Carries
// over global accounting (turns consumed, trigger history) from the source.
inline Trajectory trajectory_from_managed(const ManagedContext& mc, const Trajectory& source,
                                          const TokenCounter& counter) {
  Trajectory t;
  t.task_id = source.task_id;
  t.system_prompt = mc.system_prompt;
  t.user_prompt = mc.user_prompt;
  // Installed verbatim: the summary template output is self-describing and
  // adding a framing prefix here would break the managed-context token
  // accounting that was checked against the threshold.
  if (mc.summary_text) t.summary_note = *mc.summary_text;
  t.turns = mc.retained_turns;
  t.turns_consumed = source.turns_consumed;
  t.trigger_events = source.trigger_events;
  t.applied_strategies = source.applied_strategies;
  t.context_tokens = counter.count_messages(render_messages(t));
  return t;
}

}  // namespace ctxroute
