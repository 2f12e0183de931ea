#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctxroute/errors.hpp"
#include "ctxroute/metrics.hpp"
#include "ctxroute/run_record.hpp"
#include "ctxroute/util.hpp"

namespace ctxroute::sim {

// Synthetic task family for policy studies without a model in the loop.
// Two shaping functions:
//   per-turn finish hazard, saturating in the policy's working budget
//     h(b) = hazard_max * (1 - exp(-b / hazard_scale))
//   terminal precision, logistic decay in context size at the moment of
//   finishing (more accumulated context, less reliable answer)
//     p(c) = p_low + (p_high - p_low) / (1 + exp((c - p_mid) / p_scale))
struct TaskModel {
  std::string name = "custom";
  int version = 1;
  double hazard_max = 0.1;
  double hazard_scale = 9000.0;
  double precision_high = 0.92;
  double precision_low = 0.15;
  double precision_mid = 5000.0;
  double precision_scale = 1800.0;
  long long tokens_per_turn = 400;
  long long base_tokens = 400;

  double per_turn_finish_hazard(long long context_budget_tokens) const {
    return hazard_max *
           (1.0 - std::exp(-static_cast<double>(context_budget_tokens) / hazard_scale));
  }

  double terminal_precision(long long context_tokens) const {
    return precision_low +
           (precision_high - precision_low) /
               (1.0 + std::exp((static_cast<double>(context_tokens) - precision_mid) /
                               precision_scale));
  }
};

inline void to_json(nlohmann::json& j, const TaskModel& m) {
  j = nlohmann::json{{"name", m.name},
                     {"version", m.version},
                     {"hazard_max", m.hazard_max},
                     {"hazard_scale", m.hazard_scale},
                     {"precision_high", m.precision_high},
                     {"precision_low", m.precision_low},
                     {"precision_mid", m.precision_mid},
                     {"precision_scale", m.precision_scale},
                     {"tokens_per_turn", m.tokens_per_turn},
                     {"base_tokens", m.base_tokens}};
}
inline void from_json(const nlohmann::json& j, TaskModel& m) {
  m.name = j.value("name", "custom");
  m.version = j.value("version", 1);
  m.hazard_max = j.value("hazard_max", 0.1);
  m.hazard_scale = j.value("hazard_scale", 9000.0);
  m.precision_high = j.value("precision_high", 0.92);
  m.precision_low = j.value("precision_low", 0.15);
  m.precision_mid = j.value("precision_mid", 5000.0);
  m.precision_scale = j.value("precision_scale", 1800.0);
  m.tokens_per_turn = j.value("tokens_per_turn", 400ll);
  m.base_tokens = j.value("base_tokens", 400ll);
}

// The preset used throughout the docs and checks: precision decays with
// context while the hazard saturates, so an unmanaged agent finishes often
// but finishes late and wrong, and aggressive compaction trades finishes for
// precision. Budget defaults for this preset: C_max 12000, 25 turns.
inline TaskModel context_rot_preset() {
  TaskModel m;
  m.name = "context_rot";
  m.version = 1;
  return m;
}

inline Budget context_rot_budget() {
  Budget b;
  b.max_context_tokens = 12000;
  b.trigger_ratio = 0.4;
  b.max_turns = 25;
  return b;
}

inline std::optional<TaskModel> preset_by_name(const std::string& name) {
  if (name == "context_rot") return context_rot_preset();
  return std::nullopt;
}

enum class SimPolicyKind { Baseline, DiscardAll, KeepLastN, SummaryLike };

struct SimPolicy {
  SimPolicyKind kind = SimPolicyKind::DiscardAll;
  double trigger_ratio = 0.4;  // overrides the budget's ratio per policy variant
  int keep_n = 5;
  long long summary_tokens = 256;

  std::string label() const {
    char buf[64];
    switch (kind) {
      case SimPolicyKind::Baseline: return "baseline";
      case SimPolicyKind::DiscardAll:
        std::snprintf(buf, sizeof(buf), "discard_all@r=%.2f", trigger_ratio);
        return buf;
      case SimPolicyKind::KeepLastN:
        std::snprintf(buf, sizeof(buf), "keep_last_%d@r=%.2f", keep_n, trigger_ratio);
        return buf;
      case SimPolicyKind::SummaryLike:
        std::snprintf(buf, sizeof(buf), "summary@r=%.2f", trigger_ratio);
        return buf;
    }
    return "unknown";
  }

  static std::optional<SimPolicy> parse(const std::string& text) {
    if (text == "baseline") return SimPolicy{SimPolicyKind::Baseline, 0.0, 0, 0};
    if (text == "discard_all") return SimPolicy{SimPolicyKind::DiscardAll, 0.4, 0, 0};
    if (text == "keep_last_n") return SimPolicy{SimPolicyKind::KeepLastN, 0.4, 5, 0};
    if (text == "summary") return SimPolicy{SimPolicyKind::SummaryLike, 0.4, 0, 256};
    return std::nullopt;
  }
};

// One synthetic episode per task. Policies share the per-task random stream
// (common random numbers), which keeps cross-policy alignment sets dense and
// comparisons low-variance. Bit-identical output for a fixed (model, policy,
// budget, seed).
inline RunSet simulate_policy(const TaskModel& model, const SimPolicy& policy,
                              const Budget& budget, long long n_tasks, std::uint64_t seed) {
  if (n_tasks <= 0) throw DomainError("simulate_policy needs n_tasks >= 1");
  RunSet out;
  out.label = policy.label();
  out.records.reserve(static_cast<size_t>(n_tasks));

  const bool managed = policy.kind != SimPolicyKind::Baseline;
  const long long threshold = managed
      ? static_cast<long long>(std::llround(policy.trigger_ratio *
                                            static_cast<double>(budget.max_context_tokens)))
      : 0;
  const long long hazard_budget = managed ? threshold : budget.max_context_tokens;
  const double hazard = model.per_turn_finish_hazard(hazard_budget);

  for (long long i = 0; i < n_tasks; ++i) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    RunRecord rec;
    rec.task_id = "sim-" + std::to_string(i);
    rec.policy = "sim:" + policy.label();
    rec.counter = "synthetic";
    rec.backend = "synthetic";
    rec.seed = seed;

    long long ctx = model.base_tokens;
    long long spent = model.base_tokens;
    bool finished = false, correct = false, overflow = false;
    long long turn = 0;
    while (turn < budget.max_turns) {
      ++turn;
      ctx += model.tokens_per_turn;
      spent += model.tokens_per_turn;
      if (!managed && ctx > budget.max_context_tokens) {
        overflow = true;
        break;
      }
      if (unif(rng) < hazard) {
        finished = true;
        correct = unif(rng) < model.terminal_precision(ctx);
        break;
      }
      if (managed && ctx > threshold) {
        rec.trigger_events.push_back(TriggerEvent{turn, ctx});
        switch (policy.kind) {
          case SimPolicyKind::DiscardAll:
            ctx = model.base_tokens;
            break;
          case SimPolicyKind::KeepLastN:
            ctx = std::min(ctx, model.base_tokens +
                                    static_cast<long long>(policy.keep_n) * model.tokens_per_turn);
            break;
          case SimPolicyKind::SummaryLike:
            ctx = model.base_tokens + policy.summary_tokens;
            break;
          case SimPolicyKind::Baseline:
            break;
        }
      }
    }

    rec.turns_consumed = turn;
    rec.total_tokens = spent;
    rec.final_context_tokens = ctx;
    if (finished) {
      rec.status = "finished";
      rec.final_answer = "synthetic";
      VerdictRecord v;
      v.mode = "simulated";
      v.correct = correct;
      rec.verdict = v;
    } else {
      rec.status = "exhausted";
      rec.exhaust_reason = overflow ? "context_overflow_unmanaged" : "turn_budget";
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

enum class SweepAxis { MaxTurns, TriggerRatio };

struct CurveRow {
  std::string policy;
  double axis_value = 0.0;
  MetricsReport report;
  // Precision over the tasks all grid variants of this policy finished;
  // comparable across the sweep the way a single-denominator column is.
  std::optional<Ratio> aligned_precision_across_grid;
};

inline std::vector<CurveRow> sweep(const TaskModel& model, const std::vector<SimPolicy>& policies,
                                   SweepAxis axis, const std::vector<double>& grid,
                                   const Budget& base_budget, long long n_tasks,
                                   std::uint64_t seed) {
  if (grid.empty()) throw DomainError("sweep needs a non-empty grid");
  std::vector<CurveRow> rows;
  for (const auto& policy : policies) {
    std::vector<RunSet> sets;
    std::vector<double> values;
    for (double value : grid) {
      Budget budget = base_budget;
      SimPolicy variant = policy;
      if (axis == SweepAxis::MaxTurns)
        budget.max_turns = static_cast<long long>(std::llround(value));
      else
        variant.trigger_ratio = value;
      RunSet set = simulate_policy(model, variant, budget, n_tasks, seed);
      set.label = variant.label() + "@" +
                  (axis == SweepAxis::MaxTurns ? "T=" : "r=") + std::to_string(value);
      sets.push_back(std::move(set));
      values.push_back(value);
    }
    AlignedReport aligned = aligned_precision(sets);
    for (size_t i = 0; i < sets.size(); ++i) {
      CurveRow row;
      row.policy = policy.label();
      row.axis_value = values[i];
      row.report = estimate_eta_rho(sets[i]);
      auto it = aligned.precision.find(sets[i].label);
      if (it != aligned.precision.end()) row.aligned_precision_across_grid = it->second;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace ctxroute::sim
