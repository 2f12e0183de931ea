#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ctxroute/errors.hpp"
#include "ctxroute/rational.hpp"
#include "ctxroute/run_record.hpp"

namespace ctxroute {

// Per-runset outcome tallies and the derived ratios. All three ratios are
// exact rationals over the counts; pass_at_1 == search_efficiency *
// terminal_precision holds as an identity whenever precision is defined.
struct MetricsReport {
  std::string label;
  long long m = 0;          // tasks in the denominator
  long long n_finish = 0;   // produced a final answer within budget
  long long n_correct = 0;  // finished and judged correct
  long long excluded_unjudged = 0;  // finished but never judged; dropped from m
  Ratio search_efficiency;               // n_finish / m
  std::optional<Ratio> terminal_precision;  // n_correct / n_finish, n_finish > 0
  Ratio pass_at_1;                       // n_correct / m
  double mean_turns = 0.0;   // over finished records
  double mean_tokens = 0.0;  // over finished records, discarded-branch spend included
};

inline MetricsReport estimate_eta_rho(const RunSet& runs) {
  if (runs.records.empty()) throw EmptyRunSet("run set '" + runs.label + "' has no records");
  MetricsReport rep;
  rep.label = runs.label;
  long long turns_sum = 0, tokens_sum = 0;
  for (const auto& r : runs.records) {
    if (r.finished() && !r.judged()) {
      ++rep.excluded_unjudged;
      continue;
    }
    ++rep.m;
    if (r.finished()) {
      ++rep.n_finish;
      turns_sum += r.turns_consumed;
      tokens_sum += r.total_tokens;
      if (r.correct()) ++rep.n_correct;
    }
  }
  if (rep.m == 0) throw EmptyRunSet("run set '" + runs.label + "' has no judged records");
  rep.search_efficiency = Ratio::of(rep.n_finish, rep.m);
  if (rep.n_finish > 0) {
    rep.terminal_precision = Ratio::of(rep.n_correct, rep.n_finish);
    rep.mean_turns = static_cast<double>(turns_sum) / static_cast<double>(rep.n_finish);
    rep.mean_tokens = static_cast<double>(tokens_sum) / static_cast<double>(rep.n_finish);
  }
  rep.pass_at_1 = Ratio::of(rep.n_correct, rep.m);
  return rep;
}

// Precision on the aligned slice: tasks every strategy finished (and judged),
// so the comparison shares one denominator.
struct AlignedReport {
  std::vector<std::string> labels;
  std::set<std::string> aligned_tasks;
  bool empty_alignment = false;
  std::map<std::string, long long> aligned_correct;
  std::map<std::string, std::optional<Ratio>> precision;  // aligned_correct / |aligned_tasks|
};

inline AlignedReport aligned_precision(const std::vector<RunSet>& sets) {
  if (sets.empty()) throw EmptyRunSet("aligned precision over zero run sets");
  AlignedReport rep;
  std::map<std::string, std::map<std::string, const RunRecord*>> by_label;
  for (const auto& s : sets) {
    rep.labels.push_back(s.label);
    auto& slot = by_label[s.label];
    for (const auto& r : s.records) slot[r.task_id] = &r;
  }

  for (const auto& [task, rec] : by_label[sets.front().label]) {
    bool everywhere = true;
    for (const auto& s : sets) {
      auto it = by_label[s.label].find(task);
      if (it == by_label[s.label].end() || !it->second->finished() || !it->second->judged()) {
        everywhere = false;
        break;
      }
    }
    (void)rec;
    if (everywhere) rep.aligned_tasks.insert(task);
  }

  if (rep.aligned_tasks.empty()) {
    rep.empty_alignment = true;
    for (const auto& s : sets) rep.precision[s.label] = std::nullopt;
    return rep;
  }
  for (const auto& s : sets) {
    long long correct = 0;
    for (const auto& task : rep.aligned_tasks)
      if (by_label[s.label][task]->correct()) ++correct;
    rep.aligned_correct[s.label] = correct;
    rep.precision[s.label] =
        Ratio::of(correct, static_cast<long long>(rep.aligned_tasks.size()));
  }
  return rep;
}

// Tasks whose context management actually fired under every strategy; the
// slice where strategy choice, not trigger frequency, drives the outcome.
inline std::set<std::string> aligned_cm_subset(const std::vector<RunSet>& sets) {
  if (sets.empty()) throw EmptyRunSet("aligned cm subset over zero run sets");
  std::set<std::string> out;
  std::map<std::string, std::map<std::string, const RunRecord*>> by_label;
  for (const auto& s : sets)
    for (const auto& r : s.records) by_label[s.label][r.task_id] = &r;
  for (const auto& [task, rec] : by_label[sets.front().label]) {
    (void)rec;
    bool everywhere = true;
    for (const auto& s : sets) {
      auto it = by_label[s.label].find(task);
      if (it == by_label[s.label].end() || it->second->trigger_events.empty()) {
        everywhere = false;
        break;
      }
    }
    if (everywhere) out.insert(task);
  }
  return out;
}

inline RunSet restrict_tasks(const RunSet& runs, const std::set<std::string>& tasks) {
  RunSet out;
  out.label = runs.label;
  for (const auto& r : runs.records)
    if (tasks.count(r.task_id)) out.records.push_back(r);
  return out;
}

// Finish probability of n independent restarts each finishing with
// probability eta_single.
inline double discard_all_eta_model(double eta_single, long long n) {
  if (!(eta_single >= 0.0 && eta_single <= 1.0))
    throw DomainError("eta_single must lie in [0,1]");
  if (n < 1) throw DomainError("attempt count must be >= 1");
  return 1.0 - std::pow(1.0 - eta_single, static_cast<double>(n));
}

// Strategy-to-strategy switching behaviour across consecutive routing
// decisions. Rows are exact rationals; a row with no outgoing observations is
// left undefined rather than invented.
struct TransitionMatrix {
  std::vector<std::string> states;
  std::vector<std::vector<long long>> counts;  // [from][to]
  std::vector<long long> row_totals;

  std::optional<std::vector<Ratio>> row(size_t i) const {
    if (row_totals[i] == 0) return std::nullopt;
    std::vector<Ratio> out;
    out.reserve(states.size());
    for (size_t j = 0; j < states.size(); ++j)
      out.push_back(Ratio::of(counts[i][j], row_totals[i]));
    return out;
  }
};

inline TransitionMatrix transition_matrix(const RunSet& runs) {
  std::set<std::string> state_set;
  for (const auto& r : runs.records)
    for (const auto& d : r.routing) {
      for (const auto& c : d.candidates) state_set.insert(c);
      state_set.insert(d.chosen);
    }

  TransitionMatrix m;
  m.states.assign(state_set.begin(), state_set.end());
  std::map<std::string, size_t> pos;
  for (size_t i = 0; i < m.states.size(); ++i) pos[m.states[i]] = i;
  m.counts.assign(m.states.size(), std::vector<long long>(m.states.size(), 0));
  m.row_totals.assign(m.states.size(), 0);

  long long pairs = 0;
  for (const auto& r : runs.records) {
    for (size_t i = 0; i + 1 < r.routing.size(); ++i) {
      size_t from = pos[r.routing[i].chosen];
      size_t to = pos[r.routing[i + 1].chosen];
      ++m.counts[from][to];
      ++m.row_totals[from];
      ++pairs;
    }
  }
  if (pairs == 0)
    throw NoTransitions("run set '" + runs.label + "' has no consecutive routing decisions");
  return m;
}

struct ScatterPoint {
  std::string label;
  std::string task_id;
  long long turns = 0;
  long long tokens = 0;
};

struct CostReport {
  std::map<std::string, double> mean_turns;   // over finished records
  std::map<std::string, double> mean_tokens;  // includes discarded-branch spend
  std::vector<ScatterPoint> scatter;
};

inline CostReport cost_report(const std::vector<RunSet>& sets) {
  CostReport rep;
  for (const auto& s : sets) {
    long long turns = 0, tokens = 0, n = 0;
    for (const auto& r : s.records) {
      if (!r.finished()) continue;
      ++n;
      turns += r.turns_consumed;
      tokens += r.total_tokens;
      rep.scatter.push_back(ScatterPoint{s.label, r.task_id, r.turns_consumed, r.total_tokens});
    }
    if (n > 0) {
      rep.mean_turns[s.label] = static_cast<double>(turns) / static_cast<double>(n);
      rep.mean_tokens[s.label] = static_cast<double>(tokens) / static_cast<double>(n);
    }
  }
  return rep;
}

}  // namespace ctxroute
