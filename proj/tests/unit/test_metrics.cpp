#include <catch2/catch_amalgamated.hpp>

#include "ctxroute/metrics.hpp"

#include <random>

using namespace ctxroute;

namespace {

RunRecord rec(const std::string& task, const std::string& status, int verdict /* -1 none */,
              long long turns = 10, long long tokens = 1000) {
  RunRecord r;
  r.task_id = task;
  r.status = status;
  if (verdict >= 0) {
    VerdictRecord v;
    v.mode = "exact_match";
    v.correct = verdict == 1;
    r.verdict = v;
  }
  r.turns_consumed = turns;
  r.total_tokens = tokens;
  return r;
}

// Synthetic set with exact tallies: m judged tasks, n_finish finished,
// n_correct correct, plus `unjudged` finished-but-unjudged extras.
RunSet counted_runset(const std::string& label, long long m, long long n_finish,
                      long long n_correct, long long unjudged = 0) {
  RunSet s;
  s.label = label;
  long long id = 0;
  for (long long i = 0; i < n_correct; ++i)
    s.records.push_back(rec("t" + std::to_string(id++), "finished", 1));
  for (long long i = 0; i < n_finish - n_correct; ++i)
    s.records.push_back(rec("t" + std::to_string(id++), "finished", 0));
  for (long long i = 0; i < m - n_finish; ++i)
    s.records.push_back(rec("t" + std::to_string(id++), "exhausted", -1));
  for (long long i = 0; i < unjudged; ++i)
    s.records.push_back(rec("t" + std::to_string(id++), "finished", -1));
  return s;
}

}  // namespace

TEST_CASE("estimate_eta_rho tallies statuses exactly", "[metrics]") {
  RunSet s;
  s.label = "demo";
  s.records.push_back(rec("a", "finished", 1, 8, 900));
  s.records.push_back(rec("b", "finished", 1, 10, 1100));
  s.records.push_back(rec("c", "finished", 0, 12, 1300));
  s.records.push_back(rec("d", "exhausted", -1));
  s.records.push_back(rec("e", "finished", -1));  // finished but unjudged

  auto rep = estimate_eta_rho(s);
  CHECK(rep.m == 4);  // unjudged finish drops out of the denominator
  CHECK(rep.n_finish == 3);
  CHECK(rep.n_correct == 2);
  CHECK(rep.excluded_unjudged == 1);
  CHECK(rep.search_efficiency == Ratio::of(3, 4));
  REQUIRE(rep.terminal_precision);
  CHECK(*rep.terminal_precision == Ratio::of(2, 3));
  CHECK(rep.pass_at_1 == Ratio::of(1, 2));
  // the identity holds exactly: eta * rho == pass@1.
  CHECK(rep.search_efficiency * *rep.terminal_precision == rep.pass_at_1);
  CHECK(rep.mean_turns == 10.0);
  CHECK(rep.mean_tokens == 1100.0);
}

TEST_CASE("estimate_eta_rho guards empty sets", "[metrics]") {
  RunSet empty;
  empty.label = "none";
  CHECK_THROWS_AS(estimate_eta_rho(empty), EmptyRunSet);
  RunSet only_unjudged;
  only_unjudged.label = "u";
  only_unjudged.records.push_back(rec("a", "finished", -1));
  CHECK_THROWS_AS(estimate_eta_rho(only_unjudged), EmptyRunSet);

  RunSet no_finish;
  no_finish.label = "nf";
  no_finish.records.push_back(rec("a", "exhausted", -1));
  auto rep = estimate_eta_rho(no_finish);
  CHECK(rep.n_finish == 0);
  CHECK_FALSE(rep.terminal_precision.has_value());
  CHECK(rep.pass_at_1 == Ratio::of(0, 1));
}

TEST_CASE("the multiplicative identity holds over random tallies", "[metrics]") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 200; ++i) {
    long long m = 1 + static_cast<long long>(rng() % 400);
    long long n_finish = static_cast<long long>(rng() % (m + 1));
    long long n_correct = n_finish == 0 ? 0 : static_cast<long long>(rng() % (n_finish + 1));
    auto rep = estimate_eta_rho(counted_runset("rand", m, n_finish, n_correct));
    CHECK(rep.pass_at_1 == Ratio::of(n_correct, m));
    if (n_finish > 0)
      CHECK(rep.search_efficiency * *rep.terminal_precision == rep.pass_at_1);
  }
}

TEST_CASE("reference tallies render the pinned percent strings", "[metrics]") {
  // Frozen reference rows: counts -> (eta, rho, pass@1) as one-decimal
  // percents, both evaluation model families at M=122 and M=73.
  struct Row {
    long long m, n_finish, n_correct;
    const char *eta, *rho, *pass1;
  };
  const Row rows[] = {
      {122, 51, 35, "41.8", "68.6", "28.7"},
      {122, 68, 35, "55.7", "51.5", "28.7"},
      {122, 91, 43, "74.6", "47.3", "35.2"},
      {122, 90, 51, "73.8", "56.7", "41.8"},
      {73, 40, 24, "54.8", "60.0", "32.9"},
      {73, 72, 22, "98.6", "30.6", "30.1"},
      {73, 53, 23, "72.6", "43.4", "31.5"},
      {73, 68, 26, "93.2", "38.2", "35.6"},
  };
  for (const auto& row : rows) {
    auto rep = estimate_eta_rho(counted_runset("ref", row.m, row.n_finish, row.n_correct));
    CHECK(rep.search_efficiency.percent_1dp() == row.eta);
    REQUIRE(rep.terminal_precision);
    CHECK(rep.terminal_precision->percent_1dp() == row.rho);
    CHECK(rep.pass_at_1.percent_1dp() == row.pass1);
  }
}

TEST_CASE("aligned precision matches a brute-force oracle", "[metrics]") {
  // three strategies, six tasks, varied statuses.
  auto mk = [](const std::string& label,
               std::initializer_list<std::pair<const char*, int>> status_by_task) {
    RunSet s;
    s.label = label;
    for (const auto& [task, code] : status_by_task) {
      // code: 0 exhausted, 1 finished correct, 2 finished wrong, 3 finished unjudged
      if (code == 0) s.records.push_back(rec(task, "exhausted", -1));
      if (code == 1) s.records.push_back(rec(task, "finished", 1));
      if (code == 2) s.records.push_back(rec(task, "finished", 0));
      if (code == 3) s.records.push_back(rec(task, "finished", -1));
    }
    return s;
  };
  std::vector<RunSet> sets;
  sets.push_back(mk("A", {{"t1", 1}, {"t2", 1}, {"t3", 0}, {"t4", 1}, {"t5", 2}, {"t6", 1}}));
  sets.push_back(mk("B", {{"t1", 2}, {"t2", 1}, {"t3", 1}, {"t4", 3}, {"t5", 1}, {"t6", 1}}));
  sets.push_back(mk("C", {{"t1", 1}, {"t2", 0}, {"t3", 1}, {"t4", 1}, {"t5", 1}}));  // t6 missing

  auto rep = aligned_precision(sets);
  // oracle: a task aligns iff finished-and-judged in every set.
  // t1: 1/2/1 yes. t2: C exhausted, no. t3: A exhausted, no. t4: B unjudged, no.
  // t5: 2/1/1 yes. t6: missing in C, no.
  CHECK(rep.aligned_tasks == std::set<std::string>{"t1", "t5"});
  CHECK_FALSE(rep.empty_alignment);
  CHECK(rep.aligned_correct.at("A") == 1);  // t1 correct, t5 wrong
  CHECK(rep.aligned_correct.at("B") == 1);  // t1 wrong, t5 correct
  CHECK(rep.aligned_correct.at("C") == 2);
  CHECK(*rep.precision.at("A") == Ratio::of(1, 2));
  CHECK(*rep.precision.at("C") == Ratio::of(1, 1));

  // empty alignment: disjoint finished sets.
  std::vector<RunSet> disjoint;
  disjoint.push_back(mk("A", {{"t1", 1}, {"t2", 0}}));
  disjoint.push_back(mk("B", {{"t1", 0}, {"t2", 1}}));
  auto none = aligned_precision(disjoint);
  CHECK(none.empty_alignment);
  CHECK(none.aligned_tasks.empty());
  CHECK_FALSE(none.precision.at("A").has_value());

  CHECK_THROWS_AS(aligned_precision({}), EmptyRunSet);
}

TEST_CASE("aligned cm subset needs a trigger everywhere", "[metrics]") {
  auto with_trigger = [](RunRecord r) {
    r.trigger_events.push_back(TriggerEvent{5, 999});
    return r;
  };
  RunSet a;
  a.label = "A";
  a.records.push_back(with_trigger(rec("t1", "finished", 1)));
  a.records.push_back(with_trigger(rec("t2", "exhausted", -1)));
  a.records.push_back(rec("t3", "finished", 1));
  RunSet b;
  b.label = "B";
  b.records.push_back(with_trigger(rec("t1", "finished", 0)));
  b.records.push_back(rec("t2", "finished", 1));
  b.records.push_back(with_trigger(rec("t3", "finished", 1)));

  auto subset = aligned_cm_subset({a, b});
  // t1 triggered in both; t2 only in A; t3 only in B. status is irrelevant.
  CHECK(subset == std::set<std::string>{"t1"});

  auto cut = restrict_tasks(a, subset);
  CHECK(cut.label == "A");
  REQUIRE(cut.records.size() == 1);
  CHECK(cut.records[0].task_id == "t1");
}

TEST_CASE("the restart finish model is exact", "[metrics]") {
  CHECK(discard_all_eta_model(0.5, 2) == 0.75);
  CHECK(discard_all_eta_model(0.3, 1) == Catch::Approx(0.3).epsilon(1e-15));
  CHECK(discard_all_eta_model(0.3, 5) == Catch::Approx(0.83193).margin(1e-9));
  CHECK(discard_all_eta_model(0.0, 7) == 0.0);
  CHECK(discard_all_eta_model(1.0, 1) == 1.0);
  CHECK_THROWS_AS(discard_all_eta_model(-0.1, 2), DomainError);
  CHECK_THROWS_AS(discard_all_eta_model(1.1, 2), DomainError);
  CHECK_THROWS_AS(discard_all_eta_model(0.5, 0), DomainError);
}

TEST_CASE("transition matrix counts consecutive choices", "[metrics]") {
  auto routed = [](std::initializer_list<const char*> chain) {
    RunRecord r;
    r.task_id = "t";
    r.status = "finished";
    int idx = 0;
    for (const char* label : chain) {
      RoutingRecord d;
      d.trigger_index = idx++;
      d.candidates = {"discard_all", "keep_last_n", "summary"};
      d.chosen = label;
      r.routing.push_back(d);
    }
    return r;
  };
  RunSet s;
  s.label = "adaptive";
  s.records.push_back(routed({"discard_all", "keep_last_n", "keep_last_n"}));
  s.records.push_back(routed({"keep_last_n", "summary"}));
  s.records.push_back(routed({"summary"}));  // single decision: no pair
  s.records.push_back(rec("plain", "finished", 1));

  auto m = transition_matrix(s);
  REQUIRE(m.states == std::vector<std::string>{"discard_all", "keep_last_n", "summary"});

  // brute-force oracle over the same records.
  std::map<std::string, std::map<std::string, long long>> oracle;
  for (const auto& r : s.records)
    for (size_t i = 0; i + 1 < r.routing.size(); ++i)
      ++oracle[r.routing[i].chosen][r.routing[i + 1].chosen];
  for (size_t i = 0; i < m.states.size(); ++i) {
    long long row_sum = 0;
    for (size_t j = 0; j < m.states.size(); ++j) {
      CHECK(m.counts[i][j] == oracle[m.states[i]][m.states[j]]);
      row_sum += m.counts[i][j];
    }
    CHECK(m.row_totals[i] == row_sum);
  }

  // defined rows are exact distributions summing to one.
  auto row_da = m.row(0);
  REQUIRE(row_da);
  CHECK((*row_da)[1] == Ratio::of(1, 1));
  auto row_kln = m.row(1);
  REQUIRE(row_kln);
  CHECK((*row_kln)[1] == Ratio::of(1, 2));
  CHECK((*row_kln)[2] == Ratio::of(1, 2));
  // summary never re-routed: its row is undefined, not fabricated.
  CHECK_FALSE(m.row(2).has_value());
}

TEST_CASE("transition matrix requires at least one pair", "[metrics]") {
  RunSet s;
  s.label = "single";
  RunRecord r;
  r.task_id = "t";
  r.status = "finished";
  RoutingRecord d;
  d.chosen = "discard_all";
  d.candidates = {"discard_all"};
  r.routing.push_back(d);
  s.records.push_back(r);
  CHECK_THROWS_AS(transition_matrix(s), NoTransitions);
}

TEST_CASE("cost report averages finished records per label", "[metrics]") {
  RunSet a;
  a.label = "A";
  a.records.push_back(rec("t1", "finished", 1, 10, 1000));
  a.records.push_back(rec("t2", "finished", 0, 20, 3000));
  a.records.push_back(rec("t3", "exhausted", -1, 99, 99999));
  RunSet b;
  b.label = "B";
  b.records.push_back(rec("t1", "finished", 1, 7, 700));

  auto rep = cost_report({a, b});
  CHECK(rep.mean_turns.at("A") == 15.0);
  CHECK(rep.mean_tokens.at("A") == 2000.0);
  CHECK(rep.mean_turns.at("B") == 7.0);
  REQUIRE(rep.scatter.size() == 3);  // finished records only
  CHECK(rep.scatter[0].label == "A");
  CHECK(rep.scatter[0].task_id == "t1");
  CHECK(rep.scatter[2].label == "B");
}
