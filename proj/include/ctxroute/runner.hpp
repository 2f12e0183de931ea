#pragma once

#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <memory>
#include <semaphore>
#include <set>
#include <string>
#include <vector>

#include "ctxroute/agent_loop.hpp"
#include "ctxroute/config.hpp"
#include "ctxroute/http_backend.hpp"
#include "ctxroute/live_tools.hpp"
#include "ctxroute/run_record.hpp"
#include "ctxroute/tools.hpp"

namespace ctxroute {

// Task files are JSONL: {"id": ..., "prompt": ..., "gold"?: ..., "tools"?: [...]}
inline std::vector<TaskSpec> load_tasks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TaskFileUnreadable("cannot open task file: " + path.string());
  std::vector<TaskSpec> tasks;
  std::set<std::string> seen;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw TaskFileUnreadable("bad JSON at " + path.string() + ":" + std::to_string(line_no));
    TaskSpec t;
    t.id = j.value("id", "");
    t.prompt = j.value("prompt", "");
    if (t.id.empty() || t.prompt.empty())
      throw TaskFileUnreadable("task at line " + std::to_string(line_no) +
                               " needs non-empty id and prompt");
    if (!seen.insert(t.id).second)
      throw TaskFileUnreadable("duplicate task id: " + t.id);
    if (j.contains("gold")) t.gold = j["gold"].get<std::string>();
    if (j.contains("tools")) t.tools = j["tools"].get<std::vector<std::string>>();
    tasks.push_back(std::move(t));
  }
  return tasks;
}

inline std::vector<RunRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TaskFileUnreadable("cannot open records file: " + path.string());
  std::vector<RunRecord> records;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw TaskFileUnreadable("bad JSON at " + path.string() + ":" + std::to_string(line_no));
    records.push_back(j.get<RunRecord>());
  }
  return records;
}

// A run directory holds records.jsonl plus the normalized config that made it.
inline RunSet load_run_dir(const std::filesystem::path& dir) {
  RunSet set;
  auto records_path = dir / "records.jsonl";
  set.records = load_records(records_path);
  std::set<std::string> ids;
  for (const auto& r : set.records) {
    if (!ids.insert(r.task_id).second)
      throw SchemaMismatch("duplicate record for task '" + r.task_id + "' in " +
                           records_path.string());
    if (set.label.empty()) set.label = r.policy;
  }
  if (set.label.empty()) set.label = dir.filename().string();
  return set;
}

struct RunnerHooks {
  // Called after each task completes, in completion order. Optional.
  std::function<void(const RunRecord&)> on_record;
};

// Owns backend instances for one run; roles without an explicit spec share
// the agent backend so "same model for both stages" is the default.
struct BackendSet {
  std::shared_ptr<ModelBackend> agent;
  std::shared_ptr<ModelBackend> summarizer;
  std::shared_ptr<ModelBackend> router;
  std::shared_ptr<ModelBackend> judge;
  std::shared_ptr<UsageState> usage = std::make_shared<UsageState>();
  LoopBackends loop;
};

inline std::shared_ptr<ModelBackend> build_backend(BackendSpec spec, const std::string& role,
                                                   const std::shared_ptr<UsageState>& usage) {
  if (spec.kind == "scripted") {
    std::ifstream in(spec.script_path);
    if (!in) throw ConfigInvalid("cannot open script file: " + spec.script_path);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ConfigInvalid("invalid JSON in script: " + spec.script_path);
    return scripted_backend_from_json(doc);
  }
  HttpBackendConfig http;
  http.base_url = spec.base_url;
  http.api_key = spec.api_key;
  http.model_id = spec.model_id;
  http.max_attempts = spec.max_attempts;
  http.timeout_seconds = spec.timeout_seconds;
  http.capture_path = spec.capture_path;
  apply_env_overrides(http, role);
  if (http.base_url.empty())
    throw ConfigInvalid("backend '" + role + "' has no base_url (flag, config or env)");
  return std::make_shared<HttpBackend>(http, usage);
}

inline BackendSet build_backends(const RunConfig& cfg) {
  BackendSet set;
  set.agent = build_backend(cfg.agent, "agent", set.usage);
  set.summarizer = cfg.summarizer ? build_backend(*cfg.summarizer, "summarizer", set.usage)
                                  : set.agent;
  set.router = cfg.router ? build_backend(*cfg.router, "router", set.usage) : set.agent;
  set.judge = cfg.judge ? build_backend(*cfg.judge, "judge", set.usage) : set.agent;
  set.loop.agent = set.agent.get();
  set.loop.summarizer = set.summarizer.get();
  set.loop.router = set.router.get();
  set.loop.judge = set.judge.get();
  set.loop.agent_model_id = cfg.agent.model_id;
  set.loop.summarizer_model_id = cfg.summarizer ? cfg.summarizer->model_id : cfg.agent.model_id;
  set.loop.router_model_id = cfg.router ? cfg.router->model_id : cfg.agent.model_id;
  set.loop.judge_model_id = cfg.judge ? cfg.judge->model_id : cfg.agent.model_id;
  return set;
}

inline std::unique_ptr<ToolEnvironment> build_tools(const RunConfig& cfg,
                                                    const MockCorpus* corpus,
                                                    ModelBackend* extractor,
                                                    const std::vector<std::string>& enabled) {
  std::set<std::string> enabled_set(enabled.begin(), enabled.end());
  if (cfg.tools_mode == "mock")
    return std::make_unique<MockToolEnvironment>(*corpus, cfg.caps, enabled_set);
  LiveToolConfig live;
  live.search_endpoint = cfg.search_endpoint;
  live.scholar_endpoint = cfg.scholar_endpoint;
  live.sandbox_endpoint = cfg.sandbox_endpoint;
  return std::make_unique<LiveToolEnvironment>(live, extractor, cfg.caps, enabled_set);
}

struct RunSummary {
  int executed = 0;
  int skipped = 0;   // resumption: record with the same config digest existed
  int errors = 0;
  std::filesystem::path records_path;
};

// Executes the benchmark under one config. Appends one JSONL line per task to
// <output_dir>/records.jsonl in task order; tasks already recorded under the
// same config digest are skipped, so interrupted batches resume cleanly.
inline RunSummary run_benchmark(const RunConfig& cfg, const RunnerHooks& hooks = {}) {
  validate_config(cfg);
  std::vector<TaskSpec> tasks = load_tasks(cfg.benchmark_path);
  if (cfg.max_tasks > 0 && static_cast<long long>(tasks.size()) > cfg.max_tasks)
    tasks.resize(static_cast<size_t>(cfg.max_tasks));

  std::filesystem::create_directories(cfg.output_dir);
  RunSummary summary;
  summary.records_path = std::filesystem::path(cfg.output_dir) / "records.jsonl";
  const std::string digest = config_digest(cfg);

  {
    // BackendSpec serialization already drops api keys.
    nlohmann::json normalized = cfg;
    std::ofstream cfg_out(std::filesystem::path(cfg.output_dir) / "config.json");
    cfg_out << normalized.dump(2) << "\n";
  }

  std::set<std::string> done;
  if (std::filesystem::exists(summary.records_path)) {
    for (const auto& r : load_records(summary.records_path))
      if (r.config_digest == digest) done.insert(r.task_id);
  }

  BackendSet backends = build_backends(cfg);
  std::optional<MockCorpus> corpus;
  if (cfg.tools_mode == "mock") corpus = load_mock_corpus(cfg.corpus_dir);
  TokenCounter* counter_ptr;
  HeuristicTokenCounter heuristic;
  BackendUsageCounter usage_counter(backends.usage);
  counter_ptr = cfg.counter == "backend_usage"
                    ? static_cast<TokenCounter*>(&usage_counter)
                    : static_cast<TokenCounter*>(&heuristic);

  const int parallelism = cfg.deterministic ? 1 : cfg.task_parallelism;
  std::counting_semaphore<256> slots(parallelism > 256 ? 256 : parallelism);

  std::vector<std::optional<RunRecord>> results(tasks.size());
  std::vector<std::future<void>> jobs;
  for (size_t i = 0; i < tasks.size(); ++i) {
    if (done.count(tasks[i].id)) {
      ++summary.skipped;
      continue;
    }
    auto work = [&, i]() {
      slots.acquire();
      const TaskSpec& task = tasks[i];
      std::uint64_t task_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i));
      std::vector<std::string> enabled = task.tools ? *task.tools : cfg.enabled_tools;
      RunRecord rec;
      try {
        auto tools = build_tools(cfg, corpus ? &*corpus : nullptr, backends.loop.agent, enabled);
        rec = run_single_task(task, cfg, backends.loop, *tools, *counter_ptr, task_seed);
      } catch (const std::exception& e) {
        rec.task_id = task.id;
        rec.gold = task.gold;
        rec.config_digest = digest;
        rec.seed = task_seed;
        rec.policy = cfg.policy.label();
        rec.counter = counter_ptr->name();
        rec.status = "error";
        rec.error = e.what();
      }
      results[i] = std::move(rec);
      slots.release();
    };
    if (parallelism == 1)
      work();
    else
      jobs.push_back(std::async(std::launch::async, work));
  }
  for (auto& j : jobs) j.get();

  std::ofstream out(summary.records_path, std::ios::app);
  if (!out) throw TaskFileUnreadable("cannot write " + summary.records_path.string());
  for (auto& maybe : results) {
    if (!maybe) continue;
    nlohmann::json j = *maybe;
    out << j.dump() << "\n";
    ++summary.executed;
    if (maybe->status == "error") ++summary.errors;
    if (hooks.on_record) hooks.on_record(*maybe);
  }
  return summary;
}

}  // namespace ctxroute
