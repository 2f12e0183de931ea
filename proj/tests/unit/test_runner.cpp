#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "ctxroute/runner.hpp"

using namespace ctxroute;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("ctxroute_runner_" + tag + "_" + std::to_string(getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

// Minimal world: a corpus nobody visits and a script whose agent answers
// instantly, one reply per task in task order.
RunConfig scripted_config(TempDir& dir, int script_answers) {
  write_file(dir.path / "pages.json", R"({"mock://a": "alpha page"})");
  write_file(dir.path / "search_index.json", R"({"alpha": ["mock://a"]})");

  nlohmann::json scopes = nlohmann::json::object();
  scopes["main"] = nlohmann::json::array();
  for (int i = 0; i < script_answers; ++i)
    scopes["main"].push_back({{"final_answer", i == 0 ? "answer one" : "not the gold"}});
  write_file(dir.path / "script.json", nlohmann::json{{"scopes", scopes}}.dump());

  write_file(dir.path / "tasks.jsonl",
             R"({"id": "t1", "prompt": "first question?", "gold": "answer one"})"
             "\n"
             R"({"id": "t2", "prompt": "second question?", "gold": "answer two"})"
             "\n");

  RunConfig cfg;
  cfg.benchmark_path = (dir.path / "tasks.jsonl").string();
  cfg.corpus_dir = dir.path.string();
  cfg.output_dir = (dir.path / "out").string();
  cfg.agent.kind = "scripted";
  cfg.agent.script_path = (dir.path / "script.json").string();
  cfg.policy.kind = "baseline";
  cfg.deterministic = true;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("load_tasks reads and validates JSONL", "[runner]") {
  TempDir dir("tasks");
  SECTION("valid file with optional fields and blank lines") {
    write_file(dir.path / "ok.jsonl",
               R"({"id": "a", "prompt": "p1", "gold": "g1"})"
               "\n\n"
               R"({"id": "b", "prompt": "p2", "tools": ["visit"]})"
               "\n");
    auto tasks = load_tasks(dir.path / "ok.jsonl");
    REQUIRE(tasks.size() == 2);
    CHECK(tasks[0].id == "a");
    REQUIRE(tasks[0].gold.has_value());
    CHECK(*tasks[0].gold == "g1");
    CHECK_FALSE(tasks[0].tools.has_value());
    CHECK_FALSE(tasks[1].gold.has_value());
    REQUIRE(tasks[1].tools.has_value());
    CHECK(*tasks[1].tools == std::vector<std::string>{"visit"});
  }
  SECTION("missing file") {
    CHECK_THROWS_AS(load_tasks(dir.path / "nope.jsonl"), TaskFileUnreadable);
  }
  SECTION("broken JSON line") {
    write_file(dir.path / "bad.jsonl", "{\"id\": \"a\", \"prompt\": \"p\"}\n{oops\n");
    CHECK_THROWS_AS(load_tasks(dir.path / "bad.jsonl"), TaskFileUnreadable);
  }
  SECTION("missing id or prompt") {
    write_file(dir.path / "noid.jsonl", R"({"prompt": "p"})" "\n");
    CHECK_THROWS_AS(load_tasks(dir.path / "noid.jsonl"), TaskFileUnreadable);
    write_file(dir.path / "noprompt.jsonl", R"({"id": "a"})" "\n");
    CHECK_THROWS_AS(load_tasks(dir.path / "noprompt.jsonl"), TaskFileUnreadable);
  }
  SECTION("duplicate id") {
    write_file(dir.path / "dup.jsonl",
               R"({"id": "a", "prompt": "p"})" "\n" R"({"id": "a", "prompt": "q"})" "\n");
    CHECK_THROWS_AS(load_tasks(dir.path / "dup.jsonl"), TaskFileUnreadable);
  }
}

TEST_CASE("run_benchmark executes, records and resumes", "[runner]") {
  TempDir dir("bench");
  RunConfig cfg = scripted_config(dir, 2);

  int seen = 0;
  RunnerHooks hooks;
  hooks.on_record = [&](const RunRecord&) { ++seen; };

  RunSummary first = run_benchmark(cfg, hooks);
  CHECK(first.executed == 2);
  CHECK(first.skipped == 0);
  CHECK(first.errors == 0);
  CHECK(seen == 2);
  CHECK(fs::exists(first.records_path));

  auto records = load_records(first.records_path);
  REQUIRE(records.size() == 2);
  CHECK(records[0].task_id == "t1");
  CHECK(records[1].task_id == "t2");
  CHECK(records[0].seed == derive_seed(cfg.seed, 0));
  CHECK(records[1].seed == derive_seed(cfg.seed, 1));
  CHECK(records[0].status == "finished");
  REQUIRE(records[0].verdict.has_value());
  CHECK(records[0].verdict->correct);       // script said the gold answer
  REQUIRE(records[1].verdict.has_value());
  CHECK_FALSE(records[1].verdict->correct);  // script said something else
  CHECK(records[0].config_digest == config_digest(cfg));

  // The normalized config lands next to the records, without credentials.
  fs::path cfg_path = fs::path(cfg.output_dir) / "config.json";
  REQUIRE(fs::exists(cfg_path));
  std::ifstream in(cfg_path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text.find("api_key") == std::string::npos);
  RunConfig loaded = nlohmann::json::parse(text).get<RunConfig>();
  CHECK(config_digest(loaded) == config_digest(cfg));

  // Second pass under the same digest: everything is already done.
  seen = 0;
  RunSummary second = run_benchmark(cfg, hooks);
  CHECK(second.executed == 0);
  CHECK(second.skipped == 2);
  CHECK(seen == 0);
  CHECK(load_records(first.records_path).size() == 2);

  // The finished directory loads as a run set labeled by its policy.
  RunSet set = load_run_dir(cfg.output_dir);
  CHECK(set.label == "baseline");
  CHECK(set.records.size() == 2);
}

TEST_CASE("max_tasks trims the batch", "[runner]") {
  TempDir dir("cut");
  RunConfig cfg = scripted_config(dir, 2);
  cfg.max_tasks = 1;
  RunSummary summary = run_benchmark(cfg);
  CHECK(summary.executed == 1);
  auto records = load_records(summary.records_path);
  REQUIRE(records.size() == 1);
  CHECK(records[0].task_id == "t1");
}

TEST_CASE("error records are written and counted", "[runner]") {
  TempDir dir("err");
  RunConfig cfg = scripted_config(dir, 2);
  cfg.policy.kind = "static";
  cfg.policy.static_strategy = Strategy::keep_last_n(2);
  cfg.system_prompt = std::string(4000, 'x');
  cfg.budget.max_context_tokens = 1000;  // base prompt cannot fit
  RunSummary summary = run_benchmark(cfg);
  CHECK(summary.executed == 2);
  CHECK(summary.errors == 2);
  auto records = load_records(summary.records_path);
  REQUIRE(records.size() == 2);
  CHECK(records[0].status == "error");
  CHECK(records[0].error.find("does not fit") != std::string::npos);
}

TEST_CASE("build_backend validates its inputs", "[runner]") {
  auto usage = std::make_shared<UsageState>();
  SECTION("scripted backend needs a readable script") {
    BackendSpec spec;
    spec.kind = "scripted";
    spec.script_path = "/definitely/not/here.json";
    CHECK_THROWS_AS(build_backend(spec, "agent", usage), ConfigInvalid);
  }
  SECTION("scripted backend needs valid JSON") {
    TempDir dir("script");
    write_file(dir.path / "broken.json", "{nope");
    BackendSpec spec;
    spec.kind = "scripted";
    spec.script_path = (dir.path / "broken.json").string();
    CHECK_THROWS_AS(build_backend(spec, "agent", usage), ConfigInvalid);
  }
  SECTION("http backend needs a base_url from somewhere") {
    unsetenv("CTXROUTE_AGENT_BASE_URL");
    unsetenv("CTXROUTE_BASE_URL");
    BackendSpec spec;
    spec.kind = "http";
    CHECK_THROWS_AS(build_backend(spec, "agent", usage), ConfigInvalid);
  }
  SECTION("http base_url can come from the role environment") {
    setenv("CTXROUTE_AGENT_BASE_URL", "http://127.0.0.1:1", 1);
    BackendSpec spec;
    spec.kind = "http";
    auto backend = build_backend(spec, "agent", usage);
    CHECK(backend->name().rfind("http:", 0) == 0);
    unsetenv("CTXROUTE_AGENT_BASE_URL");
  }
}

TEST_CASE("load_run_dir rejects duplicates and missing files", "[runner]") {
  TempDir dir("load");
  SECTION("missing records file") {
    CHECK_THROWS_AS(load_run_dir(dir.path), TaskFileUnreadable);
  }
  SECTION("duplicate task ids") {
    RunRecord rec;
    rec.task_id = "same";
    rec.policy = "baseline";
    nlohmann::json j = rec;
    write_file(dir.path / "records.jsonl", j.dump() + "\n" + j.dump() + "\n");
    CHECK_THROWS_AS(load_run_dir(dir.path), SchemaMismatch);
  }
  SECTION("unparseable record line") {
    write_file(dir.path / "records.jsonl", "{bad\n");
    CHECK_THROWS_AS(load_run_dir(dir.path), TaskFileUnreadable);
  }
}
