#include <catch2/catch_amalgamated.hpp>

#include "ctxroute/tools.hpp"

#include <filesystem>
#include <fstream>

using namespace ctxroute;
namespace fs = std::filesystem;

namespace {

const HeuristicTokenCounter kCounter;

MockCorpus tiny_corpus() {
  MockCorpus c;
  c.pages["mock://a"] = "Alpha Page\nBody about alpha topics.";
  c.pages["mock://b"] = "Beta Page\nBody about beta topics.";
  c.index["alpha"] = {"mock://a"};
  c.index["beta"] = {"mock://b", "mock://a"};
  c.scholar["routing"] = {ScholarEntry{"On Routing", "a fine paper", 2021, 42}};
  c.sandbox[fnv1a64_hex("print(1+1)")] = "2\n";
  return c;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("ctxroute_tools_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& body) {
  std::ofstream out(p);
  out << body;
}

}  // namespace

TEST_CASE("truncate_to_tokens appends a marker and respects the cap", "[tools]") {
  CHECK(truncate_to_tokens("short", 100, kCounter) == "short");

  std::string longtext;
  for (int i = 0; i < 300; ++i) longtext += "word word word ";
  auto cut = truncate_to_tokens(longtext, 50, kCounter);
  CHECK(kCounter.count_text(cut) <= 50);
  CHECK(cut.size() >= std::string("\n[result truncated]").size());
  CHECK(cut.find("\n[result truncated]") == cut.size() - 19);
  // trimmed at a whitespace boundary: the next source char is whitespace.
  std::string kept = cut.substr(0, cut.size() - 19);
  REQUIRE(kept.size() < longtext.size());
  CHECK(longtext.compare(0, kept.size(), kept) == 0);
  CHECK(longtext[kept.size()] == ' ');

  auto tiny = truncate_to_tokens(longtext, 1, kCounter);
  CHECK(kCounter.count_text(tiny) <= 1);
}

TEST_CASE("core tool specs reflect enabled extras and caps", "[tools]") {
  ToolCaps caps;
  caps.search = 111;
  caps.visit = 222;
  auto basic = core_tool_specs(caps, false, false);
  REQUIRE(basic.size() == 2);
  CHECK(basic[0].name == "search");
  CHECK(basic[0].result_token_cap == 111);
  CHECK(basic[1].name == "visit");
  CHECK(basic[1].result_token_cap == 222);
  CHECK(basic[0].parameters["type"] == "object");

  auto all = core_tool_specs(caps, true, true);
  REQUIRE(all.size() == 4);
  CHECK(all[2].name == "google_scholar");
  CHECK(all[3].name == "python_interpreter");
}

TEST_CASE("mock search formats ranked results", "[tools]") {
  MockToolEnvironment env(tiny_corpus());
  auto obs = env.execute(ToolCall{"search", nlohmann::json{{"queries", {"beta"}}}});
  std::string expected =
      "RESULTS FOR: beta\n"
      "  1. Beta Page | mock://b\n"
      "     Beta Page Body about beta topics.\n"
      "  2. Alpha Page | mock://a\n"
      "     Alpha Page Body about alpha topics.\n";
  CHECK(obs == expected);
}

TEST_CASE("mock search merges per-term hits for unknown phrases", "[tools]") {
  MockToolEnvironment env(tiny_corpus());
  auto obs = env.execute(ToolCall{"search", nlohmann::json{{"queries", {"beta alpha"}}}});
  // per-term merge preserves rank order and dedupes mock://a.
  CHECK(obs.find("1. Beta Page") != std::string::npos);
  CHECK(obs.find("2. Alpha Page") != std::string::npos);
  CHECK(obs.find("3.") == std::string::npos);

  auto none = env.execute(ToolCall{"search", nlohmann::json{{"queries", {"gamma"}}}});
  CHECK(none == "RESULTS FOR: gamma\n  no results\n");
}

TEST_CASE("mock search caps the query batch at five", "[tools]") {
  MockToolEnvironment env(tiny_corpus());
  nlohmann::json args{{"queries", {"alpha", "alpha", "alpha", "alpha", "alpha", "alpha"}}};
  auto obs = env.execute(ToolCall{"search", args});
  CHECK(obs.rfind("NOTE: query batch capped at 5", 0) == 0);
  size_t count = 0;
  size_t pos = 0;
  while ((pos = obs.find("RESULTS FOR:", pos)) != std::string::npos) { ++count; pos += 1; }
  CHECK(count == 5);
}

TEST_CASE("mock visit returns pages with goal framing", "[tools]") {
  MockToolEnvironment env(tiny_corpus());
  auto obs = env.execute(ToolCall{
      "visit", nlohmann::json{{"urls", {"mock://a", "mock://nope"}}, {"goal", "find alpha"}}});
  std::string expected =
      "PAGE: mock://a\n"
      "GOAL: find alpha\n"
      "Alpha Page\nBody about alpha topics.\n"
      "PAGE: mock://nope\n"
      "PAGE UNAVAILABLE\n";
  CHECK(obs == expected);
}

TEST_CASE("argument errors come back as observations", "[tools]") {
  MockToolEnvironment env(tiny_corpus());
  CHECK(env.execute(ToolCall{"search", nlohmann::json::object()}) ==
        "TOOL ERROR: search expects a non-empty 'queries' array");
  CHECK(env.execute(ToolCall{"visit", nlohmann::json{{"urls", nlohmann::json::array()}}}) ==
        "TOOL ERROR: visit expects a non-empty 'urls' array");
  CHECK(env.execute(ToolCall{"teleport", nlohmann::json::object()}) ==
        "TOOL ERROR: unknown tool 'teleport'");
  // disabled tools are unknown tools.
  CHECK(env.execute(ToolCall{"google_scholar", nlohmann::json{{"query", "routing"}}}) ==
        "TOOL ERROR: unknown tool 'google_scholar'");
}

TEST_CASE("scholar and sandbox tools answer when enabled", "[tools]") {
  MockToolEnvironment env(tiny_corpus(), ToolCaps{},
                          {"search", "visit", "google_scholar", "python_interpreter"});
  auto scholar = env.execute(ToolCall{"google_scholar", nlohmann::json{{"query", "Routing"}}});
  CHECK(scholar == "1. On Routing (2021, cited 42)\n   a fine paper\n");
  CHECK(env.execute(ToolCall{"google_scholar", nlohmann::json{{"query", "nothing"}}}) ==
        "no scholarly results");

  auto sandbox = env.execute(ToolCall{"python_interpreter", nlohmann::json{{"code", "print(1+1)"}}});
  CHECK(sandbox == "2\n");
  CHECK(env.execute(ToolCall{"python_interpreter", nlohmann::json{{"code", "import os"}}}) ==
        "sandbox offline");
}

TEST_CASE("per-tool caps truncate observations", "[tools]") {
  MockCorpus c = tiny_corpus();
  std::string big;
  for (int i = 0; i < 500; ++i) big += "line of page body number " + std::to_string(i) + "\n";
  c.pages["mock://big"] = "Big Page\n" + big;
  ToolCaps caps;
  caps.visit = 40;
  MockToolEnvironment env(c, caps);
  auto obs = env.execute(ToolCall{"visit", nlohmann::json{{"urls", {"mock://big"}}, {"goal", "g"}}});
  CHECK(kCounter.count_text(obs) <= 40);
  CHECK(obs.find("[result truncated]") != std::string::npos);
}

TEST_CASE("corpus loader enforces the directory contract", "[tools]") {
  TempDir dir;
  CHECK_THROWS_AS(load_mock_corpus(dir.path / "missing"), CorpusInvalid);

  // no pages.json at all.
  CHECK_THROWS_AS(load_mock_corpus(dir.path), CorpusInvalid);

  write_file(dir.path / "pages.json", "{broken");
  CHECK_THROWS_AS(load_mock_corpus(dir.path), CorpusInvalid);

  write_file(dir.path / "pages.json", R"({"mock://x": 7})");
  CHECK_THROWS_AS(load_mock_corpus(dir.path), CorpusInvalid);

  write_file(dir.path / "pages.json", R"({"mock://x": "X Page\ncontent"})");
  auto minimal = load_mock_corpus(dir.path);
  CHECK(minimal.pages.size() == 1);
  CHECK(minimal.index.empty());

  write_file(dir.path / "search_index.json", R"({"x": ["mock://unknown"]})");
  CHECK_THROWS_AS(load_mock_corpus(dir.path), CorpusInvalid);

  write_file(dir.path / "search_index.json", R"({"X mixed CASE": ["mock://x"]})");
  write_file(dir.path / "sandbox.json", R"({"digest123": "out\n"})");
  auto corpus = load_mock_corpus(dir.path);
  // index terms are lowercased on load.
  REQUIRE(corpus.index.count("x mixed case") == 1);
  CHECK(corpus.index["x mixed case"] == std::vector<std::string>{"mock://x"});
  CHECK(corpus.sandbox["digest123"] == "out\n");

  // queries are matched case-insensitively against the lowered index.
  MockToolEnvironment env(corpus);
  auto obs = env.execute(ToolCall{"search", nlohmann::json{{"queries", {"X Mixed Case"}}}});
  CHECK(obs.find("mock://x") != std::string::npos);
}
