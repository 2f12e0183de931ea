#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctxroute/errors.hpp"
#include "ctxroute/message.hpp"
#include "ctxroute/token_counter.hpp"
#include "ctxroute/util.hpp"

namespace ctxroute {

struct ToolSpec {
  std::string name;
  std::string description;
  nlohmann::json parameters;
  long long result_token_cap = 2000;
};

struct ToolCaps {
  long long search = 2000;
  long long visit = 4000;
  long long scholar = 2000;
  long long sandbox = 2000;
};

// Cuts text so count(text + marker) <= cap under the given counter. Trims at
// a whitespace boundary when one is close.
inline std::string truncate_to_tokens(std::string text, long long cap, const TokenCounter& counter) {
  if (counter.count_text(text) <= cap) return text;
  static const std::string marker = "\n[result truncated]";
  long long marker_cost = counter.count_text(marker);
  long long room = cap - marker_cost;
  if (room < 1) return marker.substr(1, static_cast<size_t>(cap) * 4);
  size_t keep = static_cast<size_t>(room) * 4;
  if (keep < text.size()) {
    size_t ws = text.find_last_of(" \n\t", keep);
    if (ws != std::string::npos && ws > keep / 2) keep = ws;
    text.resize(keep);
  }
  while (counter.count_text(text + marker) > cap && !text.empty()) text.pop_back();
  return text + marker;
}

// Tool failures are observations, not exceptions: the agent sees the error
// text and the run keeps going.
class ToolEnvironment {
 public:
  virtual ~ToolEnvironment() = default;
  virtual std::vector<ToolSpec> specs() const = 0;
  virtual std::string execute(const ToolCall& call) = 0;
};

inline std::vector<ToolSpec> core_tool_specs(const ToolCaps& caps, bool with_scholar,
                                             bool with_sandbox) {
  std::vector<ToolSpec> specs;
  specs.push_back(ToolSpec{
      "search",
      "Web search. Takes up to 5 queries and returns ranked results (title, url, snippet) "
      "for each.",
      nlohmann::json{{"type", "object"},
                     {"properties",
                      {{"queries", {{"type", "array"}, {"items", {{"type", "string"}}}}}}},
                     {"required", {"queries"}}},
      caps.search});
  specs.push_back(ToolSpec{
      "visit",
      "Fetch pages and extract what is relevant to a goal. Takes a list of urls and the "
      "extraction goal.",
      nlohmann::json{{"type", "object"},
                     {"properties",
                      {{"urls", {{"type", "array"}, {"items", {{"type", "string"}}}}},
                       {"goal", {{"type", "string"}}}}},
                     {"required", {"urls", "goal"}}},
      caps.visit});
  if (with_scholar)
    specs.push_back(ToolSpec{
        "google_scholar",
        "Scholarly literature search. Takes one query, returns papers with venue and year.",
        nlohmann::json{{"type", "object"},
                       {"properties", {{"query", {{"type", "string"}}}}},
                       {"required", {"query"}}},
        caps.scholar});
  if (with_sandbox)
    specs.push_back(ToolSpec{
        "python_interpreter",
        "Run a short Python snippet in a sandbox and return stdout.",
        nlohmann::json{{"type", "object"},
                       {"properties", {{"code", {{"type", "string"}}}}},
                       {"required", {"code"}}},
        caps.sandbox});
  return specs;
}

struct ScholarEntry {
  std::string title;
  std::string snippet;
  int year = 0;
  int citations = 0;
};

// Offline world: pages, a search index, a scholar index and a table of
// canned interpreter outputs keyed by code digest.
struct MockCorpus {
  std::map<std::string, std::string> pages;                     // url -> text
  std::map<std::string, std::vector<std::string>> index;        // query term -> ranked urls
  std::map<std::string, std::vector<ScholarEntry>> scholar;     // query -> entries
  std::map<std::string, std::string> sandbox;                   // fnv digest of code -> stdout
};

inline nlohmann::json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusInvalid("cannot open " + path.string());
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw CorpusInvalid("invalid JSON in " + path.string());
  return doc;
}

// Directory layout: pages.json, search_index.json, scholar_index.json,
// sandbox.json. Only pages.json is mandatory. Every indexed url must exist.
inline MockCorpus load_mock_corpus(const std::filesystem::path& dir) {
  MockCorpus corpus;
  if (!std::filesystem::is_directory(dir))
    throw CorpusInvalid("mock corpus directory not found: " + dir.string());

  nlohmann::json pages = load_json_file(dir / "pages.json");
  for (const auto& [url, text] : pages.items()) {
    if (!text.is_string()) throw CorpusInvalid("page body for " + url + " must be a string");
    corpus.pages[url] = text.get<std::string>();
  }

  if (std::filesystem::exists(dir / "search_index.json")) {
    nlohmann::json index = load_json_file(dir / "search_index.json");
    for (const auto& [term, urls] : index.items()) {
      for (const auto& u : urls) {
        std::string url = u.get<std::string>();
        if (!corpus.pages.count(url))
          throw CorpusInvalid("search index references unknown page: " + url);
        corpus.index[lower(term)].push_back(url);
      }
    }
  }

  if (std::filesystem::exists(dir / "scholar_index.json")) {
    nlohmann::json sch = load_json_file(dir / "scholar_index.json");
    for (const auto& [query, entries] : sch.items()) {
      for (const auto& e : entries) {
        ScholarEntry entry;
        entry.title = e.value("title", "");
        entry.snippet = e.value("snippet", "");
        entry.year = e.value("year", 0);
        entry.citations = e.value("citations", 0);
        corpus.scholar[lower(query)].push_back(std::move(entry));
      }
    }
  }

  if (std::filesystem::exists(dir / "sandbox.json")) {
    nlohmann::json sandbox = load_json_file(dir / "sandbox.json");
    for (const auto& [digest, stdout_text] : sandbox.items())
      corpus.sandbox[digest] = stdout_text.get<std::string>();
  }
  return corpus;
}

class MockToolEnvironment : public ToolEnvironment {
 public:
  explicit MockToolEnvironment(MockCorpus corpus, ToolCaps caps = {},
                               std::set<std::string> enabled = {"search", "visit"})
      : corpus_(std::move(corpus)), caps_(caps), enabled_(std::move(enabled)) {}

  std::vector<ToolSpec> specs() const override {
    return core_tool_specs(caps_, enabled_.count("google_scholar") > 0,
                           enabled_.count("python_interpreter") > 0);
  }

  std::string execute(const ToolCall& call) override {
    if (!enabled_.count(call.name))
      return "TOOL ERROR: unknown tool '" + call.name + "'";
    if (call.name == "search") return run_search(call.arguments);
    if (call.name == "visit") return run_visit(call.arguments);
    if (call.name == "google_scholar") return run_scholar(call.arguments);
    if (call.name == "python_interpreter") return run_sandbox(call.arguments);
    return "TOOL ERROR: unknown tool '" + call.name + "'";
  }

  const MockCorpus& corpus() const { return corpus_; }

 private:
  static std::string page_title(const std::string& text, const std::string& url) {
    size_t eol = text.find('\n');
    std::string first = trim(text.substr(0, eol == std::string::npos ? text.size() : eol));
    return first.empty() ? url : first;
  }

  std::vector<std::string> ranked_urls(const std::string& query) const {
    std::string q = lower(trim(query));
    auto exact = corpus_.index.find(q);
    if (exact != corpus_.index.end()) return exact->second;
    // Fall back to per-term lookup, merging ranked lists in order.
    std::vector<std::string> merged;
    std::set<std::string> seen;
    for (const auto& term : split(q, ' ')) {
      auto it = corpus_.index.find(term);
      if (it == corpus_.index.end()) continue;
      for (const auto& url : it->second)
        if (seen.insert(url).second) merged.push_back(url);
    }
    return merged;
  }

  std::string run_search(const nlohmann::json& args) {
    if (!args.contains("queries") || !args["queries"].is_array() || args["queries"].empty())
      return "TOOL ERROR: search expects a non-empty 'queries' array";
    std::ostringstream out;
    size_t batch = std::min<size_t>(args["queries"].size(), 5);
    if (args["queries"].size() > batch)
      out << "NOTE: query batch capped at 5, extra queries dropped\n";
    for (size_t qi = 0; qi < batch; ++qi) {
      if (!args["queries"][qi].is_string()) continue;
      std::string query = args["queries"][qi].get<std::string>();
      out << "RESULTS FOR: " << query << "\n";
      auto urls = ranked_urls(query);
      if (urls.empty()) {
        out << "  no results\n";
        continue;
      }
      size_t shown = std::min<size_t>(urls.size(), 10);
      for (size_t i = 0; i < shown; ++i) {
        const auto& url = urls[i];
        const std::string& text = corpus_.pages.at(url);
        std::string snippet = text.substr(0, 160);
        for (auto& c : snippet)
          if (c == '\n') c = ' ';
        out << "  " << (i + 1) << ". " << page_title(text, url) << " | " << url << "\n     "
            << snippet << "\n";
      }
    }
    return truncate_to_tokens(out.str(), caps_.search, counter_);
  }

  std::string run_visit(const nlohmann::json& args) {
    if (!args.contains("urls") || !args["urls"].is_array() || args["urls"].empty())
      return "TOOL ERROR: visit expects a non-empty 'urls' array";
    std::string goal = args.value("goal", "");
    std::ostringstream out;
    for (const auto& u : args["urls"]) {
      if (!u.is_string()) continue;
      std::string url = u.get<std::string>();
      auto it = corpus_.pages.find(url);
      out << "PAGE: " << url << "\n";
      if (it == corpus_.pages.end()) {
        out << "PAGE UNAVAILABLE\n";
        continue;
      }
      if (!goal.empty()) out << "GOAL: " << goal << "\n";
      out << it->second << "\n";
    }
    return truncate_to_tokens(out.str(), caps_.visit, counter_);
  }

  std::string run_scholar(const nlohmann::json& args) {
    if (!args.contains("query") || !args["query"].is_string())
      return "TOOL ERROR: google_scholar expects a 'query' string";
    auto it = corpus_.scholar.find(lower(trim(args["query"].get<std::string>())));
    if (it == corpus_.scholar.end() || it->second.empty()) return "no scholarly results";
    std::ostringstream out;
    size_t shown = std::min<size_t>(it->second.size(), 10);
    for (size_t i = 0; i < shown; ++i) {
      const auto& e = it->second[i];
      out << (i + 1) << ". " << e.title << " (" << e.year << ", cited " << e.citations
          << ")\n   " << e.snippet << "\n";
    }
    return truncate_to_tokens(out.str(), caps_.scholar, counter_);
  }

  std::string run_sandbox(const nlohmann::json& args) {
    if (!args.contains("code") || !args["code"].is_string())
      return "TOOL ERROR: python_interpreter expects a 'code' string";
    std::string digest = fnv1a64_hex(args["code"].get<std::string>());
    auto it = corpus_.sandbox.find(digest);
    if (it == corpus_.sandbox.end()) return "sandbox offline";
    return truncate_to_tokens(it->second, caps_.sandbox, counter_);
  }

  MockCorpus corpus_;
  ToolCaps caps_;
  std::set<std::string> enabled_;
  HeuristicTokenCounter counter_;
};

}  // namespace ctxroute
