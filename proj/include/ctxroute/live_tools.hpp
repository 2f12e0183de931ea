#pragma once

#include <set>
#include <sstream>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "ctxroute/backend.hpp"
#include "ctxroute/tools.hpp"

namespace ctxroute {

struct LiveToolConfig {
  // POST {"q": "..."} -> {"results": [{"title","url","snippet"}]}
  std::string search_endpoint;
  std::string search_api_key;
  // POST {"q": "..."} -> {"results": [{"title","snippet","year","citations"}]}
  std::string scholar_endpoint;
  // POST {"code": "..."} -> {"stdout": "..."}
  std::string sandbox_endpoint;
  int timeout_seconds = 30;
};

// HTML to text, crude on purpose: scripts/styles dropped, tags stripped,
// entities left alone. Enough for goal extraction by the model.
inline std::string strip_html(const std::string& html) {
  std::string out;
  out.reserve(html.size());
  bool in_tag = false;
  size_t i = 0;
  while (i < html.size()) {
    if (!in_tag && (html.compare(i, 7, "<script") == 0 || html.compare(i, 6, "<style") == 0)) {
      size_t close = html.find(html.compare(i, 7, "<script") == 0 ? "</script" : "</style", i);
      i = close == std::string::npos ? html.size() : html.find('>', close);
      if (i == std::string::npos) break;
      ++i;
      continue;
    }
    char c = html[i];
    if (c == '<') in_tag = true;
    else if (c == '>') { in_tag = false; out += ' '; }
    else if (!in_tag) out += c;
    ++i;
  }
  return out;
}

inline std::pair<std::string, std::string> split_url(const std::string& url) {
  size_t scheme = url.find("://");
  size_t host_start = scheme == std::string::npos ? 0 : scheme + 3;
  size_t path_start = url.find('/', host_start);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

// Network-backed tools. Fetch/extract failures come back as observation text
// so a flaky page cannot kill a run. The extractor model condenses fetched
// pages toward the stated goal before they enter the agent's context.
class LiveToolEnvironment : public ToolEnvironment {
 public:
  LiveToolEnvironment(LiveToolConfig config, ModelBackend* extractor, ToolCaps caps = {},
                      std::set<std::string> enabled = {"search", "visit"})
      : config_(std::move(config)), extractor_(extractor), caps_(caps),
        enabled_(std::move(enabled)) {}

  std::vector<ToolSpec> specs() const override {
    return core_tool_specs(caps_, enabled_.count("google_scholar") > 0,
                           enabled_.count("python_interpreter") > 0);
  }

  std::string execute(const ToolCall& call) override {
    if (!enabled_.count(call.name)) return "TOOL ERROR: unknown tool '" + call.name + "'";
    try {
      if (call.name == "search") return run_search(call.arguments);
      if (call.name == "visit") return run_visit(call.arguments);
      if (call.name == "google_scholar") return run_scholar(call.arguments);
      if (call.name == "python_interpreter") return run_sandbox(call.arguments);
    } catch (const std::exception& e) {
      return std::string("TOOL ERROR: ") + e.what();
    }
    return "TOOL ERROR: unknown tool '" + call.name + "'";
  }

 private:
  nlohmann::json post_json(const std::string& endpoint, const nlohmann::json& body,
                           const std::string& api_key) {
    auto [host, path] = split_url(endpoint);
    httplib::Client client(host);
    client.set_read_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) throw Error("endpoint unreachable: " + endpoint);
    if (res->status != 200) throw Error("endpoint " + endpoint + " returned http " +
                                        std::to_string(res->status));
    auto doc = nlohmann::json::parse(res->body, nullptr, false);
    if (doc.is_discarded()) throw Error("endpoint returned invalid JSON");
    return doc;
  }

  std::string run_search(const nlohmann::json& args) {
    if (config_.search_endpoint.empty()) return "TOOL ERROR: no search endpoint configured";
    if (!args.contains("queries") || !args["queries"].is_array() || args["queries"].empty())
      return "TOOL ERROR: search expects a non-empty 'queries' array";
    std::ostringstream out;
    size_t batch = std::min<size_t>(args["queries"].size(), 5);
    for (size_t qi = 0; qi < batch; ++qi) {
      std::string query = args["queries"][qi].get<std::string>();
      out << "RESULTS FOR: " << query << "\n";
      auto doc = post_json(config_.search_endpoint, {{"q", query}}, config_.search_api_key);
      int rank = 0;
      for (const auto& r : doc.value("results", nlohmann::json::array())) {
        if (++rank > 10) break;
        out << "  " << rank << ". " << r.value("title", "") << " | " << r.value("url", "")
            << "\n     " << r.value("snippet", "") << "\n";
      }
      if (rank == 0) out << "  no results\n";
    }
    return truncate_to_tokens(out.str(), caps_.search, counter_);
  }

  std::string run_visit(const nlohmann::json& args) {
    if (!args.contains("urls") || !args["urls"].is_array() || args["urls"].empty())
      return "TOOL ERROR: visit expects a non-empty 'urls' array";
    std::string goal = args.value("goal", "");
    std::ostringstream out;
    for (const auto& u : args["urls"]) {
      std::string url = u.get<std::string>();
      out << "PAGE: " << url << "\n";
      auto [host, path] = split_url(url);
      httplib::Client client(host);
      client.set_read_timeout(config_.timeout_seconds, 0);
      client.set_follow_location(true);
      auto res = client.Get(path);
      if (!res || res->status != 200) {
        out << "PAGE UNAVAILABLE\n";
        continue;
      }
      std::string text = strip_html(res->body);
      out << extract_for_goal(text, goal) << "\n";
    }
    return truncate_to_tokens(out.str(), caps_.visit, counter_);
  }

  std::string extract_for_goal(const std::string& text, const std::string& goal) {
    if (!extractor_ || goal.empty())
      return truncate_to_tokens(text, caps_.visit, counter_);
    CompletionRequest req;
    req.messages.push_back(Message::system(
        "Extract from the page only what serves the goal. Quote exact figures and names."));
    req.messages.push_back(Message::user(
        "GOAL: " + goal + "\nPAGE TEXT:\n" +
        truncate_to_tokens(text, caps_.visit * 4, counter_)));
    req.sampling.temperature = 0.0;
    req.scope = "extractor";
    try {
      auto res = extractor_->complete(req);
      if (res.final_answer) return *res.final_answer;
    } catch (const std::exception&) {
      // fall through to raw text
    }
    return truncate_to_tokens(text, caps_.visit, counter_);
  }

  std::string run_scholar(const nlohmann::json& args) {
    if (config_.scholar_endpoint.empty()) return "TOOL ERROR: no scholar endpoint configured";
    if (!args.contains("query") || !args["query"].is_string())
      return "TOOL ERROR: google_scholar expects a 'query' string";
    auto doc = post_json(config_.scholar_endpoint, {{"q", args["query"].get<std::string>()}},
                         config_.search_api_key);
    std::ostringstream out;
    int rank = 0;
    for (const auto& r : doc.value("results", nlohmann::json::array())) {
      if (++rank > 10) break;
      out << rank << ". " << r.value("title", "") << " (" << r.value("year", 0) << ", cited "
          << r.value("citations", 0) << ")\n   " << r.value("snippet", "") << "\n";
    }
    if (rank == 0) return "no scholarly results";
    return truncate_to_tokens(out.str(), caps_.scholar, counter_);
  }

  std::string run_sandbox(const nlohmann::json& args) {
    if (config_.sandbox_endpoint.empty()) return "TOOL ERROR: no sandbox endpoint configured";
    if (!args.contains("code") || !args["code"].is_string())
      return "TOOL ERROR: python_interpreter expects a 'code' string";
    auto doc = post_json(config_.sandbox_endpoint, {{"code", args["code"].get<std::string>()}},
                         "");
    return truncate_to_tokens(doc.value("stdout", ""), caps_.sandbox, counter_);
  }

  LiveToolConfig config_;
  ModelBackend* extractor_;
  ToolCaps caps_;
  std::set<std::string> enabled_;
  HeuristicTokenCounter counter_;
};

}  // namespace ctxroute
