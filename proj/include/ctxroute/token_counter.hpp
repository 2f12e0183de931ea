#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <string_view>

#include "ctxroute/message.hpp"

namespace ctxroute {

// Token accounting interface. Two implementations: a deterministic byte
// heuristic for offline/scripted work, and a passthrough of backend-reported
// usage for live runs. Which one was active is recorded per run.
class TokenCounter {
 public:
  virtual ~TokenCounter() = default;
  virtual long long count_text(std::string_view text) const = 0;
  virtual std::string name() const = 0;

  // Sequence cost is defined as the sum of per-piece costs (content plus the
  // serialized tool call of each message). Summing pieces keeps context
  // accounting exactly additive when turns are appended.
  virtual long long count_messages(const MessageSequence& msgs) const {
    long long total = 0;
    for (const auto& m : msgs) {
      total += count_text(m.content);
      if (m.tool_call) total += count_text(m.tool_call->serialized());
    }
    return total;
  }
};

// ceil(bytes / 4). Exact on any byte string; count("") == 0. For two pieces
// a and b, count(a+b) <= count(a) + count(b): concatenation never costs more
// than the parts, so per-piece sums are a safe upper bound.
class HeuristicTokenCounter : public TokenCounter {
 public:
  long long count_text(std::string_view text) const override {
    return static_cast<long long>((text.size() + 3) / 4);
  }
  std::string name() const override { return "heuristic_bytes_4"; }
};

inline const HeuristicTokenCounter& heuristic_counter() {
  static const HeuristicTokenCounter c;
  return c;
}

// Shared mailbox for the last usage block a live backend reported.
struct UsageState {
  std::atomic<long long> last_prompt_tokens{0};
  std::atomic<bool> fresh{false};
};

// Live mode: the cost of "the context" is whatever the provider just billed
// as prompt_tokens. Arbitrary text snippets still use the byte heuristic
// (caps, summaries), and so does the sequence cost until the first call.
class BackendUsageCounter : public TokenCounter {
 public:
  explicit BackendUsageCounter(std::shared_ptr<UsageState> state) : state_(std::move(state)) {}

  long long count_text(std::string_view text) const override {
    return fallback_.count_text(text);
  }

  long long count_messages(const MessageSequence& msgs) const override {
    if (state_ && state_->fresh.load())
      return state_->last_prompt_tokens.load();
    return TokenCounter::count_messages(msgs);
  }

  std::string name() const override { return "backend_usage"; }

 private:
  std::shared_ptr<UsageState> state_;
  HeuristicTokenCounter fallback_;
};

}  // namespace ctxroute
