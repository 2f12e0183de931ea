#pragma once

#include <string>

#include "ctxroute/util.hpp"

namespace ctxroute {

// Prompt templates are compiled in and referenced by version+hash in run
// records, so a record always identifies the exact wording that produced it.
struct PromptAsset {
  const char* name;
  const char* version;
  const char* text;

  std::string ref() const { return std::string(name) + "/" + version + "#" + fnv1a64_hex(text); }
};

namespace assets {

inline constexpr const char* kAgentSystemPromptText =
    "You are a research agent. Work step by step: state your reasoning, then either call "
    "exactly one tool or, when you are confident, reply with the final answer and no tool "
    "call. Keep answers short and literal. Never fabricate tool output.";

inline const PromptAsset kAgentSystemPrompt{"agent_system_prompt", "v1", kAgentSystemPromptText};

inline constexpr const char* kSummaryPromptText =
    "Compress the investigation transcript below into a working summary for an agent that "
    "will continue the task with no other memory of the transcript.\n"
    "Write four sections, each a short list:\n"
    "GOAL: restate the task in one line.\n"
    "VERIFIED: facts established so far, each with the source (url or tool) it came from.\n"
    "RULED OUT: hypotheses or leads that were checked and eliminated.\n"
    "OPEN: the most promising next steps, most specific first.\n"
    "Do not add commentary. Do not invent sources.\n"
    "TRANSCRIPT:\n{transcript}";

inline const PromptAsset kSummaryPrompt{"summary_prompt", "v1", kSummaryPromptText};

inline constexpr const char* kSummaryRetrySuffix =
    "\nYour previous summary was too long. Rewrite it in at most {max_tokens} tokens, "
    "dropping the least specific OPEN items first.";

inline constexpr const char* kRoutingPromptText =
    "You are choosing how an agent should continue a long task after its context grew past "
    "the working limit. Candidate continuations were prepared with different context "
    "compactions and each was rolled forward a few turns from the same snapshot.\n"
    "Judge which candidate is closest to answering the ORIGINAL task. Prefer candidates "
    "whose probe turns show concrete verified progress; penalize ones that lost the thread "
    "or are re-doing work.\n"
    "Reply with one line of the form\n"
    "CHOICE: <label>\n"
    "where <label> is one of the candidate labels exactly as given, followed by one short "
    "sentence of justification on the next line.";

inline const PromptAsset kRoutingPrompt{"routing_prompt", "v1", kRoutingPromptText};

inline constexpr const char* kRoutingRetrySuffix =
    "\nYour previous reply did not contain a valid choice line. Reply again. The first line "
    "must be exactly 'CHOICE: <label>' with one of the candidate labels.";

inline constexpr const char* kChoicePrefix = "CHOICE:";

inline constexpr const char* kJudgePromptText =
    "You are grading an answer to a research question.\n"
    "QUESTION:\n{question}\n"
    "REFERENCE ANSWER:\n{gold}\n"
    "CANDIDATE ANSWER:\n{answer}\n"
    "Reply with one line: VERDICT: CORRECT if the candidate conveys the same fact as the "
    "reference (wording may differ), otherwise VERDICT: INCORRECT. Then one short sentence "
    "of justification.";

inline const PromptAsset kJudgePrompt{"judge_prompt", "v1", kJudgePromptText};

}  // namespace assets

inline std::string expand_placeholder(std::string text, const std::string& key,
                                      const std::string& value) {
  const std::string token = "{" + key + "}";
  size_t pos = 0;
  while ((pos = text.find(token, pos)) != std::string::npos) {
    text.replace(pos, token.size(), value);
    pos += value.size();
  }
  return text;
}

}  // namespace ctxroute
