#pragma once

#include <string>

#include "ctxroute/assets.hpp"
#include "ctxroute/backend.hpp"
#include "ctxroute/util.hpp"

namespace ctxroute {

enum class JudgeMode { ExactMatch, LlmJudge };

inline const char* judge_mode_name(JudgeMode m) {
  return m == JudgeMode::ExactMatch ? "exact_match" : "llm_judge";
}

struct JudgeVerdict {
  bool correct = false;
  JudgeMode mode = JudgeMode::ExactMatch;
  std::string rationale;
  bool parse_failure = false;  // llm judge never produced a readable verdict
};

// trim, casefold, collapse internal whitespace, drop trailing punctuation.
// ASCII-level casefold: benchmark golds here are ASCII and live judging goes
// through the llm path anyway.
inline std::string normalize_answer(const std::string& text) {
  std::string folded = lower(trim(text));
  std::string out;
  out.reserve(folded.size());
  bool in_space = false;
  for (char c : folded) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) out += ' ';
    in_space = false;
    out += c;
  }
  while (!out.empty()) {
    char last = out.back();
    if (last == '.' || last == ',' || last == '!' || last == '?' || last == ';' || last == ':')
      out.pop_back();
    else
      break;
  }
  return out;
}

inline JudgeVerdict judge_exact(const std::string& answer, const std::string& gold) {
  JudgeVerdict v;
  v.mode = JudgeMode::ExactMatch;
  v.correct = normalize_answer(answer) == normalize_answer(gold);
  v.rationale = v.correct ? "normalized match" : "normalized mismatch";
  return v;
}

// One grader call; an unreadable verdict is retried once, then counted
// incorrect with parse_failure set. BackendUnavailable propagates so the
// caller can mark the run unjudged instead of wrong.
inline JudgeVerdict judge_llm(const std::string& question, const std::string& answer,
                              const std::string& gold, ModelBackend& backend,
                              const std::string& model_id = "") {
  JudgeVerdict v;
  v.mode = JudgeMode::LlmJudge;

  std::string prompt = assets::kJudgePrompt.text;
  prompt = expand_placeholder(prompt, "question", question);
  prompt = expand_placeholder(prompt, "gold", gold);
  prompt = expand_placeholder(prompt, "answer", answer);

  auto ask = [&](const std::string& text) -> std::string {
    CompletionRequest req;
    req.messages.push_back(Message::user(text));
    req.sampling.temperature = 0.0;
    req.model_id = model_id;
    req.scope = "judge";
    CompletionResult res = backend.complete(req);
    return res.final_answer ? *res.final_answer : "";
  };

  for (int attempt = 0; attempt < 2; ++attempt) {
    std::string reply = ask(attempt == 0 ? prompt
                                         : prompt + "\nReply with exactly VERDICT: CORRECT "
                                           "or VERDICT: INCORRECT on the first line.");
    std::string up = reply;
    for (auto& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    bool has_incorrect = contains(up, "INCORRECT");
    bool has_correct = contains(up, "CORRECT");
    if (has_incorrect || has_correct) {
      v.correct = has_correct && !has_incorrect;
      v.rationale = trim(reply);
      return v;
    }
  }
  v.correct = false;
  v.parse_failure = true;
  v.rationale = "judge reply had no readable verdict after retry";
  return v;
}

}  // namespace ctxroute
