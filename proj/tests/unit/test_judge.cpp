#include <catch2/catch_amalgamated.hpp>

#include "ctxroute/judge.hpp"

using namespace ctxroute;

TEST_CASE("normalize_answer canonicalizes benchmark strings", "[judge]") {
  CHECK(normalize_answer(" The  Answer. ") == "the answer");
  CHECK(normalize_answer("A\tB\n C") == "a b c");
  CHECK(normalize_answer("42!?") == "42");
  CHECK(normalize_answer("a.b") == "a.b");  // internal punctuation survives
  CHECK(normalize_answer("x;:,.") == "x");
  CHECK(normalize_answer("") == "");
  CHECK(normalize_answer("  .  ") == "");
  CHECK(normalize_answer("Violet Harbor 41") == "violet harbor 41");
}

TEST_CASE("judge_exact compares normalized forms", "[judge]") {
  auto hit = judge_exact("  The Eiffel TOWER. ", "the eiffel tower");
  CHECK(hit.correct);
  CHECK(hit.mode == JudgeMode::ExactMatch);
  CHECK(hit.rationale == "normalized match");
  CHECK_FALSE(hit.parse_failure);

  auto miss = judge_exact("eiffel", "the eiffel tower");
  CHECK_FALSE(miss.correct);
  CHECK(miss.rationale == "normalized mismatch");
}

TEST_CASE("judge mode names are stable", "[judge]") {
  CHECK(std::string(judge_mode_name(JudgeMode::ExactMatch)) == "exact_match");
  CHECK(std::string(judge_mode_name(JudgeMode::LlmJudge)) == "llm_judge");
}

TEST_CASE("llm judge reads the verdict line", "[judge]") {
  ScriptedBackend backend;
  // the prompt must embed all three sections.
  ScriptedReply reply{"", {}, "VERDICT: CORRECT\nThe phrases agree.",
                      std::string("REFERENCE ANSWER:\ngold text")};
  backend.add("judge", reply);
  auto v = judge_llm("the question", "candidate text", "gold text", backend);
  CHECK(v.correct);
  CHECK(v.mode == JudgeMode::LlmJudge);
  CHECK(v.rationale == "VERDICT: CORRECT\nThe phrases agree.");
  CHECK_FALSE(v.parse_failure);
  CHECK(backend.calls() == 1);
}

TEST_CASE("llm judge understands incorrect even though it contains correct", "[judge]") {
  ScriptedBackend backend;
  backend.add("judge", ScriptedReply{"", {}, "verdict: incorrect, the name differs", std::nullopt});
  auto v = judge_llm("q", "a", "g", backend);
  CHECK_FALSE(v.correct);
  CHECK_FALSE(v.parse_failure);
}

TEST_CASE("llm judge retries an unreadable reply once", "[judge]") {
  ScriptedBackend backend;
  backend.add("judge", ScriptedReply{"", {}, "hmm, hard to say", std::nullopt});
  // the retry carries the stricter instruction.
  backend.add("judge", ScriptedReply{"", {}, "VERDICT: CORRECT",
                                     std::string("Reply with exactly VERDICT:")});
  auto v = judge_llm("q", "a", "g", backend);
  CHECK(v.correct);
  CHECK(backend.calls() == 2);
}

TEST_CASE("llm judge marks a double parse failure", "[judge]") {
  ScriptedBackend backend;
  backend.add("judge", ScriptedReply{"", {}, "no idea", std::nullopt});
  backend.add("judge", ScriptedReply{"", {}, "still no idea", std::nullopt});
  auto v = judge_llm("q", "a", "g", backend);
  CHECK_FALSE(v.correct);
  CHECK(v.parse_failure);
  CHECK(contains(v.rationale, "no readable verdict"));
}

TEST_CASE("llm judge propagates backend unavailability", "[judge]") {
  ScriptedBackend empty;
  CHECK_THROWS_AS(judge_llm("q", "a", "g", empty), BackendUnavailable);
}

TEST_CASE("llm judge substitutes all prompt sections", "[judge]") {
  ScriptedBackend backend;
  backend.add("judge", ScriptedReply{"", {}, "VERDICT: INCORRECT",
                                     std::string("QUESTION:\nwhich tower")});
  backend.add("judge", ScriptedReply{"", {}, "VERDICT: INCORRECT",
                                     std::string("CANDIDATE ANSWER:\nbig ben")});
  auto v1 = judge_llm("which tower", "big ben", "eiffel", backend);
  CHECK_FALSE(v1.correct);
  auto v2 = judge_llm("which tower", "big ben", "eiffel", backend);
  CHECK_FALSE(v2.parse_failure);
}
