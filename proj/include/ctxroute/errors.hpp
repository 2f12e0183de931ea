#pragma once

#include <stdexcept>
#include <string>

namespace ctxroute {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Trajectory / strategy contract violations.
struct NonActiveTrajectory : Error { using Error::Error; };
struct IndexMismatch : Error { using Error::Error; };
struct InvalidN : Error { using Error::Error; };
struct SummarizerUnavailable : Error { using Error::Error; };

// Routing.
struct EmptyCandidateSet : Error { using Error::Error; };
struct DuplicateCandidate : Error { using Error::Error; };
struct AllBranchesFailed : Error { using Error::Error; };
struct NoViableBranch : Error { using Error::Error; };
struct StrategyMismatch : Error { using Error::Error; };

// Backends and tools.
struct BackendUnavailable : Error { using Error::Error; };
struct MalformedResponse : Error { using Error::Error; };
struct ScriptExhausted : BackendUnavailable { using BackendUnavailable::BackendUnavailable; };
struct ScriptExpectationFailed : Error { using Error::Error; };

// Metrics.
struct EmptyRunSet : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct NoTransitions : Error { using Error::Error; };

// Config / IO.
struct ConfigInvalid : Error { using Error::Error; };
struct TaskFileUnreadable : Error { using Error::Error; };
struct CorpusInvalid : Error { using Error::Error; };
struct SchemaMismatch : Error { using Error::Error; };

}  // namespace ctxroute
