#pragma once

namespace ctxroute {

inline constexpr const char* kLibraryVersion = "0.3.1";
// Bump when the persisted run-record layout changes shape.
inline constexpr int kRecordSchemaVersion = 1;

}  // namespace ctxroute
