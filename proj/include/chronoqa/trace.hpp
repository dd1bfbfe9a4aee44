#pragma once

#include <nlohmann/json.hpp>

#include "chronoqa/controller.hpp"

namespace chronoqa {

inline constexpr int kTraceSchemaVersion = 1;

// Full run trace. Everything except the "timing" object is a deterministic
// function of the inputs under the scripted backend.
nlohmann::json trace_to_json(const RunResult& run, const Tkg& tkg, const EngineConfig& cfg);

nlohmann::json indicator_to_json(const Indicator& ind);
nlohmann::json path_to_json(const Tkg& tkg, const TemporalPath& path);

}  // namespace chronoqa
