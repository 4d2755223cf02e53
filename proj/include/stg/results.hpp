#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stg/metrics.hpp"
#include "stg/pipeline.hpp"

namespace stg {

/// Every output-affecting config field. `threads` is excluded: it never
/// changes results, so reports stay byte-identical across thread counts.
nlohmann::json config_to_json(const EngineConfig& cfg);
EngineConfig config_from_json(const nlohmann::json& j);

/// The `run` flags that reproduce `cfg`, e.g. {"--alpha", "0.7", ...}.
std::vector<std::string> config_to_flags(const EngineConfig& cfg);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

nlohmann::json frame_report(const FrameResult& frame);
nlohmann::json score_report(const SequenceScore& s);

/// Writes masks/<frame>_<obj>.pgm, labels/<frame>.pgm, report.json and
/// timing.json under `dir`. Everything but timing.json is deterministic.
void write_results(const std::filesystem::path& dir, const std::string& video_name,
                   const EngineConfig& cfg, const std::vector<FrameResult>& results,
                   const std::optional<SequenceScore>& score = std::nullopt);

/// Reads back the per-object masks written by write_results.
MaskSequence read_predictions(const std::filesystem::path& dir, int frames,
                              const std::vector<int>& object_ids);

MaskSequence predictions_of(const std::vector<FrameResult>& results);

}  // namespace stg
