#pragma once

#include "epiguide/navkernel.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace epiguide {

/// Reads every `*.jsonl` trial log under `dir` (sorted by file name). Throws
/// ConfigError when the directory is missing or holds no logs.
[[nodiscard]] std::vector<TrialLog> read_trial_directory(const std::filesystem::path& dir);

/// Outcome table with chi-square, accuracy descriptives over successful
/// trials, rank tests between modalities, and the time/accuracy correlation
/// comparison. Sections that lack data carry a "skipped" reason.
[[nodiscard]] nlohmann::json analyze_trials(const std::vector<TrialLog>& logs);

/// Markdown rendering of an analyze_trials() report.
[[nodiscard]] std::string report_markdown(const nlohmann::json& report);

} // namespace epiguide
