#pragma once

#include "logcog/run_config.hpp"

#include <iosfwd>
#include <string>

namespace logcog {

/// Exit codes shared by every subcommand.
namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;         // runtime failure, or an evaluate run with failed cells
inline constexpr int kUsage = 2;           // bad config, missing files, missing store
inline constexpr int kAnomaly = 3;         // analyze: verdict ANOMALY
inline constexpr int kUnparseable = 4;     // analyze: verdict UNPARSEABLE
} // namespace exit_code

/// build-index: sample the training normals into a sealed store file and
/// write sampling_manifest.json to the output directory.
int cmd_build_index(const RunConfig& config, std::ostream& out);

/// analyze: classify one entry against the stored normals. Returns 0/3/4 for
/// NORMAL/ANOMALY/UNPARSEABLE.
int cmd_analyze(const RunConfig& config, const std::string& entry, const std::string& strategy_id,
                const std::string& model_name, std::ostream& out);

/// evaluate: run every configured (model, strategy) pair on the evaluation
/// partition and write report.{md,csv,json}, audit.jsonl and manifest.json.
/// Returns 1 when any cell failed.
int cmd_evaluate(const RunConfig& config, const nlohmann::json& effective_config, std::ostream& out);

/// report: re-render a saved report.json.
int cmd_report(const std::filesystem::path& input, ReportFormat format, std::ostream& out);

/// Full command line entry point; never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace logcog
