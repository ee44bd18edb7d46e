#pragma once

#include "logcog/cognition.hpp"
#include "logcog/embedding.hpp"
#include "logcog/evaluator.hpp"
#include "logcog/llm_backend.hpp"
#include "logcog/log_ingest.hpp"
#include "logcog/sampler.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace logcog {

struct EvaluatorSettings {
    UnparseablePolicy unparseable_policy = UnparseablePolicy::AsAnomaly;
    std::uint64_t split_seed = 7;
    std::size_t workers = 1;
    std::size_t top_k = 1;
};

struct PipelineSettings {
    double temperature = 0.0;
    int max_tokens = 512;
    bool envelope = true;
    std::filesystem::path templates_dir;
    FinalVerdictPolicy final_verdict = FinalVerdictPolicy::ReflectWithFallback;
};

/// Everything a CLI run needs, parsed from the JSON config file plus overrides.
struct RunConfig {
    DatasetSpec dataset;
    EmbedderConfig embedder;
    SamplerConfig sampler;
    std::filesystem::path store_path;
    std::vector<BackendConfig> models;
    std::vector<std::string> strategies;
    EvaluatorSettings evaluator;
    PipelineSettings pipeline;
    std::filesystem::path output_dir;

    /// store_path, or <output_dir>/store.jsonl when unset.
    std::filesystem::path resolved_store_path() const;
    const BackendConfig& model(std::string_view name) const;
};

/// The full default configuration document.
nlohmann::json default_config_json();

/// Reads a JSON config file. Throws Error{FileNotFound} / Error{InvalidConfig}.
nlohmann::json load_config_file(const std::filesystem::path& path);

/// Applies "dotted.key=value" to `doc`. The value is taken as JSON when it
/// parses, otherwise as a string. Numeric segments index arrays.
void apply_override(nlohmann::json& doc, std::string_view assignment);

/// Defaults merged with `doc`, validated in full. Unknown keys, bad types and
/// unresolvable strategy ids raise Error{InvalidConfig} /
/// Error{UnknownStrategy} before anything else happens.
RunConfig parse_run_config(const nlohmann::json& doc);

/// Effective configuration (defaults applied) as JSON, for manifests.
nlohmann::json effective_config_json(const nlohmann::json& doc);

} // namespace logcog
