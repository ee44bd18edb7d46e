#pragma once

#include "logcog/cognition.hpp"
#include "logcog/embedding.hpp"
#include "logcog/llm_backend.hpp"
#include "logcog/log_ingest.hpp"
#include "logcog/vector_store.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace logcog {

enum class UnparseablePolicy { AsAnomaly, AsNormal, Exclude };

std::string_view policy_name(UnparseablePolicy policy) noexcept;
/// "anomaly", "normal" or "exclude".
UnparseablePolicy parse_policy(std::string_view name);

struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;
    /// Records whose verdict was Unparseable, whichever side the policy put them on.
    std::uint64_t unparseable = 0;
    /// Records dropped under UnparseablePolicy::Exclude.
    std::uint64_t excluded = 0;

    std::uint64_t evaluated() const noexcept { return tp + fp + tn + fn; }

    ConfusionMatrix& operator+=(const ConfusionMatrix& other) noexcept;
    bool operator==(const ConfusionMatrix&) const = default;
};

/// The count delta contributed by one (truth, prediction) pair.
ConfusionMatrix accumulate(const Label& truth, Verdict predicted,
                           UnparseablePolicy policy = UnparseablePolicy::AsAnomaly);

enum DegenerateFlag : unsigned {
    kPrecisionUndefined = 1u << 0,
    kRecallUndefined = 1u << 1,
    kF1Undefined = 1u << 2,
};

struct MetricsReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    unsigned flags = 0;

    bool has(DegenerateFlag flag) const noexcept { return (flags & flag) != 0; }
    /// e.g. ["precision_undefined", "f1_undefined"]
    std::vector<std::string> flag_names() const;
};

/// tp / (tp + fp); 0 when the denominator is 0.
double precision(const ConfusionMatrix& cm) noexcept;
/// tp / (tp + fn); 0 when the denominator is 0.
double recall(const ConfusionMatrix& cm) noexcept;
/// Harmonic mean of precision and recall; 0 when both are 0.
double f1(const ConfusionMatrix& cm) noexcept;
MetricsReport compute_metrics(const ConfusionMatrix& cm) noexcept;

struct ExperimentCell {
    std::string model_id;
    std::string strategy_id;
    ConfusionMatrix confusion;
    MetricsReport metrics;
    double wall_ms = 0.0;
    bool failed = false;
    std::string error;
};

struct ExperimentMatrix {
    std::string dataset;
    std::vector<std::string> models;       // row order
    std::vector<std::string> strategies;   // canonical ids, configured order
    std::vector<ExperimentCell> cells;     // one per (model, strategy), row-major

    const ExperimentCell* find(std::string_view model, std::string_view strategy) const;
    bool any_failed() const;
};

struct ModelSpec {
    std::string name;
    std::shared_ptr<ChatBackend> backend;
    std::string model_id;
};

struct ExperimentOptions {
    PipelineOptions pipeline;
    UnparseablePolicy policy = UnparseablePolicy::AsAnomaly;
    /// Records classified concurrently within a cell.
    std::size_t workers = 1;
    std::size_t top_k = 1;
};

struct RecordOutcome {
    std::uint64_t record_id = 0;
    Label truth = Label::normal();
    std::string model_id;
    std::string strategy_id;
    AnalysisResult analysis;

    /// One line of the audit log.
    std::string to_audit_json() const;
};

struct ExperimentResult {
    ExperimentMatrix matrix;
    /// Per-record outcomes, cell by cell in matrix order, records by id.
    std::vector<RecordOutcome> outcomes;
};

/// Classifies every evaluation record with every (model, strategy) pair:
/// embed, retrieve the best-matched normal entry, run the strategy, count.
///
/// Throws Error{StoreMissing} for an unsealed or empty store,
/// Error{EmptyEvaluationSet}, or Error{InvalidConfig} when an evaluation
/// record is also in the store. A backend failure marks its cell failed and
/// the run continues.
ExperimentResult run_experiment(std::string dataset, std::span<const LogRecord> eval_records,
                                const VectorStore& store, const Embedder& embedder,
                                std::span<const ModelSpec> models, std::span<const Strategy> strategies,
                                const ExperimentOptions& options = {});

struct DatasetSplit {
    std::vector<LogRecord> train;
    std::vector<LogRecord> eval;
};

/// Seeded hash of each record id; odd parity goes to evaluation.
bool is_eval_record(std::uint64_t record_id, std::uint64_t seed) noexcept;
DatasetSplit split_by_id_parity(std::span<const LogRecord> records, std::uint64_t seed);

enum class ReportFormat { Markdown, Csv, Json };

ReportFormat parse_report_format(std::string_view name);

/// Markdown mirrors the published tables: one row per model, the
/// undecomposed arms under "w/o Task Decomposition", the decomposed ones
/// under "w/ Task Decomposition", F1 to two decimals and the best cell of
/// each row in bold. CSV and JSON keep full precision and every count.
/// Throws Error{EmptyMatrix}.
std::string render_report(const ExperimentMatrix& matrix, ReportFormat format);

/// Inverse of the JSON rendering. Throws Error{ProtocolError} on bad input.
ExperimentMatrix matrix_from_json(std::string_view json);

} // namespace logcog
