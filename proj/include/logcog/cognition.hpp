#pragma once

#include "logcog/error.hpp"
#include "logcog/llm_backend.hpp"
#include "logcog/log_ingest.hpp"
#include "logcog/vector_store.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace logcog {

/// The prompt stages a strategy is built from. ExplainDecide and
/// DecideExplain are the composite (undecomposed) single-call forms.
enum class TaskKind { Explain, Decide, ExplainDecide, DecideExplain, Reflect };

enum class Verdict { Normal, Anomaly, Unparseable };

std::string_view task_kind_name(TaskKind kind) noexcept;
std::string_view verdict_name(Verdict verdict) noexcept;   // "NORMAL" / "ANOMALY" / "UNPARSEABLE"

/// True for stages whose reply must end in a classification.
bool is_deciding(TaskKind kind) noexcept;
/// True for stages that produce reasoning text for later stages.
bool is_explaining(TaskKind kind) noexcept;

struct CognitiveTask {
    TaskKind kind = TaskKind::Explain;
    std::string template_id;
};

struct Strategy {
    std::string id;
    std::vector<CognitiveTask> chain;

    /// True when explaining and deciding run as separate calls.
    bool decomposed() const noexcept { return chain.size() > 2; }
};

/// "{E,D}+R", "{D,E}+R", "E+D+R", "D+E+R" in report column order.
const std::array<std::string_view, 4>& canonical_strategy_ids() noexcept;

/// Resolves a canonical id or one of the aliases "ED+R", "DE+R", "EDR",
/// "DER" (the bracketed "[E,D]+R" spelling is accepted too). Throws
/// Error{UnknownStrategy}.
Strategy strategy_from_id(std::string_view id);

struct PromptContext {
    std::string query_log;
    std::string retrieved_log;
    std::optional<double> retrieval_score;
    std::optional<std::string> prior_explanation;
    std::optional<Verdict> prior_verdict;
    /// Verbatim reply of the stage immediately before this one.
    std::optional<std::string> prior_reply;
};

struct PromptTemplate {
    std::string system;
    std::string user;
};

/// Prompt wording per template id. Templates use the placeholders
/// {query_log}, {retrieved_log}, {retrieval_score}, {prior_explanation},
/// {prior_verdict} and {prior_reply}; which ones a template must and may
/// use is fixed by its id.
class TemplateSet {
public:
    static const std::array<std::string_view, 7>& template_ids() noexcept;

    /// The built-in wording.
    static TemplateSet defaults();
    /// Defaults overridden by `<id>.txt` (user message) and
    /// `<id>.system.txt` (system message) files found in `dir`.
    static TemplateSet load_directory(const std::filesystem::path& dir);

    /// Throws Error{UnknownTemplate} for an unknown id, a missing required
    /// placeholder, or a placeholder the id does not allow.
    void set(const std::string& id, PromptTemplate tmpl);
    const PromptTemplate& get(const std::string& id) const;

private:
    std::map<std::string, PromptTemplate, std::less<>> templates_;
};

struct PromptOptions {
    /// Appends the machine-readable "CTX score=<score>" line.
    bool include_envelope = true;
};

/// System + user messages for one stage. Throws Error{MissingContext} when
/// the context lacks a field the stage needs, Error{UnknownTemplate} for an
/// unknown template id.
std::vector<ChatMessage> build_prompt(const CognitiveTask& task, const PromptContext& ctx,
                                      const TemplateSet& templates, const PromptOptions& options = {});

/// Verdict extraction, in order of precedence:
///  1. the last case-insensitive "VERDICT: NORMAL|ANOMALY";
///  2. whole-word keywords, when only one side of {anomaly, anomalous,
///     abnormal} / {normal, benign, expected} occurs;
///  3. Unparseable.
Verdict parse_verdict(std::string_view reply);

/// `reply` with every "VERDICT: ..." marker removed and whitespace trimmed.
std::string strip_verdict(std::string_view reply);

struct StageOutput {
    TaskKind task_kind = TaskKind::Explain;
    std::string raw_reply;
    std::optional<Verdict> parsed_verdict;
    std::string explanation;
};

struct AnalysisResult {
    std::uint64_t record_id = 0;
    Verdict final_verdict = Verdict::Unparseable;
    std::string explanation;
    std::vector<StageOutput> stages;
    RetrievalHit retrieval;
};

enum class FinalVerdictPolicy {
    /// Reflect's verdict, else the latest parseable earlier verdict.
    ReflectWithFallback,
    /// Reflect's verdict as parsed, Unparseable included.
    ReflectOnly,
};

struct PipelineOptions {
    std::string model_id;
    double temperature = 0.0;
    int max_tokens = 512;
    PromptOptions prompt;
    FinalVerdictPolicy policy = FinalVerdictPolicy::ReflectWithFallback;
    std::shared_ptr<const TemplateSet> templates;   // null = defaults
};

/// Raised when a backend call fails mid-chain; carries the stages that completed.
class StrategyError : public Error {
public:
    StrategyError(Errc cause, const std::string& message, std::vector<StageOutput> partial)
        : Error(Errc::BackendFailure, "cognition", message), cause_(cause), partial_(std::move(partial)) {}

    Errc cause() const noexcept { return cause_; }
    const std::vector<StageOutput>& partial_stages() const noexcept { return partial_; }

private:
    Errc cause_;
    std::vector<StageOutput> partial_;
};

/// Runs the strategy's chain in order, one backend call per stage, feeding
/// each stage's explanation, verdict and reply into the next stage's context.
AnalysisResult run_strategy(const Strategy& strategy, const LogRecord& record, const RetrievalHit& hit,
                            ChatBackend& backend, const PipelineOptions& options = {});

} // namespace logcog
