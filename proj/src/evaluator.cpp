#include "logcog/evaluator.hpp"

#include "logcog/error.hpp"
#include "logcog/hash.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <mutex>
#include <set>
#include <thread>

namespace logcog {

namespace {

constexpr const char* kModule = "evaluator";

} // namespace

std::string_view policy_name(UnparseablePolicy policy) noexcept {
    switch (policy) {
    case UnparseablePolicy::AsAnomaly: return "anomaly";
    case UnparseablePolicy::AsNormal: return "normal";
    case UnparseablePolicy::Exclude: return "exclude";
    }
    return "anomaly";
}

UnparseablePolicy parse_policy(std::string_view name) {
    if (name == "anomaly") return UnparseablePolicy::AsAnomaly;
    if (name == "normal") return UnparseablePolicy::AsNormal;
    if (name == "exclude") return UnparseablePolicy::Exclude;
    throw Error(Errc::InvalidConfig, kModule, "unparseable policy must be anomaly, normal or exclude");
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) noexcept {
    tp += other.tp;
    fp += other.fp;
    tn += other.tn;
    fn += other.fn;
    unparseable += other.unparseable;
    excluded += other.excluded;
    return *this;
}

ConfusionMatrix accumulate(const Label& truth, Verdict predicted, UnparseablePolicy policy) {
    ConfusionMatrix delta;
    if (predicted == Verdict::Unparseable) {
        ++delta.unparseable;
        switch (policy) {
        case UnparseablePolicy::AsAnomaly: predicted = Verdict::Anomaly; break;
        case UnparseablePolicy::AsNormal: predicted = Verdict::Normal; break;
        case UnparseablePolicy::Exclude: ++delta.excluded; return delta;
        }
    }
    const bool said_anomaly = predicted == Verdict::Anomaly;
    if (truth.is_anomaly()) {
        ++(said_anomaly ? delta.tp : delta.fn);
    } else {
        ++(said_anomaly ? delta.fp : delta.tn);
    }
    return delta;
}

double precision(const ConfusionMatrix& cm) noexcept {
    const auto denom = cm.tp + cm.fp;
    return denom == 0 ? 0.0 : static_cast<double>(cm.tp) / static_cast<double>(denom);
}

double recall(const ConfusionMatrix& cm) noexcept {
    const auto denom = cm.tp + cm.fn;
    return denom == 0 ? 0.0 : static_cast<double>(cm.tp) / static_cast<double>(denom);
}

double f1(const ConfusionMatrix& cm) noexcept {
    const double p = precision(cm);
    const double r = recall(cm);
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

MetricsReport compute_metrics(const ConfusionMatrix& cm) noexcept {
    MetricsReport m;
    m.precision = precision(cm);
    m.recall = recall(cm);
    m.f1 = f1(cm);
    if (cm.tp + cm.fp == 0) m.flags |= kPrecisionUndefined;
    if (cm.tp + cm.fn == 0) m.flags |= kRecallUndefined;
    if (m.precision + m.recall == 0.0) m.flags |= kF1Undefined;
    return m;
}

std::vector<std::string> MetricsReport::flag_names() const {
    std::vector<std::string> names;
    if (has(kPrecisionUndefined)) names.emplace_back("precision_undefined");
    if (has(kRecallUndefined)) names.emplace_back("recall_undefined");
    if (has(kF1Undefined)) names.emplace_back("f1_undefined");
    return names;
}

const ExperimentCell* ExperimentMatrix::find(std::string_view model, std::string_view strategy) const {
    for (const auto& c : cells) {
        if (c.model_id == model && c.strategy_id == strategy) return &c;
    }
    return nullptr;
}

bool ExperimentMatrix::any_failed() const {
    for (const auto& c : cells) {
        if (c.failed) return true;
    }
    return false;
}

std::string RecordOutcome::to_audit_json() const {
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& s : analysis.stages) {
        nlohmann::json stage = {{"task", task_kind_name(s.task_kind)}, {"reply", s.raw_reply}};
        stage["verdict"] = s.parsed_verdict ? nlohmann::json(verdict_name(*s.parsed_verdict)) : nlohmann::json();
        stages.push_back(std::move(stage));
    }
    nlohmann::json j = {{"record_id", record_id},
                        {"truth", truth.is_anomaly() ? "anomaly" : "normal"},
                        {"final_verdict", verdict_name(analysis.final_verdict)},
                        {"retrieval_score", analysis.retrieval.score},
                        {"retrieved_entry_id", analysis.retrieval.entry.entry_id},
                        {"stage_count", analysis.stages.size()},
                        {"model_id", model_id},
                        {"strategy_id", strategy_id},
                        {"stages", std::move(stages)}};
    return j.dump();
}

bool is_eval_record(std::uint64_t record_id, std::uint64_t seed) noexcept {
    return (mix64(record_id ^ mix64(seed)) & 1u) == 1u;
}

DatasetSplit split_by_id_parity(std::span<const LogRecord> records, std::uint64_t seed) {
    DatasetSplit split;
    for (const auto& r : records) {
        (is_eval_record(r.id, seed) ? split.eval : split.train).push_back(r);
    }
    return split;
}

ExperimentResult run_experiment(std::string dataset, std::span<const LogRecord> eval_records,
                                const VectorStore& store, const Embedder& embedder,
                                std::span<const ModelSpec> models, std::span<const Strategy> strategies,
                                const ExperimentOptions& options) {
    if (!store.sealed() || store.size() == 0) {
        throw Error(Errc::StoreMissing, kModule, "a sealed, non-empty store is required");
    }
    if (eval_records.empty()) {
        throw Error(Errc::EmptyEvaluationSet, kModule, "no records to evaluate");
    }
    if (models.empty() || strategies.empty()) {
        throw Error(Errc::InvalidConfig, kModule, "at least one model and one strategy are required");
    }
    if (options.workers == 0 || options.top_k == 0) {
        throw Error(Errc::InvalidConfig, kModule, "workers and top_k must be >= 1");
    }
    std::set<std::pair<std::string, std::string>> stored;
    for (const auto& e : store.entries()) {
        const auto src = e.meta.find("source");
        const auto rid = e.meta.find("record_id");
        if (src != e.meta.end() && rid != e.meta.end()) stored.emplace(src->second, rid->second);
    }
    for (const auto& r : eval_records) {
        if (stored.contains({r.source, std::to_string(r.id)})) {
            throw Error(Errc::InvalidConfig, kModule,
                        "evaluation record " + std::to_string(r.id) + " is also in the store");
        }
    }

    // Retrieval does not depend on the model or strategy, so it is done once.
    std::vector<RetrievalHit> hits;
    hits.reserve(eval_records.size());
    for (const auto& r : eval_records) {
        auto top = store.query_top_k(embedder.embed(r.content), options.top_k);
        hits.push_back(std::move(top.front()));
    }

    ExperimentResult result;
    result.matrix.dataset = std::move(dataset);
    for (const auto& m : models) result.matrix.models.push_back(m.name);
    for (const auto& s : strategies) result.matrix.strategies.push_back(s.id);

    for (const auto& model : models) {
        for (const auto& strategy : strategies) {
            ExperimentCell cell;
            cell.model_id = model.name;
            cell.strategy_id = strategy.id;
            PipelineOptions pipeline = options.pipeline;
            pipeline.model_id = model.model_id;

            const auto started = std::chrono::steady_clock::now();
            std::vector<std::optional<AnalysisResult>> analyses(eval_records.size());
            std::atomic<std::size_t> next{0};
            std::atomic<bool> stop{false};
            std::mutex error_mutex;
            std::string first_error;

            auto work = [&] {
                while (!stop.load()) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= eval_records.size()) return;
                    try {
                        analyses[i] = run_strategy(strategy, eval_records[i], hits[i], *model.backend, pipeline);
                    } catch (const std::exception& e) {
                        std::lock_guard lock(error_mutex);
                        if (first_error.empty()) first_error = e.what();
                        stop.store(true);
                    }
                }
            };
            const std::size_t threads = std::min(options.workers, eval_records.size());
            if (threads <= 1) {
                work();
            } else {
                std::vector<std::jthread> pool;
                for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
            }
            cell.wall_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();

            if (stop.load()) {
                cell.failed = true;
                cell.error = first_error;
            } else {
                for (std::size_t i = 0; i < eval_records.size(); ++i) {
                    cell.confusion += accumulate(eval_records[i].label, analyses[i]->final_verdict, options.policy);
                    result.outcomes.push_back(
                        RecordOutcome{eval_records[i].id, eval_records[i].label, model.name, strategy.id,
                                      std::move(*analyses[i])});
                }
                cell.metrics = compute_metrics(cell.confusion);
            }
            result.matrix.cells.push_back(std::move(cell));
        }
    }
    return result;
}

} // namespace logcog
