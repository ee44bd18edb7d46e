#include "logcog/cli.hpp"

#include "logcog/error.hpp"
#include "logcog/hash.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace logcog {

namespace {

constexpr const char* kModule = "cli";

using nlohmann::json;

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string file_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::uint64_t h = kFnvOffsetBasis;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= kFnvPrime;
        }
    }
    return hex64(h);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) {
        throw Error(Errc::IoFailure, kModule, "cannot write " + path.string());
    }
}

void require_dataset(const RunConfig& config) {
    std::error_code ec;
    if (config.dataset.path.empty()) {
        throw Error(Errc::InvalidConfig, kModule, "dataset.path is not set");
    }
    if (!std::filesystem::is_regular_file(config.dataset.path, ec)) {
        throw Error(Errc::FileNotFound, kModule, "dataset not found: " + config.dataset.path.string());
    }
}

void require_store(const RunConfig& config) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(config.resolved_store_path(), ec)) {
        throw Error(Errc::StoreMissing, kModule,
                    "no store at " + config.resolved_store_path().string() + "; run build-index first");
    }
}

void require_templates(const RunConfig& config) {
    std::error_code ec;
    if (!config.pipeline.templates_dir.empty() && !std::filesystem::is_directory(config.pipeline.templates_dir, ec)) {
        throw Error(Errc::FileNotFound, kModule,
                    "template directory not found: " + config.pipeline.templates_dir.string());
    }
}

void ensure_output_dir(const RunConfig& config) {
    std::error_code ec;
    std::filesystem::create_directories(config.output_dir, ec);
    if (ec) {
        throw Error(Errc::IoFailure, kModule, "cannot create " + config.output_dir.string() + ": " + ec.message());
    }
}

PipelineOptions pipeline_options(const RunConfig& config) {
    PipelineOptions options;
    options.temperature = config.pipeline.temperature;
    options.max_tokens = config.pipeline.max_tokens;
    options.prompt.include_envelope = config.pipeline.envelope;
    options.policy = config.pipeline.final_verdict;
    options.templates = std::make_shared<const TemplateSet>(
        config.pipeline.templates_dir.empty() ? TemplateSet::defaults()
                                              : TemplateSet::load_directory(config.pipeline.templates_dir));
    return options;
}

std::string indent(const std::string& text, const std::string& prefix) {
    std::string out = prefix;
    for (char c : text) {
        out += c;
        if (c == '\n') out += prefix;
    }
    return out;
}

int exit_code_for(const Error& e) {
    switch (e.code()) {
    case Errc::Timeout:
    case Errc::TransportFailure:
    case Errc::ProtocolError:
    case Errc::ScriptExhausted:
    case Errc::BackendFailure:
        return exit_code::kFailure;
    default:
        return exit_code::kUsage;
    }
}

} // namespace

int cmd_build_index(const RunConfig& config, std::ostream& out) {
    require_dataset(config);
    ensure_output_dir(config);

    const auto loaded = load_dataset(config.dataset);
    const auto split = split_by_id_parity(loaded.records, config.evaluator.split_seed);
    std::vector<LogRecord> normals;
    std::set<std::string> seen;
    for (const auto& r : split.train) {
        if (r.label.is_anomaly()) continue;
        if (config.sampler.dedup && !seen.insert(r.content).second) continue;
        normals.push_back(r);
    }
    if (normals.empty()) {
        throw Error(Errc::EmptyInput, "sampler", "training partition holds no normal records");
    }

    const auto embedder = make_embedder(config.embedder);
    std::vector<std::string> texts;
    texts.reserve(normals.size());
    for (const auto& r : normals) texts.push_back(r.content);
    const auto vectors = embedder->embed_batch(texts);
    const auto model = kmeans(std::span<const EmbeddingVector>(vectors), config.sampler);
    const auto selection = select_samples(normals, model, config.sampler);

    std::map<std::uint64_t, std::size_t> position;
    for (std::size_t i = 0; i < normals.size(); ++i) position.emplace(normals[i].id, i);
    VectorStore store(embedder->dimension());
    for (const auto& r : selection.records) {
        const auto i = position.at(r.id);
        store.insert(StoreEntry{r.id,
                                vectors[i],
                                r.content,
                                {{"source", r.source},
                                 {"record_id", std::to_string(r.id)},
                                 {"label", "normal"},
                                 {"cluster", std::to_string(model.assignments[i])}}});
    }
    store.seal();
    const auto store_path = config.resolved_store_path();
    if (store_path.has_parent_path()) std::filesystem::create_directories(store_path.parent_path());
    store.save(store_path);

    json manifest = json::parse(selection.manifest.to_json());
    manifest["store_path"] = store_path.string();
    manifest["store_size"] = store.size();
    manifest["dataset"] = {{"path", config.dataset.path.string()},
                           {"digest", file_digest(config.dataset.path)},
                           {"summary", json::parse(loaded.summary.to_json())},
                           {"train_normals", normals.size()},
                           {"split_seed", config.evaluator.split_seed}};
    manifest["created_at"] = utc_now();
    write_file(config.output_dir / "sampling_manifest.json", manifest.dump(2) + "\n");

    out << "loaded " << loaded.summary.records << " records (" << loaded.summary.skipped << " skipped, "
        << loaded.summary.anomalies << " anomalous)\n"
        << "clustered " << normals.size() << " training normals into k=" << model.k() << " clusters in "
        << model.iterations_run << " iterations\n"
        << "stored " << store.size() << " entries (cap " << config.sampler.cap << ") in " << store_path.string()
        << "\n";
    return exit_code::kOk;
}

int cmd_analyze(const RunConfig& config, const std::string& entry, const std::string& strategy_id,
                const std::string& model_name, std::ostream& out) {
    require_store(config);
    require_templates(config);
    const Strategy strategy = strategy_from_id(strategy_id.empty() ? config.strategies.front() : strategy_id);
    const BackendConfig& model = model_name.empty() ? config.models.front() : config.model(model_name);
    const auto options = [&] {
        auto o = pipeline_options(config);
        o.model_id = model.model_id;
        return o;
    }();

    std::string content = config.dataset.normalize ? normalize(entry, config.dataset.mask_numerics) : entry;
    if (content.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw Error(Errc::EmptyText, kModule, "entry text is empty");
    }
    const auto store = VectorStore::load(config.resolved_store_path());
    const auto embedder = make_embedder(config.embedder);
    const auto hits = store.query_top_k(embedder->embed(content), config.evaluator.top_k);
    const auto backend = make_backend(model);

    LogRecord record;
    record.raw = entry;
    record.content = std::move(content);
    record.source = "adhoc";
    const auto result = run_strategy(strategy, record, hits.front(), *backend, options);

    char score[32];
    std::snprintf(score, sizeof score, "%.4f", result.retrieval.score);
    out << "verdict: " << verdict_name(result.final_verdict) << "\n"
        << "strategy: " << strategy.id << "\n"
        << "model: " << model.name << "\n"
        << "best match: entry " << result.retrieval.entry.entry_id << " (score " << score << ")\n"
        << indent(result.retrieval.entry.text, "  ") << "\n"
        << "explanation:\n"
        << indent(result.explanation, "  ") << "\n"
        << "stages:\n";
    for (std::size_t i = 0; i < result.stages.size(); ++i) {
        const auto& s = result.stages[i];
        out << "  " << (i + 1) << ". " << task_kind_name(s.task_kind);
        if (s.parsed_verdict) out << " -> " << verdict_name(*s.parsed_verdict);
        out << "\n" << indent(s.raw_reply, "     ") << "\n";
    }

    switch (result.final_verdict) {
    case Verdict::Normal: return exit_code::kOk;
    case Verdict::Anomaly: return exit_code::kAnomaly;
    case Verdict::Unparseable: return exit_code::kUnparseable;
    }
    return exit_code::kUnparseable;
}

int cmd_evaluate(const RunConfig& config, const json& effective_config, std::ostream& out) {
    require_dataset(config);
    require_store(config);
    require_templates(config);
    std::vector<Strategy> strategies;
    for (const auto& id : config.strategies) strategies.push_back(strategy_from_id(id));
    auto options = ExperimentOptions{};
    options.pipeline = pipeline_options(config);
    options.policy = config.evaluator.unparseable_policy;
    options.workers = config.evaluator.workers;
    options.top_k = config.evaluator.top_k;
    ensure_output_dir(config);

    const std::string started_at = utc_now();
    const auto loaded = load_dataset(config.dataset);
    const auto split = split_by_id_parity(loaded.records, config.evaluator.split_seed);
    if (split.eval.empty()) {
        throw Error(Errc::EmptyEvaluationSet, "evaluator", "evaluation partition is empty");
    }
    const auto store = VectorStore::load(config.resolved_store_path());
    const auto embedder = make_embedder(config.embedder);

    std::vector<ModelSpec> models;
    for (const auto& m : config.models) {
        models.push_back(ModelSpec{m.name, std::shared_ptr<ChatBackend>(make_backend(m)), m.model_id});
    }
    const std::string dataset_name =
        config.dataset.name.empty() ? config.dataset.path.stem().string() : config.dataset.name;
    const auto result = run_experiment(dataset_name, split.eval, store, *embedder, models, strategies, options);

    const std::string markdown = render_report(result.matrix, ReportFormat::Markdown);
    write_file(config.output_dir / "report.md", markdown);
    write_file(config.output_dir / "report.csv", render_report(result.matrix, ReportFormat::Csv));
    write_file(config.output_dir / "report.json", render_report(result.matrix, ReportFormat::Json));
    std::string audit;
    for (const auto& o : result.outcomes) {
        audit += o.to_audit_json();
        audit += '\n';
    }
    write_file(config.output_dir / "audit.jsonl", audit);

    const std::string config_text = effective_config.dump();
    json manifest = {{"command", "evaluate"},
                     {"config", effective_config},
                     {"config_hash", hex64(fnv1a64(config_text))},
                     {"seeds",
                      {{"sampler", config.sampler.seed},
                       {"split", config.evaluator.split_seed},
                       {"embedder", config.embedder.seed}}},
                     {"dataset",
                      {{"path", config.dataset.path.string()},
                       {"digest", file_digest(config.dataset.path)},
                       {"summary", json::parse(loaded.summary.to_json())}}},
                     {"store", {{"path", config.resolved_store_path().string()},
                                {"digest", file_digest(config.resolved_store_path())},
                                {"size", store.size()}}},
                     {"evaluated_records", split.eval.size()},
                     {"started_at", started_at},
                     {"finished_at", utc_now()}};
    json failures = json::array();
    for (const auto& c : result.matrix.cells) {
        if (c.failed) failures.push_back({{"model", c.model_id}, {"strategy", c.strategy_id}, {"error", c.error}});
    }
    manifest["failed_cells"] = failures;
    write_file(config.output_dir / "manifest.json", manifest.dump(2) + "\n");

    out << markdown;
    out << "\nevaluated " << split.eval.size() << " records; reports written to " << config.output_dir.string()
        << "\n";
    return result.matrix.any_failed() ? exit_code::kFailure : exit_code::kOk;
}

int cmd_report(const std::filesystem::path& input, ReportFormat format, std::ostream& out) {
    std::ifstream in(input, std::ios::binary);
    if (!in) {
        throw Error(Errc::FileNotFound, kModule, "report not found: " + input.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    out << render_report(matrix_from_json(ss.str()), format);
    return exit_code::kOk;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Log anomaly detection with retrieval and staged model prompts", "logcog"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string output_dir;
    std::vector<std::string> strategy_flags;
    std::vector<std::string> model_flags;
    std::optional<long long> limit;
    std::optional<std::uint64_t> seed;
    // Shared flags are accepted before or after the subcommand name.
    auto add_shared = [&](CLI::App& target) {
        target.add_option("--config", config_path, "JSON config file");
        target.add_option("--set", overrides, "Override a config value: dotted.key=value (repeatable)");
        target.add_option("--output-dir", output_dir, "Directory for manifests and reports");
        target.add_option("--strategy", strategy_flags,
                          "Strategy id: {E,D}+R, {D,E}+R, E+D+R, D+E+R (repeatable)");
        target.add_option("--model", model_flags, "Configured model name to use (repeatable)");
        target.add_option("--limit", limit, "Read at most this many dataset records");
        target.add_option("--seed", seed, "Seed for sampling and the train/eval split");
    };
    add_shared(app);

    auto* build = app.add_subcommand("build-index", "Cluster and sample training normals into the vector store");
    auto* analyze = app.add_subcommand("analyze", "Classify one log entry");
    std::string entry;
    analyze->add_option("entry", entry, "Log entry text (message part)")->required();
    auto* evaluate = app.add_subcommand("evaluate", "Run the model x strategy experiment matrix");
    for (auto* sub : {build, analyze, evaluate}) add_shared(*sub);
    auto* report = app.add_subcommand("report", "Re-render a saved report.json");
    std::string report_input;
    std::string report_format = "markdown";
    report->add_option("--input", report_input, "Path to report.json")->required();
    report->add_option("--format", report_format, "markdown, csv or json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return exit_code::kOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return exit_code::kUsage;
    }

    try {
        if (report->parsed()) {
            return cmd_report(report_input, parse_report_format(report_format), out);
        }

        // Overrides apply to the defaults-filled document so they can reach into default entries.
        json doc = effective_config_json(config_path.empty() ? json::object() : load_config_file(config_path));
        for (const auto& o : overrides) apply_override(doc, o);
        if (!output_dir.empty()) doc["output_dir"] = output_dir;
        if (!strategy_flags.empty()) doc["strategies"] = strategy_flags;
        if (limit) apply_override(doc, "dataset.limit=" + std::to_string(*limit));
        if (seed) {
            apply_override(doc, "sampler.seed=" + std::to_string(*seed));
            apply_override(doc, "evaluator.split_seed=" + std::to_string(*seed));
        }
        RunConfig config = parse_run_config(doc);
        if (!model_flags.empty()) {
            std::vector<BackendConfig> chosen;
            for (const auto& name : model_flags) chosen.push_back(config.model(name));
            config.models = std::move(chosen);
        }
        json effective = effective_config_json(doc);

        if (build->parsed()) return cmd_build_index(config, out);
        if (analyze->parsed()) return cmd_analyze(config, entry, "", "", out);
        if (evaluate->parsed()) return cmd_evaluate(config, effective, out);
    } catch (const Error& e) {
        err << "error [" << e.module() << "/" << errc_name(e.code()) << "]: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::kFailure;
    }
    return exit_code::kUsage;
}

} // namespace logcog
