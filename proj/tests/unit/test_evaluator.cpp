#include "logcog/error.hpp"
#include "logcog/evaluator.hpp"

#include <doctest.h>
#include <json.hpp>

#include <random>
#include <sstream>

using namespace logcog;

namespace {

Errc code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return Errc::InvalidConfig;
}

const Label kNormal = Label::normal();
const Label kAnomaly = Label::anomaly("KERNDTLB");

LogRecord rec(std::uint64_t id, std::string content, Label label) {
    LogRecord r;
    r.id = id;
    r.content = std::move(content);
    r.label = std::move(label);
    r.source = "unit";
    return r;
}

struct Fixture {
    HashedNgramEmbedder embedder;
    VectorStore store;
    std::vector<LogRecord> eval;

    Fixture() {
        const std::vector<std::string> normals{"RAS KERNEL INFO generating core.2275",
                                               "RAS KERNEL INFO instruction cache parity error corrected",
                                               "RAS KERNEL INFO total of 3 ddr error(s) detected and corrected"};
        for (std::uint64_t i = 0; i < normals.size(); ++i) {
            store.insert({i, embedder.embed(normals[i]), normals[i],
                          {{"source", "unit"}, {"record_id", std::to_string(100 + i)}, {"label", "normal"}}});
        }
        store.seal();
        eval.push_back(rec(1, "RAS KERNEL INFO generating core.2276", kNormal));
        eval.push_back(rec(2, "RAS KERNEL FATAL data TLB error interrupt", kAnomaly));
        eval.push_back(rec(3, "RAS KERNEL INFO instruction cache parity error corrected", kNormal));
        eval.push_back(rec(4, "RAS APP FATAL ciod: failed to read message prefix on control stream", kAnomaly));
    }
};

std::shared_ptr<ChatBackend> oracle(double threshold = 0.85) {
    return std::make_shared<MockBackend>(MockRule{MockMode::SimilarityOracle, {}, threshold});
}

std::vector<Strategy> all_strategies() {
    std::vector<Strategy> out;
    for (auto id : canonical_strategy_ids()) out.push_back(strategy_from_id(id));
    return out;
}

ExperimentCell cell(std::string model, std::string strategy, double f1) {
    ExperimentCell c;
    c.model_id = std::move(model);
    c.strategy_id = std::move(strategy);
    c.metrics.f1 = f1;
    return c;
}

} // namespace

TEST_SUITE("evaluator") {

TEST_CASE("accumulate") {
    CHECK(accumulate(kAnomaly, Verdict::Anomaly).tp == 1);
    CHECK(accumulate(kNormal, Verdict::Anomaly).fp == 1);
    CHECK(accumulate(kNormal, Verdict::Normal).tn == 1);
    CHECK(accumulate(kAnomaly, Verdict::Normal).fn == 1);

    const auto as_anomaly = accumulate(kNormal, Verdict::Unparseable, UnparseablePolicy::AsAnomaly);
    CHECK(as_anomaly.fp == 1);
    CHECK(as_anomaly.unparseable == 1);
    const auto as_normal = accumulate(kAnomaly, Verdict::Unparseable, UnparseablePolicy::AsNormal);
    CHECK(as_normal.fn == 1);
    const auto excluded = accumulate(kAnomaly, Verdict::Unparseable, UnparseablePolicy::Exclude);
    CHECK(excluded.evaluated() == 0);
    CHECK(excluded.excluded == 1);
    CHECK(excluded.unparseable == 1);

    CHECK(parse_policy("exclude") == UnparseablePolicy::Exclude);
    CHECK(policy_name(UnparseablePolicy::AsNormal) == "normal");
    CHECK(code_of([] { parse_policy("ignore"); }) == Errc::InvalidConfig);
}

TEST_CASE("metrics") {
    ConfusionMatrix cm{4, 1, 10, 4, 0, 0};
    const auto m = compute_metrics(cm);
    CHECK(m.precision == doctest::Approx(0.8));
    CHECK(m.recall == doctest::Approx(0.5));
    CHECK(m.f1 == doctest::Approx(0.6153846153846154).epsilon(1e-15));
    CHECK(m.flags == 0);

    const auto none_flagged = compute_metrics(ConfusionMatrix{0, 0, 5, 0, 0, 0});
    CHECK(none_flagged.has(kPrecisionUndefined));
    CHECK(none_flagged.has(kRecallUndefined));
    CHECK(none_flagged.has(kF1Undefined));
    CHECK(none_flagged.f1 == 0.0);
    CHECK(none_flagged.flag_names() == std::vector<std::string>{"precision_undefined", "recall_undefined",
                                                                "f1_undefined"});

    const auto all_missed = compute_metrics(ConfusionMatrix{0, 0, 5, 3, 0, 0});
    CHECK(all_missed.has(kPrecisionUndefined));
    CHECK_FALSE(all_missed.has(kRecallUndefined));
    CHECK(all_missed.recall == 0.0);
}

TEST_CASE("metrics agree with a direct count over random outcomes") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        ConfusionMatrix cm;
        double tp = 0, fp = 0, fn = 0;
        for (int i = 0; i < 60; ++i) {
            const bool truth = rng() % 3 == 0;
            const auto v = static_cast<Verdict>(rng() % 3);
            cm += accumulate(truth ? kAnomaly : kNormal, v);
            const bool said = v != Verdict::Normal;
            tp += truth && said;
            fp += !truth && said;
            fn += truth && !said;
        }
        const double p = tp + fp == 0 ? 0 : tp / (tp + fp);
        const double r = tp + fn == 0 ? 0 : tp / (tp + fn);
        const double f = p + r == 0 ? 0 : 2 * p * r / (p + r);
        CHECK(f1(cm) == doctest::Approx(f).epsilon(1e-12));
        CHECK(cm.evaluated() == 60);
    }
}

TEST_CASE("one model across four strategies fills four cells") {
    Fixture fx;
    const std::vector<ModelSpec> models{{"oracle", oracle(), "mock"}};
    const auto strategies = all_strategies();
    const auto result = run_experiment("unit", fx.eval, fx.store, fx.embedder, models, strategies);
    REQUIRE(result.matrix.cells.size() == 4);
    CHECK(result.outcomes.size() == 16);
    for (const auto& c : result.matrix.cells) {
        CHECK_FALSE(c.failed);
        CHECK(c.confusion.evaluated() == 4);
        CHECK(c.confusion.tp == 2);
        CHECK(c.confusion.tn == 2);
        CHECK(c.metrics.f1 == 1.0);
    }
    const auto audit = nlohmann::json::parse(result.outcomes[0].to_audit_json());
    for (const char* key : {"record_id", "truth", "final_verdict", "retrieval_score", "retrieved_entry_id",
                            "stage_count", "model_id", "strategy_id", "stages"}) {
        CHECK(audit.contains(key));
    }
    CHECK(audit["stage_count"] == 2);
}

TEST_CASE("two models give eight cells in row-major order") {
    Fixture fx;
    const std::vector<ModelSpec> models{{"a", oracle(), "a"}, {"b", oracle(0.0), "b"}};
    const auto strategies = all_strategies();
    const auto result = run_experiment("unit", fx.eval, fx.store, fx.embedder, models, strategies);
    REQUIRE(result.matrix.cells.size() == 8);
    CHECK(result.matrix.cells[0].model_id == "a");
    CHECK(result.matrix.cells[4].model_id == "b");
    CHECK(result.matrix.cells[5].strategy_id == "{D,E}+R");
    // Threshold 0 never flags anything.
    CHECK(result.matrix.find("b", "E+D+R")->confusion.fn == 2);
    CHECK(result.matrix.find("b", "E+D+R")->metrics.has(kPrecisionUndefined));
}

TEST_CASE("a failing backend marks only its cell") {
    Fixture fx;
    auto dry = std::make_shared<MockBackend>(MockRule{MockMode::Scripted, {"VERDICT: NORMAL"}, 0.85});
    const std::vector<ModelSpec> models{{"dry", dry, "x"}, {"ok", oracle(), "y"}};
    const std::vector<Strategy> strategies{strategy_from_id("E+D+R")};
    const auto result = run_experiment("unit", fx.eval, fx.store, fx.embedder, models, strategies);
    CHECK(result.matrix.cells[0].failed);
    CHECK_FALSE(result.matrix.cells[0].error.empty());
    CHECK_FALSE(result.matrix.cells[1].failed);
    CHECK(result.matrix.any_failed());
    CHECK(render_report(result.matrix, ReportFormat::Markdown).find("| dry | failed |") != std::string::npos);
}

TEST_CASE("worker count does not change the results") {
    Fixture fx;
    const std::vector<ModelSpec> models{{"oracle", oracle(0.9), "mock"}};
    const auto strategies = all_strategies();
    ExperimentOptions serial;
    ExperimentOptions parallel;
    parallel.workers = 3;
    const auto a = run_experiment("unit", fx.eval, fx.store, fx.embedder, models, strategies, serial);
    const auto b = run_experiment("unit", fx.eval, fx.store, fx.embedder, models, strategies, parallel);
    CHECK(render_report(a.matrix, ReportFormat::Csv) == render_report(b.matrix, ReportFormat::Csv));
    REQUIRE(a.outcomes.size() == b.outcomes.size());
    for (std::size_t i = 0; i < a.outcomes.size(); ++i) {
        CHECK(a.outcomes[i].to_audit_json() == b.outcomes[i].to_audit_json());
    }
}

TEST_CASE("experiment preconditions") {
    Fixture fx;
    const std::vector<ModelSpec> models{{"oracle", oracle(), "mock"}};
    const auto strategies = all_strategies();
    CHECK(code_of([&] {
              run_experiment("unit", std::span<const LogRecord>{}, fx.store, fx.embedder, models, strategies);
          }) == Errc::EmptyEvaluationSet);
    VectorStore open;
    CHECK(code_of([&] { run_experiment("unit", fx.eval, open, fx.embedder, models, strategies); }) ==
          Errc::StoreMissing);
    auto leaked = fx.eval;
    leaked.push_back(rec(101, "RAS KERNEL INFO instruction cache parity error corrected", kNormal));
    CHECK(code_of([&] { run_experiment("unit", leaked, fx.store, fx.embedder, models, strategies); }) ==
          Errc::InvalidConfig);
}

TEST_CASE("parity split is seeded, deterministic and exhaustive") {
    std::vector<LogRecord> records;
    for (std::uint64_t i = 0; i < 1000; ++i) records.push_back(rec(i, "x", kNormal));
    const auto a = split_by_id_parity(records, 7);
    const auto b = split_by_id_parity(records, 7);
    const auto c = split_by_id_parity(records, 8);
    CHECK(a.train.size() + a.eval.size() == 1000);
    CHECK(a.eval.size() == b.eval.size());
    CHECK(a.eval.size() > 400);
    CHECK(a.eval.size() < 600);
    bool differs = a.eval.size() != c.eval.size();
    for (std::size_t i = 0; !differs && i < a.eval.size(); ++i) differs = a.eval[i].id != c.eval[i].id;
    CHECK(differs);
}

TEST_CASE("json report round trips to identical csv") {
    Fixture fx;
    const std::vector<ModelSpec> models{{"m,1", oracle(0.9), "mock"}};
    const auto strategies = all_strategies();
    const auto result = run_experiment("unit", fx.eval, fx.store, fx.embedder, models, strategies);
    const auto json = render_report(result.matrix, ReportFormat::Json);
    const auto back = matrix_from_json(json);
    CHECK(render_report(back, ReportFormat::Csv) == render_report(result.matrix, ReportFormat::Csv));
    CHECK(render_report(back, ReportFormat::Markdown) == render_report(result.matrix, ReportFormat::Markdown));
    CHECK(render_report(result.matrix, ReportFormat::Csv).find("\"m,1\"") != std::string::npos);
    CHECK(code_of([] { matrix_from_json("[1,2]"); }) == Errc::ProtocolError);
    CHECK(code_of([] { matrix_from_json(R"({"dataset": "x"})"); }) == Errc::ProtocolError);
}

TEST_CASE("markdown layout") {
    ExperimentMatrix m;
    m.dataset = "bgl";
    m.models = {"small"};
    m.strategies = {"E+D+R", "{E,D}+R"};
    m.cells = {cell("small", "E+D+R", 0.5), cell("small", "{E,D}+R", 0.625)};
    const auto md = render_report(m, ReportFormat::Markdown);
    std::istringstream lines(md);
    std::string header, rule, columns, row;
    std::getline(lines, header);
    std::getline(lines, rule);
    std::getline(lines, columns);
    std::getline(lines, row);
    CHECK(header == "| Model | w/o Task Decomposition | w/ Task Decomposition |");
    CHECK(rule == "| --- | --- | --- |");
    CHECK(columns == "|  | {E,D}+R | E+D+R |");
    CHECK(row == "| small | **0.62** | 0.50 |");

    CHECK(code_of([] { render_report(ExperimentMatrix{}, ReportFormat::Csv); }) == Errc::EmptyMatrix);
    CHECK(parse_report_format("md") == ReportFormat::Markdown);
    CHECK(code_of([] { parse_report_format("html"); }) == Errc::InvalidConfig);
}

TEST_CASE("csv carries full precision") {
    ExperimentMatrix m;
    m.dataset = "bgl";
    m.models = {"x"};
    m.strategies = {"E+D+R"};
    auto c = cell("x", "E+D+R", 0);
    c.confusion = ConfusionMatrix{4, 1, 10, 4, 0, 0};
    c.metrics = compute_metrics(c.confusion);
    m.cells = {c};
    const auto csv = render_report(m, ReportFormat::Csv);
    CHECK(csv == "model,strategy,status,tp,fp,tn,fn,unparseable,excluded,precision,recall,f1,flags\n"
                 "x,E+D+R,ok,4,1,10,4,0,0,0.8,0.5,0.6153846153846154,\n");
}

} // TEST_SUITE
