#include "logcog/evaluator.hpp"

#include "logcog/error.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <sstream>

namespace logcog {

namespace {

constexpr const char* kModule = "evaluator";

std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string two_decimals(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string md_cell(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '|') out += '\\';
        out += c;
    }
    return out;
}

bool is_decomposed(const std::string& strategy_id) {
    try {
        return strategy_from_id(strategy_id).decomposed();
    } catch (const Error&) {
        return false;
    }
}

std::string render_markdown(const ExperimentMatrix& m) {
    std::vector<std::string> without;
    std::vector<std::string> with;
    for (const auto id : canonical_strategy_ids()) {
        for (const auto& s : m.strategies) {
            if (s == id) (is_decomposed(s) ? with : without).push_back(s);
        }
    }
    // Anything non-canonical keeps its configured position after the known arms.
    for (const auto& s : m.strategies) {
        bool known = false;
        for (const auto id : canonical_strategy_ids()) known = known || s == id;
        if (!known) without.push_back(s);
    }

    std::vector<std::string> columns;
    std::string groups = "| Model |";
    for (const auto* group : {&without, &with}) {
        const char* title = group == &without ? " w/o Task Decomposition |" : " w/ Task Decomposition |";
        for (std::size_t i = 0; i < group->size(); ++i) {
            groups += i == 0 ? title : " |";
            columns.push_back((*group)[i]);
        }
    }

    std::ostringstream out;
    out << groups << '\n' << "| --- |";
    for (std::size_t i = 0; i < columns.size(); ++i) out << " --- |";
    out << "\n|  |";
    for (const auto& c : columns) out << ' ' << c << " |";
    out << '\n';

    for (const auto& model : m.models) {
        double best = -1.0;
        for (const auto& c : columns) {
            const auto* cell = m.find(model, c);
            if (cell && !cell->failed) best = std::max(best, cell->metrics.f1);
        }
        out << "| " << md_cell(model) << " |";
        for (const auto& c : columns) {
            const auto* cell = m.find(model, c);
            if (!cell) {
                out << " - |";
            } else if (cell->failed) {
                out << " failed |";
            } else if (cell->metrics.f1 == best) {
                out << " **" << two_decimals(cell->metrics.f1) << "** |";
            } else {
                out << ' ' << two_decimals(cell->metrics.f1) << " |";
            }
        }
        out << '\n';
    }
    return out.str();
}

std::string render_csv(const ExperimentMatrix& m) {
    std::ostringstream out;
    out << "model,strategy,status,tp,fp,tn,fn,unparseable,excluded,precision,recall,f1,flags\n";
    for (const auto& c : m.cells) {
        std::string flags;
        for (const auto& f : c.metrics.flag_names()) {
            if (!flags.empty()) flags += '|';
            flags += f;
        }
        out << csv_field(c.model_id) << ',' << csv_field(c.strategy_id) << ',' << (c.failed ? "failed" : "ok")
            << ',' << c.confusion.tp << ',' << c.confusion.fp << ',' << c.confusion.tn << ',' << c.confusion.fn
            << ',' << c.confusion.unparseable << ',' << c.confusion.excluded << ',' << shortest(c.metrics.precision)
            << ',' << shortest(c.metrics.recall) << ',' << shortest(c.metrics.f1) << ',' << flags << '\n';
    }
    return out.str();
}

std::string render_json(const ExperimentMatrix& m) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : m.cells) {
        cells.push_back({{"model", c.model_id},
                         {"strategy", c.strategy_id},
                         {"failed", c.failed},
                         {"error", c.error},
                         {"tp", c.confusion.tp},
                         {"fp", c.confusion.fp},
                         {"tn", c.confusion.tn},
                         {"fn", c.confusion.fn},
                         {"unparseable", c.confusion.unparseable},
                         {"excluded", c.confusion.excluded},
                         {"precision", c.metrics.precision},
                         {"recall", c.metrics.recall},
                         {"f1", c.metrics.f1},
                         {"flags", c.metrics.flag_names()},
                         {"wall_ms", c.wall_ms}});
    }
    nlohmann::json j = {
        {"dataset", m.dataset}, {"models", m.models}, {"strategies", m.strategies}, {"cells", std::move(cells)}};
    return j.dump(2) + "\n";
}

} // namespace

ReportFormat parse_report_format(std::string_view name) {
    if (name == "markdown" || name == "md") return ReportFormat::Markdown;
    if (name == "csv") return ReportFormat::Csv;
    if (name == "json") return ReportFormat::Json;
    throw Error(Errc::InvalidConfig, kModule, "report format must be markdown, csv or json");
}

std::string render_report(const ExperimentMatrix& matrix, ReportFormat format) {
    if (matrix.cells.empty() || matrix.models.empty() || matrix.strategies.empty()) {
        throw Error(Errc::EmptyMatrix, kModule, "nothing to report");
    }
    switch (format) {
    case ReportFormat::Markdown: return render_markdown(matrix);
    case ReportFormat::Csv: return render_csv(matrix);
    case ReportFormat::Json: return render_json(matrix);
    }
    return {};
}

ExperimentMatrix matrix_from_json(std::string_view json) {
    const auto j = nlohmann::json::parse(json, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw Error(Errc::ProtocolError, kModule, "report is not a JSON object");
    }
    try {
        ExperimentMatrix m;
        m.dataset = j.at("dataset").get<std::string>();
        m.models = j.at("models").get<std::vector<std::string>>();
        m.strategies = j.at("strategies").get<std::vector<std::string>>();
        for (const auto& c : j.at("cells")) {
            ExperimentCell cell;
            cell.model_id = c.at("model").get<std::string>();
            cell.strategy_id = c.at("strategy").get<std::string>();
            cell.failed = c.at("failed").get<bool>();
            cell.error = c.at("error").get<std::string>();
            cell.confusion.tp = c.at("tp").get<std::uint64_t>();
            cell.confusion.fp = c.at("fp").get<std::uint64_t>();
            cell.confusion.tn = c.at("tn").get<std::uint64_t>();
            cell.confusion.fn = c.at("fn").get<std::uint64_t>();
            cell.confusion.unparseable = c.at("unparseable").get<std::uint64_t>();
            cell.confusion.excluded = c.at("excluded").get<std::uint64_t>();
            cell.metrics.precision = c.at("precision").get<double>();
            cell.metrics.recall = c.at("recall").get<double>();
            cell.metrics.f1 = c.at("f1").get<double>();
            for (const auto& f : c.at("flags")) {
                const auto name = f.get<std::string>();
                if (name == "precision_undefined") cell.metrics.flags |= kPrecisionUndefined;
                else if (name == "recall_undefined") cell.metrics.flags |= kRecallUndefined;
                else if (name == "f1_undefined") cell.metrics.flags |= kF1Undefined;
            }
            cell.wall_ms = c.value("wall_ms", 0.0);
            m.cells.push_back(std::move(cell));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ProtocolError, kModule, std::string("malformed report: ") + e.what());
    }
}

} // namespace logcog
