#include "logcog/cli.hpp"
#include "logcog/cognition.hpp"
#include "logcog/embedding.hpp"
#include "logcog/error.hpp"
#include "logcog/evaluator.hpp"
#include "logcog/llm_backend.hpp"
#include "logcog/log_ingest.hpp"
#include "logcog/sampler.hpp"
#include "logcog/vector_store.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace logcog;

namespace {

py::dict label_dict(const Label& label) {
    py::dict d;
    d["anomaly"] = label.is_anomaly();
    d["alert_tag"] = label.alert_tag() ? py::cast(*label.alert_tag()) : py::none();
    return d;
}

py::list hits_list(const std::vector<RetrievalHit>& hits) {
    py::list out;
    for (const auto& h : hits) {
        py::dict d;
        d["entry_id"] = h.entry.entry_id;
        d["score"] = h.score;
        d["text"] = h.entry.text;
        d["meta"] = h.entry.meta;
        out.append(d);
    }
    return out;
}

py::dict result_dict(const AnalysisResult& r) {
    py::list stages;
    for (const auto& s : r.stages) {
        py::dict d;
        d["task"] = std::string(task_kind_name(s.task_kind));
        d["reply"] = s.raw_reply;
        d["verdict"] = s.parsed_verdict ? py::cast(std::string(verdict_name(*s.parsed_verdict))) : py::none();
        d["explanation"] = s.explanation;
        stages.append(d);
    }
    py::dict d;
    d["record_id"] = r.record_id;
    d["verdict"] = std::string(verdict_name(r.final_verdict));
    d["explanation"] = r.explanation;
    d["stages"] = stages;
    return d;
}

} // namespace

PYBIND11_MODULE(_logcog, m) {
    m.doc() = "Retrieval-grounded log anomaly analysis";

    // Leaked on purpose: the translator may run during interpreter shutdown.
    static PyObject* error_type = PyErr_NewException("logcog.LogcogError", PyExc_RuntimeError, nullptr);
    m.attr("LogcogError") = py::reinterpret_borrow<py::object>(error_type);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
            exc.attr("code") = std::string(errc_name(e.code()));
            exc.attr("module") = e.module();
            PyErr_SetObject(error_type, exc.ptr());
        }
    });

    m.def(
        "parse_line",
        [](const std::string& line, const std::string& format) {
            const auto parsed = parse_line(line, parse_format(format));
            py::dict d = label_dict(parsed.label);
            d["content"] = parsed.content;
            return d;
        },
        py::arg("line"), py::arg("format") = "bgl");
    m.def("normalize", [](const std::string& s, bool mask) { return normalize(s, mask); }, py::arg("content"),
          py::arg("mask_numerics") = false);

    py::class_<HashedNgramEmbedder>(m, "HashedNgramEmbedder")
        .def(py::init<std::size_t, std::size_t>(), py::arg("dimension") = 256, py::arg("ngram_size") = 3)
        .def_property_readonly("dimension", &HashedNgramEmbedder::dimension)
        .def("bucket", &HashedNgramEmbedder::bucket)
        .def("embed", [](const HashedNgramEmbedder& e, const std::string& text) {
            const auto v = e.embed(text);
            return std::vector<double>(v.values().begin(), v.values().end());
        });

    m.def("cosine", [](std::vector<double> a, std::vector<double> b) {
        return cosine(EmbeddingVector::normalized(std::move(a)), EmbeddingVector::normalized(std::move(b)));
    });

    m.def("choose_k", &choose_k);
    m.def("compute_quotas", [](const std::vector<std::size_t>& sizes, std::size_t cap) {
        return compute_quotas(sizes, cap);
    });
    m.def(
        "kmeans",
        [](const std::vector<std::vector<double>>& points, std::optional<std::size_t> k, std::uint64_t seed,
           std::size_t max_iter, double tol) {
            SamplerConfig cfg;
            cfg.k = k;
            cfg.seed = seed;
            cfg.max_iter = max_iter;
            cfg.tol = tol;
            const auto model = kmeans(points, cfg);
            py::dict d;
            d["centroids"] = model.centroids;
            d["assignments"] = model.assignments;
            d["inertia"] = model.inertia;
            d["iterations"] = model.iterations_run;
            d["inertia_history"] = model.inertia_history;
            return d;
        },
        py::arg("points"), py::arg("k") = py::none(), py::arg("seed") = 42, py::arg("max_iter") = 100,
        py::arg("tol") = 1e-6);

    py::class_<VectorStore>(m, "VectorStore")
        .def(py::init<>())
        .def(py::init<std::size_t>(), py::arg("dimension"))
        .def(
            "insert",
            [](VectorStore& s, std::uint64_t id, std::vector<double> vector, std::string text,
               std::map<std::string, std::string> meta) {
                s.insert(StoreEntry{id, EmbeddingVector::normalized(std::move(vector)), std::move(text),
                                    std::move(meta)});
            },
            py::arg("entry_id"), py::arg("vector"), py::arg("text"),
            py::arg("meta") = std::map<std::string, std::string>{})
        .def("seal", &VectorStore::seal)
        .def_property_readonly("sealed", &VectorStore::sealed)
        .def_property_readonly("dimension", &VectorStore::dimension)
        .def("__len__", &VectorStore::size)
        .def(
            "query",
            [](const VectorStore& s, std::vector<double> vector, std::size_t k) {
                return hits_list(s.query_top_k(EmbeddingVector::normalized(std::move(vector)), k));
            },
            py::arg("vector"), py::arg("k") = 1)
        .def("save", &VectorStore::save)
        .def_static("load", &VectorStore::load);

    m.def("parse_verdict", [](const std::string& reply) { return std::string(verdict_name(parse_verdict(reply))); });
    m.def("canonical_strategies", [] {
        std::vector<std::string> out;
        for (auto id : canonical_strategy_ids()) out.emplace_back(id);
        return out;
    });
    m.def("strategy_chain", [](const std::string& id) {
        std::vector<std::string> out;
        for (const auto& t : strategy_from_id(id).chain) out.emplace_back(task_kind_name(t.kind));
        return out;
    });

    py::class_<MockBackend>(m, "MockBackend")
        .def_static(
            "scripted",
            [](std::vector<std::string> script) {
                return std::make_unique<MockBackend>(MockRule{MockMode::Scripted, std::move(script), 0.85});
            },
            py::arg("script"))
        .def_static(
            "oracle",
            [](double threshold) {
                BackendConfig cfg;
                cfg.mock.threshold = threshold;
                cfg.validate();
                return std::make_unique<MockBackend>(MockRule{MockMode::SimilarityOracle, {}, threshold});
            },
            py::arg("threshold") = 0.85);

    m.def(
        "run_strategy",
        [](const std::string& strategy, MockBackend& backend, const std::string& entry, const std::string& retrieved,
           double score, std::uint64_t record_id) {
            LogRecord record;
            record.id = record_id;
            record.content = entry;
            RetrievalHit hit;
            hit.entry.text = retrieved;
            hit.score = score;
            const auto parsed = strategy_from_id(strategy);
            AnalysisResult result;
            {
                py::gil_scoped_release release;
                result = run_strategy(parsed, record, hit, backend);
            }
            return result_dict(result);
        },
        py::arg("strategy"), py::arg("backend"), py::arg("entry"), py::arg("retrieved"), py::arg("score"),
        py::arg("record_id") = 0);

    m.def(
        "compute_metrics",
        [](std::uint64_t tp, std::uint64_t fp, std::uint64_t tn, std::uint64_t fn) {
            ConfusionMatrix cm;
            cm.tp = tp;
            cm.fp = fp;
            cm.tn = tn;
            cm.fn = fn;
            const auto r = compute_metrics(cm);
            py::dict d;
            d["precision"] = r.precision;
            d["recall"] = r.recall;
            d["f1"] = r.f1;
            d["flags"] = r.flag_names();
            return d;
        },
        py::arg("tp"), py::arg("fp"), py::arg("tn"), py::arg("fn"));
    m.def("is_eval_record", &is_eval_record, py::arg("record_id"), py::arg("seed"));
    m.def(
        "render_report",
        [](const std::string& report_json, const std::string& format) {
            return render_report(matrix_from_json(report_json), parse_report_format(format));
        },
        py::arg("report_json"), py::arg("format") = "markdown");

    m.def("run_cli", [](std::vector<std::string> args) {
        args.insert(args.begin(), "logcog");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        int code;
        {
            py::gil_scoped_release release;
            code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
    });
}
