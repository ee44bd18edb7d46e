#include "logcog/run_config.hpp"

#include "logcog/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace logcog {

namespace {

constexpr const char* kModule = "cli";

using nlohmann::json;

[[noreturn]] void invalid(const std::string& why) {
    throw Error(Errc::InvalidConfig, kModule, why);
}

json model_defaults() {
    return {{"name", ""},
            {"kind", "mock"},
            {"endpoint_url", ""},
            {"path", "/v1/chat/completions"},
            {"model_id", ""},
            {"timeout_ms", 120000},
            {"max_retries", 2},
            {"retry_backoff_ms", 500},
            {"max_in_flight", 1},
            {"api_key_env", "LOGCOG_API_KEY"},
            {"mock", {{"mode", "similarity_oracle"}, {"threshold", 0.85}, {"script", json::array()}}}};
}

// Keys in `doc` must exist in `schema`; nested objects are checked recursively.
void check_keys(const json& doc, const json& schema, const std::string& where) {
    if (!doc.is_object()) invalid(where + " must be an object");
    for (const auto& [key, value] : doc.items()) {
        const std::string path = where.empty() ? key : where + "." + key;
        if (!schema.contains(key)) invalid("unknown config key '" + path + "'");
        if (path == "models") {
            if (!value.is_array()) invalid("models must be an array");
            for (std::size_t i = 0; i < value.size(); ++i) {
                check_keys(value[i], model_defaults(), "models." + std::to_string(i));
            }
        } else if (schema[key].is_object() && !schema[key].empty()) {
            check_keys(value, schema[key], path);
        }
    }
}

// `doc` over `defaults`, one level of objects deep at a time.
json overlay(const json& defaults, const json& doc) {
    json out = defaults;
    for (const auto& [key, value] : doc.items()) {
        if (out.contains(key) && out[key].is_object() && value.is_object()) {
            out[key] = overlay(out[key], value);
        } else {
            out[key] = value;
        }
    }
    return out;
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        invalid("config value '" + where + key + "' has the wrong type");
    }
}

BackendConfig parse_model(const json& m, std::size_t index) {
    const std::string where = "models." + std::to_string(index) + ".";
    BackendConfig b;
    b.name = get<std::string>(m, "name", where);
    const auto kind = get<std::string>(m, "kind", where);
    if (kind == "http") b.kind = BackendKind::Http;
    else if (kind == "mock") b.kind = BackendKind::Mock;
    else invalid(where + "kind must be 'http' or 'mock'");
    b.endpoint_url = get<std::string>(m, "endpoint_url", where);
    b.path = get<std::string>(m, "path", where);
    b.model_id = get<std::string>(m, "model_id", where);
    b.timeout_ms = get<int>(m, "timeout_ms", where);
    b.max_retries = get<int>(m, "max_retries", where);
    b.retry_backoff_ms = get<int>(m, "retry_backoff_ms", where);
    const auto in_flight = get<long long>(m, "max_in_flight", where);
    if (in_flight < 1) invalid(where + "max_in_flight must be >= 1");
    b.max_in_flight = static_cast<std::size_t>(in_flight);
    b.api_key_env = get<std::string>(m, "api_key_env", where);
    const auto& mock = m.at("mock");
    const auto mode = get<std::string>(mock, "mode", where + "mock.");
    if (mode == "scripted") b.mock.mode = MockMode::Scripted;
    else if (mode == "similarity_oracle") b.mock.mode = MockMode::SimilarityOracle;
    else invalid(where + "mock.mode must be 'scripted' or 'similarity_oracle'");
    b.mock.threshold = get<double>(mock, "threshold", where + "mock.");
    b.mock.script = get<std::vector<std::string>>(mock, "script", where + "mock.");
    if (b.name.empty()) b.name = b.model_id.empty() ? "model" + std::to_string(index) : b.model_id;
    b.validate();
    return b;
}

} // namespace

std::filesystem::path RunConfig::resolved_store_path() const {
    return store_path.empty() ? output_dir / "store.jsonl" : store_path;
}

const BackendConfig& RunConfig::model(std::string_view name) const {
    for (const auto& m : models) {
        if (m.name == name) return m;
    }
    invalid("no model named '" + std::string(name) + "'");
}

json default_config_json() {
    json strategies = json::array();
    for (const auto id : canonical_strategy_ids()) strategies.push_back(std::string(id));
    json mock = model_defaults();
    mock["name"] = "mock-oracle";
    return {
        {"dataset",
         {{"path", ""}, {"format", "bgl"}, {"name", ""}, {"limit", nullptr}, {"normalize", false},
          {"mask_numerics", false}}},
        {"embedder",
         {{"kind", "hashed_ngram"},
          {"dimension", 256},
          {"ngram_size", 3},
          {"seed", 0},
          {"remote",
           {{"url", ""}, {"path", "/v1/embeddings"}, {"model", ""}, {"timeout_ms", 60000}, {"api_key_env", ""}}}}},
        {"sampler",
         {{"k", "auto"}, {"cap", 2000}, {"seed", 42}, {"max_iter", 100}, {"tol", 1e-6}, {"dedup", false}}},
        {"store_path", ""},
        {"models", json::array({mock})},
        {"strategies", strategies},
        {"evaluator", {{"unparseable_policy", "anomaly"}, {"split_seed", 7}, {"workers", 1}, {"top_k", 1}}},
        {"pipeline",
         {{"temperature", 0.0},
          {"max_tokens", 512},
          {"envelope", true},
          {"templates_dir", ""},
          {"final_verdict", "reflect_with_fallback"}}},
        {"output_dir", "out"},
    };
}

json load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::FileNotFound, kModule, "config file not found: " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    json doc = json::parse(ss.str(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        invalid("config file " + path.string() + " is not a JSON object");
    }
    return doc;
}

void apply_override(json& doc, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        invalid("override must look like key.path=value, got '" + std::string(assignment) + "'");
    }
    const std::string key(assignment.substr(0, eq));
    const std::string raw(assignment.substr(eq + 1));
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;

    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string segment = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (segment.empty()) invalid("empty segment in override key '" + key + "'");
        json* child = nullptr;
        std::size_t index = 0;
        const auto [ptr, ec] = std::from_chars(segment.data(), segment.data() + segment.size(), index);
        const bool numeric = ec == std::errc() && ptr == segment.data() + segment.size();
        if (node->is_array() && numeric) {
            if (index > node->size()) invalid("override index out of range in '" + key + "'");
            if (index == node->size()) node->push_back(json::object());
            child = &(*node)[index];
        } else {
            if (node->is_null()) *node = json::object();
            if (!node->is_object()) invalid("override '" + key + "' descends into a non-object");
            child = &(*node)[segment];
        }
        if (dot == std::string::npos) {
            *child = std::move(value);
            return;
        }
        node = child;
        start = dot + 1;
    }
}

json effective_config_json(const json& doc) {
    check_keys(doc, default_config_json(), "");
    json merged = overlay(default_config_json(), doc);
    if (doc.contains("models")) {
        merged["models"] = json::array();
        for (const auto& m : doc["models"]) merged["models"].push_back(overlay(model_defaults(), m));
    }
    return merged;
}

RunConfig parse_run_config(const json& doc) {
    const json cfg = effective_config_json(doc);
    RunConfig rc;
    try {
        const auto& d = cfg.at("dataset");
        rc.dataset.path = get<std::string>(d, "path", "dataset.");
        rc.dataset.format = parse_format(get<std::string>(d, "format", "dataset."));
        rc.dataset.name = get<std::string>(d, "name", "dataset.");
        if (!d.at("limit").is_null()) {
            const auto limit = get<long long>(d, "limit", "dataset.");
            if (limit < 1) invalid("dataset.limit must be >= 1");
            rc.dataset.limit = static_cast<std::size_t>(limit);
        }
        rc.dataset.normalize = get<bool>(d, "normalize", "dataset.");
        rc.dataset.mask_numerics = get<bool>(d, "mask_numerics", "dataset.");

        const auto& e = cfg.at("embedder");
        const auto kind = get<std::string>(e, "kind", "embedder.");
        if (kind == "hashed_ngram") rc.embedder.kind = EmbedderKind::HashedNgram;
        else if (kind == "remote") rc.embedder.kind = EmbedderKind::Remote;
        else invalid("embedder.kind must be 'hashed_ngram' or 'remote'");
        rc.embedder.dimension = get<std::size_t>(e, "dimension", "embedder.");
        rc.embedder.ngram_size = get<std::size_t>(e, "ngram_size", "embedder.");
        rc.embedder.seed = get<std::uint64_t>(e, "seed", "embedder.");
        if (rc.embedder.dimension < 8) invalid("embedder.dimension must be >= 8");
        if (rc.embedder.ngram_size < 1) invalid("embedder.ngram_size must be >= 1");
        const auto& r = e.at("remote");
        rc.embedder.remote.base_url = get<std::string>(r, "url", "embedder.remote.");
        rc.embedder.remote.path = get<std::string>(r, "path", "embedder.remote.");
        rc.embedder.remote.model = get<std::string>(r, "model", "embedder.remote.");
        rc.embedder.remote.timeout_ms = get<int>(r, "timeout_ms", "embedder.remote.");
        rc.embedder.remote.api_key_env = get<std::string>(r, "api_key_env", "embedder.remote.");
        if (rc.embedder.kind == EmbedderKind::Remote && rc.embedder.remote.base_url.empty()) {
            invalid("embedder.remote.url is required for the remote embedder");
        }

        const auto& s = cfg.at("sampler");
        if (s.at("k").is_string()) {
            if (s.at("k").get<std::string>() != "auto") invalid("sampler.k must be 'auto' or a positive integer");
        } else {
            const auto k = get<long long>(s, "k", "sampler.");
            if (k < 1) invalid("sampler.k must be >= 1");
            rc.sampler.k = static_cast<std::size_t>(k);
        }
        const auto cap = get<long long>(s, "cap", "sampler.");
        if (cap < 1) invalid("sampler.cap must be >= 1");
        rc.sampler.cap = static_cast<std::size_t>(cap);
        rc.sampler.seed = get<std::uint64_t>(s, "seed", "sampler.");
        rc.sampler.max_iter = get<std::size_t>(s, "max_iter", "sampler.");
        rc.sampler.tol = get<double>(s, "tol", "sampler.");
        rc.sampler.dedup = get<bool>(s, "dedup", "sampler.");

        rc.store_path = get<std::string>(cfg, "store_path", "");
        rc.output_dir = get<std::string>(cfg, "output_dir", "");
        if (rc.output_dir.empty()) invalid("output_dir must not be empty");

        const auto& models = cfg.at("models");
        if (!models.is_array() || models.empty()) invalid("at least one model must be configured");
        for (std::size_t i = 0; i < models.size(); ++i) {
            rc.models.push_back(parse_model(models[i], i));
            for (std::size_t j = 0; j < i; ++j) {
                if (rc.models[j].name == rc.models[i].name) invalid("duplicate model name '" + rc.models[i].name + "'");
            }
        }

        const auto& strategies = cfg.at("strategies");
        if (!strategies.is_array() || strategies.empty()) invalid("at least one strategy must be configured");
        for (const auto& id : strategies) {
            if (!id.is_string()) invalid("strategies must be strings");
            rc.strategies.push_back(strategy_from_id(id.get<std::string>()).id);
        }

        const auto& ev = cfg.at("evaluator");
        rc.evaluator.unparseable_policy = parse_policy(get<std::string>(ev, "unparseable_policy", "evaluator."));
        rc.evaluator.split_seed = get<std::uint64_t>(ev, "split_seed", "evaluator.");
        rc.evaluator.workers = get<std::size_t>(ev, "workers", "evaluator.");
        rc.evaluator.top_k = get<std::size_t>(ev, "top_k", "evaluator.");
        if (rc.evaluator.workers < 1 || rc.evaluator.top_k < 1) invalid("evaluator.workers and top_k must be >= 1");

        const auto& p = cfg.at("pipeline");
        rc.pipeline.temperature = get<double>(p, "temperature", "pipeline.");
        rc.pipeline.max_tokens = get<int>(p, "max_tokens", "pipeline.");
        rc.pipeline.envelope = get<bool>(p, "envelope", "pipeline.");
        rc.pipeline.templates_dir = get<std::string>(p, "templates_dir", "pipeline.");
        const auto fv = get<std::string>(p, "final_verdict", "pipeline.");
        if (fv == "reflect_with_fallback") rc.pipeline.final_verdict = FinalVerdictPolicy::ReflectWithFallback;
        else if (fv == "reflect_only") rc.pipeline.final_verdict = FinalVerdictPolicy::ReflectOnly;
        else invalid("pipeline.final_verdict must be 'reflect_with_fallback' or 'reflect_only'");
        if (rc.pipeline.temperature < 0.0) invalid("pipeline.temperature must be >= 0");
        if (rc.pipeline.max_tokens < 1) invalid("pipeline.max_tokens must be >= 1");
    } catch (const json::exception& ex) {
        invalid(std::string("malformed config: ") + ex.what());
    }
    return rc;
}

} // namespace logcog
