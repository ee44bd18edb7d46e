#include "logcog/vector_store.hpp"

#include "logcog/error.hpp"
#include "logcog/hash.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace logcog {

namespace {

constexpr const char* kModule = "vector_store";

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

nlohmann::json entry_to_json(const StoreEntry& e) {
    const auto v = e.vector.values();
    return {{"entry_id", e.entry_id},
            {"vector", std::vector<double>(v.begin(), v.end())},
            {"text", e.text},
            {"meta", e.meta}};
}

[[noreturn]] void corrupt(const std::string& why) {
    throw Error(Errc::CorruptStore, kModule, why);
}

StoreEntry entry_from_json(const nlohmann::json& j, std::size_t dimension) {
    if (!j.is_object() || !j.contains("entry_id") || !j.contains("vector") || !j.contains("text") ||
        !j.contains("meta")) {
        corrupt("entry is missing fields");
    }
    if (!j["entry_id"].is_number_unsigned() || !j["vector"].is_array() || !j["text"].is_string() ||
        !j["meta"].is_object()) {
        corrupt("entry field has the wrong type");
    }
    StoreEntry e;
    e.entry_id = j["entry_id"].get<std::uint64_t>();
    std::vector<double> values;
    for (const auto& x : j["vector"]) {
        if (!x.is_number()) corrupt("vector holds a non-number");
        values.push_back(x.get<double>());
    }
    if (values.size() != dimension) {
        corrupt("entry dimension " + std::to_string(values.size()) + " differs from header " +
                std::to_string(dimension));
    }
    e.vector = EmbeddingVector::from_unit(std::move(values));
    e.text = j["text"].get<std::string>();
    for (const auto& [key, value] : j["meta"].items()) {
        if (!value.is_string()) corrupt("meta values must be strings");
        e.meta.emplace(key, value.get<std::string>());
    }
    if (auto it = e.meta.find("label"); it != e.meta.end() && it->second != "normal") {
        corrupt("entry " + std::to_string(e.entry_id) + " is not a normal entry");
    }
    return e;
}

} // namespace

void VectorStore::insert(StoreEntry entry) {
    if (sealed_) {
        throw Error(Errc::StoreSealed, kModule, "store is sealed");
    }
    if (ids_.contains(entry.entry_id)) {
        throw Error(Errc::DuplicateId, kModule, "duplicate entry id " + std::to_string(entry.entry_id));
    }
    if (entry.vector.dimension() == 0) {
        throw Error(Errc::DimensionMismatch, kModule, "entry has no vector");
    }
    if (dimension_ == 0) {
        dimension_ = entry.vector.dimension();
    } else if (entry.vector.dimension() != dimension_) {
        throw Error(Errc::DimensionMismatch, kModule,
                    "entry dimension " + std::to_string(entry.vector.dimension()) + " vs store " +
                        std::to_string(dimension_));
    }
    ids_.insert(entry.entry_id);
    entries_.push_back(std::move(entry));
}

std::vector<RetrievalHit> VectorStore::query_top_k(const EmbeddingVector& query, std::size_t k) const {
    if (!sealed_) {
        throw Error(Errc::NotSealed, kModule, "store must be sealed before querying");
    }
    if (entries_.empty()) {
        throw Error(Errc::EmptyStore, kModule, "store is empty");
    }
    if (k == 0) {
        throw Error(Errc::InvalidRequest, kModule, "k must be >= 1");
    }
    if (query.dimension() != dimension_) {
        throw Error(Errc::DimensionMismatch, kModule,
                    "query dimension " + std::to_string(query.dimension()) + " vs store " +
                        std::to_string(dimension_));
    }

    std::vector<double> scores(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        scores[i] = cosine(query, entries_[i].vector);
    }
    std::vector<std::size_t> order(entries_.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t n = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (scores[a] != scores[b]) return scores[a] > scores[b];
                          return entries_[a].entry_id < entries_[b].entry_id;
                      });

    std::vector<RetrievalHit> hits;
    hits.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        hits.push_back(RetrievalHit{entries_[order[i]], scores[order[i]]});
    }
    return hits;
}

void VectorStore::save(const std::filesystem::path& path) const {
    if (!sealed_) {
        throw Error(Errc::NotSealed, kModule, "only sealed stores can be saved");
    }
    std::string body;
    for (const auto& e : entries_) {
        body += entry_to_json(e).dump();
        body += '\n';
    }
    nlohmann::json header = {{"schema_version", kStoreSchemaVersion},
                             {"dimension", dimension_},
                             {"count", entries_.size()},
                             {"checksum", hex64(fnv1a64(body))}};

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(Errc::IoFailure, kModule, "cannot write " + path.string());
    }
    out << header.dump() << '\n' << body;
    out.flush();
    if (!out) {
        throw Error(Errc::IoFailure, kModule, "write failed for " + path.string());
    }
}

VectorStore VectorStore::load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw Error(Errc::FileNotFound, kModule, "no store at " + path.string());
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::IoFailure, kModule, "cannot open " + path.string());
    }
    std::string header_line;
    if (!std::getline(in, header_line)) {
        corrupt("missing header line");
    }
    const auto header = nlohmann::json::parse(header_line, nullptr, false);
    if (!header.is_object() || !header.contains("schema_version") || !header.contains("dimension") ||
        !header.contains("count") || !header.contains("checksum") || !header["schema_version"].is_number_integer() ||
        !header["dimension"].is_number_unsigned() || !header["count"].is_number_unsigned() ||
        !header["checksum"].is_string()) {
        corrupt("malformed header");
    }
    if (header["schema_version"].get<int>() != kStoreSchemaVersion) {
        throw Error(Errc::VersionMismatch, kModule,
                    "store schema " + std::to_string(header["schema_version"].get<int>()) + ", expected " +
                        std::to_string(kStoreSchemaVersion));
    }

    std::ostringstream rest;
    rest << in.rdbuf();
    const std::string body = rest.str();
    if (hex64(fnv1a64(body)) != header["checksum"].get<std::string>()) {
        corrupt("checksum mismatch");
    }

    const auto dimension = header["dimension"].get<std::size_t>();
    const auto count = header["count"].get<std::size_t>();
    VectorStore store(dimension);
    std::istringstream lines(body);
    std::string line;
    while (std::getline(lines, line)) {
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) corrupt("entry line is not JSON");
        try {
            store.insert(entry_from_json(j, dimension));
        } catch (const Error& e) {
            if (e.code() == Errc::CorruptStore) throw;
            corrupt(e.what());
        }
    }
    if (store.size() != count) {
        corrupt("header count " + std::to_string(count) + " but " + std::to_string(store.size()) + " entries");
    }
    store.seal();
    return store;
}

} // namespace logcog
