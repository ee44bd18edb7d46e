#include "logcog/embedding.hpp"

#include "logcog/error.hpp"
#include "logcog/hash.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>

namespace logcog {

namespace {

constexpr const char* kModule = "embedding";

std::string_view trim(std::string_view s) {
    auto space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f'; };
    while (!s.empty() && space(s.front())) s.remove_prefix(1);
    while (!s.empty() && space(s.back())) s.remove_suffix(1);
    return s;
}

double l2_norm(std::span<const double> v) {
    double sum = 0.0;
    for (double x : v) sum += x * x;
    return std::sqrt(sum);
}

} // namespace

EmbeddingVector EmbeddingVector::normalized(std::vector<double> values) {
    const double norm = l2_norm(values);
    if (values.empty() || !(norm > 0.0) || !std::isfinite(norm)) {
        throw Error(Errc::InvalidRequest, kModule, "cannot normalize an empty, zero or non-finite vector");
    }
    for (double& x : values) x /= norm;
    return EmbeddingVector(std::move(values));
}

EmbeddingVector EmbeddingVector::from_unit(std::vector<double> values) {
    const double norm = l2_norm(values);
    if (values.empty() || !(std::abs(norm - 1.0) <= 1e-9)) {
        throw Error(Errc::CorruptStore, kModule, "vector is not unit norm");
    }
    return EmbeddingVector(std::move(values));
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dimension() != b.dimension()) {
        throw Error(Errc::DimensionMismatch, kModule,
                    "dimension " + std::to_string(a.dimension()) + " vs " + std::to_string(b.dimension()));
    }
    const auto x = a.values();
    const auto y = b.values();
    double dot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
    return dot;
}

std::vector<EmbeddingVector> Embedder::embed_batch(std::span<const std::string> texts) const {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (trim(texts[i]).empty()) {
            throw Error(Errc::EmptyText, kModule, "empty text at index " + std::to_string(i));
        }
        out.push_back(embed(texts[i]));
    }
    return out;
}

HashedNgramEmbedder::HashedNgramEmbedder(std::size_t dimension, std::size_t ngram_size, std::uint64_t seed)
    : dimension_(dimension), ngram_size_(ngram_size), seed_(seed) {
    if (dimension_ < 8) {
        throw Error(Errc::InvalidConfig, kModule, "embedding dimension must be >= 8");
    }
    if (ngram_size_ < 1) {
        throw Error(Errc::InvalidConfig, kModule, "ngram size must be >= 1");
    }
}

std::size_t HashedNgramEmbedder::bucket(std::string_view gram) const noexcept {
    return static_cast<std::size_t>(fnv1a64(gram, seed_) % dimension_);
}

EmbeddingVector HashedNgramEmbedder::embed(std::string_view text) const {
    const std::string_view trimmed = trim(text);
    if (trimmed.empty()) {
        throw Error(Errc::EmptyText, kModule, "empty text");
    }
    std::string folded(trimmed);
    for (char& c : folded) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    std::vector<double> counts(dimension_, 0.0);
    const std::string_view view(folded);
    if (view.size() < ngram_size_) {
        counts[bucket(view)] += 1.0;
    } else {
        for (std::size_t i = 0; i + ngram_size_ <= view.size(); ++i) {
            counts[bucket(view.substr(i, ngram_size_))] += 1.0;
        }
    }
    return EmbeddingVector::normalized(std::move(counts));
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) {
        throw Error(Errc::InvalidConfig, kModule, "remote embedder needs a base url");
    }
    if (config_.dimension < 8) {
        throw Error(Errc::InvalidConfig, kModule, "embedding dimension must be >= 8");
    }
}

EmbeddingVector RemoteEmbedder::embed(std::string_view text) const {
    const std::string one(text);
    auto batch = embed_batch(std::span<const std::string>(&one, 1));
    return std::move(batch.front());
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_batch(std::span<const std::string> texts) const {
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (trim(texts[i]).empty()) {
            throw Error(Errc::EmptyText, kModule, "empty text at index " + std::to_string(i));
        }
    }
    if (texts.empty()) {
        return {};
    }
    nlohmann::json body = {{"input", std::vector<std::string>(texts.begin(), texts.end())},
                           {"model", config_.model}};

    httplib::Client client(config_.base_url);
    const auto secs = config_.timeout_ms / 1000;
    const auto usecs = (config_.timeout_ms % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    httplib::Headers headers;
    if (!config_.api_key_env.empty()) {
        if (const char* token = std::getenv(config_.api_key_env.c_str())) {
            headers.emplace("Authorization", std::string("Bearer ") + token);
        }
    }
    auto res = client.Post(config_.path, headers, body.dump(), "application/json");
    if (!res) {
        throw Error(Errc::TransportFailure, kModule,
                    "embedding request failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw Error(Errc::TransportFailure, kModule, "embedding endpoint returned HTTP " + std::to_string(res->status));
    }

    nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
    if (!reply.is_array() || reply.size() != texts.size()) {
        throw Error(Errc::ProtocolError, kModule, "expected a JSON array with one vector per input");
    }
    std::vector<EmbeddingVector> out;
    out.reserve(reply.size());
    for (const auto& row : reply) {
        if (!row.is_array() || row.size() != config_.dimension) {
            throw Error(Errc::ProtocolError, kModule, "embedding row has wrong shape");
        }
        std::vector<double> values;
        values.reserve(row.size());
        for (const auto& x : row) {
            if (!x.is_number()) {
                throw Error(Errc::ProtocolError, kModule, "embedding row holds a non-number");
            }
            values.push_back(x.get<double>());
        }
        try {
            out.push_back(EmbeddingVector::normalized(std::move(values)));
        } catch (const Error&) {
            throw Error(Errc::ProtocolError, kModule, "embedding endpoint returned a zero vector");
        }
    }
    return out;
}

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config) {
    if (config.kind == EmbedderKind::Remote) {
        RemoteEmbedderConfig remote = config.remote;
        remote.dimension = config.dimension;
        return std::make_unique<RemoteEmbedder>(std::move(remote));
    }
    return std::make_unique<HashedNgramEmbedder>(config.dimension, config.ngram_size, config.seed);
}

} // namespace logcog
