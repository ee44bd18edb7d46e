#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace logcog {

/// Unit-length embedding of a log text.
class EmbeddingVector {
public:
    EmbeddingVector() = default;

    /// Scales `values` to unit L2 norm. Throws Error{InvalidRequest} for an
    /// empty or all-zero input.
    static EmbeddingVector normalized(std::vector<double> values);
    /// Adopts values that are already unit norm (within 1e-9), e.g. from a
    /// persisted store. Throws Error{CorruptStore} otherwise.
    static EmbeddingVector from_unit(std::vector<double> values);

    std::size_t dimension() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    bool operator==(const EmbeddingVector&) const = default;

private:
    explicit EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {}

    std::vector<double> values_;
};

/// Dot product of two unit vectors. Throws Error{DimensionMismatch}.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

class Embedder {
public:
    virtual ~Embedder() = default;

    virtual std::size_t dimension() const noexcept = 0;
    /// Throws Error{EmptyText} when `text` is blank.
    virtual EmbeddingVector embed(std::string_view text) const = 0;
    /// Element-wise `embed`. On a blank element throws Error{EmptyText} naming its index.
    virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const;
};

/// Feature-hashed character n-gram term frequencies.
///
/// The text is trimmed and ASCII-lowercased, every byte n-gram is hashed with
/// 64-bit FNV-1a (offset basis xor `seed`) into `hash % dimension`, counts are
/// accumulated and the result is L2-normalized. A text shorter than n
/// contributes itself as a single gram.
class HashedNgramEmbedder final : public Embedder {
public:
    explicit HashedNgramEmbedder(std::size_t dimension = 256, std::size_t ngram_size = 3,
                                 std::uint64_t seed = 0);

    std::size_t dimension() const noexcept override { return dimension_; }
    std::size_t ngram_size() const noexcept { return ngram_size_; }
    EmbeddingVector embed(std::string_view text) const override;

    /// Bucket a single gram falls into.
    std::size_t bucket(std::string_view gram) const noexcept;

private:
    std::size_t dimension_;
    std::size_t ngram_size_;
    std::uint64_t seed_;
};

struct RemoteEmbedderConfig {
    std::string base_url;                 // e.g. "http://127.0.0.1:8081"
    std::string path = "/v1/embeddings";
    std::string model;
    std::size_t dimension = 256;          // replies of any other length are rejected
    int timeout_ms = 60000;
    std::string api_key_env;              // bearer token variable, optional
};

/// Posts {"input": [texts], "model": id} to an embeddings endpoint and
/// expects a JSON array of float arrays back. Replies are L2-normalized.
/// Any deviation raises Error{ProtocolError}; transport problems raise
/// Error{TransportFailure}.
class RemoteEmbedder final : public Embedder {
public:
    explicit RemoteEmbedder(RemoteEmbedderConfig config);

    std::size_t dimension() const noexcept override { return config_.dimension; }
    EmbeddingVector embed(std::string_view text) const override;
    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override;

private:
    RemoteEmbedderConfig config_;
};

enum class EmbedderKind { HashedNgram, Remote };

struct EmbedderConfig {
    EmbedderKind kind = EmbedderKind::HashedNgram;
    std::size_t dimension = 256;
    std::size_t ngram_size = 3;
    std::uint64_t seed = 0;
    RemoteEmbedderConfig remote;
};

/// Validates the config (dimension >= 8, ngram_size >= 1) and builds the embedder.
std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config);

} // namespace logcog
