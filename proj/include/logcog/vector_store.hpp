#pragma once

#include "logcog/embedding.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

namespace logcog {

struct StoreEntry {
    std::uint64_t entry_id = 0;
    EmbeddingVector vector;
    std::string text;
    std::map<std::string, std::string> meta;
};

struct RetrievalHit {
    StoreEntry entry;
    double score = 0.0;
};

inline constexpr int kStoreSchemaVersion = 1;

/// Exhaustive cosine-similarity store of known-normal entries.
///
/// Lifecycle: inserts while in build mode, then `seal()`; queries and
/// `save` need a sealed store. A sealed store is immutable and safe for
/// concurrent queries. The dimension is fixed by the first insert unless
/// given at construction.
class VectorStore {
public:
    VectorStore() = default;
    explicit VectorStore(std::size_t dimension) : dimension_(dimension) {}

    void insert(StoreEntry entry);
    void seal() noexcept { sealed_ = true; }

    bool sealed() const noexcept { return sealed_; }
    std::size_t size() const noexcept { return entries_.size(); }
    std::size_t dimension() const noexcept { return dimension_; }
    const std::vector<StoreEntry>& entries() const noexcept { return entries_; }

    /// Highest cosine first, ties by ascending entry_id; at most k hits.
    std::vector<RetrievalHit> query_top_k(const EmbeddingVector& query, std::size_t k) const;

    /// Line-delimited JSON: a header {schema_version, dimension, count, checksum}
    /// followed by one {entry_id, vector, text, meta} object per line. The
    /// checksum is FNV-1a 64 over the entry lines, newline-terminated, in hex.
    void save(const std::filesystem::path& path) const;
    static VectorStore load(const std::filesystem::path& path);

private:
    std::size_t dimension_ = 0;
    bool sealed_ = false;
    std::vector<StoreEntry> entries_;
    std::unordered_set<std::uint64_t> ids_;
};

} // namespace logcog
