#pragma once

#include "logcog/embedding.hpp"
#include "logcog/log_ingest.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace logcog {

struct SamplerConfig {
    /// Number of clusters; nullopt selects `choose_k`.
    std::optional<std::size_t> k;
    std::size_t cap = 2000;
    std::uint64_t seed = 42;
    std::size_t max_iter = 100;
    /// Lloyd stops once (previous - current) <= tol * previous inertia.
    double tol = 1e-6;
    /// Drop records with identical content before clustering.
    bool dedup = false;
};

struct ClusterModel {
    std::vector<std::vector<double>> centroids;
    std::vector<std::size_t> assignments;
    double inertia = 0.0;
    std::size_t iterations_run = 0;
    /// Inertia after the initial assignment and after every Lloyd step.
    std::vector<double> inertia_history;

    std::size_t k() const noexcept { return centroids.size(); }
    std::vector<std::size_t> cluster_sizes() const;
};

/// clamp(round(sqrt(n / 2)), 1, 50).
std::size_t choose_k(std::size_t n);

/// Number of distinct points (exact equality).
std::size_t count_distinct(std::span<const std::span<const double>> points);

/// k-means++ seeding followed by Lloyd iterations under squared Euclidean
/// distance. Ties in assignment go to the lowest centroid index; an empty
/// cluster is re-seeded with the point farthest from its own centroid.
/// Deterministic for a given (points, config).
///
/// Throws Error{EmptyInput}, Error{DimensionMismatch}, or Error{KTooLarge}
/// when an explicit k exceeds the number of distinct points. An automatic k
/// is clamped to the distinct count.
ClusterModel kmeans(std::span<const std::span<const double>> points, const SamplerConfig& config);
ClusterModel kmeans(std::span<const EmbeddingVector> vectors, const SamplerConfig& config);
ClusterModel kmeans(const std::vector<std::vector<double>>& points, const SamplerConfig& config);

/// Largest-remainder proportional allocation of `cap` slots over clusters,
/// with a floor of one per non-empty cluster when cap allows it. When the
/// total does not exceed cap, every cluster gets its full size.
std::vector<std::size_t> compute_quotas(std::span<const std::size_t> cluster_sizes, std::size_t cap);

struct SamplingManifest {
    std::size_t k = 0;
    std::vector<std::size_t> cluster_sizes;
    std::vector<std::size_t> quotas;
    std::uint64_t seed = 0;
    std::size_t cap = 0;
    std::size_t total = 0;
    std::size_t selected = 0;
    std::size_t iterations = 0;
    double inertia = 0.0;

    std::string to_json() const;
};

struct Selection {
    std::vector<LogRecord> records;  // ordered by record id
    SamplingManifest manifest;
};

/// Uniform per-cluster sampling without replacement under `compute_quotas`.
/// Throws Error{LengthMismatch} or Error{NonNormalRecord}.
Selection select_samples(std::span<const LogRecord> records, const ClusterModel& model,
                         const SamplerConfig& config);

} // namespace logcog
