#include "logcog/sampler.hpp"

#include "logcog/error.hpp"
#include "logcog/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace logcog {

namespace {

constexpr const char* kModule = "sampler";

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

struct Assignment {
    std::vector<std::size_t> labels;
    std::vector<double> distances;
    double inertia = 0.0;
};

Assignment assign(std::span<const std::span<const double>> points,
                  const std::vector<std::vector<double>>& centroids) {
    Assignment out;
    out.labels.resize(points.size());
    out.distances.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < centroids.size(); ++c) {
            const double d = squared_distance(points[i], centroids[c]);
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        out.labels[i] = best;
        out.distances[i] = best_d;
    }
    // Summed in index order so the value does not depend on how the loop above is scheduled.
    out.inertia = std::accumulate(out.distances.begin(), out.distances.end(), 0.0);
    return out;
}

std::vector<std::vector<double>> seed_plus_plus(std::span<const std::span<const double>> points,
                                                std::size_t k, std::mt19937_64& rng) {
    std::vector<std::vector<double>> centroids;
    centroids.reserve(k);
    const auto first = uniform_below(rng, points.size());
    centroids.emplace_back(points[first].begin(), points[first].end());

    std::vector<double> nearest(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        nearest[i] = squared_distance(points[i], centroids.back());
    }
    while (centroids.size() < k) {
        const double total = std::accumulate(nearest.begin(), nearest.end(), 0.0);
        std::size_t pick = 0;
        if (total > 0.0) {
            const double target = uniform_unit(rng) * total;
            double running = 0.0;
            pick = points.size();
            for (std::size_t i = 0; i < points.size(); ++i) {
                running += nearest[i];
                if (nearest[i] > 0.0 && running > target) {
                    pick = i;
                    break;
                }
            }
            if (pick == points.size()) {
                // Rounding left the target past the running sum; take the last candidate.
                for (std::size_t i = points.size(); i-- > 0;) {
                    if (nearest[i] > 0.0) {
                        pick = i;
                        break;
                    }
                }
            }
        }
        centroids.emplace_back(points[pick].begin(), points[pick].end());
        for (std::size_t i = 0; i < points.size(); ++i) {
            nearest[i] = std::min(nearest[i], squared_distance(points[i], centroids.back()));
        }
    }
    return centroids;
}

std::vector<std::vector<double>> update_centroids(std::span<const std::span<const double>> points,
                                                  const Assignment& current, std::size_t k,
                                                  std::size_t dim) {
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto& s = sums[current.labels[i]];
        for (std::size_t d = 0; d < dim; ++d) s[d] += points[i][d];
        ++counts[current.labels[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0) continue;
        for (double& x : sums[c]) x /= static_cast<double>(counts[c]);
    }

    // Empty clusters take the point currently farthest from its centroid.
    std::vector<double> dist(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        dist[i] = squared_distance(points[i], sums[current.labels[i]]);
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] != 0) continue;
        std::size_t far = 0;
        for (std::size_t i = 1; i < points.size(); ++i) {
            if (dist[i] > dist[far]) far = i;
        }
        sums[c].assign(points[far].begin(), points[far].end());
        dist[far] = 0.0;
    }
    return sums;
}

std::vector<std::span<const double>> as_spans(std::span<const EmbeddingVector> vectors) {
    std::vector<std::span<const double>> out;
    out.reserve(vectors.size());
    for (const auto& v : vectors) out.push_back(v.values());
    return out;
}

} // namespace

std::vector<std::size_t> ClusterModel::cluster_sizes() const {
    std::vector<std::size_t> sizes(centroids.size(), 0);
    for (auto a : assignments) ++sizes[a];
    return sizes;
}

std::size_t choose_k(std::size_t n) {
    const double k = std::round(std::sqrt(static_cast<double>(n) / 2.0));
    return static_cast<std::size_t>(std::clamp(k, 1.0, 50.0));
}

std::size_t count_distinct(std::span<const std::span<const double>> points) {
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    auto less = [&](std::size_t a, std::size_t b) {
        return std::lexicographical_compare(points[a].begin(), points[a].end(), points[b].begin(), points[b].end());
    };
    std::sort(order.begin(), order.end(), less);
    std::size_t distinct = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i == 0 || less(order[i - 1], order[i])) ++distinct;
    }
    return distinct;
}

ClusterModel kmeans(std::span<const std::span<const double>> points, const SamplerConfig& config) {
    if (points.empty()) {
        throw Error(Errc::EmptyInput, kModule, "kmeans needs at least one point");
    }
    const std::size_t dim = points.front().size();
    for (const auto& p : points) {
        if (p.size() != dim) {
            throw Error(Errc::DimensionMismatch, kModule, "points do not share a dimension");
        }
    }
    const std::size_t distinct = count_distinct(points);
    std::size_t k = 0;
    if (config.k) {
        k = *config.k;
        if (k == 0) {
            throw Error(Errc::InvalidConfig, kModule, "k must be >= 1");
        }
        if (k > distinct) {
            throw Error(Errc::KTooLarge, kModule,
                        "k=" + std::to_string(k) + " exceeds " + std::to_string(distinct) + " distinct points");
        }
    } else {
        k = std::min(choose_k(points.size()), distinct);
    }

    std::mt19937_64 rng(config.seed);
    ClusterModel model;
    model.centroids = seed_plus_plus(points, k, rng);
    Assignment current = assign(points, model.centroids);
    model.inertia_history.push_back(current.inertia);

    for (std::size_t iter = 1; iter <= config.max_iter; ++iter) {
        const double previous = current.inertia;
        model.centroids = update_centroids(points, current, k, dim);
        current = assign(points, model.centroids);
        model.inertia_history.push_back(current.inertia);
        model.iterations_run = iter;
        if (previous - current.inertia <= config.tol * previous) {
            break;
        }
    }
    model.assignments = std::move(current.labels);
    model.inertia = current.inertia;
    return model;
}

ClusterModel kmeans(std::span<const EmbeddingVector> vectors, const SamplerConfig& config) {
    const auto spans = as_spans(vectors);
    return kmeans(std::span<const std::span<const double>>(spans), config);
}

ClusterModel kmeans(const std::vector<std::vector<double>>& points, const SamplerConfig& config) {
    std::vector<std::span<const double>> spans(points.begin(), points.end());
    return kmeans(std::span<const std::span<const double>>(spans), config);
}

std::vector<std::size_t> compute_quotas(std::span<const std::size_t> cluster_sizes, std::size_t cap) {
    const std::size_t total = std::accumulate(cluster_sizes.begin(), cluster_sizes.end(), std::size_t{0});
    std::vector<std::size_t> quotas(cluster_sizes.begin(), cluster_sizes.end());
    if (total <= cap) {
        return quotas;
    }

    std::vector<std::uint64_t> remainders(cluster_sizes.size());
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < cluster_sizes.size(); ++c) {
        const auto scaled = static_cast<std::uint64_t>(cap) * cluster_sizes[c];
        quotas[c] = static_cast<std::size_t>(scaled / total);
        remainders[c] = scaled % total;
        assigned += quotas[c];
    }
    std::vector<std::size_t> order(cluster_sizes.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
    for (std::size_t i = 0; assigned < cap; ++i) {
        ++quotas[order[i]];
        ++assigned;
    }

    const auto non_empty = static_cast<std::size_t>(
        std::count_if(cluster_sizes.begin(), cluster_sizes.end(), [](std::size_t s) { return s > 0; }));
    if (cap >= non_empty) {
        for (std::size_t c = 0; c < cluster_sizes.size(); ++c) {
            if (cluster_sizes[c] == 0 || quotas[c] > 0) continue;
            // Take the slot from the largest quota (lowest index on ties); it is >= 2 here.
            std::size_t donor = 0;
            for (std::size_t d = 1; d < quotas.size(); ++d) {
                if (quotas[d] > quotas[donor]) donor = d;
            }
            --quotas[donor];
            quotas[c] = 1;
        }
    }
    return quotas;
}

std::string SamplingManifest::to_json() const {
    nlohmann::json j = {{"k", k},
                        {"cluster_sizes", cluster_sizes},
                        {"quotas", quotas},
                        {"seed", seed},
                        {"cap", cap},
                        {"total", total},
                        {"selected", selected},
                        {"iterations", iterations},
                        {"inertia", inertia}};
    return j.dump(2);
}

Selection select_samples(std::span<const LogRecord> records, const ClusterModel& model,
                         const SamplerConfig& config) {
    if (records.size() != model.assignments.size()) {
        throw Error(Errc::LengthMismatch, kModule,
                    std::to_string(records.size()) + " records vs " + std::to_string(model.assignments.size()) +
                        " assignments");
    }
    for (const auto& r : records) {
        if (r.label.is_anomaly()) {
            throw Error(Errc::NonNormalRecord, kModule,
                        "record " + std::to_string(r.id) + " is labelled anomalous");
        }
    }
    if (config.cap == 0) {
        throw Error(Errc::InvalidConfig, kModule, "cap must be >= 1");
    }

    Selection out;
    out.manifest.k = model.k();
    out.manifest.cluster_sizes = model.cluster_sizes();
    out.manifest.quotas = compute_quotas(out.manifest.cluster_sizes, config.cap);
    out.manifest.seed = config.seed;
    out.manifest.cap = config.cap;
    out.manifest.total = records.size();
    out.manifest.iterations = model.iterations_run;
    out.manifest.inertia = model.inertia;

    std::vector<std::vector<std::size_t>> members(model.k());
    for (std::size_t i = 0; i < records.size(); ++i) {
        members[model.assignments[i]].push_back(i);
    }

    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> chosen;
    for (std::size_t c = 0; c < members.size(); ++c) {
        auto& pool = members[c];
        const std::size_t quota = std::min(out.manifest.quotas[c], pool.size());
        // Partial Fisher-Yates: the first `quota` slots become a uniform sample.
        for (std::size_t i = 0; i < quota; ++i) {
            const auto j = i + uniform_below(rng, pool.size() - i);
            std::swap(pool[i], pool[j]);
        }
        chosen.insert(chosen.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(quota));
    }
    std::sort(chosen.begin(), chosen.end(),
              [&](std::size_t a, std::size_t b) { return records[a].id < records[b].id; });
    out.records.reserve(chosen.size());
    for (auto i : chosen) out.records.push_back(records[i]);
    out.manifest.selected = out.records.size();
    return out;
}

} // namespace logcog
