#include "logcog/error.hpp"
#include "logcog/sampler.hpp"
#include "synthetic_corpus.hpp"

#include <doctest.h>

#include <map>
#include <numeric>
#include <random>
#include <set>

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

std::vector<LogRecord> normal_records(std::size_t n) {
    std::vector<LogRecord> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i].id = i * 3 + 1;
        out[i].content = "entry " + std::to_string(i);
    }
    return out;
}

// Cluster model with fixed cluster sizes, assignments laid out in blocks.
ClusterModel block_model(const std::vector<std::size_t>& sizes) {
    ClusterModel m;
    for (std::size_t c = 0; c < sizes.size(); ++c) {
        m.centroids.push_back({static_cast<double>(c)});
        m.assignments.insert(m.assignments.end(), sizes[c], c);
    }
    return m;
}

} // namespace

TEST_SUITE("sampler") {

TEST_CASE("choose_k") {
    CHECK(choose_k(0) == 1);
    CHECK(choose_k(1) == 1);
    CHECK(choose_k(200) == 10);
    CHECK(choose_k(1000000) == 50);
}

TEST_CASE("one-hot points form zero-inertia clusters") {
    std::vector<std::vector<double>> pts;
    for (int rep = 0; rep < 4; ++rep) {
        pts.push_back({1, 0, 0});
        pts.push_back({0, 1, 0});
        pts.push_back({0, 0, 1});
    }
    SamplerConfig cfg;
    cfg.k = 3;
    const auto m = kmeans(pts, cfg);
    CHECK(m.k() == 3);
    CHECK(m.inertia == 0.0);
    for (std::size_t i = 3; i < pts.size(); ++i) CHECK(m.assignments[i] == m.assignments[i % 3]);
    std::set<std::size_t> used(m.assignments.begin(), m.assignments.end());
    CHECK(used.size() == 3);
}

TEST_CASE("identical points with k=1") {
    std::vector<std::vector<double>> pts(10, {0.5, 0.5});
    SamplerConfig cfg;
    cfg.k = 1;
    const auto m = kmeans(pts, cfg);
    CHECK(m.inertia == 0.0);
    CHECK(m.centroids[0] == std::vector<double>{0.5, 0.5});
}

TEST_CASE("automatic k is clamped to the distinct count, explicit k is not") {
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < 200; ++i) pts.push_back({static_cast<double>(i % 2), 0.0});
    SamplerConfig cfg;
    CHECK(kmeans(pts, cfg).k() == 2);
    cfg.k = 3;
    CHECK(code_of([&] { kmeans(pts, cfg); }) == Errc::KTooLarge);
}

TEST_CASE("input errors") {
    SamplerConfig cfg;
    CHECK(code_of([&] { kmeans(std::vector<std::vector<double>>{}, cfg); }) == Errc::EmptyInput);
    CHECK(code_of([&] { kmeans(std::vector<std::vector<double>>{{1, 2}, {1}}, cfg); }) == Errc::DimensionMismatch);
}

TEST_CASE("well separated blobs are recovered") {
    std::vector<std::size_t> truth;
    const auto pts = testing::make_blobs(5, 40, 4, 0.5, 3, truth);
    SamplerConfig cfg;
    cfg.k = 5;
    const auto m = kmeans(pts, cfg);
    CHECK(testing::adjusted_rand_index(truth, m.assignments) >= 0.99);
}

TEST_CASE("inertia never increases and kmeans is deterministic") {
    std::vector<std::size_t> truth;
    const auto pts = testing::make_blobs(6, 30, 3, 4.0, 8, truth);
    SamplerConfig cfg;
    cfg.k = 6;
    const auto a = kmeans(pts, cfg);
    for (std::size_t i = 1; i < a.inertia_history.size(); ++i) {
        CHECK(a.inertia_history[i] <= a.inertia_history[i - 1] * (1 + 1e-12));
    }
    const auto b = kmeans(pts, cfg);
    CHECK(a.assignments == b.assignments);
    CHECK(a.inertia == b.inertia);
}

TEST_CASE("quotas") {
    CHECK(compute_quotas(std::vector<std::size_t>{600, 300, 100}, 100) == std::vector<std::size_t>{60, 30, 10});
    CHECK(compute_quotas(std::vector<std::size_t>{5, 3}, 100) == std::vector<std::size_t>{5, 3});
    // 1/3 each of 10: remainders tie, lowest index first.
    CHECK(compute_quotas(std::vector<std::size_t>{3, 3, 3}, 7) == std::vector<std::size_t>{3, 2, 2});
    // The tiny cluster keeps one slot taken from the biggest quota.
    CHECK(compute_quotas(std::vector<std::size_t>{1000, 1}, 10) == std::vector<std::size_t>{9, 1});
    CHECK(compute_quotas(std::vector<std::size_t>{0, 50, 50}, 10) == std::vector<std::size_t>{0, 5, 5});
}

TEST_CASE("quotas sum to min(cap, total) and stay within cluster sizes") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<std::size_t> sizes(1 + rng() % 12);
        for (auto& s : sizes) s = rng() % 200;
        const std::size_t cap = 1 + rng() % 500;
        const auto q = compute_quotas(sizes, cap);
        const auto total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
        CHECK(std::accumulate(q.begin(), q.end(), std::size_t{0}) == std::min(cap, total));
        std::size_t non_empty = 0;
        for (std::size_t c = 0; c < sizes.size(); ++c) {
            CHECK(q[c] <= sizes[c]);
            non_empty += sizes[c] > 0;
        }
        if (cap >= non_empty) {
            for (std::size_t c = 0; c < sizes.size(); ++c) {
                if (sizes[c] > 0) CHECK(q[c] >= 1);
            }
        }
    }
}

TEST_CASE("selection honours cap, coverage, purity and determinism") {
    const auto records = normal_records(500);
    const auto model = block_model({250, 150, 90, 10});
    SamplerConfig cfg;
    cfg.cap = 100;
    const auto sel = select_samples(records, model, cfg);
    CHECK(sel.records.size() == 100);
    CHECK(sel.manifest.quotas == std::vector<std::size_t>{50, 30, 18, 2});
    CHECK(sel.manifest.selected == 100);
    CHECK(sel.manifest.total == 500);

    std::map<std::size_t, std::size_t> per_cluster;
    std::map<std::uint64_t, std::size_t> index_of;
    for (std::size_t i = 0; i < records.size(); ++i) index_of[records[i].id] = i;
    std::set<std::uint64_t> ids;
    for (const auto& r : sel.records) {
        CHECK_FALSE(r.label.is_anomaly());
        ++per_cluster[model.assignments[index_of.at(r.id)]];
        ids.insert(r.id);
    }
    CHECK(ids.size() == sel.records.size());
    CHECK(per_cluster.size() == 4);
    for (std::size_t i = 1; i < sel.records.size(); ++i) CHECK(sel.records[i - 1].id < sel.records[i].id);

    const auto again = select_samples(records, model, cfg);
    REQUIRE(again.records.size() == sel.records.size());
    for (std::size_t i = 0; i < sel.records.size(); ++i) CHECK(again.records[i].id == sel.records[i].id);
    CHECK(again.manifest.to_json() == sel.manifest.to_json());
}

TEST_CASE("a corpus smaller than the cap is kept whole") {
    const auto records = normal_records(40);
    SamplerConfig cfg;
    cfg.cap = 100;
    const auto sel = select_samples(records, block_model({30, 10}), cfg);
    CHECK(sel.records.size() == 40);
}

TEST_CASE("selection errors") {
    auto records = normal_records(10);
    SamplerConfig cfg;
    CHECK(code_of([&] { select_samples(records, block_model({5, 4}), cfg); }) == Errc::LengthMismatch);
    records[3].label = Label::anomaly("KERNDTLB");
    CHECK(code_of([&] { select_samples(records, block_model({5, 5}), cfg); }) == Errc::NonNormalRecord);
}

TEST_CASE("embedding vectors cluster through the span overload") {
    HashedNgramEmbedder e;
    std::vector<EmbeddingVector> vs;
    for (const char* t : {"disk full on node a", "disk full on node b", "link up eth0", "link up eth1"}) {
        vs.push_back(e.embed(t));
    }
    SamplerConfig cfg;
    cfg.k = 2;
    const auto m = kmeans(std::span<const EmbeddingVector>(vs), cfg);
    CHECK(m.assignments[0] == m.assignments[1]);
    CHECK(m.assignments[2] == m.assignments[3]);
    CHECK(m.assignments[0] != m.assignments[2]);
}

} // TEST_SUITE
