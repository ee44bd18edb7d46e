#include "logcog/error.hpp"
#include "logcog/log_ingest.hpp"
#include "synthetic_corpus.hpp"

#include <doctest.h>

#include <random>

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

} // namespace

TEST_SUITE("log_ingest") {

TEST_CASE("a dash alert field marks a normal BGL line") {
    const auto parsed = parse_line(
        "- 1117838570 2005.06.03 R02-M1-N0-C:J12-U11 2005-06-03-15.42.50.675872 R02-M1-N0-C:J12-U11 RAS KERNEL "
        "INFO instruction cache parity error corrected",
        DatasetFormat::Bgl);
    CHECK(parsed.label == Label::normal());
    CHECK_FALSE(parsed.label.alert_tag().has_value());
    CHECK(parsed.content ==
          "1117838570 2005.06.03 R02-M1-N0-C:J12-U11 2005-06-03-15.42.50.675872 R02-M1-N0-C:J12-U11 RAS KERNEL INFO "
          "instruction cache parity error corrected");
}

TEST_CASE("any other alert field is an anomaly carrying that tag") {
    const auto parsed = parse_line(
        "KERNDTLB 1117869872 2005.06.04 R23-M0-N3-C:J05-U01 2005-06-04-00.24.32.432192 R23-M0-N3-C:J05-U01 RAS "
        "KERNEL FATAL data TLB error interrupt",
        DatasetFormat::Bgl);
    CHECK(parsed.label.is_anomaly());
    REQUIRE(parsed.label.alert_tag().has_value());
    CHECK(*parsed.label.alert_tag() == "KERNDTLB");
    CHECK(parsed.content.ends_with("data TLB error interrupt"));
}

TEST_CASE("thunderbird lines follow the same alert-field grammar") {
    const auto normal = parse_line("- 1131566461 2005.11.09 dn228 Nov 9 12:01:01 dn228/dn228 crond(pam_unix)[2915]: "
                                   "session closed for user root",
                                   DatasetFormat::Thunderbird);
    CHECK_FALSE(normal.label.is_anomaly());
    const auto alert = parse_line("VAPI 1131567007 2005.11.09 tbird-admin1 Nov 10 00:10:07 local@tbird-admin1 "
                                  "kernel: [KERNEL_IB][ib_mad_dispatch] MAD failed",
                                  DatasetFormat::Thunderbird);
    CHECK(*alert.label.alert_tag() == "VAPI");
}

TEST_CASE("parse errors") {
    CHECK(code_of([] { parse_line("   ", DatasetFormat::Bgl); }) == Errc::EmptyLine);
    CHECK(code_of([] { parse_line("", DatasetFormat::Bgl); }) == Errc::EmptyLine);
    CHECK(code_of([] { parse_line("KERNDTLB", DatasetFormat::Bgl); }) == Errc::MissingContent);
    CHECK(code_of([] { parse_line("-   \t", DatasetFormat::Bgl); }) == Errc::MissingContent);
    CHECK(code_of([] { parse_line("weird\tmessage", DatasetFormat::Generic); }) == Errc::MalformedLine);
    CHECK(code_of([] { parse_line("normal\t  ", DatasetFormat::Generic); }) == Errc::MissingContent);
}

TEST_CASE("generic format") {
    const auto n = parse_line("normal\tservice started", DatasetFormat::Generic);
    CHECK_FALSE(n.label.is_anomaly());
    CHECK(n.content == "service started");
    const auto a = parse_line("Anomaly\tdisk failure on sda", DatasetFormat::Generic);
    CHECK(a.label.is_anomaly());
    CHECK(*a.label.alert_tag() == "anomaly");
}

TEST_CASE("label partition holds for arbitrary first tokens") {
    std::mt19937_64 rng(11);
    const std::string alphabet = "-ABKZ09_";
    for (int i = 0; i < 500; ++i) {
        std::string token;
        const auto len = 1 + rng() % 4;
        for (std::size_t j = 0; j < len; ++j) token += alphabet[rng() % alphabet.size()];
        const auto parsed = parse_line(token + " message body", DatasetFormat::Bgl);
        CHECK(parsed.label.is_anomaly() == (token != "-"));
        CHECK(parsed.label.alert_tag().has_value() == parsed.label.is_anomaly());
    }
}

TEST_CASE("normalize") {
    CHECK(normalize("a   b\tc") == "a b c");
    CHECK(normalize("core 12 error 404", true) == "core <NUM> error <NUM>");
    CHECK(normalize("core 12 error 404", false) == "core 12 error 404");
    CHECK(normalize("") == "");
    CHECK(normalize("  \t ") == "");
    CHECK(normalize("0x1f2e at 0", true) == "<NUM>x<NUM>f<NUM>e at <NUM>");
}

TEST_CASE("normalize is idempotent") {
    std::mt19937_64 rng(5);
    const std::string alphabet = "ab 1\t23 x\n<>NUM";
    for (int i = 0; i < 300; ++i) {
        std::string s;
        const auto len = rng() % 40;
        for (std::size_t j = 0; j < len; ++j) s += alphabet[rng() % alphabet.size()];
        for (bool mask : {false, true}) {
            const auto once = normalize(s, mask);
            CHECK(normalize(once, mask) == once);
        }
    }
}

TEST_CASE("load_dataset honours the limit") {
    const auto dir = testing::scratch_dir("ingest_limit");
    testing::write_lines(dir / "ten.log", testing::make_bgl_corpus(8, 2, 3));
    DatasetSpec spec{dir / "ten.log", DatasetFormat::Bgl, 3};
    const auto loaded = load_dataset(spec);
    REQUIRE(loaded.records.size() == 3);
    CHECK(loaded.records[0].id == 0);
    CHECK(loaded.records[1].id == 1);
    CHECK(loaded.records[2].id == 2);
    CHECK(loaded.records[0].source == "ten");
}

TEST_CASE("load_dataset skips and counts blank lines") {
    const auto dir = testing::scratch_dir("ingest_skip");
    auto lines = testing::make_bgl_corpus(4, 1, 9);
    lines.insert(lines.begin() + 2, "");
    lines.push_back("   ");
    testing::write_lines(dir / "gaps.log", lines);
    const auto loaded = load_dataset(DatasetSpec{dir / "gaps.log", DatasetFormat::Bgl});
    CHECK(loaded.records.size() == 5);
    CHECK(loaded.summary.skipped == 2);
    CHECK(loaded.summary.anomalies == 1);
    for (std::size_t i = 1; i < loaded.records.size(); ++i) {
        CHECK(loaded.records[i].id > loaded.records[i - 1].id);
    }
    CHECK(loaded.summary.to_json().find("\"skipped\":2") != std::string::npos);
}

TEST_CASE("load_dataset errors") {
    CHECK(code_of([] { load_dataset(DatasetSpec{"/nonexistent/bgl.log", DatasetFormat::Bgl}); }) ==
          Errc::FileNotFound);
    const auto dir = testing::scratch_dir("ingest_bad");
    testing::write_lines(dir / "bad.log", {"", "  ", "garbage-without-tab"});
    CHECK(code_of([&] { load_dataset(DatasetSpec{dir / "bad.log", DatasetFormat::Generic}); }) ==
          Errc::AllLinesUnparseable);
    testing::write_lines(dir / "empty.log", {});
    CHECK(load_dataset(DatasetSpec{dir / "empty.log", DatasetFormat::Bgl}).records.empty());
}

TEST_CASE("normalization is applied while loading when enabled") {
    const auto dir = testing::scratch_dir("ingest_norm");
    testing::write_lines(dir / "g.log", {"normal\tcore   12  done", "anomaly\tpanic at 0"});
    DatasetSpec spec{dir / "g.log", DatasetFormat::Generic};
    spec.normalize = true;
    spec.mask_numerics = true;
    const auto loaded = load_dataset(spec);
    CHECK(loaded.records[0].content == "core <NUM> done");
    CHECK(loaded.records[1].content == "panic at <NUM>");
    CHECK(loaded.records[0].raw == "normal\tcore   12  done");
}

} // TEST_SUITE
