#include "synthetic_corpus.hpp"

#include "logcog/random.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>

namespace logcog::testing {

namespace {

struct Template {
    const char* tag;
    const char* body;   // %d placeholders are filled with small integers
};

constexpr std::array<Template, 8> kNormal{{
    {"-", "RAS KERNEL INFO instruction cache parity error corrected"},
    {"-", "RAS KERNEL INFO generating core.%d"},
    {"-", "RAS KERNEL INFO %d double-hummer alignment exceptions"},
    {"-", "RAS KERNEL INFO CE sym %d, at 0x%d, mask 0x%d"},
    {"-", "RAS APP INFO ciod: generated %d core files for program /bgl/apps/run%d"},
    {"-", "RAS KERNEL INFO total of %d ddr error(s) detected and corrected"},
    {"-", "RAS KERNEL INFO shutdown complete"},
    {"-", "RAS MMCS INFO idoproxydb has been started: Name: DB2 Version %d"},
}};

constexpr std::array<Template, 5> kAnomalous{{
    {"KERNDTLB", "RAS KERNEL FATAL data TLB error interrupt"},
    {"KERNSTOR", "RAS KERNEL FATAL data storage interrupt"},
    {"APPREAD", "RAS APP FATAL ciod: failed to read message prefix on control stream (CioStream socket to 172.16.%d.%d:%d"},
    {"KERNMNTF", "RAS KERNEL FATAL Lustre mount FAILED : bglio%d : block_id : location"},
    {"KERNRTSP", "RAS KERNEL FATAL rts panic! - stopping execution"},
}};

std::string fill(const char* body, std::mt19937_64& rng) {
    std::string out;
    for (const char* p = body; *p; ++p) {
        if (p[0] == '%' && p[1] == 'd') {
            out += std::to_string(uniform_below(rng, 4096));
            ++p;
        } else {
            out += *p;
        }
    }
    return out;
}

std::string line(const Template& t, std::mt19937_64& rng, std::size_t ordinal) {
    const auto rack = uniform_below(rng, 8);
    const auto card = uniform_below(rng, 16);
    const std::string node =
        "R0" + std::to_string(rack) + "-M" + std::to_string(card % 2) + "-N" + std::to_string(card % 8) + "-C:J12-U11";
    const auto ts = 1117838570ULL + ordinal * 7;
    return std::string(t.tag) + " " + std::to_string(ts) + " 2005.06.03 " + node + " " + node + " " + fill(t.body, rng);
}

} // namespace

std::vector<std::string> make_bgl_corpus(std::size_t normals, std::size_t anomalies, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<bool> is_anomaly(normals + anomalies, false);
    std::fill(is_anomaly.begin() + static_cast<std::ptrdiff_t>(normals), is_anomaly.end(), true);
    for (std::size_t i = is_anomaly.size(); i > 1; --i) {
        const auto j = uniform_below(rng, i);
        const bool tmp = is_anomaly[i - 1];
        is_anomaly[i - 1] = is_anomaly[j];
        is_anomaly[j] = tmp;
    }
    std::vector<std::string> lines;
    lines.reserve(is_anomaly.size());
    for (std::size_t i = 0; i < is_anomaly.size(); ++i) {
        const Template& t = is_anomaly[i] ? kAnomalous[uniform_below(rng, kAnomalous.size())]
                                          : kNormal[uniform_below(rng, kNormal.size())];
        lines.push_back(line(t, rng, i));
    }
    return lines;
}

std::vector<std::vector<double>> make_blobs(std::size_t centers, std::size_t per_blob, std::size_t dim,
                                            double spread, std::uint64_t seed, std::vector<std::size_t>& truth) {
    std::mt19937_64 rng(seed);
    std::vector<std::vector<double>> means(centers, std::vector<double>(dim, 0.0));
    for (std::size_t c = 0; c < centers; ++c) means[c][c % dim] = 10.0 * static_cast<double>(c / dim + 1);
    std::vector<std::vector<double>> points;
    truth.clear();
    for (std::size_t c = 0; c < centers; ++c) {
        for (std::size_t i = 0; i < per_blob; ++i) {
            std::vector<double> p(dim);
            for (std::size_t d = 0; d < dim; ++d) p[d] = means[c][d] + spread * (2.0 * uniform_unit(rng) - 1.0);
            points.push_back(std::move(p));
            truth.push_back(c);
        }
    }
    return points;
}

double adjusted_rand_index(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("label length mismatch");
    std::map<std::pair<std::size_t, std::size_t>, double> joint;
    std::map<std::size_t, double> ra, rb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1;
        ra[a[i]] += 1;
        rb[b[i]] += 1;
    }
    const auto c2 = [](double x) { return x * (x - 1) / 2; };
    double index = 0, sa = 0, sb = 0;
    for (const auto& [k, v] : joint) index += c2(v);
    for (const auto& [k, v] : ra) sa += c2(v);
    for (const auto& [k, v] : rb) sb += c2(v);
    const double expected = sa * sb / c2(static_cast<double>(a.size()));
    const double max_index = (sa + sb) / 2;
    if (max_index == expected) return 1.0;
    return (index - expected) / (max_index - expected);
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    for (const auto& l : lines) out << l << '\n';
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("logcog_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace logcog::testing
