#include "logcog/log_ingest.hpp"

#include "logcog/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>

namespace logcog {

namespace {

constexpr const char* kModule = "log_ingest";

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f';
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && is_space(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

ParsedLine parse_alert_field_line(std::string_view line) {
    std::size_t end = 0;
    while (end < line.size() && !is_space(line[end])) {
        ++end;
    }
    std::string_view token = line.substr(0, end);
    std::string_view rest = trim(line.substr(end));
    if (rest.empty()) {
        throw Error(Errc::MissingContent, kModule,
                    "no content after label token '" + std::string(token) + "'");
    }
    Label label = token == "-" ? Label::normal() : Label::anomaly(std::string(token));
    return ParsedLine{std::move(label), std::string(rest)};
}

ParsedLine parse_generic_line(std::string_view line) {
    auto tab = line.find('\t');
    std::string tag = lower(trim(line.substr(0, tab)));
    if (tag != "normal" && tag != "anomaly") {
        throw Error(Errc::MalformedLine, kModule, "generic label must be 'normal' or 'anomaly', got '" + tag + "'");
    }
    std::string_view rest = tab == std::string_view::npos ? std::string_view{} : trim(line.substr(tab + 1));
    if (rest.empty()) {
        throw Error(Errc::MissingContent, kModule, "no content after generic label");
    }
    Label label = tag == "normal" ? Label::normal() : Label::anomaly("anomaly");
    return ParsedLine{std::move(label), std::string(rest)};
}

} // namespace

Label Label::anomaly(std::string alert_tag) {
    if (alert_tag.empty()) {
        alert_tag = "anomaly";
    }
    return Label{Variant::Anomaly, std::move(alert_tag)};
}

std::string_view format_name(DatasetFormat format) noexcept {
    switch (format) {
    case DatasetFormat::Bgl: return "bgl";
    case DatasetFormat::Thunderbird: return "thunderbird";
    case DatasetFormat::Generic: return "generic";
    }
    return "generic";
}

DatasetFormat parse_format(std::string_view name) {
    const std::string n = lower(name);
    if (n == "bgl") return DatasetFormat::Bgl;
    if (n == "thunderbird") return DatasetFormat::Thunderbird;
    if (n == "generic") return DatasetFormat::Generic;
    throw Error(Errc::InvalidConfig, kModule, "unknown dataset format '" + std::string(name) + "'");
}

ParsedLine parse_line(std::string_view line, DatasetFormat format) {
    std::string_view body = line;
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) {
        body.remove_suffix(1);
    }
    if (trim(body).empty()) {
        throw Error(Errc::EmptyLine, kModule, "empty line");
    }
    if (format == DatasetFormat::Generic) {
        return parse_generic_line(body);
    }
    while (!body.empty() && is_space(body.front())) {
        body.remove_prefix(1);
    }
    return parse_alert_field_line(body);
}

std::string normalize(std::string_view content, bool mask_numerics) {
    std::string out;
    out.reserve(content.size());
    bool pending_space = false;
    std::size_t i = 0;
    while (i < content.size()) {
        const char c = content[i];
        if (is_space(c)) {
            pending_space = !out.empty();
            ++i;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        if (mask_numerics && std::isdigit(static_cast<unsigned char>(c))) {
            while (i < content.size() && std::isdigit(static_cast<unsigned char>(content[i]))) {
                ++i;
            }
            out += "<NUM>";
            continue;
        }
        out.push_back(c);
        ++i;
    }
    return out;
}

std::string LoadSummary::to_json() const {
    nlohmann::json j = {
        {"records", records}, {"skipped", skipped}, {"anomalies", anomalies}, {"lines_read", lines_read}};
    return j.dump();
}

DatasetReader::DatasetReader(DatasetSpec spec) : spec_(std::move(spec)) {
    if (spec_.limit && *spec_.limit == 0) {
        throw Error(Errc::InvalidConfig, kModule, "dataset limit must be >= 1");
    }
    std::error_code ec;
    if (!std::filesystem::is_regular_file(spec_.path, ec)) {
        throw Error(Errc::FileNotFound, kModule, "dataset not found: " + spec_.path.string());
    }
    in_.open(spec_.path, std::ios::binary);
    if (!in_) {
        throw Error(Errc::IoFailure, kModule, "cannot open dataset: " + spec_.path.string());
    }
    source_ = spec_.name.empty() ? spec_.path.stem().string() : spec_.name;
}

std::optional<LogRecord> DatasetReader::next() {
    if (spec_.limit && summary_.records >= *spec_.limit) {
        return std::nullopt;
    }
    std::string line;
    while (std::getline(in_, line)) {
        ++summary_.lines_read;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        ParsedLine parsed{Label::normal(), {}};
        try {
            parsed = parse_line(line, spec_.format);
        } catch (const Error&) {
            ++summary_.skipped;
            continue;
        }
        if (spec_.normalize) {
            parsed.content = normalize(parsed.content, spec_.mask_numerics);
        }
        LogRecord record;
        record.id = summary_.records;
        record.raw = std::move(line);
        record.content = std::move(parsed.content);
        record.label = std::move(parsed.label);
        record.source = source_;
        ++summary_.records;
        if (record.label.is_anomaly()) {
            ++summary_.anomalies;
        }
        return record;
    }
    if (in_.bad()) {
        throw Error(Errc::IoFailure, kModule, "read error on " + spec_.path.string());
    }
    return std::nullopt;
}

LoadedDataset load_dataset(const DatasetSpec& spec) {
    DatasetReader reader(spec);
    LoadedDataset out;
    while (auto record = reader.next()) {
        out.records.push_back(std::move(*record));
    }
    out.summary = reader.summary();
    if (out.records.empty() && out.summary.lines_read > 0) {
        throw Error(Errc::AllLinesUnparseable, kModule,
                    "no parseable lines in " + spec.path.string() + " (" +
                        std::to_string(out.summary.skipped) + " skipped)");
    }
    return out;
}

} // namespace logcog
