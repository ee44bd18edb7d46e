#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace logcog {

enum class DatasetFormat { Bgl, Thunderbird, Generic };

std::string_view format_name(DatasetFormat format) noexcept;
/// Accepts "bgl", "thunderbird", "generic" (case-insensitive).
DatasetFormat parse_format(std::string_view name);

/// Ground truth for one log line. An alert tag is carried only by anomalies.
class Label {
public:
    enum class Variant { Normal, Anomaly };

    static Label normal() { return Label{Variant::Normal, std::nullopt}; }
    static Label anomaly(std::string alert_tag);

    Variant variant() const noexcept { return variant_; }
    bool is_anomaly() const noexcept { return variant_ == Variant::Anomaly; }
    const std::optional<std::string>& alert_tag() const noexcept { return alert_tag_; }

    bool operator==(const Label&) const = default;

private:
    Label(Variant v, std::optional<std::string> tag) : variant_(v), alert_tag_(std::move(tag)) {}

    Variant variant_;
    std::optional<std::string> alert_tag_;
};

struct LogRecord {
    std::uint64_t id = 0;
    std::string raw;
    std::string content;
    Label label = Label::normal();
    std::string source;
};

struct ParsedLine {
    Label label;
    std::string content;
};

/// Splits one line into its label token and message content.
///
/// BGL and Thunderbird: the first whitespace-delimited token is the alert
/// field; "-" marks a non-alert (normal) line, anything else is the alert
/// category of an anomalous line. Generic: "normal<TAB>message" or
/// "anomaly<TAB>message".
///
/// Throws Error{EmptyLine} for whitespace-only input, Error{MissingContent}
/// when nothing follows the label, Error{MalformedLine} for a Generic line
/// without a recognised label.
ParsedLine parse_line(std::string_view line, DatasetFormat format);

/// Collapses whitespace runs to one space and trims. With `mask_numerics`,
/// every maximal run of ASCII digits becomes "<NUM>".
std::string normalize(std::string_view content, bool mask_numerics = false);

struct DatasetSpec {
    std::filesystem::path path;
    DatasetFormat format = DatasetFormat::Bgl;
    std::optional<std::size_t> limit;
    bool normalize = false;
    bool mask_numerics = false;
    /// Source identifier stamped on every record; defaults to the file stem.
    std::string name;
};

struct LoadSummary {
    std::size_t records = 0;
    std::size_t skipped = 0;
    std::size_t anomalies = 0;
    std::size_t lines_read = 0;

    std::string to_json() const;
};

/// Sequential reader producing records in file order. Unparseable lines are
/// skipped and counted.
class DatasetReader {
public:
    explicit DatasetReader(DatasetSpec spec);

    std::optional<LogRecord> next();
    const LoadSummary& summary() const noexcept { return summary_; }

private:
    DatasetSpec spec_;
    std::ifstream in_;
    LoadSummary summary_;
    std::string source_;
};

struct LoadedDataset {
    std::vector<LogRecord> records;
    LoadSummary summary;
};

/// Reads a whole dataset. Throws Error{AllLinesUnparseable} when a file with
/// content yields no records.
LoadedDataset load_dataset(const DatasetSpec& spec);

} // namespace logcog
