#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace apf {

using Timestamp = std::int64_t;  // UTC seconds since the epoch
using Seconds = std::int64_t;

/// One client association session on an AP.
struct AssociationRecord {
    std::string ap_id;
    std::string client_id;
    Timestamp start_time = 0;
    Timestamp end_time = 0;
    std::uint64_t bytes_up = 0;
    std::uint64_t bytes_down = 0;

    std::uint64_t total_bytes() const { return bytes_up + bytes_down; }
    bool operator==(const AssociationRecord&) const = default;
};

/// Column names for the six required fields of an association CSV.
struct ColumnMap {
    std::string ap_id = "ap_id";
    std::string client_id = "client_id";
    std::string start_time = "start_time";
    std::string end_time = "end_time";
    std::string bytes_up = "bytes_up";
    std::string bytes_down = "bytes_down";
};

struct RowError {
    std::size_t line = 0;
    std::string message;
};

struct ParseResult {
    std::vector<AssociationRecord> records;
    std::vector<RowError> errors;
};

/// Parse an epoch-seconds integer or an ISO-8601 date-time
/// ("2019-03-04T10:15:00Z", optional fractional seconds, "+hh:mm" offsets,
/// space separator accepted). Returns nullopt when unparseable.
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// Parse association records from CSV with a header row. Malformed rows are
/// skipped and reported in ParseResult::errors; a missing required column
/// throws ConfigError.
ParseResult parse_records(std::istream& source, const ColumnMap& schema = {});

/// Per-AP load and active-user series on a fixed window grid.
struct LoadSeries {
    std::string ap_id;
    Timestamp origin = 0;
    Seconds step_w = 0;
    std::vector<double> load;          // bytes per window (up + down)
    std::vector<double> active_users;  // distinct clients overlapping each window
    // Populated only when DeriveOptions::separate_channels is set.
    std::vector<double> uplink;
    std::vector<double> downlink;

    std::size_t size() const { return load.size(); }
    Timestamp window_start(std::size_t i) const { return origin + static_cast<Timestamp>(i) * step_w; }
    bool operator==(const LoadSeries&) const = default;
};

struct DeriveOptions {
    Seconds step_w = 600;
    Timestamp span_begin = 0;  // inclusive
    Timestamp span_end = 0;    // exclusive
    bool separate_channels = false;
};

/// Incremental equal-spreading aggregator. Records can be added in any number
/// of batches and builders can be merged; finish() gives the same series as a
/// single pass over the union of records (load up to summation order).
class LoadBuilder {
public:
    explicit LoadBuilder(DeriveOptions options);

    void add(const AssociationRecord& record);
    void add(const std::vector<AssociationRecord>& records);
    void merge(const LoadBuilder& other);

    /// One series per distinct AP, sorted by ap_id, all sharing origin, step and N.
    std::vector<LoadSeries> finish() const;

    std::size_t window_count() const { return windows_; }
    const DeriveOptions& options() const { return options_; }

private:
    struct ApAccumulator {
        std::vector<double> up;
        std::vector<double> down;
        // (window, client) presence pairs; deduplicated in finish()
        std::vector<std::pair<std::uint32_t, std::uint32_t>> presence;
    };
    ApAccumulator& accumulator(const std::string& ap_id);
    std::uint32_t client_index(const std::string& client_id);

    DeriveOptions options_;
    std::size_t windows_ = 0;
    std::map<std::string, ApAccumulator> aps_;
    std::unordered_map<std::string, std::uint32_t> client_ids_;
    std::vector<std::string> client_names_;
};

/// Equal-spreading derivation: each record's bytes (prorated to the part of
/// [start, end) inside the span) are divided equally among the windows the
/// clipped interval intersects; every intersected window counts the client once.
std::vector<LoadSeries> derive_load_series(const std::vector<AssociationRecord>& records,
                                           const DeriveOptions& options);

struct IngestSummary {
    std::size_t ap_count = 0;
    std::size_t record_count = 0;
    std::size_t span_days = 0;
    std::size_t window_count = 0;
    Seconds step_w = 0;
    bool operator==(const IngestSummary&) const = default;
};

IngestSummary summarize(const std::vector<AssociationRecord>& records,
                        const std::vector<LoadSeries>& series);

/// Smallest [t0, t1) grid-aligned to step_w that covers every record.
std::pair<Timestamp, Timestamp> covering_span(const std::vector<AssociationRecord>& records,
                                              Seconds step_w);

}  // namespace apf
