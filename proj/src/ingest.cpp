#include "apf/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>

#include "apf/core.hpp"
#include "apf/csv.hpp"

namespace apf {

namespace {

bool parse_fixed(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    const char* b = s.data() + pos;
    auto res = std::from_chars(b, b + len, out);
    return res.ec == std::errc{} && res.ptr == b + len;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

Timestamp floor_div(Timestamp a, Timestamp b) {
    Timestamp q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text) {
    text = trim(text);
    if (text.empty()) return std::nullopt;

    // Plain epoch seconds (possibly with a fractional part, truncated).
    {
        long long value = 0;
        auto res = std::from_chars(text.data(), text.data() + text.size(), value);
        if (res.ec == std::errc{}) {
            if (res.ptr == text.data() + text.size()) return value;
            if (*res.ptr == '.') {
                const char* p = res.ptr + 1;
                const char* end = text.data() + text.size();
                if (p != end && std::all_of(p, end, [](char c) { return c >= '0' && c <= '9'; }))
                    return value;
            }
        }
    }

    // YYYY-MM-DD[T| ]hh:mm[:ss[.fff]][Z|±hh[:mm]]
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    if (!parse_fixed(text, 0, 4, y) || !parse_fixed(text, 5, 2, mo) || !parse_fixed(text, 8, 2, d))
        return std::nullopt;
    std::size_t pos = 10;
    if (pos < text.size()) {
        if (text[pos] != 'T' && text[pos] != ' ') return std::nullopt;
        ++pos;
        if (!parse_fixed(text, pos, 2, h) || pos + 2 >= text.size() || text[pos + 2] != ':' ||
            !parse_fixed(text, pos + 3, 2, mi))
            return std::nullopt;
        pos += 5;
        if (pos < text.size() && text[pos] == ':') {
            if (!parse_fixed(text, pos + 1, 2, sec)) return std::nullopt;
            pos += 3;
            if (pos < text.size() && text[pos] == '.') {
                ++pos;
                while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
            }
        }
    }
    Timestamp offset = 0;
    if (pos < text.size()) {
        const char c = text[pos];
        if (c == 'Z' && pos + 1 == text.size()) {
            pos += 1;
        } else if (c == '+' || c == '-') {
            int oh = 0, om = 0;
            if (!parse_fixed(text, pos + 1, 2, oh)) return std::nullopt;
            std::size_t p = pos + 3;
            if (p < text.size() && text[p] == ':') ++p;
            if (p < text.size()) {
                if (!parse_fixed(text, p, 2, om) || p + 2 != text.size()) return std::nullopt;
            }
            offset = (c == '+' ? 1 : -1) * (oh * 3600 + om * 60);
        } else {
            return std::nullopt;
        }
    }

    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) return std::nullopt;
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<Timestamp>(days) * 86400 + h * 3600 + mi * 60 + sec - offset;
}

ParseResult parse_records(std::istream& source, const ColumnMap& schema) {
    const csv::Table table = csv::read(source);
    ParseResult result;
    if (table.header.empty()) return result;

    const std::size_t c_ap = table.require(schema.ap_id);
    const std::size_t c_client = table.require(schema.client_id);
    const std::size_t c_start = table.require(schema.start_time);
    const std::size_t c_end = table.require(schema.end_time);
    const std::size_t c_up = table.require(schema.bytes_up);
    const std::size_t c_down = table.require(schema.bytes_down);
    const std::size_t needed = std::max({c_ap, c_client, c_start, c_end, c_up, c_down}) + 1;

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::size_t line = table.line_numbers[r];
        auto fail = [&](std::string msg) { result.errors.push_back({line, std::move(msg)}); };
        if (row.size() < needed) {
            fail("expected at least " + std::to_string(needed) + " fields, got " + std::to_string(row.size()));
            continue;
        }
        AssociationRecord rec;
        rec.ap_id = std::string(trim(row[c_ap]));
        rec.client_id = std::string(trim(row[c_client]));
        if (rec.ap_id.empty()) {
            fail("empty ap_id");
            continue;
        }
        const auto start = parse_timestamp(row[c_start]);
        const auto end = parse_timestamp(row[c_end]);
        if (!start || !end) {
            fail("unparseable timestamp");
            continue;
        }
        rec.start_time = *start;
        rec.end_time = *end;
        if (rec.end_time < rec.start_time) {
            fail("end_time precedes start_time");
            continue;
        }
        try {
            const long long up = csv::parse_int(row[c_up]);
            const long long down = csv::parse_int(row[c_down]);
            if (up < 0 || down < 0) {
                fail("negative byte count");
                continue;
            }
            rec.bytes_up = static_cast<std::uint64_t>(up);
            rec.bytes_down = static_cast<std::uint64_t>(down);
        } catch (const InvalidInput& e) {
            fail(e.what());
            continue;
        }
        result.records.push_back(std::move(rec));
    }
    return result;
}

LoadBuilder::LoadBuilder(DeriveOptions options) : options_(options) {
    if (options_.step_w <= 0) throw InvalidInput("step_w must be positive");
    if (options_.span_end <= options_.span_begin) throw InvalidInput("span must be non-empty");
    const Timestamp span = options_.span_end - options_.span_begin;
    windows_ = static_cast<std::size_t>((span + options_.step_w - 1) / options_.step_w);
}

LoadBuilder::ApAccumulator& LoadBuilder::accumulator(const std::string& ap_id) {
    auto [it, inserted] = aps_.try_emplace(ap_id);
    if (inserted) {
        it->second.up.assign(windows_, 0.0);
        it->second.down.assign(windows_, 0.0);
    }
    return it->second;
}

std::uint32_t LoadBuilder::client_index(const std::string& client_id) {
    auto [it, inserted] = client_ids_.try_emplace(client_id, static_cast<std::uint32_t>(client_names_.size()));
    if (inserted) client_names_.push_back(client_id);
    return it->second;
}

void LoadBuilder::add(const AssociationRecord& record) {
    if (record.end_time < record.start_time) throw InvalidInput("record end_time precedes start_time");
    const Timestamp t0 = options_.span_begin;
    const Timestamp t1 = options_.span_end;
    const Seconds w = options_.step_w;

    std::size_t first = 0;
    std::size_t last = 0;  // inclusive
    double fraction = 1.0;
    if (record.end_time == record.start_time) {
        if (record.start_time < t0 || record.start_time >= t1) return;
        first = last = static_cast<std::size_t>(floor_div(record.start_time - t0, w));
    } else {
        const Timestamp a = std::max(record.start_time, t0);
        const Timestamp b = std::min(record.end_time, t1);
        if (b <= a) return;
        fraction = static_cast<double>(b - a) / static_cast<double>(record.end_time - record.start_time);
        first = static_cast<std::size_t>(floor_div(a - t0, w));
        last = static_cast<std::size_t>(floor_div(b - t0 + w - 1, w)) - 1;
    }
    last = std::min(last, windows_ - 1);

    const double steps = static_cast<double>(last - first + 1);
    const double up_share = static_cast<double>(record.bytes_up) * fraction / steps;
    const double down_share = static_cast<double>(record.bytes_down) * fraction / steps;
    const std::uint32_t client = client_index(record.client_id);
    ApAccumulator& acc = accumulator(record.ap_id);
    for (std::size_t i = first; i <= last; ++i) {
        acc.up[i] += up_share;
        acc.down[i] += down_share;
        acc.presence.emplace_back(static_cast<std::uint32_t>(i), client);
    }
}

void LoadBuilder::add(const std::vector<AssociationRecord>& records) {
    for (const auto& r : records) add(r);
}

void LoadBuilder::merge(const LoadBuilder& other) {
    if (other.options_.step_w != options_.step_w || other.options_.span_begin != options_.span_begin ||
        other.options_.span_end != options_.span_end)
        throw InvalidInput("cannot merge builders with different window grids");
    for (const auto& [ap, src] : other.aps_) {
        ApAccumulator& dst = accumulator(ap);
        for (std::size_t i = 0; i < windows_; ++i) {
            dst.up[i] += src.up[i];
            dst.down[i] += src.down[i];
        }
        for (const auto& [window, client] : src.presence)
            dst.presence.emplace_back(window, client_index(other.client_names_[client]));
    }
}

std::vector<LoadSeries> LoadBuilder::finish() const {
    std::vector<LoadSeries> out;
    out.reserve(aps_.size());
    for (const auto& [ap, acc] : aps_) {
        LoadSeries s;
        s.ap_id = ap;
        s.origin = options_.span_begin;
        s.step_w = options_.step_w;
        s.load.resize(windows_);
        for (std::size_t i = 0; i < windows_; ++i) s.load[i] = acc.up[i] + acc.down[i];
        if (options_.separate_channels) {
            s.uplink = acc.up;
            s.downlink = acc.down;
        }
        auto presence = acc.presence;
        std::sort(presence.begin(), presence.end());
        presence.erase(std::unique(presence.begin(), presence.end()), presence.end());
        s.active_users.assign(windows_, 0.0);
        for (const auto& p : presence) s.active_users[p.first] += 1.0;
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<LoadSeries> derive_load_series(const std::vector<AssociationRecord>& records,
                                           const DeriveOptions& options) {
    LoadBuilder builder(options);
    builder.add(records);
    return builder.finish();
}

IngestSummary summarize(const std::vector<AssociationRecord>& records, const std::vector<LoadSeries>& series) {
    IngestSummary s;
    s.record_count = records.size();
    s.ap_count = series.size();
    if (!series.empty()) {
        s.window_count = series.front().size();
        s.step_w = series.front().step_w;
        const auto seconds = static_cast<std::int64_t>(s.window_count) * s.step_w;
        s.span_days = static_cast<std::size_t>((seconds + 86399) / 86400);
    }
    return s;
}

std::pair<Timestamp, Timestamp> covering_span(const std::vector<AssociationRecord>& records, Seconds step_w) {
    if (step_w <= 0) throw InvalidInput("step_w must be positive");
    if (records.empty()) return {0, 0};
    Timestamp lo = records.front().start_time;
    Timestamp hi = lo + 1;
    for (const auto& r : records) {
        lo = std::min(lo, r.start_time);
        // exclusive end; a zero-length session still needs its start covered
        hi = std::max(hi, r.end_time > r.start_time ? r.end_time : r.start_time + 1);
    }
    const Timestamp t0 = floor_div(lo, step_w) * step_w;
    const Timestamp t1 = floor_div(hi + step_w - 1, step_w) * step_w;
    return {t0, t1};
}

}  // namespace apf
