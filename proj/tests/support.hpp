#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "apf/config.hpp"
#include "apf/eval.hpp"
#include "apf/ingest.hpp"

namespace apf::fixtures {

// Reference per-cluster KPI values (clusters C0..C4), normalised MAE.
inline constexpr double kGm10[5] = {0.009, 0.0028, 0.00085, 0.00327, 0.00064};
inline constexpr double kGm60[5] = {0.018, 0.010, 0.0039, 0.0073, 0.00043};
inline constexpr double kLk10[5] = {0.0050, 0.0021, 0.0008, 0.0013, 0.0003};
inline constexpr double kLk60[5] = {0.014, 0.006, 0.004, 0.0044, 0.00044};
inline constexpr double kP99_10[5] = {0.05, 0.036, 0.005, 0.018, 0.01};
inline constexpr double kP99_60[5] = {0.22, 0.16, 0.028, 0.1, 0.02};

// Lkv2 values implied by relative gains over Lk of 60% on C0 and
// 10% on C1 and C2 (10-minute case only).
inline constexpr double kLkv2_10_c0 = 0.0050 * 0.4;
inline constexpr double kLkv2_10_c1 = 0.0021 * 0.9;
inline constexpr double kLkv2_10_c2 = 0.0008 * 0.9;

inline PerformanceTable reference_table(int horizon, bool with_lkv2 = false) {
    const double* gm = horizon == 10 ? kGm10 : kGm60;
    const double* lk = horizon == 10 ? kLk10 : kLk60;
    const double* p99 = horizon == 10 ? kP99_10 : kP99_60;
    const NominalSizes sizes;
    PerformanceTable t;
    for (int c = 0; c < 5; ++c) {
        PerformanceRow g;
        g.cluster = c;
        g.tier = Tier::GM;
        g.horizon_minutes = horizon;
        g.mae = gm[c];
        g.p99_abs_error_mb = p99[c];
        g.storage_bytes = sizes.gm;
        t.add(g);
        PerformanceRow l = g;
        l.tier = Tier::Lk;
        l.mae = lk[c];
        l.storage_bytes = sizes.lk;
        t.add(l);
    }
    if (with_lkv2 && horizon == 10) {
        const double v2[3] = {kLkv2_10_c0, kLkv2_10_c1, kLkv2_10_c2};
        for (int c = 0; c < 3; ++c) {
            PerformanceRow r;
            r.cluster = c;
            r.tier = Tier::Lkv2;
            r.horizon_minutes = 10;
            r.mae = v2[c];
            r.storage_bytes = sizes.lkv2;
            t.add(r);
        }
    }
    return t;
}

/// Random association records on a grid starting at t0; some straddle the span.
inline std::vector<AssociationRecord> random_records(std::mt19937_64& rng, std::size_t n, Timestamp t0, Seconds span,
                                                     int aps = 4, int clients = 12) {
    std::uniform_int_distribution<int> ap(0, aps - 1), cl(0, clients - 1);
    std::uniform_int_distribution<Timestamp> start(t0 - span / 10, t0 + span);
    std::uniform_int_distribution<Seconds> dur(0, span / 4);
    std::uniform_int_distribution<std::uint64_t> bytes(0, 5'000'000);
    std::vector<AssociationRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        AssociationRecord r;
        r.ap_id = "ap" + std::to_string(ap(rng));
        r.client_id = "c" + std::to_string(cl(rng));
        r.start_time = start(rng);
        r.end_time = r.start_time + (i % 7 == 0 ? 0 : dur(rng));
        r.bytes_up = bytes(rng);
        r.bytes_down = bytes(rng);
        out.push_back(r);
    }
    return out;
}

/// Bytes each record contributes to [t0, t1) under proration by overlap.
inline double bytes_within(const AssociationRecord& r, Timestamp t0, Timestamp t1) {
    const double total = static_cast<double>(r.total_bytes());
    if (r.end_time == r.start_time) return (r.start_time >= t0 && r.start_time < t1) ? total : 0.0;
    const Timestamp a = std::max(r.start_time, t0), b = std::min(r.end_time, t1);
    if (b <= a) return 0.0;
    return total * static_cast<double>(b - a) / static_cast<double>(r.end_time - r.start_time);
}

/// Small synthetic pipeline that runs end to end in well under a second.
inline PipelineConfig tiny_pipeline_config(const std::string& out_dir) {
    PipelineConfig c;
    c.seed = 11;
    c.out_dir = out_dir;
    c.synthetic.days = 4;
    c.synthetic.archetypes = {
        {"busy", 4, 2e6, 3.0, 0.8, 0.1, 0.5, 14.0, 5e4},
        {"idle", 4, 1e5, 0.2, 0.0, 0.05, 0.0, 3.0, 5e4},
        {"evening", 4, 8e5, 2.0, 0.0, 0.1, 0.0, 21.0, 5e4},
    };
    c.lookback = 12;
    c.architecture = {{Tier::GM, {1, 4}}, {Tier::Lk, {1, 4}}, {Tier::Lkv2, {1, 6}}};
    c.windows.stride = 3;
    c.train.max_epochs = 2;
    c.k_max = 6;
    return c;
}

inline std::string temp_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("apf_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p.string();
}

}  // namespace apf::fixtures
