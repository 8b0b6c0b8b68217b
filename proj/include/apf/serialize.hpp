#pragma once

#include <istream>
#include <string>
#include <vector>

#include <json.hpp>

#include "apf/cluster.hpp"
#include "apf/deploy.hpp"
#include "apf/eval.hpp"
#include "apf/features.hpp"
#include "apf/ingest.hpp"
#include "apf/lstm.hpp"
#include "apf/reduce.hpp"
#include "apf/train.hpp"

// Artifact formats. Writers return the full file contents so callers can
// hash what they write; readers throw InvalidInput on malformed content.
namespace apf::io {

using json = nlohmann::ordered_json;

std::string read_file(const std::string& path);  // DependencyError when missing
void write_file(const std::string& path, const std::string& contents);
/// JSON text with two-space indent and a trailing newline.
std::string dump(const json& value);

// Load series: ap_id, window_index, load_bytes, active_users. Grid metadata
// lives in the JSON sidecar.
std::string load_series_csv(const std::vector<LoadSeries>& series);
std::vector<LoadSeries> parse_load_series_csv(std::istream& in, Timestamp origin, Seconds step_w);
json ingest_summary_json(const IngestSummary& summary, Timestamp origin, std::size_t rejected_rows,
                         const std::string& source);

std::string features_csv(const std::vector<FeatureVector>& rows);
std::vector<FeatureVector> parse_features_csv(std::istream& in);
json to_json(const Scaler& scaler);
Scaler scaler_from_json(const json& j);

json to_json(const PcaModel& model);
PcaModel pca_from_json(const json& j);
/// ap_id, pc1..pcR.
std::string reduced_csv(const std::vector<std::string>& ap_ids, const Matrix& reduced);
Matrix parse_reduced_csv(std::istream& in, std::vector<std::string>& ap_ids);

/// Clustering artifact: chosen partition plus the per-k metric table.
struct ClusterArtifact {
    std::vector<std::string> ap_ids;
    ClusteringResult result;
    std::vector<KScore> k_table;
};
json to_json(const ClusterArtifact& artifact);
ClusterArtifact clusters_from_json(const json& j);

json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const json& j);
json to_json(const ForecastModel& model);
ForecastModel model_from_json(const json& j);
std::string loss_history_csv(const std::vector<EpochRecord>& history);

/// Long format, one row per (cluster, tier, horizon).
std::string performance_table_csv(const PerformanceTable& table);
PerformanceTable parse_performance_table_csv(std::istream& in);
/// Wide KPI layout: one row per (metric, tier, horizon), one column per cluster.
std::string kpi_table_csv(const PerformanceTable& table);

json to_json(const DeployPolicy& policy);
json to_json(const DeploymentPlan& plan, const DeployPolicy& policy);
std::string cost_summary_csv(const std::vector<CostSummaryRow>& rows);

}  // namespace apf::io
