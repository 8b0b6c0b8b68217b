#include "apf/serialize.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "apf/csv.hpp"

namespace apf::io {

using csv::format_double;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DependencyError("missing artifact '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& contents) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path + "'");
    out << contents;
    if (!out) throw Error("write failed for '" + path + "'");
}

std::string dump(const json& value) { return value.dump(2) + "\n"; }

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double as_number(const json& j) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (!j.is_number()) throw InvalidInput("expected a number in JSON, got " + j.dump());
    return j.get<double>();
}

json numbers(std::span<const double> values) {
    json arr = json::array();
    for (double v : values) arr.push_back(number(v));
    return arr;
}

std::vector<double> as_numbers(const json& j) {
    if (!j.is_array()) throw InvalidInput("expected a JSON array");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) out.push_back(as_number(v));
    return out;
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(numbers(m.row(r)));
    return rows;
}

Matrix matrix_from_json(const json& j) {
    std::vector<std::vector<double>> rows;
    for (const auto& r : j) rows.push_back(as_numbers(r));
    return Matrix::from_rows(rows);
}

const json& field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw InvalidInput(std::string("JSON artifact lacks '") + key + "'");
    return j.at(key);
}

void check_width(const csv::Table& t, std::size_t row) {
    if (t.rows[row].size() != t.header.size())
        throw InvalidInput("line " + std::to_string(t.line_numbers[row]) + ": expected " +
                           std::to_string(t.header.size()) + " fields");
}

}  // namespace

std::string load_series_csv(const std::vector<LoadSeries>& series) {
    std::string out = "ap_id,window_index,load_bytes,active_users\n";
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.size(); ++i) {
            out += s.ap_id;
            out += ',';
            out += std::to_string(i);
            out += ',';
            out += format_double(s.load[i]);
            out += ',';
            out += format_double(i < s.active_users.size() ? s.active_users[i] : 0.0);
            out += '\n';
        }
    return out;
}

std::vector<LoadSeries> parse_load_series_csv(std::istream& in, Timestamp origin, Seconds step_w) {
    const csv::Table t = csv::read(in);
    const std::size_t c_ap = t.require("ap_id"), c_idx = t.require("window_index"), c_load = t.require("load_bytes"),
                      c_users = t.require("active_users");
    std::vector<LoadSeries> out;
    std::map<std::string, std::size_t> index;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        check_width(t, r);
        const auto& row = t.rows[r];
        auto [it, fresh] = index.try_emplace(row[c_ap], out.size());
        if (fresh) out.push_back(LoadSeries{row[c_ap], origin, step_w, {}, {}, {}, {}});
        LoadSeries& s = out[it->second];
        if (static_cast<std::size_t>(csv::parse_int(row[c_idx])) != s.size())
            throw InvalidInput("line " + std::to_string(t.line_numbers[r]) + ": window_index out of sequence for '" +
                               s.ap_id + "'");
        s.load.push_back(csv::parse_double(row[c_load]));
        s.active_users.push_back(csv::parse_double(row[c_users]));
    }
    return out;
}

json ingest_summary_json(const IngestSummary& summary, Timestamp origin, std::size_t rejected_rows,
                         const std::string& source) {
    json j;
    j["source"] = source;
    j["ap_count"] = summary.ap_count;
    j["record_count"] = summary.record_count;
    j["rejected_rows"] = rejected_rows;
    j["span_days"] = summary.span_days;
    j["window_count"] = summary.window_count;
    j["step_w"] = summary.step_w;
    j["origin"] = origin;
    return j;
}

std::string features_csv(const std::vector<FeatureVector>& rows) {
    std::string out = "ap_id";
    for (const auto& name : feature_names()) out += "," + name;
    out += '\n';
    for (const auto& fv : rows) {
        out += fv.ap_id;
        for (double v : fv.values) out += "," + format_double(v);
        out += '\n';
    }
    return out;
}

std::vector<FeatureVector> parse_features_csv(std::istream& in) {
    const csv::Table t = csv::read(in);
    const std::size_t c_ap = t.require("ap_id");
    std::array<std::size_t, kFeatureCount> cols{};
    for (std::size_t f = 0; f < kFeatureCount; ++f) cols[f] = t.require(feature_names()[f]);
    std::vector<FeatureVector> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        check_width(t, r);
        FeatureVector fv;
        fv.ap_id = t.rows[r][c_ap];
        for (std::size_t f = 0; f < kFeatureCount; ++f) fv.values[f] = csv::parse_double(t.rows[r][cols[f]]);
        out.push_back(std::move(fv));
    }
    return out;
}

json to_json(const Scaler& scaler) {
    json j;
    j["features"] = feature_names().size() == scaler.mean.size() ? json(feature_names()) : json::array();
    j["mean"] = numbers(scaler.mean);
    j["stddev"] = numbers(scaler.stddev);
    json flags = json::array();
    for (bool b : scaler.degenerate) flags.push_back(b);
    j["degenerate"] = flags;
    return j;
}

Scaler scaler_from_json(const json& j) {
    Scaler s;
    s.mean = as_numbers(field(j, "mean"));
    s.stddev = as_numbers(field(j, "stddev"));
    for (const auto& b : field(j, "degenerate")) s.degenerate.push_back(b.get<bool>());
    if (s.stddev.size() != s.mean.size() || s.degenerate.size() != s.mean.size())
        throw InvalidInput("scaler JSON arrays differ in length");
    return s;
}

json to_json(const PcaModel& model) {
    json j;
    j["variance_target"] = model.variance_target;
    j["retained"] = model.retained;
    j["mean"] = numbers(model.mean);
    j["eigenvalues"] = numbers(model.eigenvalues);
    j["explained_variance_ratio"] = numbers(model.explained_variance_ratio);
    j["components"] = matrix_json(model.components);
    return j;
}

PcaModel pca_from_json(const json& j) {
    PcaModel m;
    m.variance_target = as_number(field(j, "variance_target"));
    m.retained = field(j, "retained").get<std::size_t>();
    m.mean = as_numbers(field(j, "mean"));
    m.eigenvalues = as_numbers(field(j, "eigenvalues"));
    m.explained_variance_ratio = as_numbers(field(j, "explained_variance_ratio"));
    m.components = matrix_from_json(field(j, "components"));
    if (m.components.cols() != m.mean.size() || m.retained > m.components.rows())
        throw InvalidInput("PCA JSON is inconsistent");
    return m;
}

std::string reduced_csv(const std::vector<std::string>& ap_ids, const Matrix& reduced) {
    if (ap_ids.size() != reduced.rows()) throw InvalidInput("reduced_csv: one ap_id per row required");
    std::string out = "ap_id";
    for (std::size_t c = 0; c < reduced.cols(); ++c) out += ",pc" + std::to_string(c + 1);
    out += '\n';
    for (std::size_t r = 0; r < reduced.rows(); ++r) {
        out += ap_ids[r];
        for (double v : reduced.row(r)) out += "," + format_double(v);
        out += '\n';
    }
    return out;
}

Matrix parse_reduced_csv(std::istream& in, std::vector<std::string>& ap_ids) {
    const csv::Table t = csv::read(in);
    const std::size_t c_ap = t.require("ap_id");
    std::vector<std::size_t> cols;
    for (std::size_t c = 1;; ++c) {
        auto idx = t.find("pc" + std::to_string(c));
        if (!idx) break;
        cols.push_back(*idx);
    }
    ap_ids.clear();
    Matrix m(t.rows.size(), cols.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        check_width(t, r);
        ap_ids.push_back(t.rows[r][c_ap]);
        for (std::size_t c = 0; c < cols.size(); ++c) m(r, c) = csv::parse_double(t.rows[r][cols[c]]);
    }
    return m;
}

json to_json(const ClusterArtifact& a) {
    const ClusteringResult& r = a.result;
    json j;
    j["k"] = r.k;
    j["seed"] = r.seed;
    j["best_restart"] = r.best_restart;
    j["iterations"] = r.iterations;
    j["wcss"] = number(r.wcss);
    j["silhouette"] = r.silhouette ? number(*r.silhouette) : json(nullptr);
    j["calinski_harabasz"] = r.calinski_harabasz ? number(*r.calinski_harabasz) : json(nullptr);
    json assign = json::array();
    for (std::size_t i = 0; i < a.ap_ids.size(); ++i)
        assign.push_back({{"ap_id", a.ap_ids[i]}, {"cluster", r.assignments.at(i)}});
    j["assignments"] = assign;
    j["centroids"] = matrix_json(r.centroids);
    json table = json::array();
    for (const auto& s : a.k_table)
        table.push_back({{"k", s.k},
                         {"wcss", number(s.wcss)},
                         {"silhouette", number(s.silhouette)},
                         {"calinski_harabasz", s.calinski_harabasz ? number(*s.calinski_harabasz) : json(nullptr)}});
    j["k_table"] = table;
    j["wcss_trace"] = numbers(r.wcss_trace);
    return j;
}

ClusterArtifact clusters_from_json(const json& j) {
    ClusterArtifact a;
    ClusteringResult& r = a.result;
    r.k = field(j, "k").get<int>();
    r.seed = field(j, "seed").get<std::uint64_t>();
    r.best_restart = field(j, "best_restart").get<int>();
    r.iterations = field(j, "iterations").get<int>();
    r.wcss = as_number(field(j, "wcss"));
    if (!field(j, "silhouette").is_null()) r.silhouette = as_number(j["silhouette"]);
    if (!field(j, "calinski_harabasz").is_null()) r.calinski_harabasz = as_number(j["calinski_harabasz"]);
    for (const auto& e : field(j, "assignments")) {
        a.ap_ids.push_back(field(e, "ap_id").get<std::string>());
        const int c = field(e, "cluster").get<int>();
        if (c < 0 || c >= r.k) throw InvalidInput("cluster label out of range in clusters JSON");
        r.assignments.push_back(c);
    }
    r.centroids = matrix_from_json(field(j, "centroids"));
    for (const auto& e : field(j, "k_table")) {
        KScore s;
        s.k = field(e, "k").get<int>();
        s.wcss = as_number(field(e, "wcss"));
        s.silhouette = as_number(field(e, "silhouette"));
        if (!field(e, "calinski_harabasz").is_null()) s.calinski_harabasz = as_number(e["calinski_harabasz"]);
        a.k_table.push_back(s);
    }
    if (j.contains("wcss_trace")) r.wcss_trace = as_numbers(j["wcss_trace"]);
    return a;
}

json to_json(const ModelSpec& spec) {
    return {{"tier", std::string(to_string(spec.tier))},
            {"lstm_layers", spec.lstm_layers},
            {"hidden_size", spec.hidden_size},
            {"lookback", spec.lookback},
            {"horizon", spec.horizon},
            {"input_channels", spec.input_channels}};
}

ModelSpec model_spec_from_json(const json& j) {
    ModelSpec s;
    s.tier = parse_tier(field(j, "tier").get<std::string>());
    s.lstm_layers = field(j, "lstm_layers").get<int>();
    s.hidden_size = field(j, "hidden_size").get<int>();
    s.lookback = field(j, "lookback").get<int>();
    s.horizon = field(j, "horizon").get<int>();
    s.input_channels = field(j, "input_channels").get<int>();
    s.validate();
    return s;
}

json to_json(const ForecastModel& model) {
    json j;
    j["spec"] = to_json(model.spec);
    j["seed"] = model.seed;
    j["trained_on"] = model.trained_on < 0 ? json("all") : json(model.trained_on);
    j["param_count"] = model.param_count();
    j["layout"] =
        "per layer: W (4H x (in + H), gates i,f,g,o, columns [x, h_prev]) then b (4H); head W_out (h x H) then b_out (h)";
    j["params"] = numbers(model.params);
    return j;
}

ForecastModel model_from_json(const json& j) {
    ForecastModel m;
    m.spec = model_spec_from_json(field(j, "spec"));
    m.seed = field(j, "seed").get<std::uint64_t>();
    const json& on = field(j, "trained_on");
    m.trained_on = on.is_string() ? -1 : on.get<int>();
    m.params = as_numbers(field(j, "params"));
    if (m.params.size() != m.spec.param_count())
        throw InvalidInput("model JSON has " + std::to_string(m.params.size()) + " parameters, spec requires " +
                           std::to_string(m.spec.param_count()));
    return m;
}

std::string loss_history_csv(const std::vector<EpochRecord>& history) {
    std::string out = "epoch,train_loss,val_mae\n";
    for (const auto& e : history)
        out += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," + format_double(e.val_mae) + "\n";
    return out;
}

std::string performance_table_csv(const PerformanceTable& table) {
    std::string out =
        "cluster,tier,horizon_min,mae,mae_series_mean,p99_abs_error_mb,storage_mb,n_series,n_windows,param_count,"
        "model_seed\n";
    for (const auto& r : table.rows) {
        out += std::to_string(r.cluster) + "," + std::string(to_string(r.tier)) + "," +
               std::to_string(r.horizon_minutes) + "," + format_double(r.mae) + "," + format_double(r.mae_series_mean) +
               "," + format_double(r.p99_abs_error_mb) + "," + format_double(r.storage_bytes / kBytesPerMB) + "," +
               std::to_string(r.n_series) + "," + std::to_string(r.n_windows) + "," + std::to_string(r.param_count) +
               "," + std::to_string(r.model_seed) + "\n";
    }
    return out;
}

PerformanceTable parse_performance_table_csv(std::istream& in) {
    const csv::Table t = csv::read(in);
    const std::size_t c_cl = t.require("cluster"), c_tier = t.require("tier"), c_h = t.require("horizon_min"),
                      c_mae = t.require("mae"), c_p99 = t.require("p99_abs_error_mb"),
                      c_st = t.require("storage_mb"), c_ns = t.require("n_series");
    const auto c_msm = t.find("mae_series_mean"), c_nw = t.find("n_windows"), c_pc = t.find("param_count"),
               c_seed = t.find("model_seed");
    PerformanceTable table;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        check_width(t, r);
        const auto& row = t.rows[r];
        PerformanceRow p;
        p.cluster = static_cast<int>(csv::parse_int(row[c_cl]));
        p.tier = parse_tier(row[c_tier]);
        p.horizon_minutes = static_cast<int>(csv::parse_int(row[c_h]));
        p.mae = csv::parse_double(row[c_mae]);
        p.p99_abs_error_mb = csv::parse_double(row[c_p99]);
        p.storage_bytes = csv::parse_double(row[c_st]) * kBytesPerMB;
        p.n_series = static_cast<std::size_t>(csv::parse_int(row[c_ns]));
        if (c_msm) p.mae_series_mean = csv::parse_double(row[*c_msm]);
        if (c_nw) p.n_windows = static_cast<std::size_t>(csv::parse_int(row[*c_nw]));
        if (c_pc) p.param_count = static_cast<std::size_t>(csv::parse_int(row[*c_pc]));
        if (c_seed) p.model_seed = std::stoull(row[*c_seed]);
        table.add(p);
    }
    return table;
}

std::string kpi_table_csv(const PerformanceTable& table) {
    const std::vector<int> clusters = table.clusters();
    std::string out = "kpi,tier,horizon_min";
    for (int c : clusters) out += ",cluster_" + std::to_string(c);
    out += '\n';
    for (const char* metric : {"mae", "p99_abs_error_mb"}) {
        for (Tier tier : {Tier::GM, Tier::Lk, Tier::Lkv2}) {
            for (int h : table.horizons()) {
                bool any = false;
                std::string line = std::string(metric) + "," + std::string(to_string(tier)) + "," + std::to_string(h);
                for (int c : clusters) {
                    const PerformanceRow* r = table.find(c, tier, h);
                    line += ",";
                    if (r) {
                        any = true;
                        line += format_double(std::string_view(metric) == "mae" ? r->mae : r->p99_abs_error_mb);
                    }
                }
                if (any) out += line + "\n";
            }
        }
    }
    return out;
}

json to_json(const DeployPolicy& p) {
    json j;
    j["absolute_floor"] = p.absolute_floor;
    j["relative_threshold"] = p.relative_threshold;
    j["escalation_threshold"] = p.escalation_threshold;
    j["memory_budget_bytes"] = p.memory_budget ? json(*p.memory_budget) : json(nullptr);
    j["lkv2_trainable"] = p.lkv2_trainable;
    j["nominal_sizes_bytes"] = {{"GM", p.sizes.gm}, {"Lk", p.sizes.lk}, {"Lkv2", p.sizes.lkv2}};
    return j;
}

json to_json(const DeploymentPlan& plan, const DeployPolicy& policy) {
    json j;
    j["horizon_min"] = plan.horizon_minutes;
    json assign = json::array();
    for (const auto& [c, d] : plan.assignment)
        assign.push_back({{"cluster", c},
                          {"tier", std::string(to_string(d.tier))},
                          {"mae", number(d.mae)},
                          {"mae_estimated", d.mae_estimated}});
    j["assignments"] = assign;
    json inst = json::array();
    for (const auto& m : plan.instances)
        inst.push_back({{"tier", std::string(to_string(m.tier))},
                        {"cluster", m.cluster < 0 ? json("shared") : json(m.cluster)},
                        {"storage_bytes", m.storage_bytes}});
    j["instances"] = inst;
    j["models_deployed"] = plan.models_deployed;
    j["total_storage_bytes"] = plan.total_storage;
    j["total_storage_mb"] = plan.total_storage / kBytesPerMB;
    j["average_mae"] = plan.average_mae ? number(*plan.average_mae) : json(nullptr);
    j["within_budget"] = plan.within_budget;
    j["escalation_candidates"] = plan.escalation_candidates;
    j["budget_reverted"] = plan.budget_reverted;
    j["policy"] = to_json(policy);
    return j;
}

std::string cost_summary_csv(const std::vector<CostSummaryRow>& rows) {
    std::string out = "strategy,deployed_models,storage_mb,average_mae\n";
    for (const auto& r : rows)
        out += "\"" + r.strategy + "\"," + std::to_string(r.summary.models_deployed) + "," +
               format_double(r.summary.storage_bytes / kBytesPerMB) + "," +
               (r.summary.average_mae ? format_double(*r.summary.average_mae) : std::string{}) + "\n";
    return out;
}

}  // namespace apf::io
