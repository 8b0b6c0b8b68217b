#include "apf/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "apf/cluster.hpp"
#include "apf/csv.hpp"
#include "apf/deploy.hpp"
#include "apf/eval.hpp"
#include "apf/features.hpp"
#include "apf/ingest.hpp"
#include "apf/reduce.hpp"
#include "apf/serialize.hpp"
#include "apf/synthetic.hpp"
#include "apf/train.hpp"

namespace apf {

namespace fs = std::filesystem;
using io::json;

std::string_view to_string(Stage stage) {
    switch (stage) {
        case Stage::Ingest: return "ingest";
        case Stage::Features: return "features";
        case Stage::Reduce: return "reduce";
        case Stage::Cluster: return "cluster";
        case Stage::Train: return "train";
        case Stage::Evaluate: return "evaluate";
        case Stage::Plan: return "plan";
        case Stage::Report: return "report";
    }
    return "?";
}

Stage parse_stage(std::string_view name) {
    for (Stage s : kAllStages)
        if (to_string(s) == name) return s;
    throw ConfigError("unknown stage '" + std::string(name) + "'");
}

std::uint64_t task_seed(const PipelineConfig& config, std::string_view stage, std::uint64_t task) {
    return derive_seed(config.seed, stage, task);
}

namespace {

// Artifact names, relative to out_dir.
constexpr const char* kLoadCsv = "load_series.csv";
constexpr const char* kLoadJson = "load_series.json";
constexpr const char* kLabels = "labels.csv";
constexpr const char* kFeatures = "features.csv";
constexpr const char* kScaler = "scaler.json";
constexpr const char* kPca = "pca.json";
constexpr const char* kReduced = "reduced.csv";
constexpr const char* kClusters = "clusters.json";
constexpr const char* kModelIndex = "models/index.json";
constexpr const char* kPerfTable = "performance_table.csv";
constexpr const char* kKpiTable = "kpi_table.csv";
constexpr const char* kManifest = "manifest.json";

std::string hz(int minutes) { return "_h" + std::to_string(minutes); }

class Workspace {
public:
    Workspace(const PipelineConfig& config, Stage stage) : dir_(config.out_dir), stage_(stage) {}

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    // Reads an upstream artifact and records its hash as a stage input.
    std::string read(const std::string& name, std::string_view producer) {
        const std::string p = path(name);
        if (!fs::exists(p))
            throw DependencyError("stage '" + std::string(to_string(stage_)) + "' needs " + name + " (run '" +
                                  std::string(producer) + "' first)");
        std::string text = io::read_file(p);
        inputs_[name] = hex64(fnv1a64(text));
        return text;
    }

    bool exists(const std::string& name) const { return fs::exists(path(name)); }

    void note_external_input(const std::string& label, const std::string& contents) {
        inputs_[label] = hex64(fnv1a64(contents));
    }

    void write(const std::string& name, const std::string& contents) {
        io::write_file(path(name), contents);
        artifacts_[name] = hex64(fnv1a64(contents));
    }

    const std::map<std::string, std::string>& inputs() const { return inputs_; }
    const std::map<std::string, std::string>& artifacts() const { return artifacts_; }

private:
    fs::path dir_;
    Stage stage_;
    std::map<std::string, std::string> inputs_;
    std::map<std::string, std::string> artifacts_;
};

json config_json(const PipelineConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["input"] = {{"path", c.input_path},
                  {"step_w", c.step_w},
                  {"columns",
                   {{"ap_id", c.columns.ap_id},
                    {"client_id", c.columns.client_id},
                    {"start_time", c.columns.start_time},
                    {"end_time", c.columns.end_time},
                    {"bytes_up", c.columns.bytes_up},
                    {"bytes_down", c.columns.bytes_down}}}};
    if (c.input_path.empty()) {
        json arch = json::array();
        for (const auto& a : c.synthetic.archetypes)
            arch.push_back({{"name", a.name},
                            {"count", a.count},
                            {"base_level", a.base_level},
                            {"diurnal_amplitude", a.diurnal_amplitude},
                            {"weekend_contrast", a.weekend_contrast},
                            {"noise_scale", a.noise_scale},
                            {"noise_ar", a.noise_ar},
                            {"peak_hour", a.peak_hour},
                            {"bytes_per_user", a.bytes_per_user}});
        j["synthetic"] = {{"days", c.synthetic.days}, {"origin", c.synthetic.origin}, {"archetypes", arch}};
    }
    j["features"] = {{"transform", std::string(to_string(c.transform))},
                     {"morning_start", c.calendar.morning_start},
                     {"afternoon_start", c.calendar.afternoon_start},
                     {"night_start", c.calendar.night_start},
                     {"tz_offset_hours", c.calendar.tz_offset_hours}};
    j["reduce"] = {{"variance_target", c.variance_target}};
    j["cluster"] = {{"k_min", c.k_min}, {"k_max", c.k_max}, {"restarts", c.kmeans_restarts}, {"max_iter", c.kmeans_max_iter}};
    json arch = json::object();
    for (const auto& [tier, a] : c.architecture)
        arch[std::string(to_string(tier))] = {{"layers", a.first}, {"hidden", a.second}};
    j["model"] = {{"lookback", c.lookback},
                  {"input_channels", c.input_channels},
                  {"horizons_min", c.horizons_min},
                  {"architecture", arch},
                  {"lkv2_mode", std::string(to_string(c.lkv2_mode))}};
    j["windows"] = {{"stride", c.windows.stride},
                    {"train_fraction", c.windows.train_fraction},
                    {"val_fraction", c.windows.val_fraction}};
    json train = json::object();
    for (int h : c.horizons_min) {
        const TrainConfig t = c.train_for(h);
        train["h" + std::to_string(h)] = {{"learning_rate", t.learning_rate}, {"batch_size", t.batch_size},
                                          {"max_epochs", t.max_epochs},       {"patience", t.patience},
                                          {"beta1", t.beta1},                 {"beta2", t.beta2},
                                          {"epsilon", t.epsilon}};
    }
    j["train"] = train;
    j["deploy"] = io::to_json(c.policy);
    return j;
}

// Rewrites manifest.json with this stage's entry; other stages are kept.
void update_manifest(const PipelineConfig& config, Stage stage, const Workspace& ws) {
    const std::string path = (fs::path(config.out_dir) / kManifest).string();
    json previous = json::object();
    if (fs::exists(path)) {
        try {
            previous = json::parse(io::read_file(path));
        } catch (const json::exception&) {
            previous = json::object();
        }
    }
    json stages = json::object();
    for (Stage s : kAllStages) {
        const std::string name(to_string(s));
        if (s == stage) {
            json entry;
            entry["inputs"] = ws.inputs();
            entry["artifacts"] = ws.artifacts();
            stages[name] = entry;
        } else if (previous.contains("stages") && previous["stages"].contains(name)) {
            stages[name] = previous["stages"][name];
        }
    }
    json manifest;
    manifest["seed"] = config.seed;
    manifest["seed_derivation"] = "splitmix64 over (seed, fnv1a64(stage label), task index)";
    manifest["config"] = config_json(config);
    manifest["stages"] = stages;
    io::write_file(path, io::dump(manifest));
}

// Runs tasks on up to `jobs` threads. Results depend only on the task index.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w)
        threads.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

struct LoadedSeries {
    std::vector<LoadSeries> series;
    json summary;
};

LoadedSeries read_series(Workspace& ws) {
    LoadedSeries out;
    out.summary = json::parse(ws.read(kLoadJson, "ingest"));
    std::istringstream in(ws.read(kLoadCsv, "ingest"));
    out.series = io::parse_load_series_csv(in, out.summary.at("origin").get<Timestamp>(),
                                           out.summary.at("step_w").get<Seconds>());
    return out;
}

// Cluster index per series, matched by ap_id.
std::vector<int> series_clusters(const std::vector<LoadSeries>& series, const io::ClusterArtifact& clusters) {
    std::map<std::string, int> by_id;
    for (std::size_t i = 0; i < clusters.ap_ids.size(); ++i) by_id[clusters.ap_ids[i]] = clusters.result.assignments[i];
    std::vector<int> out;
    for (const auto& s : series) {
        auto it = by_id.find(s.ap_id);
        if (it == by_id.end()) throw InvalidInput("AP '" + s.ap_id + "' has no cluster assignment; rerun 'cluster'");
        out.push_back(it->second);
    }
    return out;
}

WindowOptions window_options(const PipelineConfig& c, const ModelSpec& spec) {
    WindowOptions w = c.windows;
    w.lookback = spec.lookback;
    w.horizon = spec.horizon;
    w.input_channels = spec.input_channels;
    return w;
}

std::string model_file(Tier tier, int cluster, int horizon) {
    std::string name = tier == Tier::GM ? "gm" : (tier == Tier::Lk ? "lk" : "lkv2");
    if (tier != Tier::GM) name += "_c" + std::to_string(cluster);
    return "models/" + name + hz(horizon);
}

// --- stages ---------------------------------------------------------------

void stage_ingest(const PipelineConfig& c, Workspace& ws, const LogFn& log) {
    std::vector<LoadSeries> series;
    IngestSummary summary;
    std::size_t rejected = 0;
    Timestamp origin = 0;
    std::string source;
    if (c.input_path.empty()) {
        const SyntheticDataset data = generate_synthetic(c.synthetic, task_seed(c, "synthetic", 0));
        series = data.series;
        origin = c.synthetic.origin;
        source = "synthetic";
        summary.ap_count = series.size();
        summary.window_count = series.empty() ? 0 : series.front().size();
        summary.step_w = c.synthetic.step_w;
        summary.span_days = static_cast<std::size_t>(
            std::ceil(static_cast<double>(summary.window_count * static_cast<std::size_t>(summary.step_w)) / 86400.0));
        std::string labels = "ap_id,label,archetype\n";
        for (std::size_t i = 0; i < series.size(); ++i)
            labels += series[i].ap_id + "," + std::to_string(data.labels[i]) + "," +
                      data.archetype_names[static_cast<std::size_t>(data.labels[i])] + "\n";
        ws.write(kLabels, labels);
        if (c.synthetic.step_w != c.step_w)
            log("note: synthetic generator uses step_w " + std::to_string(c.synthetic.step_w) + " s");
    } else {
        if (!fs::exists(c.input_path)) throw DependencyError("input file '" + c.input_path + "' does not exist");
        const std::string text = io::read_file(c.input_path);
        ws.note_external_input(c.input_path, text);
        std::istringstream in(text);
        ParseResult parsed = parse_records(in, c.columns);
        rejected = parsed.errors.size();
        for (std::size_t i = 0; i < std::min<std::size_t>(parsed.errors.size(), 10); ++i)
            log("rejected line " + std::to_string(parsed.errors[i].line) + ": " + parsed.errors[i].message);
        if (parsed.records.empty()) throw InvalidInput("no valid association records in '" + c.input_path + "'");
        const auto [t0, t1] = covering_span(parsed.records, c.step_w);
        series = derive_load_series(parsed.records, DeriveOptions{c.step_w, t0, t1, false});
        summary = summarize(parsed.records, series);
        origin = t0;
        source = c.input_path;
    }
    ws.write(kLoadCsv, io::load_series_csv(series));
    ws.write(kLoadJson, io::dump(io::ingest_summary_json(summary, origin, rejected, source)));
    log("ingest: " + std::to_string(series.size()) + " APs x " + std::to_string(summary.window_count) + " windows");
}

void stage_features(const PipelineConfig& c, Workspace& ws, const LogFn& log) {
    const LoadedSeries in = read_series(ws);
    std::vector<LoadSeries> transformed;
    for (const auto& s : in.series) transformed.push_back(transform_load(s, c.transform));
    const ByteTertiles tertiles = compute_tertiles(transformed);
    std::vector<FeatureVector> rows;
    for (const auto& s : transformed) rows.push_back(extract_features(s, c.calendar, tertiles));
    const ScaledFeatures scaled = scale_features(rows);
    ws.write(kFeatures, io::features_csv(rows));
    json scaler = io::to_json(scaled.scaler);
    scaler["transform"] = std::string(to_string(c.transform));
    scaler["tertiles"] = {tertiles.low, tertiles.high};
    ws.write(kScaler, io::dump(scaler));
    log("features: " + std::to_string(rows.size()) + " x " + std::to_string(kFeatureCount));
}

Matrix scaled_features(Workspace& ws, std::vector<std::string>& ap_ids) {
    std::istringstream in(ws.read(kFeatures, "features"));
    const std::vector<FeatureVector> rows = io::parse_features_csv(in);
    const Scaler scaler = io::scaler_from_json(json::parse(ws.read(kScaler, "features")));
    ap_ids.clear();
    for (const auto& r : rows) ap_ids.push_back(r.ap_id);
    return scaler.apply(to_matrix(rows));
}

void stage_reduce(const PipelineConfig& c, Workspace& ws, const LogFn& log) {
    std::vector<std::string> ap_ids;
    const Matrix scaled = scaled_features(ws, ap_ids);
    const PcaModel model = pca_fit(scaled, c.variance_target);
    ws.write(kPca, io::dump(io::to_json(model)));
    ws.write(kReduced, io::reduced_csv(ap_ids, pca_transform(model, scaled)));
    log("reduce: retained " + std::to_string(model.retained) + " of " + std::to_string(model.dims()) + " components");
}

void stage_cluster(const PipelineConfig& c, Workspace& ws, const LogFn& log) {
    std::vector<std::string> ap_ids;
    std::istringstream in(ws.read(kReduced, "reduce"));
    const Matrix points = io::parse_reduced_csv(in, ap_ids);
    const int n = static_cast<int>(points.rows());
    const int k_max = std::min(c.k_max, n - 1);
    if (k_max < c.k_min)
        throw InvalidInput("clustering needs more than k_min = " + std::to_string(c.k_min) + " APs (have " +
                           std::to_string(n) + ")");
    KMeansOptions base;
    base.seed = task_seed(c, "cluster", 0);
    base.restarts = c.kmeans_restarts;
    base.max_iter = c.kmeans_max_iter;
    const KSelection sel = select_k(points, c.k_min, k_max, base);
    ws.write(kClusters, io::dump(io::to_json(io::ClusterArtifact{ap_ids, sel.best, sel.table})));
    log("cluster: k = " + std::to_string(sel.best.k) + ", silhouette " +
        csv::format_double(sel.best.silhouette.value_or(0.0)));
}

struct TrainTask {
    Tier tier;
    int cluster;  // -1 for GM
    int horizon;
};

struct TrainOutcome {
    TrainResult result;
    bool done = false;
};

void run_train_tasks(const PipelineConfig& c, const std::vector<TrainTask>& tasks, const std::vector<LoadSeries>& series,
                     const std::vector<int>& assignment, std::vector<TrainOutcome>& outcomes, const LogFn& log) {
    outcomes.assign(tasks.size(), {});
    std::mutex log_mutex;
    parallel_for(tasks.size(), c.jobs, [&](std::size_t i) {
        const TrainTask& t = tasks[i];
        const ModelSpec spec = c.spec_for(t.tier, t.horizon);
        TrainConfig tc = c.train_for(t.horizon);
        tc.seed = task_seed(c, "train." + std::string(to_string(t.tier)) + hz(t.horizon),
                            static_cast<std::uint64_t>(t.cluster + 1));
        const WindowOptions w = window_options(c, spec);
        outcomes[i].result = t.tier == Tier::GM ? train_global(series, spec, w, tc)
                                                : train_cluster(series, assignment, t.cluster, spec, w, tc);
        outcomes[i].result.model.seed = tc.seed;
        outcomes[i].done = true;
        if (log) {
            std::lock_guard lock(log_mutex);
            log("train: " + model_file(t.tier, t.cluster, t.horizon) + " best epoch " +
                std::to_string(outcomes[i].result.best_epoch) + ", val MAE " +
                csv::format_double(outcomes[i].result.history[static_cast<std::size_t>(outcomes[i].result.best_epoch)].val_mae));
        }
    });
}

PerformanceTable evaluate_models(const PipelineConfig& c, int horizon, const std::vector<LoadSeries>& series,
                                 const std::vector<int>& assignment, const ForecastModel& gm,
                                 const std::map<int, const ForecastModel*>& lk,
                                 const std::map<int, const ForecastModel*>& lkv2) {
    const ModelSpec spec = c.spec_for(Tier::GM, horizon);
    const WindowedDataset data = window_series(series, window_options(c, spec));
    EvaluationSet set;
    set.horizon_minutes = horizon;
    set.data = &data;
    set.series_cluster = assignment;
    set.models.gm = &gm;
    set.models.lk = lk;
    set.models.lkv2 = lkv2;
    return build_performance_table({set}, c.policy.sizes);
}

void stage_train(const PipelineConfig& c, Workspace& ws, const LogFn& log) {
    const LoadedSeries in = read_series(ws);
    const io::ClusterArtifact clusters = io::clusters_from_json(json::parse(ws.read(kClusters, "cluster")));
    const std::vector<int> assignment = series_clusters(in.series, clusters);
    const int k = clusters.result.k;

    json index = json::array();
    auto record = [&](const TrainTask& t, const TrainResult& r) {
        const std::string base = model_file(t.tier, t.cluster, t.horizon);
        ws.write(base + ".json", io::dump(io::to_json(r.model)));
        ws.write(base + "_loss.csv", io::loss_history_csv(r.history));
        index.push_back({{"tier", std::string(to_string(t.tier))},
                         {"cluster", t.tier == Tier::GM ? json("shared") : json(t.cluster)},
                         {"horizon_min", t.horizon},
                         {"file", base + ".json"},
                         {"best_epoch", r.best_epoch}});
    };

    std::vector<TrainTask> tasks;
    for (int h : c.horizons_min) {
        tasks.push_back({Tier::GM, -1, h});
        for (int cl = 0; cl < k; ++cl) tasks.push_back({Tier::Lk, cl, h});
    }
    std::vector<TrainOutcome> first;
    run_train_tasks(c, tasks, in.series, assignment, first, log);
    for (std::size_t i = 0; i < tasks.size(); ++i) record(tasks[i], first[i].result);

    std::vector<TrainTask> escalate;
    for (int h : c.horizons_min) {
        if (c.lkv2_mode == Lkv2Mode::Never) break;
        if (c.lkv2_mode == Lkv2Mode::Always) {
            for (int cl = 0; cl < k; ++cl) escalate.push_back({Tier::Lkv2, cl, h});
            continue;
        }
        const ForecastModel* gm = nullptr;
        std::map<int, const ForecastModel*> lk;
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            if (tasks[i].horizon != h) continue;
            if (tasks[i].tier == Tier::GM) gm = &first[i].result.model;
            else lk[tasks[i].cluster] = &first[i].result.model;
        }
        const PerformanceTable provisional = evaluate_models(c, h, in.series, assignment, *gm, lk, {});
        DeployPolicy probe = c.policy;
        probe.memory_budget.reset();
        const DeploymentPlan plan = plan_deployment(provisional, probe, h);
        for (int cl : plan.escalation_candidates) escalate.push_back({Tier::Lkv2, cl, h});
    }
    if (!escalate.empty()) {
        std::vector<TrainOutcome> second;
        run_train_tasks(c, escalate, in.series, assignment, second, log);
        for (std::size_t i = 0; i < escalate.size(); ++i) record(escalate[i], second[i].result);
    }
    ws.write(kModelIndex, io::dump(index));
    log("train: " + std::to_string(index.size()) + " models");
}

void stage_evaluate(const PipelineConfig& c, Workspace& ws, const LogFn& log) {
    const LoadedSeries in = read_series(ws);
    const io::ClusterArtifact clusters = io::clusters_from_json(json::parse(ws.read(kClusters, "cluster")));
    const std::vector<int> assignment = series_clusters(in.series, clusters);
    const json index = json::parse(ws.read(kModelIndex, "train"));

    std::vector<ForecastModel> models;
    models.reserve(index.size());
    struct Entry {
        Tier tier;
        int cluster;
        int horizon;
    };
    std::vector<Entry> entries;
    for (const auto& e : index) {
        models.push_back(io::model_from_json(json::parse(ws.read(e.at("file").get<std::string>(), "train"))));
        const Tier tier = parse_tier(e.at("tier").get<std::string>());
        entries.push_back({tier, tier == Tier::GM ? -1 : e.at("cluster").get<int>(), e.at("horizon_min").get<int>()});
    }

    PerformanceTable table;
    for (int h : c.horizons_min) {
        const ForecastModel* gm = nullptr;
        std::map<int, const ForecastModel*> lk, lkv2;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (entries[i].horizon != h) continue;
            if (entries[i].tier == Tier::GM) gm = &models[i];
            else if (entries[i].tier == Tier::Lk) lk[entries[i].cluster] = &models[i];
            else lkv2[entries[i].cluster] = &models[i];
        }
        if (!gm) throw DependencyError("no GM model for horizon " + std::to_string(h) + " min (run 'train' first)");
        const PerformanceTable part = evaluate_models(c, h, in.series, assignment, *gm, lk, lkv2);
        for (const auto& r : part.rows) table.add(r);
    }
    ws.write(kPerfTable, io::performance_table_csv(table));
    ws.write(kKpiTable, io::kpi_table_csv(table));
    log("evaluate: " + std::to_string(table.rows.size()) + " performance rows");
}

PerformanceTable read_table(Workspace& ws) {
    std::istringstream in(ws.read(kPerfTable, "evaluate"));
    return io::parse_performance_table_csv(in);
}

void stage_plan(const PipelineConfig& c, Workspace& ws, const LogFn& log) {
    const PerformanceTable table = read_table(ws);
    for (int h : c.horizons_min) {
        const DeploymentPlan plan = plan_deployment(table, c.policy, h);
        ws.write("plan" + hz(h) + ".json", io::dump(io::to_json(plan, c.policy)));
        ws.write("cost_summary" + hz(h) + ".csv", io::cost_summary_csv(cost_summary(table, c.policy, h)));
        std::string tiers;
        for (const auto& [cl, d] : plan.assignment)
            tiers += " C" + std::to_string(cl) + ":" + std::string(to_string(d.tier));
        log("plan h" + std::to_string(h) + ":" + tiers + ", " +
            csv::format_double(plan.total_storage / kBytesPerMB) + " MB");
    }
}

void stage_report(const PipelineConfig& c, Workspace& ws, const LogFn& log) {
    const PerformanceTable table = read_table(ws);
    const io::ClusterArtifact clusters = io::clusters_from_json(json::parse(ws.read(kClusters, "cluster")));
    const PcaModel pca = io::pca_from_json(json::parse(ws.read(kPca, "reduce")));
    std::vector<std::string> ap_ids;
    const Matrix scaled = scaled_features(ws, ap_ids);
    const Matrix coords = pca_transform(pca, scaled, std::min<std::size_t>(2, pca.dims()));
    const json summary = json::parse(ws.read(kLoadJson, "ingest"));

    std::map<std::string, int> cluster_of;
    for (std::size_t i = 0; i < clusters.ap_ids.size(); ++i) cluster_of[clusters.ap_ids[i]] = clusters.result.assignments[i];

    std::string scatter = "ap_id,pc1,pc2,cluster\n";
    for (std::size_t i = 0; i < ap_ids.size(); ++i) {
        auto it = cluster_of.find(ap_ids[i]);
        if (it == cluster_of.end()) throw InvalidInput("AP '" + ap_ids[i] + "' missing from clusters.json");
        scatter += ap_ids[i] + "," + csv::format_double(coords(i, 0)) + "," +
                   csv::format_double(coords.cols() > 1 ? coords(i, 1) : 0.0) + "," + std::to_string(it->second) + "\n";
    }
    ws.write("cluster_scatter.csv", scatter);

    std::ostringstream text;
    text << "APs: " << summary.at("ap_count").get<std::size_t>() << ", windows per AP: "
         << summary.at("window_count").get<std::size_t>() << " (w = " << summary.at("step_w").get<Seconds>()
         << " s), source: " << summary.at("source").get<std::string>() << "\n";
    text << "clusters: k = " << clusters.result.k;
    if (clusters.result.silhouette) text << ", silhouette " << csv::format_double(*clusters.result.silhouette);
    if (clusters.result.calinski_harabasz)
        text << ", Calinski-Harabasz " << csv::format_double(*clusters.result.calinski_harabasz);
    text << "\n";
    std::vector<int> sizes(static_cast<std::size_t>(clusters.result.k), 0);
    for (int a : clusters.result.assignments) ++sizes[static_cast<std::size_t>(a)];
    for (std::size_t i = 0; i < sizes.size(); ++i) text << "  C" << i << ": " << sizes[i] << " APs\n";

    if (ws.exists(kLabels)) {
        std::istringstream in(ws.read(kLabels, "ingest"));
        const csv::Table t = csv::read(in);
        const std::size_t c_ap = t.require("ap_id"), c_label = t.require("label");
        std::vector<int> planted, found;
        for (const auto& row : t.rows) {
            auto it = cluster_of.find(row[c_ap]);
            if (it == cluster_of.end()) continue;
            planted.push_back(static_cast<int>(csv::parse_int(row[c_label])));
            found.push_back(it->second);
        }
        if (planted.size() >= 2)
            text << "adjusted Rand index vs. generator labels: "
                 << csv::format_double(adjusted_rand_index(planted, found)) << "\n";
    }

    std::string improvements = "horizon_min,cluster,base_tier,new_tier,improvement\n";
    std::string costs = "horizon_min,strategy,deployed_models,storage_mb,average_mae\n";
    for (int h : c.horizons_min) {
        std::string cmp = "cluster,gm_mae,lk_mae,lkv2_mae,gm_p99_mb,lk_p99_mb,lkv2_p99_mb\n";
        for (int cl : table.clusters()) {
            const PerformanceRow* rows[3] = {table.find(cl, Tier::GM, h), table.find(cl, Tier::Lk, h),
                                             table.find(cl, Tier::Lkv2, h)};
            if (!rows[0]) continue;
            cmp += std::to_string(cl);
            for (const auto* r : rows) cmp += "," + (r ? csv::format_double(r->mae) : std::string{});
            for (const auto* r : rows) cmp += "," + (r ? csv::format_double(r->p99_abs_error_mb) : std::string{});
            cmp += "\n";
            auto add = [&](const PerformanceRow* base, const PerformanceRow* next) {
                if (!base || !next || !(base->mae > 0.0)) return;
                improvements += std::to_string(h) + "," + std::to_string(cl) + "," +
                                std::string(to_string(base->tier)) + "," + std::string(to_string(next->tier)) + "," +
                                csv::format_double(improvement(base->mae, next->mae)) + "\n";
            };
            add(rows[0], rows[1]);
            add(rows[1], rows[2]);
            add(rows[0], rows[2]);
        }
        ws.write("mae_comparison" + hz(h) + ".csv", cmp);

        for (const auto& row : cost_summary(table, c.policy, h))
            costs += std::to_string(h) + ",\"" + row.strategy + "\"," + std::to_string(row.summary.models_deployed) +
                     "," + csv::format_double(row.summary.storage_bytes / kBytesPerMB) + "," +
                     (row.summary.average_mae ? csv::format_double(*row.summary.average_mae) : std::string{}) + "\n";

        const DeploymentPlan plan = plan_deployment(table, c.policy, h);
        const DeploymentPlan all_v2 = uniform_plan(table.clusters(), Tier::Lkv2, c.policy.sizes);
        text << "\nhorizon " << h << " min\n";
        for (const auto& [cl, d] : plan.assignment) {
            const PerformanceRow* gm = table.find(cl, Tier::GM, h);
            text << "  C" << cl << ": " << to_string(d.tier) << " (MAE " << csv::format_double(d.mae)
                 << (d.mae_estimated ? ", estimated" : "") << "; GM " << csv::format_double(gm->mae) << ")\n";
        }
        text << "  deployed models: " << plan.models_deployed << ", storage "
             << csv::format_double(plan.total_storage / kBytesPerMB) << " MB";
        if (plan.average_mae) text << ", average MAE " << csv::format_double(*plan.average_mae);
        text << "\n  memory saving vs. Lkv2 everywhere: "
             << csv::format_double(std::round(memory_saving(all_v2, plan) * 1000.0) / 10.0) << "%\n";
        if (!plan.within_budget) text << "  warning: even the GM-only plan exceeds the memory budget\n";
    }
    ws.write("improvement.csv", improvements);
    ws.write("cost_summary.csv", costs);
    ws.write("report.txt", text.str());
    log("report: written to " + ws.path("report.txt"));
}

}  // namespace

StageResult run_stage(Stage stage, const PipelineConfig& config, const LogFn& log_fn) {
    config.validate();
    const LogFn log = log_fn ? log_fn : [](const std::string&) {};
    fs::create_directories(config.out_dir);
    Workspace ws(config, stage);
    switch (stage) {
        case Stage::Ingest: stage_ingest(config, ws, log); break;
        case Stage::Features: stage_features(config, ws, log); break;
        case Stage::Reduce: stage_reduce(config, ws, log); break;
        case Stage::Cluster: stage_cluster(config, ws, log); break;
        case Stage::Train: stage_train(config, ws, log); break;
        case Stage::Evaluate: stage_evaluate(config, ws, log); break;
        case Stage::Plan: stage_plan(config, ws, log); break;
        case Stage::Report: stage_report(config, ws, log); break;
    }
    update_manifest(config, stage, ws);
    StageResult result;
    result.stage = stage;
    for (const auto& [name, hash] : ws.artifacts()) result.artifacts.push_back(name);
    return result;
}

std::vector<StageResult> run_all(const PipelineConfig& config, const LogFn& log) {
    std::vector<StageResult> out;
    for (Stage s : kAllStages) out.push_back(run_stage(s, config, log));
    return out;
}

std::vector<std::string> write_synthetic_records(const PipelineConfig& config, const LogFn& log) {
    validate(config.synthetic);
    const SyntheticDataset data = generate_synthetic(config.synthetic, task_seed(config, "synthetic", 0));
    std::string records = "ap_id,client_id,start_time,end_time,bytes_up,bytes_down\n";
    std::size_t count = 0;
    for (const auto& s : data.series) {
        std::vector<long long> users(s.size());
        long long max_users = 0;
        for (std::size_t t = 0; t < s.size(); ++t) {
            users[t] = std::llround(s.active_users[t]);
            if (s.load[t] > 0.0 && users[t] == 0) users[t] = 1;  // keep every byte attributable
            max_users = std::max(max_users, users[t]);
        }
        // Client j is present in window t iff j < users[t]; bytes split evenly among present clients.
        for (long long j = 0; j < max_users; ++j) {
            std::size_t t = 0;
            while (t < s.size()) {
                if (users[t] <= j) {
                    ++t;
                    continue;
                }
                const std::size_t begin = t;
                double bytes = 0.0;
                while (t < s.size() && users[t] > j) {
                    bytes += s.load[t] / static_cast<double>(users[t]);
                    ++t;
                }
                const auto total = static_cast<unsigned long long>(std::llround(bytes));
                const unsigned long long up = total / 5;
                records += s.ap_id + "," + s.ap_id + "-u" + std::to_string(j) + "," +
                           std::to_string(s.window_start(begin)) + "," + std::to_string(s.window_start(t)) + "," +
                           std::to_string(up) + "," + std::to_string(total - up) + "\n";
                ++count;
            }
        }
    }
    std::string labels = "ap_id,label,archetype\n";
    for (std::size_t i = 0; i < data.series.size(); ++i)
        labels += data.series[i].ap_id + "," + std::to_string(data.labels[i]) + "," +
                  data.archetype_names[static_cast<std::size_t>(data.labels[i])] + "\n";
    const fs::path dir(config.out_dir);
    io::write_file((dir / "synthetic_records.csv").string(), records);
    io::write_file((dir / "synthetic_labels.csv").string(), labels);
    if (log) log("synth: " + std::to_string(count) + " association records for " + std::to_string(data.series.size()) + " APs");
    return {"synthetic_records.csv", "synthetic_labels.csv"};
}

}  // namespace apf
