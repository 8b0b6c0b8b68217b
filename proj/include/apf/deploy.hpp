#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "apf/eval.hpp"

namespace apf {

struct DeployPolicy {
    double absolute_floor = 0.001;        // alpha: GM is good enough at or below this MAE
    double relative_threshold = 0.20;     // theta: minimum GM -> Lk improvement
    double escalation_threshold = 0.004;  // beta: Lk MAE above this triggers Lkv2
    std::optional<double> memory_budget;  // bytes; unlimited when empty
    NominalSizes sizes;
    // With no Lkv2 row for a cluster that needs escalation, assign Lkv2 anyway
    // (its MAE is taken as the Lk MAE). Otherwise only flag the cluster.
    bool lkv2_trainable = true;

    void validate() const;
};

struct ModelInstance {
    Tier tier = Tier::GM;
    int cluster = -1;  // -1 for the shared GM
    double storage_bytes = 0.0;
};

struct ClusterDecision {
    Tier tier = Tier::GM;
    double mae = 0.0;
    bool mae_estimated = false;  // Lkv2 assigned without a measured row
};

struct DeploymentPlan {
    int horizon_minutes = 10;
    std::map<int, ClusterDecision> assignment;
    std::vector<ModelInstance> instances;
    double total_storage = 0.0;  // bytes
    std::optional<double> average_mae;
    int models_deployed = 0;
    bool within_budget = true;
    std::vector<int> escalation_candidates;  // need Lkv2 but none is available
    std::vector<int> budget_reverted;        // clusters downgraded to fit the budget, in order

    std::map<int, Tier> tiers() const;
};

/// Applies the alpha/theta/beta policy per cluster, then reverts the upgrades
/// with the smallest improvement per byte until the budget holds. Throws
/// InvalidInput naming the cluster when its GM row is missing.
DeploymentPlan plan_deployment(const PerformanceTable& table, const DeployPolicy& policy, int horizon_minutes);

/// Every cluster on one tier. average_mae is filled only when the table has
/// a row for every cluster.
DeploymentPlan uniform_plan(const std::vector<int>& clusters, Tier tier, const NominalSizes& sizes,
                            const PerformanceTable* table = nullptr, int horizon_minutes = 10);

/// Plan from an explicit assignment; MAEs are looked up when a table is given.
DeploymentPlan plan_from_assignment(const std::map<int, Tier>& assignment, const NominalSizes& sizes,
                                    const PerformanceTable* table = nullptr, int horizon_minutes = 10);

struct PlanSummary {
    int models_deployed = 0;
    double storage_bytes = 0.0;
    std::optional<double> average_mae;  // unweighted mean over clusters
};

PlanSummary plan_summary(const DeploymentPlan& plan);

/// (storage_a - storage_b) / storage_a. Throws InvalidInput on zero storage.
double memory_saving(const DeploymentPlan& a, const DeploymentPlan& b);

struct CostSummaryRow {
    std::string strategy;
    PlanSummary summary;
};

/// The three strategies compared in the cost summary: global only, every
/// cluster on Lkv2, and the policy plan.
std::vector<CostSummaryRow> cost_summary(const PerformanceTable& table, const DeployPolicy& policy,
                                         int horizon_minutes);

/// A computed figure that differs from an externally supplied reference value.
struct Discrepancy {
    std::string field;
    double computed = 0.0;
    double reference = 0.0;
};

/// Compares a row against reference values; fields within `tolerance`
/// (relative) are not reported.
std::vector<Discrepancy> compare_to_reference(const CostSummaryRow& row, int reference_models,
                                              double reference_storage_mb,
                                              std::optional<double> reference_average_mae,
                                              double tolerance = 1e-9);

}  // namespace apf
