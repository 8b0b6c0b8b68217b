#include "apf/deploy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

namespace apf {

void DeployPolicy::validate() const {
    std::vector<std::string> problems;
    if (!(absolute_floor > 0.0)) problems.push_back("absolute_floor must be > 0");
    if (!(relative_threshold > 0.0)) problems.push_back("relative_threshold must be > 0");
    if (!(escalation_threshold > 0.0)) problems.push_back("escalation_threshold must be > 0");
    if (!(sizes.gm > 0.0 && sizes.lk > 0.0 && sizes.lkv2 > 0.0)) problems.push_back("nominal sizes must be > 0");
    if (memory_budget && !(*memory_budget >= 0.0)) problems.push_back("memory_budget must be >= 0");
    if (problems.empty()) return;
    std::string msg = "invalid deploy policy: " + problems.front();
    for (std::size_t i = 1; i < problems.size(); ++i) msg += "; " + problems[i];
    throw ConfigError(msg);
}

std::map<int, Tier> DeploymentPlan::tiers() const {
    std::map<int, Tier> out;
    for (const auto& [c, d] : assignment) out[c] = d.tier;
    return out;
}

namespace {

// Rebuilds instances and totals from the assignment.
void finalize(DeploymentPlan& plan, const NominalSizes& sizes) {
    plan.instances.clear();
    const bool uses_gm = std::any_of(plan.assignment.begin(), plan.assignment.end(),
                                     [](const auto& kv) { return kv.second.tier == Tier::GM; });
    if (uses_gm) plan.instances.push_back({Tier::GM, -1, sizes.gm});
    for (const auto& [c, d] : plan.assignment)
        if (d.tier != Tier::GM) plan.instances.push_back({d.tier, c, sizes.of(d.tier)});
    plan.total_storage = 0.0;
    for (const auto& inst : plan.instances) plan.total_storage += inst.storage_bytes;
    plan.models_deployed = static_cast<int>(plan.instances.size());
}

void fill_average(DeploymentPlan& plan, bool all_known) {
    if (!all_known || plan.assignment.empty()) {
        plan.average_mae.reset();
        return;
    }
    std::vector<double> maes;
    for (const auto& [c, d] : plan.assignment) maes.push_back(d.mae);
    plan.average_mae = stats::mean(maes);
}

std::vector<int> clusters_at(const PerformanceTable& table, int horizon) {
    std::set<int> s;
    for (const auto& r : table.rows)
        if (r.horizon_minutes == horizon) s.insert(r.cluster);
    return {s.begin(), s.end()};
}

}  // namespace

DeploymentPlan plan_deployment(const PerformanceTable& table, const DeployPolicy& policy, int horizon_minutes) {
    policy.validate();
    const std::vector<int> clusters = clusters_at(table, horizon_minutes);
    if (clusters.empty()) throw InvalidInput("performance table has no rows for horizon " + std::to_string(horizon_minutes));

    DeploymentPlan plan;
    plan.horizon_minutes = horizon_minutes;
    for (int c : clusters) {
        const PerformanceRow* gm = table.find(c, Tier::GM, horizon_minutes);
        if (!gm) throw InvalidInput("cluster " + std::to_string(c) + ": missing GM row");
        ClusterDecision d{Tier::GM, gm->mae, false};
        if (gm->mae > policy.absolute_floor) {
            const PerformanceRow* lk = table.find(c, Tier::Lk, horizon_minutes);
            if (!lk) throw InvalidInput("cluster " + std::to_string(c) + ": missing Lk row");
            if (improvement(gm->mae, lk->mae) >= policy.relative_threshold) {
                d = {Tier::Lk, lk->mae, false};
                if (lk->mae > policy.escalation_threshold) {
                    if (const PerformanceRow* v2 = table.find(c, Tier::Lkv2, horizon_minutes)) {
                        if (v2->mae < lk->mae) d = {Tier::Lkv2, v2->mae, false};
                    } else {
                        plan.escalation_candidates.push_back(c);
                        if (policy.lkv2_trainable) d = {Tier::Lkv2, lk->mae, true};
                    }
                }
            }
        }
        plan.assignment[c] = d;
    }
    finalize(plan, policy.sizes);

    if (policy.memory_budget) {
        const double budget = *policy.memory_budget;
        while (plan.total_storage > budget) {
            // Candidate step per cluster: its most recent upgrade.
            using Key = std::tuple<double, int, int>;  // ratio, 0 = Lkv2 step first, cluster
            std::optional<Key> best;
            for (const auto& [c, d] : plan.assignment) {
                if (d.tier == Tier::GM) continue;
                const double gm_mae = table.find(c, Tier::GM, horizon_minutes)->mae;
                double gain = 0.0, bytes = 0.0;
                int kind = 1;
                if (d.tier == Tier::Lkv2) {
                    const double lk_mae = table.find(c, Tier::Lk, horizon_minutes)->mae;
                    gain = (d.mae_estimated || lk_mae <= 0.0) ? 0.0 : improvement(lk_mae, d.mae);
                    bytes = policy.sizes.lkv2 - policy.sizes.lk;
                    kind = 0;
                } else {
                    gain = improvement(gm_mae, d.mae);
                    bytes = policy.sizes.lk;
                }
                const double ratio = bytes > 0.0 ? gain / bytes : std::numeric_limits<double>::infinity();
                const Key key{ratio, kind, c};
                if (!best || key < *best) best = key;
            }
            if (!best) break;
            const int c = std::get<2>(*best);
            ClusterDecision& d = plan.assignment[c];
            if (d.tier == Tier::Lkv2) {
                d = {Tier::Lk, table.find(c, Tier::Lk, horizon_minutes)->mae, false};
            } else {
                d = {Tier::GM, table.find(c, Tier::GM, horizon_minutes)->mae, false};
            }
            plan.budget_reverted.push_back(c);
            finalize(plan, policy.sizes);
        }
        plan.within_budget = plan.total_storage <= budget;
    }
    fill_average(plan, true);
    return plan;
}

DeploymentPlan plan_from_assignment(const std::map<int, Tier>& assignment, const NominalSizes& sizes,
                                    const PerformanceTable* table, int horizon_minutes) {
    if (assignment.empty()) throw InvalidInput("assignment is empty");
    DeploymentPlan plan;
    plan.horizon_minutes = horizon_minutes;
    bool all_known = table != nullptr;
    for (const auto& [c, tier] : assignment) {
        ClusterDecision d{tier, 0.0, false};
        if (table) {
            if (const PerformanceRow* r = table->find(c, tier, horizon_minutes))
                d.mae = r->mae;
            else
                all_known = false;
        }
        plan.assignment[c] = d;
    }
    finalize(plan, sizes);
    fill_average(plan, all_known);
    return plan;
}

DeploymentPlan uniform_plan(const std::vector<int>& clusters, Tier tier, const NominalSizes& sizes,
                            const PerformanceTable* table, int horizon_minutes) {
    std::map<int, Tier> assignment;
    for (int c : clusters) assignment[c] = tier;
    return plan_from_assignment(assignment, sizes, table, horizon_minutes);
}

PlanSummary plan_summary(const DeploymentPlan& plan) {
    return {plan.models_deployed, plan.total_storage, plan.average_mae};
}

double memory_saving(const DeploymentPlan& a, const DeploymentPlan& b) {
    if (!(a.total_storage > 0.0) || !(b.total_storage > 0.0))
        throw InvalidInput("memory_saving: plan storage must be positive");
    return (a.total_storage - b.total_storage) / a.total_storage;
}

std::vector<CostSummaryRow> cost_summary(const PerformanceTable& table, const DeployPolicy& policy,
                                         int horizon_minutes) {
    const std::vector<int> clusters = clusters_at(table, horizon_minutes);
    return {
        {"One Global Model", plan_summary(uniform_plan(clusters, Tier::GM, policy.sizes, &table, horizon_minutes))},
        {"All Cluster-Specific (Lkv2)",
         plan_summary(uniform_plan(clusters, Tier::Lkv2, policy.sizes, &table, horizon_minutes))},
        {"Scalable Deployment Strategy", plan_summary(plan_deployment(table, policy, horizon_minutes))},
    };
}

std::vector<Discrepancy> compare_to_reference(const CostSummaryRow& row, int reference_models,
                                              double reference_storage_mb,
                                              std::optional<double> reference_average_mae, double tolerance) {
    std::vector<Discrepancy> out;
    auto check = [&](const char* field, double computed, double reference) {
        const double scale = std::max(std::abs(computed), std::abs(reference));
        if (std::abs(computed - reference) > tolerance * std::max(scale, 1e-300)) out.push_back({field, computed, reference});
    };
    check("models_deployed", row.summary.models_deployed, reference_models);
    check("storage_mb", row.summary.storage_bytes / kBytesPerMB, reference_storage_mb);
    if (reference_average_mae && row.summary.average_mae)
        check("average_mae", *row.summary.average_mae, *reference_average_mae);
    return out;
}

}  // namespace apf
