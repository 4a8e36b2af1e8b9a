#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uor/distribution.hpp"
#include "uor/param_space.hpp"
#include "uor/pmdp.hpp"
#include "uor/policy.hpp"
#include "uor/preference.hpp"
#include "uor/rollout.hpp"

namespace uor {

enum class MetricMode { DB, DF };

// Distribution-based estimator configuration: a division with masses filled
// plus the per-block rollout budget.
struct DbMetricConfig {
  Division division;
  int n_rollouts_per_block = 8;
  int horizon = 0;  // 0 => environment default

  void validate() const;
};

struct DfMetricConfig {
  int n1 = 1;  // cluster count
  int n2 = 1;  // trajectories per cluster
  int horizon = 0;
};

// One evaluation unit (block or cluster): its trajectories and mean return.
struct CollectedUnit {
  int id = 0;
  double mass = 0.0;
  double mean_return = 0.0;
  std::vector<Trajectory> trajectories;
};

struct MetricReport {
  double value = 0.0;
  MetricMode mode = MetricMode::DB;
  RankedLedger ledger;
  std::vector<double> unit_returns;  // indexed by unit id
  std::vector<double> unit_weights;  // indexed by unit id
};

// Sorted-weighted reduction shared by both estimators: stable ascending sort
// of unit mean returns, per-unit weight = integral of W over the unit's
// cumulative mass interval, value = sum of weight * return.
MetricReport metric_from_returns(
    std::span<const std::pair<double, double>> returns_and_masses,
    const PreferenceSpec& pref, MetricMode mode);

// Distribution-based estimator: estimate the return at each block
// representative, then apply the sorted-weighted reduction over block masses.
MetricReport db_metric(const Pmdp& env, const Policy& policy,
                       const DbMetricConfig& cfg, const PreferenceSpec& pref,
                       Rng& rng);

// Distribution-based value when per-block returns are known exactly
// (oracle substitution path; no rollouts).
MetricReport db_metric_with_returns(std::span<const double> block_returns,
                                    const Division& division,
                                    const PreferenceSpec& pref);

// Distribution-free estimator: n1 clusters of n2 trajectories, parameters
// drawn sequentially from the source (cluster j gets n2 consecutive draws),
// cluster masses fixed at 1/n1. Clusters are rebuilt fresh on every call.
MetricReport df_metric(const Pmdp& env, const Policy& policy,
                       const DfMetricConfig& cfg, ParameterProcess& params,
                       const PreferenceSpec& pref, Rng& rng);

// Unit collection used by both the estimators and the training loop.
std::vector<CollectedUnit> collect_db_units(const Pmdp& env,
                                            const Policy& policy,
                                            const DbMetricConfig& cfg,
                                            Rng& rng);
std::vector<CollectedUnit> collect_df_units(const Pmdp& env,
                                            const Policy& policy,
                                            const DfMetricConfig& cfg,
                                            ParameterProcess& params,
                                            Rng& rng);
MetricReport metric_from_units(const std::vector<CollectedUnit>& units,
                               const PreferenceSpec& pref, MetricMode mode);

// Block-diameter suggestion delta = scale * epsilon; scale stands in for the
// environment-dependent constant that theory leaves uncomputed.
double suggest_delta(double epsilon, double scale);

struct ClusterSizes {
  std::int64_t n1 = 0;
  std::int64_t n2 = 0;
};

// n1 = ceil(c1 * (-ln rho) / eps^2), n2 = ceil(c2 * (-ln rho) / eps^(2d+2)).
ClusterSizes suggest_cluster_sizes(double epsilon, double rho, int dims,
                                   double c1 = 1.0, double c2 = 1.0);

// Audit CSV: rank, source_id, J, mass, weight, cumulative_mass.
void write_metric_report_csv(const MetricReport& report, const std::string& path);

}  // namespace uor
