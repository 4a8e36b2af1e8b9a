#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uor/distribution.hpp"
#include "uor/envs.hpp"
#include "uor/metric.hpp"
#include "uor/pmdp.hpp"
#include "uor/policy.hpp"
#include "uor/preference.hpp"

namespace uor {

enum class BaselineKind { None, MeanReturn };

struct WeightedBatch {
  int unit_id = 0;
  double weight = 0.0;
  std::span<const Trajectory> trajectories;
};

// Mean discounted return over all trajectories in the batches (the
// mean-return baseline, frozen per update).
double batch_mean_return(std::span<const WeightedBatch> batches);

// Likelihood-ratio surrogate of the weighted objective at theta:
//   L = sum_j w_j * (1/|B_j|) * sum_traj sum_t [ log pi(a_t|s_t) * (G_t - b)
//                                               + entropy_bonus * H(pi(.|s_t)) ]
// with reward-to-go G_t = sum_{t'>=t} gamma^t' r_t' and the ranking weights
// w_j held constant. Its gradient at the collection policy is the
// score-function estimate of the weighted objective's gradient.
double surrogate_value(const Policy& policy,
                       std::span<const WeightedBatch> batches, double gamma,
                       double baseline, double entropy_bonus);

std::vector<double> surrogate_gradient(const Policy& policy,
                                       std::span<const WeightedBatch> batches,
                                       double gamma, double baseline,
                                       double entropy_bonus);

// One ascent step on the surrogate; returns a new policy, input unchanged.
Policy policy_update(const Policy& policy,
                     std::span<const WeightedBatch> batches,
                     double learning_rate, BaselineKind baseline,
                     double entropy_bonus, double gamma);

struct DfSourceConfig {
  bool iid = true;
  double step_bound = 0.0;  // drift bound when iid is false
};

struct TrainSetup {
  MetricMode mode = MetricMode::DB;
  PreferenceSpec pref = PreferenceSpec::power(0.0);
  int max_iterations = 100;
  double learning_rate = 0.05;
  BaselineKind baseline = BaselineKind::MeanReturn;
  double entropy_bonus = 0.0;
  std::uint64_t seed = 0;

  std::optional<DbMetricConfig> db;
  std::optional<DfMetricConfig> df;
  std::optional<ParamDistribution> df_dist;  // parameter source for DF mode
  DfSourceConfig df_source;

  // Fidelity mode: keep trajectories from earlier iterations in the DF
  // clusters instead of rebuilding them fresh. Mixes stale policies into the
  // cluster means; off by default.
  bool accumulate_clusters = false;

  void validate() const;
};

struct TrainOutput {
  Policy policy;
  std::vector<MetricReport> history;   // one report per completed iteration
  std::vector<double> iter_seconds;    // wall time per iteration
  bool completed = false;
  std::string failure;                 // set when training halted early
};

// Full training loop: collect per-block (DB) or per-cluster (DF)
// trajectories, compute the metric report, derive weights, apply
// policy_update. Deterministic given the seed. On numerical failure the
// partial history is returned with completed = false.
TrainOutput train(const Pmdp& env, const TrainSetup& setup);

// Exhaustive oracle for small tabular tasks: evaluates every deterministic
// chain policy exactly on the parameter grid and returns the metric
// maximizer (as a sharp softmax policy) together with its metric value.
std::pair<Policy, double> enumerate_optimal_tabular(
    const ParamChainEnv& env, std::span<const std::vector<double>> param_grid,
    std::span<const double> masses, const PreferenceSpec& pref);

}  // namespace uor
