#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "uor/distribution.hpp"
#include "uor/envs.hpp"
#include "uor/metric.hpp"
#include "uor/preference.hpp"
#include "uor/trainer.hpp"

namespace uor {

// Experiment configuration: a versioned JSON file with strict keys (unknown
// keys are hard errors). Sizing helpers (epsilon/rho) are resolved to
// concrete delta / n1 / n2 at parse time, so serialize() always emits the
// resolved form and parse(serialize(parse(x))) == parse(x).

struct DistributionSpec {
  std::string kind;  // uniform | truncated_gaussian | empirical | mixture
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<std::vector<double>> points;
  std::vector<double> weights;
  std::vector<DistributionSpec> components;

  bool operator==(const DistributionSpec&) const = default;
};

struct PreferenceConfig {
  std::string kind = "power";  // power | table
  double k = 0.0;              // may be +inf (Dirac sentinel)
  std::vector<std::pair<double, double>> knots;

  bool operator==(const PreferenceConfig&) const = default;
};

struct MetricConfig {
  // DB sizing
  double delta = 0.0;
  int n_rollouts_per_block = 8;
  std::int64_t n_mc_masses = 100000;
  // DF sizing
  std::int64_t n1 = 0;
  std::int64_t n2 = 0;
  std::string param_source = "iid";  // iid | drift
  double step_bound = 0.0;
  // shared
  int horizon = 0;

  bool operator==(const MetricConfig&) const = default;
};

struct TrainerConfig {
  int max_iterations = 100;
  double learning_rate = 0.05;
  std::string baseline = "mean_return";  // none | mean_return
  double entropy_bonus = 0.0;
  bool accumulate_clusters = false;

  bool operator==(const TrainerConfig&) const = default;
};

struct EvalConfig {
  int rollouts_per_cell = 30;
  int n_trajectories = 400;

  bool operator==(const EvalConfig&) const = default;
};

struct ExperimentConfig {
  int version = 1;

  std::string env_name = "param_chain";
  ParamChainConfig chain;
  ParamMassConfig mass;

  std::vector<double> space_lower;
  std::vector<double> space_upper;
  DistributionSpec distribution;
  PreferenceConfig preference;

  std::string mode = "db";  // db | df
  MetricConfig metric;
  TrainerConfig trainer;
  EvalConfig eval;

  std::vector<std::uint64_t> seeds;
  std::string output_dir = "out";

  // Construction of runtime objects.
  std::unique_ptr<Pmdp> make_env() const;
  ParameterSpace make_space() const;
  ParamDistribution make_distribution() const;
  PreferenceSpec make_preference() const;
  PreferenceSpec make_preference(double k_override) const;
  // Division with masses filled (deterministic; Monte-Carlo mixture masses
  // use a fixed internal stream so every seed sees identical masses).
  Division make_division() const;
  TrainSetup make_train_setup(std::uint64_t seed) const;

  std::string serialize() const;

  bool operator==(const ExperimentConfig&) const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

}  // namespace uor
