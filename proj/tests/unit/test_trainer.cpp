#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "uor/envs.hpp"
#include "uor/errors.hpp"
#include "uor/metric.hpp"
#include "uor/rollout.hpp"
#include "uor/trainer.hpp"

using namespace uor;

namespace {

std::vector<Trajectory> collect(const Pmdp& env, const Policy& policy, double p,
                                int n, std::uint64_t seed) {
  std::vector<Trajectory> out;
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    Rng stream = rng.fork();
    out.push_back(rollout(env, policy, std::vector<double>{p}, 0, stream));
  }
  return out;
}

TrainSetup chain_setup(double k, std::uint64_t seed, int iters, double lr) {
  TrainSetup setup;
  setup.mode = MetricMode::DB;
  setup.pref = PreferenceSpec::power(k);
  setup.max_iterations = iters;
  setup.learning_rate = lr;
  setup.seed = seed;
  DbMetricConfig mc;
  Division div = set_division(ParameterSpace({0.0}, {0.5}), 0.1);
  Rng mrng(1);
  compute_masses(div,
                 ParamDistribution::empirical(div.space(), {{0.05}, {0.45}},
                                              {0.5, 0.5}),
                 mrng);
  mc.division = div;
  mc.n_rollouts_per_block = 8;
  setup.db = mc;
  return setup;
}

}  // namespace

TEST_CASE("policy_update is pure and lr=0 is a no-op") {
  ParamChainEnv env({.n_states = 5});
  Policy policy = Policy::tabular_softmax(5, 2, "param_chain");
  const auto trajs = collect(env, policy, 0.2, 16, 7);
  const std::vector<WeightedBatch> batches{{0, 1.0, trajs}};

  const Policy a = policy_update(policy, batches, 0.05, BaselineKind::MeanReturn, 0.0, env.gamma());
  const Policy b = policy_update(policy, batches, 0.05, BaselineKind::MeanReturn, 0.0, env.gamma());
  CHECK(a.params() == b.params());

  const Policy frozen = policy_update(policy, batches, 0.0, BaselineKind::MeanReturn, 0.0, env.gamma());
  CHECK(frozen.params() == policy.params());
}

TEST_CASE("all weight on one batch equals a plain score-function step") {
  ParamChainEnv env({.n_states = 5});
  Policy policy = Policy::tabular_softmax(5, 2, "param_chain");
  const auto trajs_a = collect(env, policy, 0.1, 8, 3);
  const auto trajs_b = collect(env, policy, 0.4, 8, 4);

  const std::vector<WeightedBatch> weighted{{0, 1.0, trajs_b}, {1, 0.0, trajs_a}};
  const std::vector<WeightedBatch> plain{{0, 1.0, trajs_b}};
  const Policy w = policy_update(policy, weighted, 0.1, BaselineKind::None, 0.0, env.gamma());
  const Policy p = policy_update(policy, plain, 0.1, BaselineKind::None, 0.0, env.gamma());
  CHECK(w.params() == p.params());
}

TEST_CASE("batch weights must sum to one") {
  ParamChainEnv env({.n_states = 5});
  Policy policy = Policy::tabular_softmax(5, 2, "param_chain");
  const auto trajs = collect(env, policy, 0.2, 4, 7);
  const std::vector<WeightedBatch> bad{{0, 0.7, trajs}};
  CHECK_THROWS_AS(
      policy_update(policy, bad, 0.1, BaselineKind::None, 0.0, env.gamma()),
      ValidationError);
}

TEST_CASE("NaN rewards surface as a numerical failure naming the batch") {
  ParamChainEnv env({.n_states = 5});
  Policy policy = Policy::tabular_softmax(5, 2, "param_chain");
  auto trajs = collect(env, policy, 0.2, 4, 7);
  trajs[1].steps[0].reward = std::nan("");
  const std::vector<WeightedBatch> batches{{3, 1.0, trajs}};
  try {
    policy_update(policy, batches, 0.1, BaselineKind::None, 0.0, env.gamma());
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
}

TEST_CASE("surrogate gradient matches central finite differences on frozen data") {
  ParamChainEnv env({.n_states = 3});
  Policy policy = Policy::tabular_softmax(3, 2, "param_chain");
  Rng init(5);
  for (double& v : policy.params()) v = init.uniform(-0.3, 0.3);

  const auto batch_a = collect(env, policy, 0.1, 400, 11);
  const auto batch_b = collect(env, policy, 0.4, 400, 12);
  const std::vector<WeightedBatch> batches{{0, 0.7, batch_a}, {1, 0.3, batch_b}};
  const double baseline = batch_mean_return(batches);
  const double beta = 0.1;  // exercise the entropy term too

  const auto grad = surrogate_gradient(policy, batches, env.gamma(), baseline, beta);
  const double h = 1e-5;
  for (std::size_t i = 0; i < policy.params().size(); ++i) {
    Policy plus = policy;
    Policy minus = policy;
    plus.params()[i] += h;
    minus.params()[i] -= h;
    const double fd = (surrogate_value(plus, batches, env.gamma(), baseline, beta) -
                       surrogate_value(minus, batches, env.gamma(), baseline, beta)) /
                      (2.0 * h);
    CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("score-function gradient is unbiased for the plain expected return") {
  // k=0, one unit: the estimator must match the exact gradient of J.
  ParamChainEnv env({.n_states = 3});
  Policy policy = Policy::tabular_softmax(3, 2, "param_chain");
  policy.params()[2] = 0.3;  // state 1, action Left logit stays 0

  const double p = 0.2;
  const auto trajs = collect(env, policy, p, 200000, 77);
  const std::vector<WeightedBatch> batches{{0, 1.0, trajs}};
  const auto grad =
      surrogate_gradient(policy, batches, env.gamma(), batch_mean_return(batches), 0.0);

  const double h = 1e-5;
  for (int a = 0; a < 2; ++a) {
    Policy plus = policy;
    Policy minus = policy;
    plus.params()[static_cast<std::size_t>(2 + a)] += h;
    minus.params()[static_cast<std::size_t>(2 + a)] -= h;
    const double fd = (exact_chain_return(env, plus, std::vector<double>{p}) -
                       exact_chain_return(env, minus, std::vector<double>{p})) /
                      (2.0 * h);
    CHECK(grad[static_cast<std::size_t>(2 + a)] == doctest::Approx(fd).epsilon(0.05).scale(0.1));
  }
}

TEST_CASE("train: no-op loop returns the initial policy with one report") {
  ParamChainEnv env({.n_states = 7});
  TrainSetup setup = chain_setup(1.0, 42, 1, 0.0);
  const auto out = train(env, setup);
  CHECK(out.completed);
  CHECK(out.history.size() == 1);
  for (double v : out.policy.params()) CHECK(v == 0.0);
}

TEST_CASE("train: bitwise-identical history for a fixed seed") {
  ParamChainEnv env({.n_states = 7});
  const TrainSetup setup = chain_setup(1.0, 2024, 25, 0.1);
  const auto a = train(env, setup);
  const auto b = train(env, setup);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].value == b.history[i].value);
  }
  CHECK(a.policy.params() == b.policy.params());
}

TEST_CASE("train: report value equals the weighted batch means as logged") {
  ParamChainEnv env({.n_states = 7});
  TrainSetup setup = chain_setup(2.0, 5, 5, 0.1);
  const auto out = train(env, setup);
  for (const auto& report : out.history) {
    double recon = 0.0;
    for (std::size_t u = 0; u < report.unit_returns.size(); ++u) {
      recon += report.unit_weights[u] * report.unit_returns[u];
    }
    CHECK(report.value == doctest::Approx(recon).epsilon(1e-12));
  }
}

TEST_CASE("train: smoothed metric trend is nondecreasing on the two-regime task") {
  ParamChainConfig cfg;
  cfg.n_states = 7;
  cfg.left_reward = 0.6;
  cfg.start_index = 1;
  ParamChainEnv env(cfg);
  for (double k : {0.0, 21.0}) {
    TrainSetup setup = chain_setup(k, 12, 120, 0.5);
    setup.db->n_rollouts_per_block = 24;
    const auto out = train(env, setup);
    REQUIRE(out.completed);
    auto window_mean = [&](std::size_t begin) {
      double acc = 0.0;
      for (std::size_t i = begin; i < begin + 10; ++i) acc += out.history[i].value;
      return acc / 10.0;
    };
    CHECK(window_mean(out.history.size() - 10) >= window_mean(0) - 1e-9);
  }
}

TEST_CASE("train: DF mode with a drifting parameter source") {
  ParamChainEnv env({.n_states = 5});
  TrainSetup setup;
  setup.mode = MetricMode::DF;
  setup.pref = PreferenceSpec::power(1.0);
  setup.max_iterations = 5;
  setup.learning_rate = 0.05;
  setup.seed = 3;
  setup.df = DfMetricConfig{8, 3, 0};
  setup.df_dist = ParamDistribution::uniform(ParameterSpace({0.0}, {0.5}));
  setup.df_source.iid = false;
  setup.df_source.step_bound = 0.05;
  const auto out = train(env, setup);
  CHECK(out.completed);
  CHECK(out.history.size() == 5);
  CHECK(out.history.front().ledger.entries.size() == 8);

  // Accumulation fidelity mode keeps clusters growing across iterations.
  setup.accumulate_clusters = true;
  const auto acc = train(env, setup);
  CHECK(acc.completed);
  CHECK(acc.history.size() == 5);
}

TEST_CASE("enumerate_optimal_tabular: degenerate and symmetric grids") {
  ParamChainEnv env({.n_states = 5});
  // Single parameter: the ordinary MDP optimum is always-Right.
  {
    const std::vector<std::vector<double>> grid{{0.1}};
    const std::vector<double> masses{1.0};
    const auto [policy, value] =
        enumerate_optimal_tabular(env, grid, masses, PreferenceSpec::power(3.0));
    Policy right = Policy::tabular_softmax(5, 2, "param_chain");
    for (int s = 0; s < 5; ++s) right.params()[static_cast<std::size_t>(s) * 2 + 1] = 30.0;
    CHECK(value == doctest::Approx(exact_chain_return(env, right, grid[0])).epsilon(1e-9));
    CHECK(policy.action_probs(2)[1] > 0.99);
  }
  // slip = 0.5 washes out the policy entirely: everything ties at the oracle value.
  {
    const std::vector<std::vector<double>> grid{{0.5}};
    const std::vector<double> masses{1.0};
    const auto [policy, value] =
        enumerate_optimal_tabular(env, grid, masses, PreferenceSpec::power(0.0));
    Policy uniform = Policy::tabular_softmax(5, 2, "param_chain");
    CHECK(value == doctest::Approx(exact_chain_return(env, uniform, grid[0])).epsilon(1e-9));
  }
}

TEST_CASE("enumerate_optimal_tabular: capacity guard") {
  ParamChainEnv env({.n_states = 21});
  const std::vector<std::vector<double>> grid{{0.1}};
  const std::vector<double> masses{1.0};
  CHECK_THROWS_AS(
      enumerate_optimal_tabular(env, grid, masses, PreferenceSpec::power(0.0)),
      CapacityError);
}

TEST_CASE("train on the mass env with a linear-Gaussian policy runs clean") {
  ParamMassConfig mcfg;
  mcfg.horizon = 10;
  mcfg.gamma = 0.99;
  ParamMassEnv env(mcfg);
  TrainSetup setup;
  setup.mode = MetricMode::DB;
  setup.pref = PreferenceSpec::power(1.0);
  setup.max_iterations = 10;
  setup.learning_rate = 0.005;
  setup.seed = 9;
  DbMetricConfig mc;
  Division div = set_division(ParameterSpace({0.4, 0.0}, {0.9, 0.2}), 0.3);
  Rng mrng(1);
  compute_masses(div, ParamDistribution::uniform(div.space()), mrng);
  mc.division = div;
  mc.n_rollouts_per_block = 4;
  setup.db = mc;
  const auto out = train(env, setup);
  CHECK(out.completed);
  CHECK(out.policy.kind() == PolicyKind::LinearGaussian);
  CHECK(out.history.size() == 10);
}
