#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "uor/csv.hpp"
#include "uor/envs.hpp"
#include "uor/errors.hpp"
#include "uor/metric.hpp"

using namespace uor;

namespace {

Policy right_policy(int n_states) {
  Policy p = Policy::tabular_softmax(n_states, 2, "param_chain");
  for (int s = 0; s < n_states; ++s) p.params()[static_cast<std::size_t>(s) * 2 + 1] = 30.0;
  return p;
}

Division uniform_division(double lo, double hi, double delta) {
  Division div = set_division(ParameterSpace({lo}, {hi}), delta);
  Rng rng(1);
  compute_masses(div, ParamDistribution::uniform(div.space()), rng);
  return div;
}

std::vector<std::pair<double, double>> dirichlet_pairs(Rng& rng, int n) {
  std::vector<std::pair<double, double>> pairs;
  std::vector<double> masses(static_cast<std::size_t>(n));
  double total = 0.0;
  for (double& m : masses) {
    m = -std::log(1.0 - rng.uniform());
    total += m;
  }
  double acc = 0.0;
  for (int i = 0; i < n - 1; ++i) {
    masses[static_cast<std::size_t>(i)] /= total;
    acc += masses[static_cast<std::size_t>(i)];
  }
  masses[static_cast<std::size_t>(n - 1)] = 1.0 - acc;
  for (int i = 0; i < n; ++i) pairs.emplace_back(rng.uniform(-50.0, 50.0), masses[static_cast<std::size_t>(i)]);
  return pairs;
}

}  // namespace

TEST_CASE("db reduction with substituted returns matches the exact metric") {
  Division div = uniform_division(0.0, 1.0, 0.5);
  REQUIRE(div.size() == 2);
  const std::vector<double> returns{1.0, 3.0};
  const auto report =
      db_metric_with_returns(returns, div, PreferenceSpec::power(1.0));
  CHECK(report.value == doctest::Approx(1.5).epsilon(1e-12));

  const auto exact = exact_metric(
      std::vector<std::pair<double, double>>{{1.0, 0.5}, {3.0, 0.5}},
      PreferenceSpec::power(1.0));
  CHECK(report.value == doctest::Approx(exact.value).epsilon(1e-12));
}

TEST_CASE("k=0 reduces to the mass-weighted mean") {
  Division div = uniform_division(0.0, 2.0, 0.5);
  const std::vector<double> returns{4.0, -1.0, 2.5, 0.5};
  const auto report = db_metric_with_returns(returns, div, PreferenceSpec::power(0.0));
  double expected = 0.0;
  for (std::size_t j = 0; j < returns.size(); ++j) {
    expected += div.blocks()[j].mass * returns[j];
  }
  CHECK(report.value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("single-block division returns the representative's value") {
  Division div = uniform_division(0.0, 1.0, 5.0);
  REQUIRE(div.size() == 1);
  const auto report =
      db_metric_with_returns(std::vector<double>{0.77}, div, PreferenceSpec::power(3.0));
  CHECK(report.value == doctest::Approx(0.77).epsilon(1e-12));
}

TEST_CASE("path equivalence on random chain policies and divisions") {
  ParamChainEnv env({.n_states = 7});
  Rng rng(2211);
  for (int trial = 0; trial < 20; ++trial) {
    Policy policy = Policy::tabular_softmax(7, 2, "param_chain");
    for (double& v : policy.params()) v = rng.uniform(-1.5, 1.5);
    const double delta = rng.uniform(0.04, 0.5);
    Division div = uniform_division(0.0, 0.5, delta);

    std::vector<double> returns;
    std::vector<std::pair<double, double>> pairs;
    for (const Block& b : div.blocks()) {
      returns.push_back(exact_chain_return(env, policy, b.representative));
      pairs.emplace_back(returns.back(), b.mass);
    }
    const double k = rng.uniform(0.0, 8.0);
    const auto via_db = db_metric_with_returns(returns, div, PreferenceSpec::power(k));
    const auto via_pref = exact_metric(pairs, PreferenceSpec::power(k));
    CHECK(std::abs(via_db.value - via_pref.value) <= 1e-12);
  }
}

TEST_CASE("db_metric on a deterministic task is exact") {
  ParamChainEnv env({.n_states = 5});
  const Policy right = right_policy(5);
  DbMetricConfig cfg;
  cfg.division = uniform_division(0.0, 0.0000001, 1.0);  // single block at ~slip 0
  cfg.n_rollouts_per_block = 4;
  Rng rng(5);
  const auto report = db_metric(env, right, cfg, PreferenceSpec::power(1.0), rng);
  CHECK(report.value == doctest::Approx(0.95));
  CHECK(report.mode == MetricMode::DB);
}

TEST_CASE("report value always equals the ledger inner product") {
  Rng rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const auto pairs = dirichlet_pairs(rng, 2 + static_cast<int>(rng.uniform() * 20.0));
    const double k = rng.uniform(0.0, 10.0);
    const auto report = metric_from_returns(pairs, PreferenceSpec::power(k),
                                            MetricMode::DB);
    double dot = 0.0;
    for (const auto& e : report.ledger.entries) dot += e.weight * e.ret;
    CHECK(std::abs(report.value - dot) <= 1e-12);
    CHECK(report.ledger.weight_sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("df reduction: sorted cluster means and equal bins") {
  // Cluster means [3, 1]: sorted [1, 3]; k=1 weights are 0.75 / 0.25.
  const std::vector<std::pair<double, double>> pairs{{3.0, 0.5}, {1.0, 0.5}};
  const auto report = metric_from_returns(pairs, PreferenceSpec::power(1.0),
                                          MetricMode::DF);
  CHECK(report.value == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(report.ledger.entries[0].ret == doctest::Approx(1.0));
  CHECK(report.ledger.entries[0].weight == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("df k=0 is the unweighted mean of cluster means") {
  const std::vector<std::pair<double, double>> pairs{
      {3.0, 0.25}, {1.0, 0.25}, {-2.0, 0.25}, {6.0, 0.25}};
  const auto report =
      metric_from_returns(pairs, PreferenceSpec::power(0.0), MetricMode::DF);
  CHECK(report.value == doctest::Approx((3.0 + 1.0 - 2.0 + 6.0) / 4.0).epsilon(1e-12));
}

TEST_CASE("df_metric: constant returns give the constant for any sizes") {
  ParamChainEnv env({.n_states = 5});
  const Policy right = right_policy(5);
  const auto dist = ParamDistribution::empirical(
      ParameterSpace({0.0}, {1.0}), {{0.0}}, {1.0});  // always slip 0
  for (int n1 : {1, 3, 5}) {
    for (int n2 : {1, 4}) {
      auto process = ParameterProcess::iid(dist, Rng(10));
      DfMetricConfig cfg;
      cfg.n1 = n1;
      cfg.n2 = n2;
      Rng rng(11);
      const auto report =
          df_metric(env, right, cfg, process, PreferenceSpec::power(2.0), rng);
      CHECK(report.value == doctest::Approx(0.95).epsilon(1e-12));
    }
  }
}

TEST_CASE("df with n2=1 equals the equal-mass exact metric of its draws") {
  ParamChainEnv env({.n_states = 7});
  Policy policy = Policy::tabular_softmax(7, 2, "param_chain");
  Rng init(3);
  for (double& v : policy.params()) v = init.uniform(-1.0, 1.0);
  const auto dist = ParamDistribution::uniform(ParameterSpace({0.0}, {0.5}));

  auto process = ParameterProcess::iid(dist, Rng(21));
  DfMetricConfig cfg;
  cfg.n1 = 40;
  cfg.n2 = 1;
  Rng rng(22);
  const auto report = df_metric(env, policy, cfg, process, PreferenceSpec::power(1.0), rng);

  std::vector<std::pair<double, double>> pairs;
  for (double r : report.unit_returns) pairs.emplace_back(r, 1.0 / 40.0);
  const auto exact = exact_metric(pairs, PreferenceSpec::power(1.0));
  CHECK(report.value == doctest::Approx(exact.value).epsilon(1e-12));
}

TEST_CASE("df converges toward the fine-grid db value (exact substitution)") {
  ParamChainEnv env({.n_states = 7});
  Policy policy = Policy::tabular_softmax(7, 2, "param_chain");
  Rng init(9);
  for (double& v : policy.params()) v = init.uniform(-1.0, 1.0);
  const PreferenceSpec pref = PreferenceSpec::power(1.0);

  Division fine = uniform_division(0.0, 0.5, 0.0125);
  std::vector<double> fine_returns;
  double lo = 1e300;
  double hi = -1e300;
  for (const Block& b : fine.blocks()) {
    fine_returns.push_back(exact_chain_return(env, policy, b.representative));
    lo = std::min(lo, fine_returns.back());
    hi = std::max(hi, fine_returns.back());
  }
  const double reference = db_metric_with_returns(fine_returns, fine, pref).value;

  // Equal-bin reduction over n1 exact draws, growing n1.
  const auto dist = ParamDistribution::uniform(fine.space());
  double prev_err = 1e300;
  for (int n1 : {50, 800}) {
    double err_acc = 0.0;
    for (int seed = 0; seed < 5; ++seed) {
      Rng rng(500 + static_cast<std::uint64_t>(seed));
      std::vector<std::pair<double, double>> pairs;
      for (int i = 0; i < n1; ++i) {
        const auto p = dist.sample(rng);
        pairs.emplace_back(exact_chain_return(env, policy, p), 1.0 / n1);
      }
      const auto report = metric_from_returns(pairs, pref, MetricMode::DF);
      err_acc += std::abs(report.value - reference);
    }
    const double mean_err = err_acc / 5.0;
    CHECK(mean_err < prev_err + 0.02 * (hi - lo));
    prev_err = mean_err;
  }
  CHECK(prev_err <= 0.05 * (hi - lo));
}

TEST_CASE("mass perturbations move the metric by at most t * range * W(0)") {
  Rng rng(404);
  for (int trial = 0; trial < 40; ++trial) {
    auto pairs = dirichlet_pairs(rng, 3 + static_cast<int>(rng.uniform() * 30.0));
    const double k = rng.uniform(0.0, 21.0);
    const PreferenceSpec pref = PreferenceSpec::power(k);
    const double base = exact_metric(pairs, pref).value;

    double lo = pairs[0].first;
    double hi = pairs[0].first;
    for (const auto& [ret, mass] : pairs) {
      lo = std::min(lo, ret);
      hi = std::max(hi, ret);
    }

    const double t = trial % 2 == 0 ? 0.01 : 0.05;
    // Move total mass t from the largest-mass entry to the smallest.
    auto perturbed = pairs;
    std::size_t donor = 0;
    std::size_t taker = 0;
    for (std::size_t i = 1; i < perturbed.size(); ++i) {
      if (perturbed[i].second > perturbed[donor].second) donor = i;
      if (perturbed[i].second < perturbed[taker].second) taker = i;
    }
    if (perturbed[donor].second <= t || donor == taker) continue;
    perturbed[donor].second -= t;
    perturbed[taker].second += t;

    const double moved = exact_metric(perturbed, pref).value;
    CHECK(std::abs(moved - base) <= t * (hi - lo) * pref.value(0.0) + 1e-9);
  }
}

TEST_CASE("sizing helpers") {
  CHECK(suggest_delta(0.1, 1.0) == doctest::Approx(0.1));
  CHECK(suggest_delta(0.05, 2.0) == doctest::Approx(0.1));
  CHECK(suggest_delta(0.05, 1.0) == doctest::Approx(suggest_delta(0.1, 1.0) / 2.0));
  CHECK_THROWS_AS(suggest_delta(0.0, 1.0), ValidationError);

  const auto s = suggest_cluster_sizes(0.5, std::exp(-1.0), 1);
  CHECK(s.n1 == 4);
  CHECK(s.n2 == 16);

  // Smaller rho never shrinks either size.
  const auto tighter = suggest_cluster_sizes(0.5, 0.05, 1);
  CHECK(tighter.n1 >= s.n1);
  CHECK(tighter.n2 >= s.n2);

  // Halving epsilon at d=1: n1 x4, n2 x16.
  const auto half = suggest_cluster_sizes(0.25, std::exp(-1.0), 1);
  CHECK(half.n1 == 4 * s.n1);
  CHECK(half.n2 == 16 * s.n2);

  CHECK_THROWS_AS(suggest_cluster_sizes(0.5, 1.5, 1), ValidationError);
  CHECK_THROWS_AS(suggest_cluster_sizes(0.5, 0.0, 1), ValidationError);
}

TEST_CASE("metric audit CSV has the documented shape") {
  Rng rng(3);
  const auto pairs = dirichlet_pairs(rng, 6);
  const auto report = metric_from_returns(pairs, PreferenceSpec::power(1.0),
                                          MetricMode::DB);
  const std::string path =
      (std::filesystem::temp_directory_path() / "uor_report_test.csv").string();
  write_metric_report_csv(report, path);
  const auto rows = csv::read(path);
  REQUIRE(rows.size() == 7);
  CHECK(rows[0] == std::vector<std::string>{"rank", "source_id", "J", "mass",
                                            "weight", "cumulative_mass"});
  // Ranks ascending in J, cumulative mass ends at ~1.
  CHECK(std::stod(rows.back()[5]) == doctest::Approx(1.0).epsilon(1e-9));
  std::filesystem::remove(path);
}

TEST_CASE("collection results do not depend on the thread count") {
  ParamChainEnv env({.n_states = 7});
  Policy policy = Policy::tabular_softmax(7, 2, "param_chain");
  Rng init(12);
  for (double& v : policy.params()) v = init.uniform(-1.0, 1.0);
  DbMetricConfig cfg;
  cfg.division = uniform_division(0.0, 0.5, 0.05);
  cfg.n_rollouts_per_block = 8;

  setenv("UORRL_THREADS", "1", 1);
  Rng r1(77);
  const auto serial = db_metric(env, policy, cfg, PreferenceSpec::power(1.0), r1);
  setenv("UORRL_THREADS", "4", 1);
  Rng r4(77);
  const auto threaded = db_metric(env, policy, cfg, PreferenceSpec::power(1.0), r4);
  unsetenv("UORRL_THREADS");

  CHECK(serial.value == threaded.value);
  CHECK(serial.unit_returns == threaded.unit_returns);
}

TEST_CASE("degenerate configurations are rejected") {
  DbMetricConfig cfg;
  cfg.division = uniform_division(0.0, 1.0, 0.5);
  cfg.n_rollouts_per_block = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);

  Division unmassed = set_division(ParameterSpace({0.0}, {1.0}), 0.5);
  DbMetricConfig cfg2;
  cfg2.division = unmassed;
  CHECK_THROWS_AS(cfg2.validate(), ValidationError);

  DbMetricConfig empty;  // no blocks at all
  CHECK_THROWS_AS(empty.validate(), ValidationError);
}

TEST_CASE("rollout failures propagate with the block id") {
  ParamMassConfig mcfg;
  mcfg.horizon = 5;
  ParamMassEnv env(mcfg);
  Policy broken = Policy::linear_gaussian(1, 1, "param_mass");
  broken.params()[0] = std::nan("");
  DbMetricConfig cfg;
  Division div = set_division(ParameterSpace({0.4, 0.0}, {0.9, 0.2}), 0.4);
  Rng mrng(1);
  compute_masses(div, ParamDistribution::uniform(div.space()), mrng);
  cfg.division = div;
  cfg.n_rollouts_per_block = 2;
  Rng rng(3);
  try {
    db_metric(env, broken, cfg, PreferenceSpec::power(1.0), rng);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("block") != std::string::npos);
  }
}
