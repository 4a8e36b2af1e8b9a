#include "uor/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "uor/errors.hpp"

namespace uor {

namespace {

// Reward-to-go with discounting from the trajectory start:
// G_t = sum_{t' >= t} gamma^t' r_t'.
std::vector<double> rewards_to_go(const Trajectory& traj, double gamma) {
  const std::size_t n = traj.steps.size();
  std::vector<double> g(n, 0.0);
  double disc = std::pow(gamma, static_cast<double>(n));
  double acc = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    disc /= gamma;
    acc += disc * traj.steps[t].reward;
    g[t] = acc;
  }
  return g;
}

}  // namespace

double batch_mean_return(std::span<const WeightedBatch> batches) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& b : batches) {
    for (const auto& traj : b.trajectories) {
      sum += traj.discounted_return;
      ++count;
    }
  }
  return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

double surrogate_value(const Policy& policy,
                       std::span<const WeightedBatch> batches, double gamma,
                       double baseline, double entropy_bonus) {
  double total = 0.0;
  for (const auto& batch : batches) {
    if (batch.trajectories.empty()) continue;
    double acc = 0.0;
    for (const auto& traj : batch.trajectories) {
      const auto g = rewards_to_go(traj, gamma);
      for (std::size_t t = 0; t < traj.steps.size(); ++t) {
        const auto& step = traj.steps[t];
        acc += policy.log_prob(step.state, step.action) * (g[t] - baseline);
        if (entropy_bonus != 0.0) acc += entropy_bonus * policy.entropy(step.state);
      }
    }
    total += batch.weight * acc / static_cast<double>(batch.trajectories.size());
  }
  return total;
}

std::vector<double> surrogate_gradient(const Policy& policy,
                                       std::span<const WeightedBatch> batches,
                                       double gamma, double baseline,
                                       double entropy_bonus) {
  std::vector<double> grad(policy.params().size(), 0.0);
  for (const auto& batch : batches) {
    if (!(batch.weight >= 0.0)) {
      throw ValidationError("policy_update: negative batch weight");
    }
    if (batch.trajectories.empty()) continue;
    const double scale = batch.weight / static_cast<double>(batch.trajectories.size());
    for (const auto& traj : batch.trajectories) {
      const auto g = rewards_to_go(traj, gamma);
      for (std::size_t t = 0; t < traj.steps.size(); ++t) {
        const auto& step = traj.steps[t];
        policy.add_score_gradient(step.state, step.action,
                                  scale * (g[t] - baseline), grad);
        if (entropy_bonus != 0.0) {
          policy.add_entropy_gradient(step.state, scale * entropy_bonus, grad);
        }
      }
    }
    for (double v : grad) {
      if (!std::isfinite(v)) {
        throw NumericalError("policy_update: non-finite gradient in batch " +
                             std::to_string(batch.unit_id));
      }
    }
  }
  return grad;
}

Policy policy_update(const Policy& policy,
                     std::span<const WeightedBatch> batches,
                     double learning_rate, BaselineKind baseline,
                     double entropy_bonus, double gamma) {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("policy_update: learning rate must be finite and >= 0");
  }
  double weight_sum = 0.0;
  for (const auto& b : batches) weight_sum += b.weight;
  if (std::abs(weight_sum - 1.0) > 1e-9) {
    throw ValidationError("policy_update: batch weights must sum to 1");
  }
  const double b = baseline == BaselineKind::MeanReturn ? batch_mean_return(batches) : 0.0;
  const auto grad = surrogate_gradient(policy, batches, gamma, b, entropy_bonus);
  Policy next = policy;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    next.params()[i] += learning_rate * grad[i];
  }
  return next;
}

void TrainSetup::validate() const {
  if (max_iterations < 1) throw ValidationError("train: max_iterations must be >= 1");
  if (!(learning_rate > 0.0) && learning_rate != 0.0) {
    throw ValidationError("train: learning_rate must be >= 0");
  }
  if (!(entropy_bonus >= 0.0)) throw ValidationError("train: entropy_bonus must be >= 0");
  if (mode == MetricMode::DB) {
    if (!db.has_value()) throw ValidationError("train: DB mode requires a db metric config");
    db->validate();
  } else {
    if (!df.has_value() || !df_dist.has_value()) {
      throw ValidationError("train: DF mode requires df sizes and a parameter source");
    }
    if (df->n1 < 1 || df->n2 < 1) throw ValidationError("train: n1/n2 must be >= 1");
  }
}

TrainOutput train(const Pmdp& env, const TrainSetup& setup) {
  setup.validate();
  TrainOutput out;
  out.policy = env.state_count() > 0
                   ? Policy::tabular_softmax(env.state_count(), env.action_count(), env.name())
                   : Policy::linear_gaussian(env.obs_dim(), env.action_dim(), env.name());
  out.policy.set_seed_tag(setup.seed);

  Rng root(setup.seed);
  std::optional<ParameterProcess> process;
  if (setup.mode == MetricMode::DF) {
    Rng process_rng = root.split(0x9e37);
    process = setup.df_source.iid
                  ? ParameterProcess::iid(*setup.df_dist, process_rng)
                  : ParameterProcess::drifting(*setup.df_dist,
                                               setup.df_source.step_bound,
                                               process_rng);
  }

  // Fidelity mode only: clusters accumulated across iterations.
  std::vector<std::vector<Trajectory>> persistent;

  for (int iter = 0; iter < setup.max_iterations; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng iter_rng = root.split(static_cast<std::uint64_t>(iter) + 1);
    try {
      std::vector<CollectedUnit> units =
          setup.mode == MetricMode::DB
              ? collect_db_units(env, out.policy, *setup.db, iter_rng)
              : collect_df_units(env, out.policy, *setup.df, *process, iter_rng);

      if (setup.mode == MetricMode::DF && setup.accumulate_clusters) {
        persistent.resize(units.size());
        for (std::size_t j = 0; j < units.size(); ++j) {
          auto& store = persistent[j];
          for (auto& traj : units[j].trajectories) store.push_back(std::move(traj));
          units[j].trajectories = store;
          double sum = 0.0;
          for (const auto& traj : store) sum += traj.discounted_return;
          units[j].mean_return = sum / static_cast<double>(store.size());
        }
      }

      MetricReport report = metric_from_units(units, setup.pref, setup.mode);

      std::vector<WeightedBatch> batches;
      batches.reserve(units.size());
      for (const auto& u : units) {
        batches.push_back({u.id, report.unit_weights[static_cast<std::size_t>(u.id)],
                           std::span<const Trajectory>(u.trajectories)});
      }
      out.policy = policy_update(out.policy, batches, setup.learning_rate,
                                 setup.baseline, setup.entropy_bonus, env.gamma());
      out.history.push_back(std::move(report));
    } catch (const NumericalError& e) {
      out.failure = e.what();
      out.iter_seconds.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      return out;
    }
    out.iter_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  out.completed = true;
  return out;
}

std::pair<Policy, double> enumerate_optimal_tabular(
    const ParamChainEnv& env, std::span<const std::vector<double>> param_grid,
    std::span<const double> masses, const PreferenceSpec& pref) {
  const int n_states = env.state_count();
  const int n_actions = env.action_count();
  if (param_grid.empty() || param_grid.size() != masses.size()) {
    throw ValidationError("enumerate: grid/mass size mismatch");
  }
  const double count = std::pow(static_cast<double>(n_actions),
                                static_cast<double>(n_states));
  if (count > 1e6) {
    throw CapacityError("enumerate: |A|^|S| exceeds 1e6 deterministic policies");
  }

  const auto n_policies = static_cast<std::uint64_t>(count);
  std::vector<double> right(static_cast<std::size_t>(n_states), 0.0);
  std::vector<std::pair<double, double>> pairs(param_grid.size());

  double best_value = -std::numeric_limits<double>::infinity();
  std::uint64_t best_code = 0;
  for (std::uint64_t code = 0; code < n_policies; ++code) {
    std::uint64_t c = code;
    for (int s = 0; s < n_states; ++s) {
      right[static_cast<std::size_t>(s)] =
          (c % static_cast<std::uint64_t>(n_actions)) == ParamChainEnv::kRight ? 1.0 : 0.0;
      c /= static_cast<std::uint64_t>(n_actions);
    }
    for (std::size_t g = 0; g < param_grid.size(); ++g) {
      pairs[g] = {exact_chain_return(env, right, param_grid[g]), masses[g]};
    }
    const double value = exact_metric(pairs, pref).value;
    if (value > best_value) {
      best_value = value;
      best_code = code;
    }
  }

  Policy best = Policy::tabular_softmax(n_states, n_actions, env.name());
  std::uint64_t c = best_code;
  for (int s = 0; s < n_states; ++s) {
    const auto chosen = static_cast<int>(c % static_cast<std::uint64_t>(n_actions));
    c /= static_cast<std::uint64_t>(n_actions);
    // Sharp softmax; within 1e-12 of the deterministic optimum's value.
    best.params()[static_cast<std::size_t>(s) * n_actions + chosen] = 30.0;
  }
  return {std::move(best), best_value};
}

}  // namespace uor
