#pragma once

#include <span>
#include <string>
#include <vector>

#include "uor/pmdp.hpp"
#include "uor/policy.hpp"

namespace uor {

// Slippery line of N states. Actions Left/Right; with probability slip(p)
// the chosen action is inverted (p is the 1-D environment parameter, a slip
// probability in [0,1]). Entering the right end state pays goal_reward (1),
// entering the left end pays left_reward (0 unless configured); every other
// step pays 0. Episodes end at either end state.
struct ParamChainConfig {
  int n_states = 5;
  double gamma = 0.95;
  double goal_reward = 1.0;
  double left_reward = 0.0;
  int start_index = -1;  // -1 => center

  bool operator==(const ParamChainConfig&) const = default;
};

class ParamChainEnv final : public Pmdp {
 public:
  explicit ParamChainEnv(ParamChainConfig cfg = {});

  std::string name() const override { return "param_chain"; }
  int state_count() const override { return cfg_.n_states; }
  int action_count() const override { return 2; }
  int obs_dim() const override { return 1; }
  int action_dim() const override { return 1; }
  double gamma() const override { return cfg_.gamma; }
  double reward_bound() const override;
  int param_dims() const override { return 1; }

  State initial_state(Rng& rng) const override;
  State transition(const State& s, const Action& a, std::span<const double> p,
                   Rng& rng) const override;
  double reward(const State& s, const Action& a, const State& next,
                std::span<const double> p) const override;
  bool terminal(const State& s) const override;

  const ParamChainConfig& config() const { return cfg_; }
  int start_index() const { return start_; }

  static constexpr int kLeft = 0;
  static constexpr int kRight = 1;

 private:
  ParamChainConfig cfg_;
  int start_ = 0;
};

// 1-D point mass, x' = a(p) * x + b * u + sigma(p) * xi, reward
// -(x^2 + action_cost * u^2) on the pre-transition state. Environment
// parameter p = (a, sigma), d = 2. Episodes run exactly `horizon` steps;
// gamma = 1 is allowed because the horizon is finite.
struct ParamMassConfig {
  double gamma = 1.0;
  int horizon = 20;
  double control_gain = 1.0;  // b
  double action_cost = 0.1;   // c
  double x0 = 1.0;
  double x_max = 10.0;
  double u_max = 5.0;

  bool operator==(const ParamMassConfig&) const = default;
};

class ParamMassEnv final : public Pmdp {
 public:
  explicit ParamMassEnv(ParamMassConfig cfg = {});

  std::string name() const override { return "param_mass"; }
  int state_count() const override { return 0; }
  int action_count() const override { return 0; }
  int obs_dim() const override { return 1; }
  int action_dim() const override { return 1; }
  double gamma() const override { return cfg_.gamma; }
  double reward_bound() const override;
  int param_dims() const override { return 2; }

  State initial_state(Rng& rng) const override;
  State transition(const State& s, const Action& a, std::span<const double> p,
                   Rng& rng) const override;
  double reward(const State& s, const Action& a, const State& next,
                std::span<const double> p) const override;
  bool terminal(const State& s) const override;
  int default_horizon(double tail_tol = 1e-6) const override;

  const ParamMassConfig& config() const { return cfg_; }

 private:
  ParamMassConfig cfg_;
};

// Exact expected discounted return of a tabular policy on the chain:
// solves v = r + gamma * P v for the induced Markov chain and returns
// v(start state). Oracle for the Monte-Carlo estimators.
double exact_chain_return(const ParamChainEnv& env, const Policy& policy,
                          std::span<const double> p);

// Same, with explicit per-state probabilities of choosing Right.
double exact_chain_return(const ParamChainEnv& env,
                          std::span<const double> right_probs,
                          std::span<const double> p);

}  // namespace uor
