#pragma once

#include <span>
#include <string>
#include <vector>

#include "uor/rng.hpp"

namespace uor {

// Tabular environments use index; continuous ones use obs. t counts steps
// taken since the initial state.
struct State {
  int index = -1;
  int t = 0;
  std::vector<double> obs;
};

struct Action {
  int index = -1;
  std::vector<double> u;
};

struct TrajectoryStep {
  State state;
  Action action;
  double reward = 0.0;
  State next;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  double discounted_return = 0.0;
  std::vector<double> parameter;  // diagnostics only; the DF metric never reads it

  double recompute_return(double gamma) const;
};

// Parameterized MDP: transition and reward take an environment parameter p
// drawn once per trajectory and hidden from the policy. Implementations keep
// transition and reward continuous in p; the block estimators rely on
// nearby parameters behaving similarly.
class Pmdp {
 public:
  virtual ~Pmdp() = default;

  virtual std::string name() const = 0;
  virtual int state_count() const = 0;   // 0 for continuous state spaces
  virtual int action_count() const = 0;  // 0 for continuous action spaces
  virtual int obs_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual double gamma() const = 0;
  virtual double reward_bound() const = 0;  // r_max, |reward| <= r_max always
  virtual int param_dims() const = 0;

  virtual State initial_state(Rng& rng) const = 0;
  virtual State transition(const State& s, const Action& a,
                           std::span<const double> p, Rng& rng) const = 0;
  virtual double reward(const State& s, const Action& a, const State& next,
                        std::span<const double> p) const = 0;
  virtual bool terminal(const State& s) const = 0;

  // Horizon at which the truncated tail gamma^T * r_max / (1 - gamma) drops
  // below tail_tol. Environments with an intrinsic finite horizon override.
  virtual int default_horizon(double tail_tol = 1e-6) const;
};

int effective_horizon(double gamma, double r_max, double tail_tol);

}  // namespace uor
