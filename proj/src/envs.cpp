#include "uor/envs.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "uor/errors.hpp"

namespace uor {

ParamChainEnv::ParamChainEnv(ParamChainConfig cfg) : cfg_(cfg) {
  if (cfg_.n_states < 3) throw ValidationError("param_chain: need at least 3 states");
  if (!(cfg_.gamma > 0.0 && cfg_.gamma < 1.0)) {
    throw ValidationError("param_chain: gamma must lie in (0,1)");
  }
  if (!(cfg_.goal_reward >= 0.0) || !(cfg_.left_reward >= 0.0) ||
      !std::isfinite(cfg_.goal_reward) || !std::isfinite(cfg_.left_reward)) {
    throw ValidationError("param_chain: rewards must be finite and >= 0");
  }
  start_ = cfg_.start_index < 0 ? cfg_.n_states / 2 : cfg_.start_index;
  if (start_ <= 0 || start_ >= cfg_.n_states - 1) {
    throw ValidationError("param_chain: start index must be an interior state");
  }
}

double ParamChainEnv::reward_bound() const {
  const double m = std::max(cfg_.goal_reward, cfg_.left_reward);
  return m > 0.0 ? m : 1.0;
}

State ParamChainEnv::initial_state(Rng&) const {
  State s;
  s.index = start_;
  return s;
}

State ParamChainEnv::transition(const State& s, const Action& a,
                                std::span<const double> p, Rng& rng) const {
  if (p.size() != 1) throw ValidationError("param_chain: parameter must be 1-D");
  const double slip = std::clamp(p[0], 0.0, 1.0);
  int dir = a.index == kRight ? +1 : -1;
  if (rng.uniform() < slip) dir = -dir;
  State next;
  next.index = std::clamp(s.index + dir, 0, cfg_.n_states - 1);
  next.t = s.t + 1;
  return next;
}

double ParamChainEnv::reward(const State&, const Action&, const State& next,
                             std::span<const double>) const {
  if (next.index == cfg_.n_states - 1) return cfg_.goal_reward;
  if (next.index == 0) return cfg_.left_reward;
  return 0.0;
}

bool ParamChainEnv::terminal(const State& s) const {
  return s.index == 0 || s.index == cfg_.n_states - 1;
}

ParamMassEnv::ParamMassEnv(ParamMassConfig cfg) : cfg_(cfg) {
  if (!(cfg_.gamma > 0.0 && cfg_.gamma <= 1.0)) {
    throw ValidationError("param_mass: gamma must lie in (0,1]");
  }
  if (cfg_.horizon < 1) throw ValidationError("param_mass: horizon must be >= 1");
  if (!(cfg_.x_max > 0.0) || !(cfg_.u_max > 0.0) || !(cfg_.action_cost >= 0.0)) {
    throw ValidationError("param_mass: x_max/u_max must be positive, action_cost >= 0");
  }
}

double ParamMassEnv::reward_bound() const {
  return cfg_.x_max * cfg_.x_max + cfg_.action_cost * cfg_.u_max * cfg_.u_max;
}

State ParamMassEnv::initial_state(Rng&) const {
  State s;
  s.obs = {cfg_.x0};
  return s;
}

State ParamMassEnv::transition(const State& s, const Action& a,
                               std::span<const double> p, Rng& rng) const {
  if (p.size() != 2) throw ValidationError("param_mass: parameter must be 2-D (a, sigma)");
  const double u = std::clamp(a.u.at(0), -cfg_.u_max, cfg_.u_max);
  const double x = s.obs.at(0);
  double xn = p[0] * x + cfg_.control_gain * u + p[1] * rng.normal();
  xn = std::clamp(xn, -cfg_.x_max, cfg_.x_max);
  State next;
  next.obs = {xn};
  next.t = s.t + 1;
  return next;
}

double ParamMassEnv::reward(const State& s, const Action& a, const State&,
                            std::span<const double>) const {
  const double u = std::clamp(a.u.at(0), -cfg_.u_max, cfg_.u_max);
  const double x = s.obs.at(0);
  return -(x * x + cfg_.action_cost * u * u);
}

bool ParamMassEnv::terminal(const State& s) const { return s.t >= cfg_.horizon; }

int ParamMassEnv::default_horizon(double) const { return cfg_.horizon; }

double exact_chain_return(const ParamChainEnv& env,
                          std::span<const double> right_probs,
                          std::span<const double> p) {
  const int n = env.state_count();
  if (static_cast<int>(right_probs.size()) != n) {
    throw ValidationError("exact_chain_return: right_probs size mismatch");
  }
  if (p.size() != 1) throw ValidationError("exact_chain_return: parameter must be 1-D");
  const double slip = std::clamp(p[0], 0.0, 1.0);
  const double gamma = env.gamma();
  const double goal = env.config().goal_reward;
  const double left = env.config().left_reward;

  // Interior states 1..n-2; v(terminals) = 0. System is tridiagonal and
  // strictly diagonally dominant, so the Thomas algorithm is stable.
  const int m = n - 2;
  std::vector<double> sub(m, 0.0), diag(m, 0.0), sup(m, 0.0), rhs(m, 0.0);
  for (int i = 1; i <= m; ++i) {
    const double r = std::clamp(right_probs[static_cast<std::size_t>(i)], 0.0, 1.0);
    const double q = r * (1.0 - slip) + (1.0 - r) * slip;  // P(move right)
    const double r_right = (i + 1 == n - 1) ? goal : 0.0;
    const double r_left = (i - 1 == 0) ? left : 0.0;
    const int row = i - 1;
    diag[row] = 1.0;
    if (i - 1 >= 1) sub[row] = -gamma * (1.0 - q);
    if (i + 1 <= n - 2) sup[row] = -gamma * q;
    rhs[row] = q * r_right + (1.0 - q) * r_left;
  }

  std::vector<double> c(m, 0.0), d(m, 0.0), v(m, 0.0);
  c[0] = sup[0] / diag[0];
  d[0] = rhs[0] / diag[0];
  for (int i = 1; i < m; ++i) {
    const double den = diag[i] - sub[i] * c[i - 1];
    c[i] = sup[i] / den;
    d[i] = (rhs[i] - sub[i] * d[i - 1]) / den;
  }
  v[m - 1] = d[m - 1];
  for (int i = m - 2; i >= 0; --i) v[i] = d[i] - c[i] * v[i + 1];

  double max_resid = 0.0;
  for (int i = 0; i < m; ++i) {
    double ax = diag[i] * v[i];
    if (i > 0) ax += sub[i] * v[i - 1];
    if (i + 1 < m) ax += sup[i] * v[i + 1];
    max_resid = std::max(max_resid, std::abs(ax - rhs[i]));
  }
  if (max_resid > 1e-10) {
    throw NumericalError("exact_chain_return: solver residual " + std::to_string(max_resid));
  }
  return v[static_cast<std::size_t>(env.start_index() - 1)];
}

double exact_chain_return(const ParamChainEnv& env, const Policy& policy,
                          std::span<const double> p) {
  if (policy.kind() != PolicyKind::TabularSoftmax ||
      policy.n_states() != env.state_count() || policy.n_actions() != 2) {
    throw ValidationError("exact_chain_return: policy must be tabular over the chain");
  }
  std::vector<double> right(static_cast<std::size_t>(env.state_count()), 0.0);
  for (int s = 0; s < env.state_count(); ++s) {
    right[static_cast<std::size_t>(s)] = policy.action_probs(s)[ParamChainEnv::kRight];
  }
  return exact_chain_return(env, right, p);
}

}  // namespace uor
