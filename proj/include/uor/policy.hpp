#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uor/pmdp.hpp"
#include "uor/rng.hpp"

namespace uor {

enum class PolicyKind { TabularSoftmax, LinearGaussian };

// Serializable stochastic state -> action map.
//
// TabularSoftmax: logits per (state, action), actions drawn from the softmax
// row by inverse CDF. LinearGaussian: mean = K * obs + bias, independent
// per-dimension std = exp(log_std).
class Policy {
 public:
  Policy() = default;  // empty policy; assign from a factory before use

  static Policy tabular_softmax(int n_states, int n_actions,
                                std::string env_name = {});
  static Policy linear_gaussian(int obs_dim, int action_dim,
                                std::string env_name = {},
                                double init_log_std = -0.6931471805599453);

  PolicyKind kind() const { return kind_; }
  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  int obs_dim() const { return obs_dim_; }
  int action_dim() const { return action_dim_; }
  const std::string& env_name() const { return env_name_; }
  std::uint64_t seed_tag() const { return seed_tag_; }
  void set_seed_tag(std::uint64_t s) { seed_tag_ = s; }

  // Flat parameter vector. Tabular: logits row-major [state][action].
  // LinearGaussian: [K row-major (action x obs) | bias | log_std].
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  Action act(const State& s, Rng& rng) const;
  std::vector<double> action_probs(int state) const;  // tabular only
  double log_prob(const State& s, const Action& a) const;

  // grad += coeff * d log pi(a|s) / d theta
  void add_score_gradient(const State& s, const Action& a, double coeff,
                          std::span<double> grad) const;
  double entropy(const State& s) const;
  // grad += coeff * d H(pi(.|s)) / d theta
  void add_entropy_gradient(const State& s, double coeff,
                            std::span<double> grad) const;

  // Versioned structured text format; doubles round-trip bit-exactly.
  std::string serialize() const;
  static Policy deserialize(const std::string& text);
  void save(const std::string& path) const;
  static Policy load(const std::string& path);

 private:
  PolicyKind kind_ = PolicyKind::TabularSoftmax;
  int n_states_ = 0;
  int n_actions_ = 0;
  int obs_dim_ = 0;
  int action_dim_ = 0;
  std::string env_name_;
  std::uint64_t seed_tag_ = 0;
  std::vector<double> params_;
};

}  // namespace uor
