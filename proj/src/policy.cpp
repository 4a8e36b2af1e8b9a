#include "uor/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "uor/errors.hpp"

namespace uor {

namespace {

constexpr int kFormatVersion = 1;

std::vector<double> softmax_row(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

}  // namespace

Policy Policy::tabular_softmax(int n_states, int n_actions, std::string env_name) {
  if (n_states < 1 || n_actions < 2) {
    throw ValidationError("tabular policy: need >= 1 state and >= 2 actions");
  }
  Policy p;
  p.kind_ = PolicyKind::TabularSoftmax;
  p.n_states_ = n_states;
  p.n_actions_ = n_actions;
  p.env_name_ = std::move(env_name);
  p.params_.assign(static_cast<std::size_t>(n_states) * n_actions, 0.0);
  return p;
}

Policy Policy::linear_gaussian(int obs_dim, int action_dim, std::string env_name,
                               double init_log_std) {
  if (obs_dim < 1 || action_dim < 1) {
    throw ValidationError("linear gaussian policy: dims must be positive");
  }
  Policy p;
  p.kind_ = PolicyKind::LinearGaussian;
  p.obs_dim_ = obs_dim;
  p.action_dim_ = action_dim;
  p.env_name_ = std::move(env_name);
  p.params_.assign(static_cast<std::size_t>(action_dim) * obs_dim + 2 * action_dim, 0.0);
  for (int i = 0; i < action_dim; ++i) {
    p.params_[static_cast<std::size_t>(action_dim) * obs_dim + action_dim + i] = init_log_std;
  }
  return p;
}

std::vector<double> Policy::action_probs(int state) const {
  if (kind_ != PolicyKind::TabularSoftmax) {
    throw ValidationError("action_probs: policy is not tabular");
  }
  if (state < 0 || state >= n_states_) {
    throw ValidationError("action_probs: state out of range");
  }
  return softmax_row(std::span<const double>(
      params_.data() + static_cast<std::size_t>(state) * n_actions_,
      static_cast<std::size_t>(n_actions_)));
}

Action Policy::act(const State& s, Rng& rng) const {
  Action a;
  if (kind_ == PolicyKind::TabularSoftmax) {
    const auto probs = action_probs(s.index);
    // Inverse CDF keeps common-random-number comparisons meaningful.
    const double u = rng.uniform();
    double cum = 0.0;
    a.index = n_actions_ - 1;
    for (int i = 0; i < n_actions_; ++i) {
      cum += probs[static_cast<std::size_t>(i)];
      if (u < cum) {
        a.index = i;
        break;
      }
    }
    return a;
  }
  if (static_cast<int>(s.obs.size()) != obs_dim_) {
    throw ValidationError("act: observation dim mismatch");
  }
  a.u.resize(static_cast<std::size_t>(action_dim_));
  const std::size_t ko = static_cast<std::size_t>(action_dim_) * obs_dim_;
  for (int i = 0; i < action_dim_; ++i) {
    double mean = params_[ko + static_cast<std::size_t>(i)];
    for (int o = 0; o < obs_dim_; ++o) {
      mean += params_[static_cast<std::size_t>(i) * obs_dim_ + o] * s.obs[static_cast<std::size_t>(o)];
    }
    const double sd = std::exp(params_[ko + action_dim_ + static_cast<std::size_t>(i)]);
    a.u[static_cast<std::size_t>(i)] = mean + sd * rng.normal();
  }
  return a;
}

double Policy::log_prob(const State& s, const Action& a) const {
  if (kind_ == PolicyKind::TabularSoftmax) {
    const auto probs = action_probs(s.index);
    if (a.index < 0 || a.index >= n_actions_) {
      throw ValidationError("log_prob: action out of range");
    }
    return std::log(probs[static_cast<std::size_t>(a.index)]);
  }
  const std::size_t ko = static_cast<std::size_t>(action_dim_) * obs_dim_;
  double lp = 0.0;
  for (int i = 0; i < action_dim_; ++i) {
    double mean = params_[ko + static_cast<std::size_t>(i)];
    for (int o = 0; o < obs_dim_; ++o) {
      mean += params_[static_cast<std::size_t>(i) * obs_dim_ + o] * s.obs[static_cast<std::size_t>(o)];
    }
    const double ls = params_[ko + action_dim_ + static_cast<std::size_t>(i)];
    const double z = (a.u[static_cast<std::size_t>(i)] - mean) / std::exp(ls);
    lp += -0.5 * z * z - ls - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return lp;
}

void Policy::add_score_gradient(const State& s, const Action& a, double coeff,
                                std::span<double> grad) const {
  if (grad.size() != params_.size()) {
    throw ValidationError("add_score_gradient: gradient size mismatch");
  }
  if (kind_ == PolicyKind::TabularSoftmax) {
    const auto probs = action_probs(s.index);
    const std::size_t row = static_cast<std::size_t>(s.index) * n_actions_;
    for (int j = 0; j < n_actions_; ++j) {
      const double indicator = (j == a.index) ? 1.0 : 0.0;
      grad[row + static_cast<std::size_t>(j)] += coeff * (indicator - probs[static_cast<std::size_t>(j)]);
    }
    return;
  }
  const std::size_t ko = static_cast<std::size_t>(action_dim_) * obs_dim_;
  for (int i = 0; i < action_dim_; ++i) {
    double mean = params_[ko + static_cast<std::size_t>(i)];
    for (int o = 0; o < obs_dim_; ++o) {
      mean += params_[static_cast<std::size_t>(i) * obs_dim_ + o] * s.obs[static_cast<std::size_t>(o)];
    }
    const double ls = params_[ko + action_dim_ + static_cast<std::size_t>(i)];
    const double var = std::exp(2.0 * ls);
    const double diff = a.u[static_cast<std::size_t>(i)] - mean;
    const double dmean = diff / var;
    for (int o = 0; o < obs_dim_; ++o) {
      grad[static_cast<std::size_t>(i) * obs_dim_ + o] += coeff * dmean * s.obs[static_cast<std::size_t>(o)];
    }
    grad[ko + static_cast<std::size_t>(i)] += coeff * dmean;
    grad[ko + action_dim_ + static_cast<std::size_t>(i)] += coeff * (diff * diff / var - 1.0);
  }
}

double Policy::entropy(const State& s) const {
  if (kind_ == PolicyKind::TabularSoftmax) {
    const auto probs = action_probs(s.index);
    double h = 0.0;
    for (double p : probs) {
      if (p > 0.0) h -= p * std::log(p);
    }
    return h;
  }
  const std::size_t ko = static_cast<std::size_t>(action_dim_) * obs_dim_;
  double h = 0.0;
  for (int i = 0; i < action_dim_; ++i) {
    h += params_[ko + action_dim_ + static_cast<std::size_t>(i)] +
         0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  }
  return h;
}

void Policy::add_entropy_gradient(const State& s, double coeff,
                                  std::span<double> grad) const {
  if (grad.size() != params_.size()) {
    throw ValidationError("add_entropy_gradient: gradient size mismatch");
  }
  if (kind_ == PolicyKind::TabularSoftmax) {
    const auto probs = action_probs(s.index);
    const double h = entropy(s);
    const std::size_t row = static_cast<std::size_t>(s.index) * n_actions_;
    for (int j = 0; j < n_actions_; ++j) {
      const double p = probs[static_cast<std::size_t>(j)];
      const double lp = p > 0.0 ? std::log(p) : 0.0;
      grad[row + static_cast<std::size_t>(j)] += coeff * (-p * (lp + h));
    }
    return;
  }
  const std::size_t ko = static_cast<std::size_t>(action_dim_) * obs_dim_;
  for (int i = 0; i < action_dim_; ++i) {
    grad[ko + action_dim_ + static_cast<std::size_t>(i)] += coeff;
  }
}

std::string Policy::serialize() const {
  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  j["env"] = env_name_;
  j["seed"] = seed_tag_;
  if (kind_ == PolicyKind::TabularSoftmax) {
    j["kind"] = "tabular_softmax";
    j["dims"] = {{"states", n_states_}, {"actions", n_actions_}};
    nlohmann::json rows = nlohmann::json::array();
    for (int s = 0; s < n_states_; ++s) {
      nlohmann::json row = nlohmann::json::array();
      for (int a = 0; a < n_actions_; ++a) {
        row.push_back(params_[static_cast<std::size_t>(s) * n_actions_ + a]);
      }
      rows.push_back(std::move(row));
    }
    j["parameters"] = {{"logits", std::move(rows)}};
  } else {
    j["kind"] = "linear_gaussian";
    j["dims"] = {{"obs", obs_dim_}, {"actions", action_dim_}};
    const std::size_t ko = static_cast<std::size_t>(action_dim_) * obs_dim_;
    nlohmann::json K = nlohmann::json::array();
    for (int i = 0; i < action_dim_; ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (int o = 0; o < obs_dim_; ++o) {
        row.push_back(params_[static_cast<std::size_t>(i) * obs_dim_ + o]);
      }
      K.push_back(std::move(row));
    }
    nlohmann::json bias = nlohmann::json::array();
    nlohmann::json log_std = nlohmann::json::array();
    for (int i = 0; i < action_dim_; ++i) {
      bias.push_back(params_[ko + static_cast<std::size_t>(i)]);
      log_std.push_back(params_[ko + action_dim_ + static_cast<std::size_t>(i)]);
    }
    j["parameters"] = {{"K", std::move(K)}, {"bias", std::move(bias)}, {"log_std", std::move(log_std)}};
  }
  return j.dump(2) + "\n";
}

Policy Policy::deserialize(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("policy file: parse error: ") + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != kFormatVersion) {
      throw ValidationError("policy file: unsupported format_version");
    }
    const std::string kind = j.at("kind").get<std::string>();
    Policy p;
    if (kind == "tabular_softmax") {
      const int S = j.at("dims").at("states").get<int>();
      const int A = j.at("dims").at("actions").get<int>();
      p = tabular_softmax(S, A, j.at("env").get<std::string>());
      const auto& rows = j.at("parameters").at("logits");
      if (static_cast<int>(rows.size()) != S) {
        throw ValidationError("policy file: logits row count mismatch");
      }
      for (int s = 0; s < S; ++s) {
        if (static_cast<int>(rows[static_cast<std::size_t>(s)].size()) != A) {
          throw ValidationError("policy file: logits column count mismatch");
        }
        for (int a = 0; a < A; ++a) {
          p.params_[static_cast<std::size_t>(s) * A + a] =
              rows[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)].get<double>();
        }
      }
    } else if (kind == "linear_gaussian") {
      const int O = j.at("dims").at("obs").get<int>();
      const int A = j.at("dims").at("actions").get<int>();
      p = linear_gaussian(O, A, j.at("env").get<std::string>());
      const auto& K = j.at("parameters").at("K");
      const auto& bias = j.at("parameters").at("bias");
      const auto& log_std = j.at("parameters").at("log_std");
      if (static_cast<int>(K.size()) != A || static_cast<int>(bias.size()) != A ||
          static_cast<int>(log_std.size()) != A) {
        throw ValidationError("policy file: parameter shape mismatch");
      }
      const std::size_t ko = static_cast<std::size_t>(A) * O;
      for (int i = 0; i < A; ++i) {
        if (static_cast<int>(K[static_cast<std::size_t>(i)].size()) != O) {
          throw ValidationError("policy file: K column count mismatch");
        }
        for (int o = 0; o < O; ++o) {
          p.params_[static_cast<std::size_t>(i) * O + o] =
              K[static_cast<std::size_t>(i)][static_cast<std::size_t>(o)].get<double>();
        }
        p.params_[ko + static_cast<std::size_t>(i)] = bias[static_cast<std::size_t>(i)].get<double>();
        p.params_[ko + A + static_cast<std::size_t>(i)] = log_std[static_cast<std::size_t>(i)].get<double>();
        if (!std::isfinite(p.params_[ko + A + static_cast<std::size_t>(i)])) {
          throw ValidationError("policy file: non-finite log_std");
        }
      }
    } else {
      throw ValidationError("policy file: unknown kind '" + kind + "'");
    }
    p.seed_tag_ = j.at("seed").get<std::uint64_t>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("policy file: ") + e.what());
  }
}

void Policy::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("policy save: cannot open " + path);
  out << serialize();
}

Policy Policy::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("policy load: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

}  // namespace uor
