#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "uor/param_space.hpp"
#include "uor/rng.hpp"

namespace uor {

enum class DistKind { Uniform, TruncatedGaussian, Empirical, Mixture };

// Probability distribution over a parameter space. Truncated Gaussians have
// independent axes (diagonal covariance); samples always lie inside the
// space.
class ParamDistribution {
 public:
  static ParamDistribution uniform(ParameterSpace space);
  static ParamDistribution truncated_gaussian(ParameterSpace space,
                                              std::vector<double> mean,
                                              std::vector<double> stddev);
  static ParamDistribution empirical(ParameterSpace space,
                                     std::vector<std::vector<double>> points,
                                     std::vector<double> weights);
  static ParamDistribution mixture(std::vector<ParamDistribution> components,
                                   std::vector<double> weights);

  DistKind kind() const { return kind_; }
  const ParameterSpace& space() const { return space_; }

  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& stddev() const { return stddev_; }
  const std::vector<std::vector<double>>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<ParamDistribution>& components() const;

  // Draw one parameter vector. Truncated Gaussians use per-axis rejection
  // against the untruncated Gaussian, capped at 10000 attempts per axis.
  std::vector<double> sample(Rng& rng) const;

  // Exact probability mass of one grid block (Uniform, TruncatedGaussian,
  // Empirical). Mixture has no closed form here and uses Monte Carlo in
  // compute_masses instead.
  double block_mass(const Block& block, const Division& div) const;

 private:
  ParamDistribution() : space_({0.0}, {1.0}) {}

  DistKind kind_ = DistKind::Uniform;
  ParameterSpace space_;
  std::vector<double> mean_;
  std::vector<double> stddev_;
  std::vector<std::vector<double>> points_;
  std::vector<double> weights_;  // empirical point or mixture weights
  std::shared_ptr<const std::vector<ParamDistribution>> components_;
};

// Fill block masses: analytic for Uniform/TruncatedGaussian/Empirical,
// Monte Carlo with n_mc draws for Mixture (standard error of one block mass
// is about sqrt(m(1-m)/n_mc)). Masses are renormalized to sum to exactly 1.
void compute_masses(Division& div, const ParamDistribution& dist, Rng& rng,
                    std::int64_t n_mc = 100000);

// Block-discretized total variation distance, 0.5 * sum_j |m_a(j) - m_b(j)|.
// A lower bound on the continuous TV distance of the two distributions.
double total_variation(const ParamDistribution& a, const ParamDistribution& b,
                       const Division& div, Rng& rng,
                       std::int64_t n_mc = 100000);

// One step of the bounded-drift parameter process: uniform perturbation with
// infinity-norm at most step_bound, reflected at the space boundary.
std::vector<double> parameter_process_next(std::span<const double> current,
                                           double step_bound,
                                           const ParameterSpace& space,
                                           Rng& rng);

// Source of environment parameters for distribution-free training: either
// iid draws from a distribution, or the bounded-drift process initialized
// from it (step_bound = +inf degenerates to iid redraws).
class ParameterProcess {
 public:
  static ParameterProcess iid(ParamDistribution dist, Rng rng);
  static ParameterProcess drifting(ParamDistribution init, double step_bound,
                                   Rng rng);

  std::vector<double> next();
  bool is_iid() const { return iid_; }

 private:
  ParameterProcess(ParamDistribution dist, double step_bound, bool iid,
                   Rng rng);

  ParamDistribution dist_;
  double step_bound_ = 0.0;
  bool iid_ = true;
  bool started_ = false;
  std::vector<double> current_;
  Rng rng_;
};

}  // namespace uor
