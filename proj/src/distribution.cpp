#include "uor/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uor/errors.hpp"

namespace uor {

namespace {

constexpr double kWeightSumTol = 1e-12;
constexpr int kRejectionCap = 10000;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

void check_weights(const std::vector<double>& w, const char* what) {
  double sum = 0.0;
  for (double x : w) {
    if (!(x >= 0.0)) throw ValidationError(std::string(what) + ": negative weight");
    sum += x;
  }
  if (std::abs(sum - 1.0) > kWeightSumTol) {
    throw ValidationError(std::string(what) + ": weights must sum to 1 within 1e-12");
  }
}

}  // namespace

ParamDistribution ParamDistribution::uniform(ParameterSpace space) {
  ParamDistribution d;
  d.kind_ = DistKind::Uniform;
  d.space_ = std::move(space);
  return d;
}

ParamDistribution ParamDistribution::truncated_gaussian(
    ParameterSpace space, std::vector<double> mean, std::vector<double> stddev) {
  ParamDistribution d;
  d.kind_ = DistKind::TruncatedGaussian;
  d.space_ = std::move(space);
  d.mean_ = std::move(mean);
  d.stddev_ = std::move(stddev);
  const auto dim = static_cast<std::size_t>(d.space_.dims());
  if (d.mean_.size() != dim || d.stddev_.size() != dim) {
    throw ValidationError("truncated gaussian: mean/std dims mismatch");
  }
  for (std::size_t i = 0; i < dim; ++i) {
    if (!std::isfinite(d.mean_[i]) || !(d.stddev_[i] > 0.0) || !std::isfinite(d.stddev_[i])) {
      throw ValidationError("truncated gaussian: std must be positive and finite on axis " +
                            std::to_string(i));
    }
  }
  return d;
}

ParamDistribution ParamDistribution::empirical(
    ParameterSpace space, std::vector<std::vector<double>> points,
    std::vector<double> weights) {
  ParamDistribution d;
  d.kind_ = DistKind::Empirical;
  d.space_ = std::move(space);
  d.points_ = std::move(points);
  d.weights_ = std::move(weights);
  if (d.points_.empty() || d.points_.size() != d.weights_.size()) {
    throw ValidationError("empirical: points/weights must be non-empty and equal length");
  }
  for (const auto& p : d.points_) {
    if (!d.space_.contains(p)) {
      throw ValidationError("empirical: point outside the parameter space");
    }
  }
  check_weights(d.weights_, "empirical");
  return d;
}

ParamDistribution ParamDistribution::mixture(
    std::vector<ParamDistribution> components, std::vector<double> weights) {
  if (components.empty() || components.size() != weights.size()) {
    throw ValidationError("mixture: components/weights must be non-empty and equal length");
  }
  for (const auto& c : components) {
    if (!(c.space() == components.front().space())) {
      throw ValidationError("mixture: components must share one parameter space");
    }
  }
  check_weights(weights, "mixture");
  ParamDistribution d;
  d.kind_ = DistKind::Mixture;
  d.space_ = components.front().space();
  d.weights_ = std::move(weights);
  d.components_ = std::make_shared<const std::vector<ParamDistribution>>(std::move(components));
  return d;
}

const std::vector<ParamDistribution>& ParamDistribution::components() const {
  if (!components_) throw ValidationError("components(): not a mixture");
  return *components_;
}

std::vector<double> ParamDistribution::sample(Rng& rng) const {
  const int d = space_.dims();
  std::vector<double> p(static_cast<std::size_t>(d));
  switch (kind_) {
    case DistKind::Uniform:
      for (int i = 0; i < d; ++i) {
        p[i] = rng.uniform(space_.lower()[i], space_.upper()[i]);
      }
      return p;
    case DistKind::TruncatedGaussian:
      for (int i = 0; i < d; ++i) {
        const double lo = space_.lower()[i];
        const double hi = space_.upper()[i];
        bool accepted = false;
        for (int attempt = 0; attempt < kRejectionCap; ++attempt) {
          const double x = mean_[i] + stddev_[i] * rng.normal();
          if (x >= lo && x <= hi) {
            p[i] = x;
            accepted = true;
            break;
          }
        }
        if (!accepted) {
          throw NumericalError(
              "degenerate truncation on axis " + std::to_string(i) +
              ": 10000 rejections; std dwarfs the interval or mean lies far outside");
        }
      }
      return p;
    case DistKind::Empirical:
      return points_[rng.categorical(weights_)];
    case DistKind::Mixture:
      return (*components_)[rng.categorical(weights_)].sample(rng);
  }
  throw ValidationError("sample: unknown distribution kind");
}

double ParamDistribution::block_mass(const Block& block, const Division& div) const {
  switch (kind_) {
    case DistKind::Uniform: {
      double v = 1.0;
      for (std::size_t i = 0; i < block.lower.size(); ++i) {
        v *= block.upper[i] - block.lower[i];
      }
      return v / space_.volume();
    }
    case DistKind::TruncatedGaussian: {
      double m = 1.0;
      for (int i = 0; i < space_.dims(); ++i) {
        const double s = stddev_[i];
        const double mu = mean_[i];
        const double z_lo = normal_cdf((space_.lower()[i] - mu) / s);
        const double z_hi = normal_cdf((space_.upper()[i] - mu) / s);
        const double denom = z_hi - z_lo;
        if (!(denom > 0.0)) {
          throw NumericalError("truncated gaussian: vanishing mass inside the space on axis " +
                               std::to_string(i));
        }
        const double c_lo = normal_cdf((block.lower[i] - mu) / s);
        const double c_hi = normal_cdf((block.upper[i] - mu) / s);
        m *= (c_hi - c_lo) / denom;
      }
      return m;
    }
    case DistKind::Empirical: {
      double m = 0.0;
      for (std::size_t i = 0; i < points_.size(); ++i) {
        if (div.locate(points_[i]) == static_cast<std::size_t>(block.id)) {
          m += weights_[i];
        }
      }
      return m;
    }
    case DistKind::Mixture:
      throw ValidationError("block_mass: mixtures have no closed form; use compute_masses");
  }
  throw ValidationError("block_mass: unknown distribution kind");
}

void compute_masses(Division& div, const ParamDistribution& dist, Rng& rng,
                    std::int64_t n_mc) {
  if (!(dist.space() == div.space())) {
    throw ValidationError("compute_masses: inconsistent division (space mismatch)");
  }
  const double vol_err = std::abs(div.covered_volume() - div.space().volume());
  if (vol_err > 1e-9 * div.space().volume()) {
    throw ValidationError("compute_masses: inconsistent division (blocks do not tile the space)");
  }

  if (dist.kind() == DistKind::Mixture) {
    if (n_mc <= 0) throw ValidationError("compute_masses: n_mc must be positive");
    std::vector<std::int64_t> counts(div.size(), 0);
    for (std::int64_t s = 0; s < n_mc; ++s) {
      counts[div.locate(dist.sample(rng))]++;
    }
    for (std::size_t j = 0; j < div.size(); ++j) {
      div.blocks()[j].mass = static_cast<double>(counts[j]) / static_cast<double>(n_mc);
    }
  } else {
    for (Block& b : div.blocks()) b.mass = dist.block_mass(b, div);
  }

  double total = 0.0;
  for (const Block& b : div.blocks()) total += b.mass;
  if (!(total > 0.0)) {
    throw NumericalError("compute_masses: distribution puts no mass on the division");
  }
  for (Block& b : div.blocks()) b.mass /= total;
}

double total_variation(const ParamDistribution& a, const ParamDistribution& b,
                       const Division& div, Rng& rng, std::int64_t n_mc) {
  if (!(a.space() == b.space())) {
    throw ValidationError("total_variation: distributions live on different spaces");
  }
  Division da = div;
  Division db = div;
  Rng ra = rng.fork();
  Rng rb = rng.fork();
  compute_masses(da, a, ra, n_mc);
  compute_masses(db, b, rb, n_mc);
  double tv = 0.0;
  for (std::size_t j = 0; j < div.size(); ++j) {
    tv += std::abs(da.blocks()[j].mass - db.blocks()[j].mass);
  }
  return 0.5 * tv;
}

std::vector<double> parameter_process_next(std::span<const double> current,
                                           double step_bound,
                                           const ParameterSpace& space,
                                           Rng& rng) {
  if (!space.contains(current)) {
    throw ValidationError("parameter process: current point outside the space");
  }
  if (!(step_bound >= 0.0) || !std::isfinite(step_bound)) {
    throw ValidationError("parameter process: step_bound must be finite and >= 0");
  }
  std::vector<double> next(current.begin(), current.end());
  for (int i = 0; i < space.dims(); ++i) {
    const double lo = space.lower()[i];
    const double hi = space.upper()[i];
    double x = next[i] + rng.uniform(-step_bound, step_bound);
    // Fold back into [lo, hi]; one reflection per period crossed.
    const double period = 2.0 * (hi - lo);
    double y = std::fmod(x - lo, period);
    if (y < 0.0) y += period;
    next[i] = lo + (y <= hi - lo ? y : period - y);
  }
  return next;
}

ParameterProcess::ParameterProcess(ParamDistribution dist, double step_bound,
                                   bool iid, Rng rng)
    : dist_(std::move(dist)), step_bound_(step_bound), iid_(iid), rng_(rng) {}

ParameterProcess ParameterProcess::iid(ParamDistribution dist, Rng rng) {
  return ParameterProcess(std::move(dist), 0.0, true, rng);
}

ParameterProcess ParameterProcess::drifting(ParamDistribution init,
                                            double step_bound, Rng rng) {
  if (std::isinf(step_bound)) {
    return ParameterProcess(std::move(init), 0.0, true, rng);
  }
  if (!(step_bound >= 0.0)) {
    throw ValidationError("parameter process: step_bound must be >= 0");
  }
  return ParameterProcess(std::move(init), step_bound, false, rng);
}

std::vector<double> ParameterProcess::next() {
  if (iid_) return dist_.sample(rng_);
  if (!started_) {
    current_ = dist_.sample(rng_);
    started_ = true;
    return current_;
  }
  current_ = parameter_process_next(current_, step_bound_, dist_.space(), rng_);
  return current_;
}

}  // namespace uor
