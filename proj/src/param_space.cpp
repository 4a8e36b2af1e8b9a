#include "uor/param_space.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uor/errors.hpp"

namespace uor {

ParameterSpace::ParameterSpace(std::vector<double> lower,
                               std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.empty() || lower_.size() != upper_.size()) {
    throw ValidationError("parameter space: lower/upper must be non-empty and equal length");
  }
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i])) {
      throw ValidationError("parameter space: non-finite bound on axis " + std::to_string(i));
    }
    if (!(lower_[i] < upper_[i])) {
      throw ValidationError("parameter space: lower >= upper on axis " + std::to_string(i));
    }
  }
}

double ParameterSpace::diameter() const {
  double sq = 0.0;
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    const double e = upper_[i] - lower_[i];
    sq += e * e;
  }
  return std::sqrt(sq);
}

double ParameterSpace::volume() const {
  double v = 1.0;
  for (std::size_t i = 0; i < lower_.size(); ++i) v *= upper_[i] - lower_[i];
  return v;
}

bool ParameterSpace::contains(std::span<const double> p, double tol) const {
  if (p.size() != lower_.size()) return false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < lower_[i] - tol || p[i] > upper_[i] + tol) return false;
  }
  return true;
}

double Block::diameter() const {
  double sq = 0.0;
  for (std::size_t i = 0; i < lower.size(); ++i) {
    const double e = upper[i] - lower[i];
    sq += e * e;
  }
  return std::sqrt(sq);
}

std::size_t Division::locate(std::span<const double> p) const {
  if (!space_.contains(p)) {
    throw ValidationError("division: point outside the parameter space");
  }
  const int d = space_.dims();
  std::size_t index = 0;
  std::size_t stride = 1;
  for (int i = 0; i < d; ++i) {
    const double off = (p[i] - space_.lower()[i]) / cell_edge_;
    // Boundary points go to the lower-index cell.
    long t = static_cast<long>(std::ceil(off)) - 1;
    t = std::clamp(t, 0L, static_cast<long>(axis_counts_[i]) - 1);
    index += static_cast<std::size_t>(t) * stride;
    stride *= static_cast<std::size_t>(axis_counts_[i]);
  }
  return index;
}

double Division::covered_volume() const {
  double total = 0.0;
  for (const Block& b : blocks_) {
    double v = 1.0;
    for (std::size_t i = 0; i < b.lower.size(); ++i) v *= b.upper[i] - b.lower[i];
    total += v;
  }
  return total;
}

Division set_division(const ParameterSpace& space, double delta) {
  if (!std::isfinite(delta) || !(delta > 0.0)) {
    throw ValidationError("set_division: delta must be a positive finite real");
  }
  const int d = space.dims();
  const double edge = delta / std::sqrt(static_cast<double>(d));

  Division div;
  div.space_ = space;
  div.delta_ = delta;
  div.cell_edge_ = edge;
  div.axis_counts_.resize(d);

  std::size_t n_total = 1;
  for (int i = 0; i < d; ++i) {
    const auto n = static_cast<std::size_t>(std::ceil(space.extent(i) / edge));
    div.axis_counts_[i] = static_cast<int>(std::max<std::size_t>(n, 1));
    n_total *= static_cast<std::size_t>(div.axis_counts_[i]);
    if (n_total > 50'000'000) {
      throw CapacityError("set_division: block count exceeds 5e7; increase delta");
    }
  }

  div.blocks_.resize(n_total);
  std::vector<int> t(d, 0);  // odometer, axis 0 fastest
  for (std::size_t id = 0; id < n_total; ++id) {
    Block& b = div.blocks_[id];
    b.id = static_cast<int>(id);
    b.lower.resize(d);
    b.upper.resize(d);
    b.representative.resize(d);
    for (int i = 0; i < d; ++i) {
      const double lo = space.lower()[i] + edge * t[i];
      const double hi = std::min(space.lower()[i] + edge * (t[i] + 1), space.upper()[i]);
      b.lower[i] = lo;
      b.upper[i] = hi;
      b.representative[i] = 0.5 * (lo + hi);
    }
    for (int i = 0; i < d; ++i) {
      if (++t[i] < div.axis_counts_[i]) break;
      t[i] = 0;
    }
  }
  return div;
}

}  // namespace uor
