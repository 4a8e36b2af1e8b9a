#include "uor/pmdp.hpp"

#include <cmath>

#include "uor/errors.hpp"

namespace uor {

double Trajectory::recompute_return(double gamma) const {
  double acc = 0.0;
  double disc = 1.0;
  for (const auto& step : steps) {
    acc += disc * step.reward;
    disc *= gamma;
  }
  return acc;
}

int effective_horizon(double gamma, double r_max, double tail_tol) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw ValidationError("effective_horizon: gamma must lie in (0,1)");
  }
  if (!(r_max > 0.0) || !(tail_tol > 0.0)) {
    throw ValidationError("effective_horizon: r_max and tail_tol must be positive");
  }
  const double t = std::log(tail_tol * (1.0 - gamma) / r_max) / std::log(gamma);
  if (t <= 0.0) return 1;
  if (t > 1e6) throw CapacityError("effective_horizon: horizon above 1e6");
  return static_cast<int>(std::ceil(t));
}

int Pmdp::default_horizon(double tail_tol) const {
  return effective_horizon(gamma(), reward_bound(), tail_tol);
}

}  // namespace uor
