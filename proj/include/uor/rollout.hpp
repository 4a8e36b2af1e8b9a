#pragma once

#include <functional>
#include <span>

#include "uor/pmdp.hpp"
#include "uor/policy.hpp"
#include "uor/rng.hpp"

namespace uor {

// Generate one trajectory with p fixed throughout; stops at a terminal state
// or after `horizon` steps. horizon <= 0 uses the environment default (the
// tail-truncation rule for discounted infinite-horizon environments).
Trajectory rollout(const Pmdp& env, const Policy& policy,
                   std::span<const double> p, int horizon, Rng& rng);

struct ReturnEstimate {
  double mean = 0.0;
  double std_err = 0.0;
  int n = 0;
};

// Monte-Carlo estimate of the expected discounted return at p.
ReturnEstimate estimate_return(const Pmdp& env, const Policy& policy,
                               std::span<const double> p, int n_rollouts,
                               int horizon, Rng& rng);

// Run fn(i) for i in [0, n), using up to UORRL_THREADS workers (default 1).
// Work items must be independent; exceptions are rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

int collection_threads();

}  // namespace uor
