#include "uor/rollout.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "uor/errors.hpp"

namespace uor {

namespace {
bool finite_state(const State& s) {
  for (double v : s.obs) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}
}  // namespace

Trajectory rollout(const Pmdp& env, const Policy& policy,
                   std::span<const double> p, int horizon, Rng& rng) {
  if (horizon <= 0) horizon = env.default_horizon();
  if (horizon < 1) throw ValidationError("rollout: horizon must be >= 1");

  Trajectory traj;
  traj.parameter.assign(p.begin(), p.end());
  State s = env.initial_state(rng);
  double disc = 1.0;
  const double gamma = env.gamma();
  for (int t = 0; t < horizon && !env.terminal(s); ++t) {
    TrajectoryStep step;
    step.state = s;
    step.action = policy.act(s, rng);
    step.next = env.transition(s, step.action, p, rng);
    step.reward = env.reward(s, step.action, step.next, p);
    if (!std::isfinite(step.reward) || !finite_state(step.next)) {
      throw NumericalError("rollout: non-finite state or reward at step " + std::to_string(t));
    }
    traj.discounted_return += disc * step.reward;
    disc *= gamma;
    s = step.next;
    traj.steps.push_back(std::move(step));
  }
  return traj;
}

ReturnEstimate estimate_return(const Pmdp& env, const Policy& policy,
                               std::span<const double> p, int n_rollouts,
                               int horizon, Rng& rng) {
  if (n_rollouts < 1) throw ValidationError("estimate_return: n_rollouts must be >= 1");
  ReturnEstimate est;
  est.n = n_rollouts;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < n_rollouts; ++i) {
    Rng stream = rng.fork();
    const double ret = rollout(env, policy, p, horizon, stream).discounted_return;
    sum += ret;
    sum_sq += ret * ret;
  }
  est.mean = sum / n_rollouts;
  if (n_rollouts > 1) {
    const double var =
        std::max(0.0, (sum_sq - sum * sum / n_rollouts) / (n_rollouts - 1));
    est.std_err = std::sqrt(var / n_rollouts);
  }
  return est;
}

int collection_threads() {
  const char* env = std::getenv("UORRL_THREADS");
  if (env == nullptr) return 1;
  const int n = std::atoi(env);
  if (n < 1) return 1;
  return std::min(n, 256);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(collection_threads()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace uor
