#include "uor/metric.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uor/csv.hpp"
#include "uor/errors.hpp"

namespace uor {

namespace {

void fill_unit_views(MetricReport& report, std::size_t n_units) {
  report.unit_returns.assign(n_units, 0.0);
  report.unit_weights.assign(n_units, 0.0);
  for (const auto& e : report.ledger.entries) {
    report.unit_returns[static_cast<std::size_t>(e.source_id)] = e.ret;
    report.unit_weights[static_cast<std::size_t>(e.source_id)] = e.weight;
  }
}

// Weight assignment of the distribution-based reduction: cumulative mass
// intervals, normalized by the total so the weights partition [0,1].
void assign_weights_by_mass(RankedLedger& ledger, const PreferenceSpec& pref) {
  const double total = ledger.mass_sum();
  double cum = 0.0;
  double lo = 0.0;
  for (std::size_t j = 0; j < ledger.entries.size(); ++j) {
    cum += ledger.entries[j].mass;
    double hi = (j + 1 == ledger.entries.size()) ? 1.0 : cum / total;
    hi = std::clamp(hi, lo, 1.0);
    ledger.entries[j].weight = pref.integral(lo, hi);
    lo = hi;
  }
}

// Weight assignment of the distribution-free reduction: rank-j cluster gets
// the integral of W over [(j-1)/n, j/n].
void assign_weights_equal_bins(RankedLedger& ledger, const PreferenceSpec& pref) {
  const auto n = static_cast<double>(ledger.entries.size());
  for (std::size_t j = 0; j < ledger.entries.size(); ++j) {
    const double lo = static_cast<double>(j) / n;
    const double hi = (j + 1 == ledger.entries.size())
                          ? 1.0
                          : static_cast<double>(j + 1) / n;
    ledger.entries[j].weight = pref.integral(lo, hi);
  }
}

}  // namespace

void DbMetricConfig::validate() const {
  if (division.size() == 0) {
    throw ValidationError("db metric: division has no blocks");
  }
  if (n_rollouts_per_block < 1) {
    throw ValidationError("db metric: n_rollouts_per_block must be >= 1");
  }
  double total = 0.0;
  for (const Block& b : division.blocks()) {
    if (!(b.mass >= 0.0)) throw ValidationError("db metric: negative block mass");
    total += b.mass;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ValidationError("db metric: block masses must sum to 1; run compute_masses first");
  }
}

MetricReport metric_from_returns(
    std::span<const std::pair<double, double>> returns_and_masses,
    const PreferenceSpec& pref, MetricMode mode) {
  MetricReport report;
  report.mode = mode;
  report.ledger = rank(returns_and_masses);
  if (mode == MetricMode::DB) {
    assign_weights_by_mass(report.ledger, pref);
  } else {
    assign_weights_equal_bins(report.ledger, pref);
  }
  double value = 0.0;
  for (const auto& e : report.ledger.entries) value += e.weight * e.ret;
  report.value = value;
  fill_unit_views(report, returns_and_masses.size());
  return report;
}

std::vector<CollectedUnit> collect_db_units(const Pmdp& env,
                                            const Policy& policy,
                                            const DbMetricConfig& cfg,
                                            Rng& rng) {
  cfg.validate();
  const auto& blocks = cfg.division.blocks();
  std::vector<CollectedUnit> units(blocks.size());
  std::vector<Rng> streams;
  streams.reserve(blocks.size());
  for (std::size_t j = 0; j < blocks.size(); ++j) streams.push_back(rng.fork());

  parallel_for(blocks.size(), [&](std::size_t j) {
    CollectedUnit& unit = units[j];
    unit.id = blocks[j].id;
    unit.mass = blocks[j].mass;
    unit.trajectories.reserve(static_cast<std::size_t>(cfg.n_rollouts_per_block));
    double sum = 0.0;
    for (int r = 0; r < cfg.n_rollouts_per_block; ++r) {
      Rng stream = streams[j].split(static_cast<std::uint64_t>(r));
      try {
        Trajectory traj = rollout(env, policy, blocks[j].representative,
                                  cfg.horizon, stream);
        sum += traj.discounted_return;
        unit.trajectories.push_back(std::move(traj));
      } catch (const NumericalError& e) {
        throw NumericalError("block " + std::to_string(blocks[j].id) + ": " + e.what());
      }
    }
    unit.mean_return = sum / cfg.n_rollouts_per_block;
  });
  return units;
}

std::vector<CollectedUnit> collect_df_units(const Pmdp& env,
                                            const Policy& policy,
                                            const DfMetricConfig& cfg,
                                            ParameterProcess& params,
                                            Rng& rng) {
  if (cfg.n1 < 1 || cfg.n2 < 1) {
    throw ValidationError("df metric: n1 and n2 must be >= 1");
  }
  // Parameters are observed sequentially; cluster j receives n2 consecutive
  // draws. Rollouts are then independent given the drawn parameters.
  std::vector<std::vector<double>> draws;
  draws.reserve(static_cast<std::size_t>(cfg.n1) * cfg.n2);
  for (int j = 0; j < cfg.n1; ++j) {
    for (int k = 0; k < cfg.n2; ++k) draws.push_back(params.next());
  }
  std::vector<Rng> streams;
  streams.reserve(static_cast<std::size_t>(cfg.n1));
  for (int j = 0; j < cfg.n1; ++j) streams.push_back(rng.fork());

  std::vector<CollectedUnit> units(static_cast<std::size_t>(cfg.n1));
  parallel_for(units.size(), [&](std::size_t j) {
    CollectedUnit& unit = units[j];
    unit.id = static_cast<int>(j);
    unit.mass = 1.0 / cfg.n1;
    unit.trajectories.reserve(static_cast<std::size_t>(cfg.n2));
    double sum = 0.0;
    for (int k = 0; k < cfg.n2; ++k) {
      Rng stream = streams[j].split(static_cast<std::uint64_t>(k));
      const auto& p = draws[j * static_cast<std::size_t>(cfg.n2) + static_cast<std::size_t>(k)];
      try {
        Trajectory traj = rollout(env, policy, p, cfg.horizon, stream);
        sum += traj.discounted_return;
        unit.trajectories.push_back(std::move(traj));
      } catch (const NumericalError& e) {
        throw NumericalError("cluster " + std::to_string(j) + ": " + e.what());
      }
    }
    unit.mean_return = sum / cfg.n2;
  });
  return units;
}

MetricReport metric_from_units(const std::vector<CollectedUnit>& units,
                               const PreferenceSpec& pref, MetricMode mode) {
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(units.size());
  for (const auto& u : units) pairs.emplace_back(u.mean_return, u.mass);
  return metric_from_returns(pairs, pref, mode);
}

MetricReport db_metric(const Pmdp& env, const Policy& policy,
                       const DbMetricConfig& cfg, const PreferenceSpec& pref,
                       Rng& rng) {
  return metric_from_units(collect_db_units(env, policy, cfg, rng), pref,
                           MetricMode::DB);
}

MetricReport db_metric_with_returns(std::span<const double> block_returns,
                                    const Division& division,
                                    const PreferenceSpec& pref) {
  if (block_returns.size() != division.size()) {
    throw ValidationError("db metric: one return per block required");
  }
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(block_returns.size());
  for (std::size_t j = 0; j < block_returns.size(); ++j) {
    pairs.emplace_back(block_returns[j], division.blocks()[j].mass);
  }
  return metric_from_returns(pairs, pref, MetricMode::DB);
}

MetricReport df_metric(const Pmdp& env, const Policy& policy,
                       const DfMetricConfig& cfg, ParameterProcess& params,
                       const PreferenceSpec& pref, Rng& rng) {
  return metric_from_units(collect_df_units(env, policy, cfg, params, rng),
                           pref, MetricMode::DF);
}

double suggest_delta(double epsilon, double scale) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ValidationError("suggest_delta: epsilon must be positive");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ValidationError("suggest_delta: scale must be positive");
  }
  return scale * epsilon;
}

ClusterSizes suggest_cluster_sizes(double epsilon, double rho, int dims,
                                   double c1, double c2) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ValidationError("suggest_cluster_sizes: epsilon must be positive");
  }
  if (!(rho > 0.0 && rho < 1.0)) {
    throw ValidationError("suggest_cluster_sizes: rho must lie in (0,1)");
  }
  if (dims < 1) throw ValidationError("suggest_cluster_sizes: dims must be >= 1");
  if (!(c1 > 0.0) || !(c2 > 0.0)) {
    throw ValidationError("suggest_cluster_sizes: constants must be positive");
  }
  const double log_term = -std::log(rho);
  const double n1 = std::ceil(c1 * log_term / (epsilon * epsilon));
  const double n2 =
      std::ceil(c2 * log_term / std::pow(epsilon, 2.0 * dims + 2.0));
  if (n1 > 1e15 || n2 > 1e15) {
    throw CapacityError("suggest_cluster_sizes: requested sizes exceed 1e15");
  }
  ClusterSizes sizes;
  sizes.n1 = std::max<std::int64_t>(1, static_cast<std::int64_t>(n1));
  sizes.n2 = std::max<std::int64_t>(1, static_cast<std::int64_t>(n2));
  return sizes;
}

void write_metric_report_csv(const MetricReport& report, const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(report.ledger.entries.size());
  double cum = 0.0;
  for (std::size_t j = 0; j < report.ledger.entries.size(); ++j) {
    const auto& e = report.ledger.entries[j];
    cum += e.mass;
    rows.push_back({std::to_string(j), std::to_string(e.source_id),
                    csv::fmt(e.ret), csv::fmt(e.mass), csv::fmt(e.weight),
                    csv::fmt(cum)});
  }
  csv::write(path, {"rank", "source_id", "J", "mass", "weight", "cumulative_mass"},
             rows);
}

}  // namespace uor
