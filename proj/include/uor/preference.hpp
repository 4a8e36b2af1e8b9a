#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace uor {

enum class PrefKind { Power, Tabulated };

// Non-increasing preference weight W over rankings in [0,1], normalized so
// that its integral over [0,1] is 1.
//
// The Power family W(x) = (k+1)(1-x)^k is already normalized; k = 0 is the
// uniform (average-case) weighting and larger k shifts weight toward the
// worst-ranked returns. k = +inf is the Dirac sentinel: all weight sits at
// ranking 0, which turns the metric into the essential minimum return.
class PreferenceSpec {
 public:
  static PreferenceSpec power(double k);
  static PreferenceSpec dirac();  // power(k = +inf)
  // Piecewise-linear W from (x, w) knots: x ascending, first 0 and last 1,
  // w nonnegative and nonincreasing. Rescaled to integrate to 1.
  static PreferenceSpec tabulated(std::vector<std::pair<double, double>> knots);

  PrefKind kind() const { return kind_; }
  double k() const { return k_; }
  bool is_dirac() const;
  const std::vector<std::pair<double, double>>& knots() const { return knots_; }

  // W(x) for x in [0,1]. Dirac: +inf at 0, 0 elsewhere.
  double value(double x) const;

  // Exact integral of W over [a,b], 0 <= a <= b <= 1. Power kind uses the
  // closed form (1-a)^(k+1) - (1-b)^(k+1); Tabulated kind exact
  // piecewise-linear quadrature.
  double integral(double a, double b) const;

 private:
  PrefKind kind_ = PrefKind::Power;
  double k_ = 0.0;
  std::vector<std::pair<double, double>> knots_;
  double knot_norm_ = 1.0;  // raw integral of the tabulated knots
};

struct LedgerEntry {
  double ret = 0.0;     // return J
  double mass = 0.0;    // probability mass of the unit
  double weight = 0.0;  // preference weight assigned to the unit
  int source_id = 0;    // position in the caller's input
};

// Returns sorted ascending with ties kept in input order; masses and the
// weights assigned from mass intervals of W.
struct RankedLedger {
  std::vector<LedgerEntry> entries;

  double mass_sum() const;
  double weight_sum() const;
  // Cumulative mass of entries strictly before position i.
  double cumulative_before(std::size_t i) const;
};

// Stable ascending sort of (return, mass) pairs; weights left unset.
// Masses must be nonnegative and sum to 1 within 1e-9; NaN returns rejected.
RankedLedger rank(std::span<const std::pair<double, double>> returns_and_masses);

// Discrete ranking value at entry i: total mass of entries whose return is
// <= the return at i (the non-strict indicator convention).
double ranking_value(const RankedLedger& ledger, std::size_t i);

struct MetricValue {
  double value = 0.0;
  RankedLedger ledger;
};

// Exact preference-weighted metric for a finite (return, mass) support:
// sort ascending, assign each unit the integral of W over its cumulative
// mass interval, and sum weight * return. Cumulative bounds are normalized
// by the total mass so the weights always partition the unit integral of W.
MetricValue exact_metric(
    std::span<const std::pair<double, double>> returns_and_masses,
    const PreferenceSpec& pref);

}  // namespace uor
