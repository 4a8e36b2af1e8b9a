#include "uor/preference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "uor/errors.hpp"

namespace uor {

namespace {
constexpr double kMassSumTol = 1e-9;

void check_unit_interval(double x, const char* what) {
  if (!(x >= 0.0) || !(x <= 1.0)) {
    throw ValidationError(std::string(what) + ": argument outside [0,1]");
  }
}
}  // namespace

PreferenceSpec PreferenceSpec::power(double k) {
  if (std::isnan(k) || k < 0.0) {
    throw ValidationError("preference: robustness degree k must be >= 0");
  }
  PreferenceSpec p;
  p.kind_ = PrefKind::Power;
  p.k_ = k;
  return p;
}

PreferenceSpec PreferenceSpec::dirac() {
  return power(std::numeric_limits<double>::infinity());
}

bool PreferenceSpec::is_dirac() const {
  return kind_ == PrefKind::Power && std::isinf(k_);
}

PreferenceSpec PreferenceSpec::tabulated(
    std::vector<std::pair<double, double>> knots) {
  if (knots.size() < 2) {
    throw ValidationError("tabulated preference: need at least 2 knots");
  }
  if (knots.front().first != 0.0 || knots.back().first != 1.0) {
    throw ValidationError("tabulated preference: knots must start at x=0 and end at x=1");
  }
  for (std::size_t i = 0; i < knots.size(); ++i) {
    const auto& [x, w] = knots[i];
    if (!std::isfinite(x) || !std::isfinite(w) || w < 0.0) {
      throw ValidationError("tabulated preference: knot values must be finite, weights >= 0");
    }
    if (i > 0) {
      if (!(x > knots[i - 1].first)) {
        throw ValidationError("tabulated preference: knot x values must be strictly ascending");
      }
      if (w > knots[i - 1].second + 1e-12) {
        throw ValidationError("tabulated preference: weights must be non-increasing");
      }
    }
  }
  double raw = 0.0;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    raw += 0.5 * (knots[i].second + knots[i - 1].second) *
           (knots[i].first - knots[i - 1].first);
  }
  if (!(raw > 0.0)) {
    throw ValidationError("tabulated preference: weight function integrates to zero");
  }
  PreferenceSpec p;
  p.kind_ = PrefKind::Tabulated;
  p.knots_ = std::move(knots);
  p.knot_norm_ = raw;
  return p;
}

double PreferenceSpec::value(double x) const {
  check_unit_interval(x, "weight_value");
  if (kind_ == PrefKind::Power) {
    if (is_dirac()) {
      return x == 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    return (k_ + 1.0) * std::pow(1.0 - x, k_);
  }
  // Tabulated: linear interpolation, then normalization.
  auto it = std::upper_bound(
      knots_.begin(), knots_.end(), x,
      [](double v, const std::pair<double, double>& kn) { return v < kn.first; });
  if (it == knots_.begin()) return knots_.front().second / knot_norm_;
  if (it == knots_.end()) return knots_.back().second / knot_norm_;
  const auto& [x1, w1] = *std::prev(it);
  const auto& [x2, w2] = *it;
  const double t = (x - x1) / (x2 - x1);
  return (w1 + t * (w2 - w1)) / knot_norm_;
}

double PreferenceSpec::integral(double a, double b) const {
  check_unit_interval(a, "weight_integral");
  check_unit_interval(b, "weight_integral");
  if (a > b) throw ValidationError("weight_integral: lower bound exceeds upper bound");
  if (kind_ == PrefKind::Power) {
    if (is_dirac()) {
      // Limit of (1-a)^(k+1) - (1-b)^(k+1) as k -> inf.
      return (a == 0.0 && b > 0.0) ? 1.0 : 0.0;
    }
    return std::pow(1.0 - a, k_ + 1.0) - std::pow(1.0 - b, k_ + 1.0);
  }
  // Exact trapezoid integral of the piecewise-linear table over [a,b].
  double acc = 0.0;
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    const double x1 = knots_[i - 1].first;
    const double x2 = knots_[i].first;
    const double lo = std::max(a, x1);
    const double hi = std::min(b, x2);
    if (hi <= lo) continue;
    const double w1 = knots_[i - 1].second;
    const double w2 = knots_[i].second;
    const double slope = (w2 - w1) / (x2 - x1);
    const double wl = w1 + slope * (lo - x1);
    const double wh = w1 + slope * (hi - x1);
    acc += 0.5 * (wl + wh) * (hi - lo);
  }
  return acc / knot_norm_;
}

double RankedLedger::mass_sum() const {
  double s = 0.0;
  for (const auto& e : entries) s += e.mass;
  return s;
}

double RankedLedger::weight_sum() const {
  double s = 0.0;
  for (const auto& e : entries) s += e.weight;
  return s;
}

double RankedLedger::cumulative_before(std::size_t i) const {
  double s = 0.0;
  for (std::size_t j = 0; j < i && j < entries.size(); ++j) s += entries[j].mass;
  return s;
}

RankedLedger rank(std::span<const std::pair<double, double>> returns_and_masses) {
  if (returns_and_masses.empty()) {
    throw ValidationError("rank: empty return list");
  }
  RankedLedger ledger;
  ledger.entries.reserve(returns_and_masses.size());
  double total = 0.0;
  for (std::size_t i = 0; i < returns_and_masses.size(); ++i) {
    const auto& [ret, mass] = returns_and_masses[i];
    if (std::isnan(ret)) {
      throw ValidationError("rank: NaN return at index " + std::to_string(i));
    }
    if (!(mass >= 0.0)) {
      throw ValidationError("rank: negative mass at index " + std::to_string(i));
    }
    total += mass;
    ledger.entries.push_back({ret, mass, 0.0, static_cast<int>(i)});
  }
  if (std::abs(total - 1.0) > kMassSumTol) {
    throw ValidationError("rank: masses must sum to 1 within 1e-9");
  }
  std::stable_sort(ledger.entries.begin(), ledger.entries.end(),
                   [](const LedgerEntry& a, const LedgerEntry& b) {
                     return a.ret < b.ret;
                   });
  return ledger;
}

double ranking_value(const RankedLedger& ledger, std::size_t i) {
  if (i >= ledger.entries.size()) {
    throw ValidationError("ranking_value: index out of range");
  }
  const double ref = ledger.entries[i].ret;
  double h = 0.0;
  for (const auto& e : ledger.entries) {
    if (e.ret <= ref) h += e.mass;
  }
  return h;
}

MetricValue exact_metric(
    std::span<const std::pair<double, double>> returns_and_masses,
    const PreferenceSpec& pref) {
  MetricValue out;
  out.ledger = rank(returns_and_masses);
  auto& entries = out.ledger.entries;
  const double total = out.ledger.mass_sum();

  // Cumulative bounds normalized by the total mass; the last bound is pinned
  // to 1 so the weights partition the full integral of W.
  double cum = 0.0;
  double lo = 0.0;
  double value = 0.0;
  for (std::size_t j = 0; j < entries.size(); ++j) {
    cum += entries[j].mass;
    double hi = (j + 1 == entries.size()) ? 1.0 : cum / total;
    hi = std::clamp(hi, lo, 1.0);
    entries[j].weight = pref.integral(lo, hi);
    value += entries[j].weight * entries[j].ret;
    lo = hi;
  }
  out.value = value;
  return out;
}

}  // namespace uor
