#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "coevonet/graphon.hpp"
#include "coevonet/io.hpp"
#include "coevonet/trajectory.hpp"

namespace coevonet {

enum class PathSpace { scalar, densities, graphon };

/// Piecewise-constant path: values[i] holds on [times[i], times[i+1]), the last
/// value holds from times.back() onwards. `horizon` is the observed range.
template <class V>
struct SampledPath {
  PathSpace space = PathSpace::scalar;
  std::vector<double> times;
  std::vector<V> values;
  double horizon = 0;

  SampledPath() = default;
  SampledPath(PathSpace s, std::vector<double> t, std::vector<V> v, double h)
      : space(s), times(std::move(t)), values(std::move(v)), horizon(h) {
    validate();
  }

  void validate() const {
    if (times.empty() || times.size() != values.size()) throw usage_error("path needs one value per breakpoint");
    if (times.front() != 0.0) throw usage_error("path must start at time 0");
    for (std::size_t i = 1; i < times.size(); ++i)
      if (!(times[i] > times[i - 1])) throw usage_error("path breakpoints must be strictly increasing");
    if (!(horizon >= times.back())) throw usage_error("path horizon precedes its last breakpoint");
  }

  const V& at(double t) const {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    const auto i = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    return values[i];
  }
};

using ScalarPath = SampledPath<double>;
using DensityPath = SampledPath<std::vector<double>>;
using GraphonPath = SampledPath<ColouredGraphon>;

struct DmResult {
  double value = 0;       // integral over [0, inf) with the constant-tail convention
  double truncated = 0;   // integral over [0, horizon]
  double tail_bound = 0;  // e^{-horizon}
  double horizon = 0;
};

namespace detail {

template <class V>
void check_compatible(const SampledPath<V>& x, const SampledPath<V>& y) {
  x.validate();
  y.validate();
  if (x.space != y.space) throw usage_error("paths live in different state spaces");
}

// Calls fn(start, end, x value, y value) over the merged partition; end is +inf for the last piece.
template <class V, class Fn>
void merged_pieces(const SampledPath<V>& x, const SampledPath<V>& y, Fn&& fn) {
  std::vector<double> cuts(x.times);
  cuts.insert(cuts.end(), y.times.begin(), y.times.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    const double end = i + 1 < cuts.size() ? cuts[i + 1] : INFINITY;
    fn(cuts[i], end, x.at(cuts[i]), y.at(cuts[i]));
  }
}

// Exponential measure of [a, b).
inline double exp_mass(double a, double b) {
  if (!(b > a)) return 0.0;
  if (std::isinf(b)) return std::exp(-a);
  return -std::exp(-a) * std::expm1(-(b - a));
}

inline double weighted_l1(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw usage_error("density tuples differ in length");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::ldexp(std::abs(a[i] - b[i]), -static_cast<int>(i) - 1);
  return s;
}

}  // namespace detail

/// Integral of (1 ^ r(x_t, y_t)) e^{-t} dt for an arbitrary metric r.
template <class V, class R>
DmResult d_m(const SampledPath<V>& x, const SampledPath<V>& y, R&& r, double horizon) {
  detail::check_compatible(x, y);
  if (!(horizon > 0)) throw usage_error("metric horizon must be positive");
  DmResult out;
  out.horizon = horizon;
  out.tail_bound = std::exp(-horizon);
  detail::merged_pieces(x, y, [&](double a, double b, const V& xv, const V& yv) {
    const double d = std::min(1.0, static_cast<double>(r(xv, yv)));
    if (d == 0) return;
    out.value += d * detail::exp_mass(a, b);
    out.truncated += d * detail::exp_mass(std::min(a, horizon), std::min(b, horizon));
  });
  return out;
}

inline DmResult d_m(const ScalarPath& x, const ScalarPath& y, double horizon = 10.0) {
  return d_m(x, y, [](double a, double b) { return std::abs(a - b); }, horizon);
}

/// Density tuples are compared with weights 2^-(i+1), matching the catalog order.
inline DmResult d_m(const DensityPath& x, const DensityPath& y, double horizon = 10.0) {
  return d_m(x, y, detail::weighted_l1, horizon);
}

inline DmResult d_m(const GraphonPath& x, const GraphonPath& y, double horizon = 10.0, int K = 3) {
  const MotifCatalog cat(K);
  return d_m(
      x, y, [&](const ColouredGraphon& a, const ColouredGraphon& b) { return d_sub(a, b, cat).value; }, horizon);
}

/// inf{eps > 0 : measure of {r > eps} under e^{-t} dt is at most eps}, evaluated
/// exactly from the sorted piece distances.
template <class V, class R>
double d_m_tilde(const SampledPath<V>& x, const SampledPath<V>& y, R&& r) {
  detail::check_compatible(x, y);
  std::vector<std::pair<double, double>> pieces;  // (distance, mass)
  detail::merged_pieces(x, y, [&](double a, double b, const V& xv, const V& yv) {
    const double d = r(xv, yv);
    if (d > 0) pieces.emplace_back(d, detail::exp_mass(a, b));
  });
  if (pieces.empty()) return 0.0;
  std::sort(pieces.begin(), pieces.end());
  double above = 0;
  for (const auto& p : pieces) above += p.second;
  // on [level, next) the exceedance mass is the mass strictly above level
  double level = 0;
  std::size_t i = 0;
  while (true) {
    while (i < pieces.size() && pieces[i].first <= level) above -= pieces[i++].second;
    if (i == pieces.size()) above = 0;
    const double next = i < pieces.size() ? pieces[i].first : INFINITY;
    const double candidate = std::max(level, above);
    if (candidate < next) return candidate;
    level = next;
  }
}

inline double d_m_tilde(const ScalarPath& x, const ScalarPath& y) {
  return d_m_tilde(x, y, [](double a, double b) { return std::abs(a - b); });
}

inline double d_m_tilde(const DensityPath& x, const DensityPath& y) { return d_m_tilde(x, y, detail::weighted_l1); }

/// The path t -> x(t + h).
template <class V>
SampledPath<V> time_shift(const SampledPath<V>& x, double h) {
  if (h < 0) throw usage_error("time shift must be nonnegative");
  x.validate();
  std::vector<double> t{0.0};
  std::vector<V> v{x.at(h)};
  for (std::size_t i = 0; i < x.times.size(); ++i)
    if (x.times[i] > h) {
      t.push_back(x.times[i] - h);
      v.push_back(x.values[i]);
    }
  return SampledPath<V>(x.space, std::move(t), std::move(v), std::max(t.back(), x.horizon - h));
}

/// Time in [a, b] during which the path is at or below u.
inline double occupation_time(const ScalarPath& q, double a, double b, double u) {
  if (!(a > 0 && b > a)) throw usage_error("occupation window needs 0 < a < b");
  if (!(u > 0 && u < 1)) throw usage_error("occupation level must lie in (0, 1)");
  q.validate();
  double total = 0;
  for (std::size_t i = 0; i < q.times.size(); ++i) {
    const double s = std::max(a, q.times[i]);
    const double e = std::min(b, i + 1 < q.times.size() ? q.times[i + 1] : INFINITY);
    if (e > s && q.values[i] <= u) total += e - s;
  }
  return total;
}

/// Piecewise-constant path of one summary field ("q", "p", "C" or "D") through the checkpoints.
inline ScalarPath trajectory_path(const Trajectory& tr, const std::string& field) {
  if (tr.points.empty()) throw usage_error("trajectory has no checkpoints");
  double SummaryStats::*member = nullptr;
  if (field == "q") member = &SummaryStats::q;
  if (field == "p") member = &SummaryStats::p;
  if (field == "C") member = &SummaryStats::C;
  if (field == "D") member = &SummaryStats::D;
  if (!member) throw usage_error("unknown trajectory field '" + field + "'");
  std::vector<double> t, v;
  for (const auto& c : tr.points) {
    t.push_back(c.t);
    v.push_back(c.stats.*member);
  }
  const double h = t.back();
  return ScalarPath(PathSpace::scalar, std::move(t), std::move(v), h);
}

inline DensityPath density_path(const Trajectory& tr) {
  if (tr.points.empty()) throw usage_error("trajectory has no checkpoints");
  std::vector<double> t;
  std::vector<std::vector<double>> v;
  for (const auto& c : tr.points) {
    if (c.motif_densities.size() != tr.points.front().motif_densities.size() || c.motif_densities.empty())
      throw usage_error("trajectory lacks motif densities at some checkpoint");
    t.push_back(c.t);
    v.push_back(c.motif_densities);
  }
  const double h = t.back();
  return DensityPath(PathSpace::densities, std::move(t), std::move(v), h);
}

struct AbsorptionEstimate {
  double p0 = 0, p1 = 0;    // P(q_t = 0), P(q_t = 1)
  double se0 = 0, se1 = 0;  // binomial standard errors
  std::size_t runs = 0;
};

/// Frequencies of exact consensus at time t across an ensemble.
inline AbsorptionEstimate absorption_estimate(const std::vector<Trajectory>& runs, double t) {
  if (runs.empty()) throw usage_error("absorption estimate needs at least one run");
  AbsorptionEstimate a;
  a.runs = runs.size();
  std::size_t zeros = 0, ones = 0;
  for (const auto& tr : runs) {
    const double q = trajectory_path(tr, "q").at(t);
    zeros += q == 0.0;
    ones += q == 1.0;
  }
  const double m = static_cast<double>(a.runs);
  a.p0 = zeros / m;
  a.p1 = ones / m;
  a.se0 = std::sqrt(a.p0 * (1 - a.p0) / m);
  a.se1 = std::sqrt(a.p1 * (1 - a.p1) / m);
  return a;
}

struct GapSeries {
  std::vector<double> t;
  std::vector<double> gap;
  double truncation_bound = 0;
};

/// d_sub between each graph snapshot and its colour-homogenised projection.
inline GapSeries homogenisation_gap(const Trajectory& tr, int K) {
  const MotifCatalog cat(K);
  GapSeries out;
  out.truncation_bound = cat.truncation_bound();
  for (const auto& c : tr.points) {
    if (!c.graph) throw usage_error("homogenisation gap needs graph snapshots");
    out.t.push_back(c.t);
    out.gap.push_back(d_sub(*c.graph, projected(*c.graph), cat).value);
  }
  return out;
}

struct ComparisonRow {
  std::string label;
  double value = 0;
  double std_error = 0;
};

inline std::string comparison_csv(const std::vector<ComparisonRow>& rows, const std::string& key = "t") {
  std::string s = key + ",value,stderr\n";
  for (const auto& r : rows)
    s += r.label + "," + format_double(r.value) + "," + (std::isnan(r.std_error) ? "" : format_double(r.std_error)) +
         "\n";
  return s;
}

}  // namespace coevonet
