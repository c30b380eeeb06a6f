#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coevonet/coloured_graphon.hpp"
#include "coevonet/density.hpp"
#include "coevonet/motif.hpp"
#include "coevonet/params.hpp"
#include "coevonet/rng.hpp"
#include "coevonet/trajectory.hpp"

namespace coevonet {

/// Switch-on rate A(q) of a uniformly chosen absent pair.
inline double on_rate(double q, const ModelParams& s) {
  return (q * q + (1 - q) * (1 - q)) * s.s_c0 + 2 * q * (1 - q) * s.s_d0;
}

/// Switch-off rate B(q) of a uniformly chosen present pair.
inline double off_rate(double q, const ModelParams& s) {
  return (q * q + (1 - q) * (1 - q)) * s.s_c1 + 2 * q * (1 - q) * s.s_d1;
}

/// Edge-density drift V(p, q) = (1-p)A(q) - pB(q).
inline double drift_V(double p, double q, const ModelParams& s) { return (1 - p) * on_rate(q, s) - p * off_rate(q, s); }

struct Equilibrium {
  std::optional<double> p;
  std::string regime;
};

/// Zero of V(., q): p* = alpha p_c + (1 - alpha) p_d.
inline Equilibrium equilibrium_p(double q, const ModelParams& s) {
  const double sc = s.s_c0 + s.s_c1, sd = s.s_d0 + s.s_d1;
  if (sc <= 0 && sd <= 0) return {std::nullopt, "all switching rates vanish"};
  if (sc <= 0) return {std::nullopt, "concordant pairs never switch"};
  if (sd <= 0) return {std::nullopt, "discordant pairs never switch"};
  const double pc = s.s_c0 / sc, pd = s.s_d0 / sd;
  const double same = q * q + (1 - q) * (1 - q);
  const double ratio = (sd / sc) * (2 * q * (1 - q) / same);
  const double alpha = 1 / (1 + ratio);
  return {alpha * pc + (1 - alpha) * pd, "regular"};
}

/// Limiting concordant and discordant edge densities.
inline std::pair<double, double> concordant_discordant(double p, double q) {
  return {p * (q * q + (1 - q) * (1 - q)), p * 2 * q * (1 - q)};
}

/// State of the limit process; the colour of every cell equals q.
struct LimitState {
  double t = 0;
  double q = 0;
  double p = 0;
  ColouredGraphon kappa;
  bool absorbed = false;

  LimitState(const ColouredGraphon& kernel, double q0) : LimitState(kernel, q0, kernel.mean_kernel()) {}

  LimitState(const ColouredGraphon& kernel, double q0, double p0) : q(q0), p(p0), kappa(kernel) {
    if (!(q0 >= 0 && q0 <= 1)) throw usage_error("colour density must lie in [0,1]");
    kappa.validate();
    if (std::abs(p0 - kernel.mean_kernel()) > 1e-10) throw usage_error("edge density differs from the kernel mean");
    for (int i = 0; i < kappa.m(); ++i) kappa.colour(i) = q0;
    absorbed = q0 == 0.0 || q0 == 1.0;
  }
};

struct LimitOptions {
  double dt = 1e-3;
  std::uint64_t stream = 0;
  /// Spacing of the underlying Brownian path; each step sums dt / resolution increments. Zero means dt.
  double brownian_resolution = 0;
  std::vector<double> snapshot_times;
  bool snapshot_all = false;
  std::function<void(const LimitState&)> on_step;
};

namespace detail {

class BrownianSource {
 public:
  BrownianSource(std::uint64_t seed, std::uint64_t stream, double resolution)
      : rng_(make_stream(seed, stream)), res_(resolution) {}

  double increment(double h) {
    if (res_ <= 0) return std::sqrt(h) * standard_normal(rng_);
    const double k = std::round(h / res_);
    if (k < 1 || std::abs(k * res_ - h) > 1e-9 * std::max(1.0, h))
      throw usage_error("step is not a multiple of the Brownian resolution");
    double w = 0;
    const double sd = std::sqrt(res_);
    for (long i = 0; i < static_cast<long>(k); ++i) w += sd * standard_normal(rng_);
    return w;
  }

 private:
  Rng rng_;
  double res_;
};

inline void check_options(const LimitOptions& opt) {
  if (!(opt.dt > 0)) throw usage_error("step size must be positive");
  if (opt.brownian_resolution > 0) {
    const double k = std::round(opt.dt / opt.brownian_resolution);
    if (k < 1 || std::abs(k * opt.brownian_resolution - opt.dt) > 1e-9 * opt.dt)
      throw usage_error("step size must be a multiple of the Brownian resolution");
  }
}

/// Runs `body(h)` over steps of at most dt covering [from, to], ending exactly at `to`.
template <class F>
void for_each_step(double from, double to, double dt, F&& body) {
  const long n = static_cast<long>(std::ceil((to - from) / dt - 1e-9));
  double t = from;
  for (long i = 1; i <= n; ++i) {
    const double next = i == n ? to : from + static_cast<double>(i) * dt;
    if (!body(next - t)) return;
    t = next;
  }
}

}  // namespace detail

/// One step: exact exponential kernel update with q frozen, then an Euler-Maruyama colour
/// step absorbed at the boundary.
inline void limit_step(LimitState& s, const ModelParams& par, double dW, double h) {
  const double a = on_rate(s.q, par), b = off_rate(s.q, par);
  if (a + b > 0) {
    const double inf = a / (a + b);
    const double decay = std::exp(-par.rho * (a + b) * h);
    const int m = s.kappa.m();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j <= i; ++j) s.kappa.set_kernel(i, j, inf + (s.kappa.kernel(i, j) - inf) * decay);
    const double p_next = inf + (s.p - inf) * decay;
    if (!s.absorbed) {
      const double sigma = std::sqrt(2 * par.eta * s.p * s.q * (1 - s.q));
      s.q += sigma * dW;
    }
    s.p = p_next;
  } else if (!s.absorbed) {
    s.q += std::sqrt(2 * par.eta * s.p * s.q * (1 - s.q)) * dW;
  }
  if (!s.absorbed && (s.q <= 0 || s.q >= 1)) {
    s.q = s.q <= 0 ? 0.0 : 1.0;
    s.absorbed = true;
  }
  for (int i = 0; i < s.kappa.m(); ++i) s.kappa.colour(i) = s.q;
  s.t += h;
}

inline Checkpoint limit_observation(const LimitState& s, double t, bool snapshot) {
  Checkpoint c;
  c.t = t;
  c.stats.q = s.q;
  c.stats.p = s.p;
  std::tie(c.stats.C, c.stats.D) = concordant_discordant(s.p, s.q);
  c.absorbed = s.absorbed;
  if (snapshot) c.graphon = s.kappa;
  return c;
}

/// Integrates the limit process through the checkpoint grid.
inline Trajectory integrate_limit(LimitState s, const ModelParams& par, const std::vector<double>& checkpoints,
                                  std::uint64_t seed, const LimitOptions& opt = {}) {
  par.validate();
  detail::check_options(opt);
  validate_checkpoints(checkpoints);
  Trajectory tr;
  tr.params = par;
  tr.seed = seed;
  tr.stream = opt.stream;
  tr.finite = false;
  detail::BrownianSource noise(seed, opt.stream, opt.brownian_resolution);
  auto wants = [&](double t) {
    return opt.snapshot_all || std::any_of(opt.snapshot_times.begin(), opt.snapshot_times.end(),
                                           [&](double x) { return std::abs(x - t) <= 1e-12 * std::max(1.0, t); });
  };
  s.t = 0;
  double t = 0;
  for (double c : checkpoints) {
    detail::for_each_step(t, c, opt.dt, [&](double h) {
      limit_step(s, par, noise.increment(h), h);
      if (opt.on_step) opt.on_step(s);
      return true;
    });
    t = c;
    s.t = c;
    tr.points.push_back(limit_observation(s, c, wants(c)));
  }
  return tr;
}

struct Estimate {
  double value = 0;
  double std_error = 0;
  std::size_t samples = 0;
};

inline Estimate binomial_estimate(std::size_t hits, std::size_t n) {
  Estimate e;
  e.samples = n;
  e.value = n ? static_cast<double>(hits) / static_cast<double>(n) : 0.0;
  e.std_error = n ? std::sqrt(e.value * (1 - e.value) / static_cast<double>(n)) : 0.0;
  return e;
}

namespace detail {

inline void check_polarisation_regime(const ModelParams& par, double q0) {
  par.validate();
  if (par.s_c0 != 0 || par.s_d0 != 0 || par.s_c1 != par.s_d1 || !(par.s_c1 > 0))
    throw usage_error("polarisation estimate needs s_c0 = s_d0 = 0 and s_c1 = s_d1 > 0");
  if (!(q0 > 0 && q0 < 1)) throw usage_error("polarisation estimate needs q0 in (0,1)");
}

}  // namespace detail

/// P(tau > eta p0 / (rho s1)) for the standard Fisher-Wright diffusion dq = sqrt(2q(1-q)) dW from q0.
inline Estimate polarisation_probability(double p0, const ModelParams& par, double q0, std::size_t samples, double dt,
                                         std::uint64_t seed) {
  detail::check_polarisation_regime(par, q0);
  if (!(dt > 0)) throw usage_error("step size must be positive");
  const double budget = par.eta * p0 / (par.rho * par.s_c1);
  std::size_t survived = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    Rng rng = make_stream(seed, i);
    double q = q0;
    bool alive = true;
    detail::for_each_step(0.0, budget, dt, [&](double h) {
      q += std::sqrt(2 * q * (1 - q) * h) * standard_normal(rng);
      if (q <= 0 || q >= 1) alive = false;
      return alive;
    });
    if (alive) ++survived;
  }
  return binomial_estimate(survived, samples);
}

/// Same probability by integrating the coupled (p, q) equations until the remaining colour
/// clock eta p_t / (rho s1) falls below 1e-10.
inline Estimate polarisation_direct(double p0, const ModelParams& par, double q0, std::size_t samples, double dt,
                                    std::uint64_t seed) {
  detail::check_polarisation_regime(par, q0);
  if (!(dt > 0)) throw usage_error("step size must be positive");
  const double clock_rate = par.eta / (par.rho * par.s_c1);
  std::size_t survived = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    detail::BrownianSource noise(seed, i, 0);
    LimitState s(ColouredGraphon::constant(1, p0, q0), q0);
    while (!s.absorbed && clock_rate * s.p >= 1e-10) limit_step(s, par, noise.increment(dt), dt);
    if (!s.absorbed) ++survived;
  }
  return binomial_estimate(survived, samples);
}

struct MotifFlowResult {
  std::vector<Motif> motifs;
  std::vector<double> times;
  std::vector<std::vector<double>> flow;
  std::vector<std::vector<double>> direct;
  double max_gap = 0;
  std::size_t closure_size = 0;
  bool absorbed = false;
  double stop_time = 0;
};

/// Integrates the stochastic flow of coloured subgraph densities driven by the same Brownian
/// path as `integrate_limit`, next to direct evaluation q^w (1-q)^b t_F(kappa_t). The flow stops
/// at the last step before the colour density reaches 0 or 1.
inline MotifFlowResult motif_flow(const std::vector<Motif>& motifs, LimitState s, const ModelParams& par,
                                  double horizon, std::uint64_t seed, const LimitOptions& opt = {}) {
  par.validate();
  detail::check_options(opt);
  if (!(horizon > 0)) throw usage_error("horizon must be positive");
  if (s.absorbed) throw usage_error("motif flow needs q0 in (0,1)");

  std::vector<Motif> closure;
  std::map<std::string, int> index;
  auto add = [&](const Motif& f) {
    const auto key = f.canonical_key();
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    index.emplace(key, static_cast<int>(closure.size()));
    closure.push_back(f.canonical());
    return static_cast<int>(closure.size()) - 1;
  };
  std::vector<int> wanted;
  for (const auto& f : motifs) wanted.push_back(add(f));
  std::vector<std::vector<int>> minus_edge;
  for (std::size_t i = 0; i < closure.size(); ++i) {
    std::vector<int> sub;
    const Motif f = closure[i];
    for (auto [a, b] : f.edges()) sub.push_back(add(f.without_edge(a, b)));
    minus_edge.push_back(sub);
  }

  const std::size_t d = closure.size();
  auto direct_all = [&](const LimitState& st) {
    std::vector<double> v(d);
    for (std::size_t i = 0; i < d; ++i) v[i] = motif_density(st.kappa, closure[i]);
    return v;
  };
  auto pick = [&](const std::vector<double>& all) {
    std::vector<double> out;
    for (int i : wanted) out.push_back(all[i]);
    return out;
  };

  MotifFlowResult r;
  r.motifs = motifs;
  r.closure_size = d;
  std::vector<double> x = direct_all(s);
  r.times.push_back(0);
  r.flow.push_back(pick(x));
  r.direct.push_back(pick(x));

  detail::BrownianSource noise(seed, opt.stream, opt.brownian_resolution);
  s.t = 0;
  detail::for_each_step(0.0, horizon, opt.dt, [&](double h) {
    const double q = s.q, p = s.p;
    const double dW = noise.increment(h);
    LimitState next = s;
    limit_step(next, par, dW, h);
    if (next.absorbed) {
      r.absorbed = true;
      return false;
    }
    const double a = on_rate(q, par), b = off_rate(q, par);
    const double sigma2 = 2 * par.eta * p * q * (1 - q);
    std::vector<double> nx(d);
    for (std::size_t i = 0; i < d; ++i) {
      const Motif& f = closure[i];
      const double w = f.white_count(), bl = f.black_count(), e = f.edge_count();
      double edge_part = -e * b * x[i];
      for (int j : minus_edge[i]) edge_part += a * (x[j] - x[i]);
      const double colour_part =
          par.eta * (w * (w - 1) * (1 - q) / q - 2 * w * bl + bl * (bl - 1) * q / (1 - q)) * x[i] * p;
      const double g = w / q - bl / (1 - q);
      const double curvature = g * g - w / (q * q) - bl / ((1 - q) * (1 - q));
      nx[i] = x[i] + (par.rho * edge_part + colour_part) * h + g * x[i] * std::sqrt(sigma2) * dW +
              0.5 * sigma2 * x[i] * curvature * (dW * dW - h);
    }
    x = std::move(nx);
    s = std::move(next);
    if (opt.on_step) opt.on_step(s);
    const auto dir = direct_all(s);
    r.times.push_back(s.t);
    r.flow.push_back(pick(x));
    r.direct.push_back(pick(dir));
    for (int i : wanted) r.max_gap = std::max(r.max_gap, std::abs(x[i] - dir[i]));
    return true;
  });
  r.stop_time = r.times.back();
  return r;
}

}  // namespace coevonet
