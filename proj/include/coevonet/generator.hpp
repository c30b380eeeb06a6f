#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "coevonet/ctmc.hpp"
#include "coevonet/density.hpp"
#include "coevonet/graphon.hpp"
#include "coevonet/io.hpp"
#include "coevonet/multiset.hpp"
#include "coevonet/params.hpp"

namespace coevonet {

/// Which densities the coefficients are written in. `regular_literal` is the
/// tabulated regular vertex drift, kept for comparison; it carries an O(1) error.
enum class Flavour { injective, regular, regular_literal };

inline std::string to_string(Flavour f) {
  switch (f) {
    case Flavour::injective: return "injective";
    case Flavour::regular: return "regular";
    case Flavour::regular_literal: return "regular_literal";
  }
  return "";
}

inline Flavour parse_flavour(const std::string& s) {
  if (s == "injective") return Flavour::injective;
  if (s == "regular") return Flavour::regular;
  if (s == "regular_literal") return Flavour::regular_literal;
  throw usage_error("unknown flavour '" + s + "'");
}

inline bool uses_injective(Flavour f) { return f == Flavour::injective; }

/// Memoised motif densities of one fixed graph or graphon, keyed by isomorphism class.
template <class V>
class DensityTable {
 public:
  using Evaluator = std::function<V(const Motif&)>;

  explicit DensityTable(Evaluator eval) : eval_(std::move(eval)) {}

  const V& operator()(const Motif& m) {
    const Motif c = m.canonical();
    const std::uint64_t key = (static_cast<std::uint64_t>(c.k()) << 60) |
                              (static_cast<std::uint64_t>(c.white_bits()) << 40) | c.edge_bits();
    auto it = memo_.find(key);
    if (it == memo_.end()) it = memo_.emplace(key, eval_(c)).first;
    return it->second;
  }

 private:
  Evaluator eval_;
  std::unordered_map<std::uint64_t, V> memo_;
};

inline DensityTable<double> graph_densities(const ColouredGraph& g, bool injective) {
  return DensityTable<double>([&g, injective](const Motif& m) {
    return injective ? motif_density_injective(g, m) : motif_density(g, m);
  });
}

inline DensityTable<Rational> rational_graph_densities(const ColouredGraph& g, bool injective) {
  return DensityTable<Rational>(
      [&g, injective](const Motif& m) { return motif_density_rational(g, m, injective); });
}

inline DensityTable<double> graphon_densities(const ColouredGraphon& w) {
  return DensityTable<double>([&w](const Motif& m) { return motif_density(w, m); });
}

template <class V>
V evaluate(const SignedMotifMultiset& set, DensityTable<V>& t) {
  V s = 0;
  for (const auto& [key, e] : set.entries()) s += V(e.multiplicity) * t(e.motif);
  return s;
}

/// The vertex drift written as (n - offset) * sum over `scaled` + sum over `fixed`.
struct VertexTerms {
  SignedMotifMultiset scaled;
  SignedMotifMultiset fixed;
  int offset = 0;
};

inline VertexTerms vertex_terms(const Motif& f, Flavour fl) {
  VertexTerms v;
  v.scaled = build_multiset(f, MultisetKind::S);
  switch (fl) {
    case Flavour::injective:
      v.offset = f.k();
      v.fixed = build_multiset(f, MultisetKind::S_circ);
      break;
    case Flavour::regular:
      v.fixed = build_multiset(f, MultisetKind::S_diamond) + build_multiset(f, MultisetKind::regular_correction);
      break;
    case Flavour::regular_literal:
      v.offset = f.k();
      v.fixed = build_multiset(f, MultisetKind::S_circ) + build_multiset(f, MultisetKind::S_diamond);
      break;
  }
  return v;
}

namespace detail {

inline std::uint64_t motif_code(const Motif& m) {
  return (static_cast<std::uint64_t>(m.k()) << 60) | (static_cast<std::uint64_t>(m.white_bits()) << 40) |
         m.edge_bits();
}

inline const VertexTerms& cached_vertex_terms(const Motif& f, Flavour fl) {
  thread_local std::map<std::pair<std::uint64_t, int>, VertexTerms> cache;
  const auto key = std::make_pair(motif_code(f), static_cast<int>(fl));
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, vertex_terms(f, fl)).first;
  return it->second;
}

inline const SignedMotifMultiset& cached_T(const Motif& f, const Motif& g) {
  thread_local std::map<std::pair<std::uint64_t, std::uint64_t>, SignedMotifMultiset> cache;
  const auto key = std::make_pair(motif_code(f), motif_code(g));
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, build_T(f, g, TKind::T)).first;
  return it->second;
}

}  // namespace detail

template <class V>
V mu_vertex(const Motif& f, DensityTable<V>& t, Flavour fl, int n) {
  const auto& vt = detail::cached_vertex_terms(f, fl);
  return V(n - vt.offset) * evaluate(vt.scaled, t) + evaluate(vt.fixed, t);
}

template <class V>
V mu_edge(const Motif& f, DensityTable<V>& t, const ModelParams& par) {
  const V tf = t(f);
  V total = 0;
  for (auto [r, s] : f.edges()) {
    const bool conc = f.colour(r) == f.colour(s);
    total += V(par.s(conc, false)) * (t(f.without_edge(r, s)) - tf) - V(par.s(conc, true)) * tf;
  }
  return total;
}

template <class V>
V sigma_vertex(const Motif& f, const Motif& g, DensityTable<V>& t) {
  return evaluate(detail::cached_T(f, g), t);
}

struct CoefficientRecord {
  double mu_v = 0;
  double mu_e = 0;
  double sigma_v = 0;
};

/// Drift of t_F from flips and toggles, and the flip covariance of (t_F, t_F2), on a graph.
inline CoefficientRecord coefficients(const Motif& f, const Motif& f2, const ColouredGraph& g, const ModelParams& par,
                                      Flavour fl) {
  auto t = graph_densities(g, uses_injective(fl));
  return {mu_vertex(f, t, fl, g.n()), mu_edge(f, t, par), sigma_vertex(f, f2, t)};
}

/// Same coefficients with densities taken from a graphon and the vertex count n supplied.
inline CoefficientRecord coefficients(const Motif& f, const Motif& f2, const ColouredGraphon& w, int n,
                                      const ModelParams& par, Flavour fl) {
  auto t = graphon_densities(w);
  return {mu_vertex(f, t, fl, n), mu_edge(f, t, par), sigma_vertex(f, f2, t)};
}

/// Calls fn(rate, neighbour) for every transition of the chain with positive rate.
template <class Fn>
void for_each_transition(const ColouredGraph& g0, const ModelParams& par, Fn&& fn) {
  ColouredGraph g = g0;
  const int n = g.n();
  for (int u = 0; u < n; ++u) {
    const int r = g.discordant_degree(u);
    if (r == 0) continue;
    g.flip(u);
    fn(par.eta * r, static_cast<const ColouredGraph&>(g));
    g.flip(u);
  }
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) {
      const double rate = par.rho * par.s(g.colour(u) == g.colour(v), g.adjacent(u, v));
      if (rate <= 0) continue;
      g.toggle(u, v);
      fn(rate, static_cast<const ColouredGraph&>(g));
      g.toggle(u, v);
    }
}

/// Exact generator of the chain applied to f at g, by enumerating all transitions.
inline double exact_generator_oracle(const ColouredGraph& g, const ModelParams& par,
                                     const std::function<double(const ColouredGraph&)>& f) {
  if (g.n() > 64) throw usage_error("exact generator oracle needs n <= 64");
  const double f0 = f(g);
  double total = 0;
  for_each_transition(g, par, [&](double rate, const ColouredGraph& h) { total += rate * (f(h) - f0); });
  return total;
}

inline std::vector<double> densities(const ColouredGraph& g, const std::vector<Motif>& motifs, bool injective) {
  std::vector<double> x;
  for (const auto& m : motifs) x.push_back(injective ? motif_density_injective(g, m) : motif_density(g, m));
  return x;
}

inline double exact_generator_oracle(const ColouredGraph& g, const ModelParams& par, const std::vector<Motif>& motifs,
                                     bool injective, const std::function<double(const std::vector<double>&)>& f) {
  return exact_generator_oracle(g, par, [&](const ColouredGraph& h) { return f(densities(h, motifs, injective)); });
}

/// A twice differentiable function of a density vector with its derivatives.
struct SmoothFunction {
  using Vec = std::vector<double>;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  std::function<std::vector<Vec>(const Vec&)> hessian;

  static SmoothFunction linear(Vec a) {
    const auto d = a.size();
    return {[a](const Vec& x) {
              double s = 0;
              for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * x[i];
              return s;
            },
            [a](const Vec&) { return a; },
            [d](const Vec&) { return std::vector<Vec>(d, Vec(d, 0.0)); }};
  }

  /// x -> x'Ax/2 + b'x for symmetric A; b defaults to zero.
  static SmoothFunction quadratic(std::vector<Vec> A, Vec b = {}) {
    const auto d = A.size();
    if (b.empty()) b.assign(d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        if (A[i][j] != A[j][i]) throw usage_error("quadratic form must be symmetric");
    return {[A, b](const Vec& x) {
              double s = 0;
              for (std::size_t i = 0; i < A.size(); ++i) {
                s += b[i] * x[i];
                for (std::size_t j = 0; j < A.size(); ++j) s += 0.5 * A[i][j] * x[i] * x[j];
              }
              return s;
            },
            [A, b](const Vec& x) {
              Vec g = b;
              for (std::size_t i = 0; i < A.size(); ++i)
                for (std::size_t j = 0; j < A.size(); ++j) g[i] += A[i][j] * x[j];
              return g;
            },
            [A](const Vec&) { return A; }};
  }
};

/// Drift-plus-diffusion approximation of the generator applied to f(t_F1, ..., t_Fd).
inline double generator_formula(const ColouredGraph& g, const ModelParams& par, const std::vector<Motif>& motifs,
                                const SmoothFunction& f, Flavour fl) {
  auto t = graph_densities(g, uses_injective(fl));
  std::vector<double> x;
  for (const auto& m : motifs) x.push_back(t(m));
  const auto grad = f.gradient(x);
  const auto hess = f.hessian(x);
  const std::size_t d = motifs.size();
  double total = 0;
  for (std::size_t i = 0; i < d; ++i) {
    if (grad[i] == 0) continue;
    total += grad[i] * (par.eta * mu_vertex(motifs[i], t, fl, g.n()) + par.rho * mu_edge(motifs[i], t, par));
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      if (hess[i][j] == 0) continue;
      total += 0.5 * par.eta * hess[i][j] * sigma_vertex(motifs[i], motifs[j], t);
    }
  return total;
}

/// Exact colour-summed coefficients over all colourings H of an uncoloured motif.
struct ColourSumReport {
  Flavour flavour = Flavour::regular;
  Rational drift_sum = 0;
  Rational diffusion_sum_left = 0;   // sum over H of sigma(H, H')
  Rational diffusion_sum_right = 0;  // sum over H of sigma(H', H)
  std::array<bool, 5> identities{};
  bool drift_multiset_empty = false;
  bool diffusion_left_empty = false;
  bool diffusion_right_empty = false;

  bool all_identities() const {
    for (bool b : identities)
      if (!b) return false;
    return true;
  }
  bool zero() const { return drift_sum == 0 && diffusion_sum_left == 0 && diffusion_sum_right == 0; }

  ojson to_json() const {
    ojson j;
    j["flavour"] = to_string(flavour);
    j["drift_sum"] = drift_sum.str();
    j["diffusion_sum_left"] = diffusion_sum_left.str();
    j["diffusion_sum_right"] = diffusion_sum_right.str();
    j["identities"] = identities;
    j["drift_multiset_empty"] = drift_multiset_empty;
    j["diffusion_left_empty"] = diffusion_left_empty;
    j["diffusion_right_empty"] = diffusion_right_empty;
    j["zero"] = zero();
    return j;
  }
};

inline ColourSumReport verify_colour_sums(const Motif& fbar, const Motif& h2, const ColouredGraph& g,
                                          Flavour fl = Flavour::regular) {
  ColourSumReport rep;
  rep.flavour = fl;
  auto t = rational_graph_densities(g, uses_injective(fl));
  std::array<SignedMotifMultiset, 10> side;
  SignedMotifMultiset scaled, fixed, left, right;
  for (const auto& h : fbar.colourings()) {
    rep.drift_sum += mu_vertex(h, t, fl, g.n());
    rep.diffusion_sum_left += sigma_vertex(h, h2, t);
    rep.diffusion_sum_right += sigma_vertex(h2, h, t);
    side[0] += build_multiset(h, MultisetKind::S_plus);
    side[1] += build_multiset(h, MultisetKind::S_minus);
    side[2] += build_multiset(h, MultisetKind::S_circ_plus);
    side[3] += build_multiset(h, MultisetKind::S_circ_minus);
    side[4] += build_multiset(h, MultisetKind::S_diamond_plus);
    side[5] += build_multiset(h, MultisetKind::S_diamond_minus);
    side[6] += build_T(h, h2, TKind::eq_plus);
    side[7] += build_T(h, h2, TKind::ne_minus);
    side[8] += build_T(h, h2, TKind::eq_minus);
    side[9] += build_T(h, h2, TKind::ne_plus);
    const auto& vt = detail::cached_vertex_terms(h, fl);
    scaled += vt.scaled;
    fixed += vt.fixed;
    left += detail::cached_T(h, h2);
    right += detail::cached_T(h2, h);
  }
  for (int i = 0; i < 5; ++i) rep.identities[i] = side[2 * i] == side[2 * i + 1];
  rep.drift_multiset_empty = scaled.empty() && fixed.empty();
  rep.diffusion_left_empty = left.empty();
  rep.diffusion_right_empty = right.empty();
  return rep;
}

inline double white_fraction(const ColouredGraph& g) { return static_cast<double>(g.white_count()) / g.n(); }

/// y_F = t_F evaluated on the projection of g, for each motif.
inline std::vector<double> projected_densities(const ColouredGraph& g, const std::vector<Motif>& motifs) {
  std::vector<double> y;
  const auto p = projected(g);
  for (const auto& m : motifs) y.push_back(motif_density(p, m));
  return y;
}

/// Colour remainder t_H - y_H in regular densities.
inline double delta_H(const Motif& h, const ColouredGraph& g) {
  return motif_density(g, h) - motif_density(projected(g), h);
}

/// The projected generator split into its main groups and remainder terms.
///
/// Raw Delta quantities are stored without their rate prefactors; `remainder_edge`
/// and `remainder_vertex` carry rho*s and eta. On a monochromatic graph there are no
/// flips; the reciprocal groups are then NaN and excluded from `main` and `total`.
struct ProjectedGeneratorReport {
  double edge_drift = 0;
  double diagonal_diffusion = 0;
  double cross_diffusion = 0;
  double delta_c0 = 0, delta_d0 = 0, delta_c1 = 0, delta_d1 = 0;
  double delta_ww = 0, delta_wb = 0, delta_bb = 0;
  double remainder_edge = 0;
  double remainder_vertex = 0;
  double main = 0;
  double remainder = 0;
  double total = 0;
  bool reciprocal_applicable = true;

  ojson to_json() const {
    auto num = [](double x) { return std::isnan(x) ? ojson(nullptr) : ojson(x); };
    ojson j;
    j["edge_drift"] = num(edge_drift);
    j["diagonal_diffusion"] = num(diagonal_diffusion);
    j["cross_diffusion"] = num(cross_diffusion);
    j["delta_c0"] = num(delta_c0);
    j["delta_d0"] = num(delta_d0);
    j["delta_c1"] = num(delta_c1);
    j["delta_d1"] = num(delta_d1);
    j["delta_ww"] = num(delta_ww);
    j["delta_wb"] = num(delta_wb);
    j["delta_bb"] = num(delta_bb);
    j["remainder_edge"] = num(remainder_edge);
    j["remainder_vertex"] = num(remainder_vertex);
    j["main"] = num(main);
    j["remainder"] = num(remainder);
    j["total"] = num(total);
    j["reciprocal_applicable"] = reciprocal_applicable;
    return j;
  }
};

inline ProjectedGeneratorReport projected_generator(const ColouredGraph& g, const ModelParams& par,
                                                    const std::vector<Motif>& motifs, const SmoothFunction& h) {
  ProjectedGeneratorReport r;
  const double q = white_fraction(g), yw = q, yb = 1.0 - q;
  auto coloured = graph_densities(g, false);
  auto bare = DensityTable<double>([&g](const Motif& m) { return uncoloured_density(g, m); });
  auto strip = [](const Motif& m) { return Motif::from_bits(m.k(), 0, m.edge_bits()); };
  auto cfac = [&](const Motif& m) { return std::pow(yw, m.white_count()) * std::pow(yb, m.black_count()); };
  auto delta = [&](const Motif& m) { return coloured(m) - cfac(m) * bare(strip(m)); };

  const std::size_t d = motifs.size();
  std::vector<double> y(d);
  for (std::size_t i = 0; i < d; ++i) y[i] = cfac(motifs[i]) * bare(strip(motifs[i]));
  const auto grad = h.gradient(y);
  const auto hess = h.hessian(y);

  const double a0 = par.s_c0 * (yw * yw + yb * yb) + 2 * par.s_d0 * yw * yb;
  const double a1 = par.s_c1 * (yw * yw + yb * yb) + 2 * par.s_d1 * yw * yb;
  for (std::size_t i = 0; i < d; ++i) {
    const Motif& f = motifs[i];
    double bracket = -f.edge_count() * a1 * y[i];
    for (auto [a, b] : f.edges()) bracket += a0 * (cfac(f) * bare(strip(f.without_edge(a, b))) - y[i]);
    r.edge_drift += par.rho * bracket * grad[i];

    double c0 = 0, d0 = 0, c1 = 0, d1 = 0;
    const auto hs = strip(f).colourings();
    for (auto [a, b] : f.edges())
      for (const auto& hc : hs) {
        const double dh = delta(hc), dr = delta(hc.without_edge(a, b));
        if (hc.colour(a) == hc.colour(b)) {
          c0 += dr - dh;
          c1 -= dh;
        } else {
          d0 += dr - dh;
          d1 -= dh;
        }
      }
    const double pre = cfac(f) * grad[i];
    r.delta_c0 += pre * c0;
    r.delta_d0 += pre * d0;
    r.delta_c1 += pre * c1;
    r.delta_d1 += pre * d1;
  }
  r.remainder_edge = par.rho * (par.s_c0 * r.delta_c0 + par.s_d0 * r.delta_d0 + par.s_c1 * r.delta_c1 +
                                par.s_d1 * r.delta_d1);

  r.reciprocal_applicable = yw > 0 && yb > 0;
  if (r.reciprocal_applicable) {
    const Motif edge({0, 0}, {{0, 1}});
    const double y_wb = yw * yb * bare(edge);
    const double t_wb = coloured(Motif({1, 0}, {{0, 1}}));
    const double de = t_wb - y_wb;
    std::vector<double> w(d), b(d), gi(d);
    for (std::size_t i = 0; i < d; ++i) {
      w[i] = motifs[i].white_count();
      b[i] = motifs[i].black_count();
      gi[i] = w[i] / yw - b[i] / yb;
    }
    double ww1 = 0, wb1 = 0, bb1 = 0, ww2 = 0, wb2 = 0, bb2 = 0;
    for (std::size_t i = 0; i < d; ++i) {
      const double curv = gi[i] * gi[i] - (w[i] / (yw * yw) + b[i] / (yb * yb));
      r.diagonal_diffusion += par.eta * y_wb * curv * y[i] * grad[i];
      ww1 += w[i] * (w[i] - 1) * y[i] * grad[i];
      wb1 += w[i] * b[i] * y[i] * grad[i];
      bb1 += b[i] * (b[i] - 1) * y[i] * grad[i];
      for (std::size_t j = 0; j < d; ++j) {
        const double yy = y[i] * y[j] * hess[i][j];
        r.cross_diffusion += par.eta * y_wb * gi[i] * gi[j] * yy;
        ww2 += w[i] * w[j] * yy;
        wb2 += w[i] * b[j] * yy;
        bb2 += b[i] * b[j] * yy;
      }
    }
    r.delta_ww = de / (yw * yw) * (ww1 + ww2);
    r.delta_wb = -2 * de / (yw * yb) * (wb1 + wb2);
    r.delta_bb = de / (yb * yb) * (bb1 + bb2);
    r.remainder_vertex = par.eta * (r.delta_ww + r.delta_wb + r.delta_bb);
    r.main = r.edge_drift + r.diagonal_diffusion + r.cross_diffusion;
  } else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.diagonal_diffusion = r.cross_diffusion = r.delta_ww = r.delta_wb = r.delta_bb = r.remainder_vertex = nan;
    r.main = r.edge_drift;
  }
  r.remainder = r.remainder_edge + (r.reciprocal_applicable ? r.remainder_vertex : 0.0);
  r.total = r.main + r.remainder;
  return r;
}

/// Settings for the oracle-versus-formula sweep over graph sizes.
struct GeneratorCheckOptions {
  std::vector<int> sizes{4, 6, 8};
  int random_graphs = 200;
  int k_max = 3;
  int exhaustive_limit = 4;  // sizes up to this are enumerated completely
  double edge_probability = 0.5;
  std::uint64_t seed = 1;
  ModelParams params = ModelParams::mixed_rates();
  std::vector<Flavour> flavours{Flavour::injective, Flavour::regular};
  int threads = 0;
};

struct GeneratorCheckRow {
  Flavour flavour;
  std::string function;  // "linear" (t_F) or "square" (t_F^2)
  int n;
  std::size_t graphs;
  double max_residual;
  double constant;  // n * max_residual
  std::string worst_motif;
};

struct GeneratorCheckReport {
  std::vector<GeneratorCheckRow> rows;
  std::map<std::string, std::vector<std::pair<int, double>>> fitted;  // flavour -> (n, C_n)
  std::map<std::string, bool> nonincreasing;
  bool pass = false;
  double seconds = 0;

  ojson to_json() const {
    ojson j;
    ojson rs = ojson::array();
    for (const auto& r : rows)
      rs.push_back({{"flavour", to_string(r.flavour)},
                    {"function", r.function},
                    {"n", r.n},
                    {"graphs", r.graphs},
                    {"max_residual", r.max_residual},
                    {"constant", r.constant},
                    {"worst_motif", r.worst_motif}});
    j["rows"] = rs;
    ojson fit;
    for (const auto& [fl, cs] : fitted) {
      ojson a = ojson::array();
      for (auto [n, c] : cs) a.push_back({{"n", n}, {"C", c}});
      fit[fl] = a;
    }
    j["fitted"] = fit;
    j["nonincreasing"] = nonincreasing;
    j["pass"] = pass;
    j["seconds"] = seconds;
    return j;
  }
};

/// Every coloured graph on n labelled vertices (2^(n + n(n-1)/2) of them).
inline std::vector<ColouredGraph> all_coloured_graphs(int n) {
  const int pairs = n * (n - 1) / 2;
  if (n + pairs > 20) throw usage_error("too many graphs to enumerate");
  std::vector<ColouredGraph> out;
  for (std::uint32_t c = 0; c < (1u << n); ++c)
    for (std::uint32_t e = 0; e < (1u << pairs); ++e) {
      std::vector<int> col(n);
      for (int u = 0; u < n; ++u) col[u] = (c >> u) & 1u;
      std::vector<std::pair<int, int>> edges;
      int bit = 0;
      for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v, ++bit)
          if ((e >> bit) & 1u) edges.emplace_back(u, v);
      out.emplace_back(col, edges);
    }
  return out;
}

namespace detail {

struct GraphResiduals {
  // [flavour][function] -> (max residual, motif index)
  std::vector<std::array<std::pair<double, int>, 2>> worst;
};

inline GraphResiduals graph_residuals(const ColouredGraph& g, const std::vector<Motif>& motifs,
                                      const GeneratorCheckOptions& opt) {
  GraphResiduals out;
  const auto& par = opt.params;
  for (Flavour fl : opt.flavours) {
    const bool inj = uses_injective(fl);
    const std::size_t d = motifs.size();
    const auto x0 = densities(g, motifs, inj);
    std::vector<double> lin(d, 0.0), sq(d, 0.0);
    for_each_transition(g, par, [&](double rate, const ColouredGraph& h) {
      const auto x = densities(h, motifs, inj);
      for (std::size_t i = 0; i < d; ++i) {
        lin[i] += rate * (x[i] - x0[i]);
        sq[i] += rate * (x[i] * x[i] - x0[i] * x0[i]);
      }
    });
    auto t = graph_densities(g, inj);
    std::array<std::pair<double, int>, 2> worst{{{0.0, -1}, {0.0, -1}}};
    for (std::size_t i = 0; i < d; ++i) {
      const double drift = par.eta * mu_vertex(motifs[i], t, fl, g.n()) + par.rho * mu_edge(motifs[i], t, par);
      const double diff = par.eta * sigma_vertex(motifs[i], motifs[i], t);
      const double r_lin = std::abs(lin[i] - drift);
      const double r_sq = std::abs(sq[i] - (2 * x0[i] * drift + diff));
      if (r_lin > worst[0].first || worst[0].second < 0) worst[0] = {r_lin, static_cast<int>(i)};
      if (r_sq > worst[1].first || worst[1].second < 0) worst[1] = {r_sq, static_cast<int>(i)};
    }
    out.worst.push_back(worst);
  }
  return out;
}

}  // namespace detail

/// Oracle-versus-formula residuals for f = t_F and f = t_F^2 over all motifs with
/// at most k_max vertices; passes when n * max residual never increases with n.
inline GeneratorCheckReport verify_generator(const GeneratorCheckOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  opt.params.validate();
  if (opt.sizes.empty()) throw usage_error("no graph sizes given");
  const MotifCatalog cat(opt.k_max);
  const auto& motifs = cat.motifs();
  const std::size_t nf = opt.flavours.size();
  // [flavour][size][function]
  std::vector<std::vector<std::array<std::pair<double, int>, 2>>> acc(
      nf, std::vector<std::array<std::pair<double, int>, 2>>(opt.sizes.size(), {{{0.0, 0}, {0.0, 0}}}));
  std::vector<std::size_t> counts(opt.sizes.size());
  for (std::size_t si = 0; si < opt.sizes.size(); ++si) {
    const int n = opt.sizes[si];
    std::vector<ColouredGraph> graphs;
    if (n <= opt.exhaustive_limit) {
      graphs = all_coloured_graphs(n);
    } else {
      const auto w = ColouredGraphon::constant(1, opt.edge_probability, 0.5);
      for (int r = 0; r < opt.random_graphs; ++r)
        graphs.push_back(sample_graph(w, n, opt.seed, static_cast<std::uint64_t>(n) * 100000 + r));
    }
    counts[si] = graphs.size();
    const auto res = run_ensemble(
        static_cast<int>(graphs.size()), [&](int i) { return detail::graph_residuals(graphs[i], motifs, opt); },
        opt.threads);
    for (const auto& gr : res)
      for (std::size_t fi = 0; fi < nf; ++fi)
        for (int fn = 0; fn < 2; ++fn)
          if (gr.worst[fi][fn].first > acc[fi][si][fn].first) acc[fi][si][fn] = gr.worst[fi][fn];
  }
  GeneratorCheckReport rep;
  rep.pass = true;
  for (std::size_t fi = 0; fi < nf; ++fi) {
    const auto name = to_string(opt.flavours[fi]);
    bool mono = true;
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t si = 0; si < opt.sizes.size(); ++si) {
      const int n = opt.sizes[si];
      double c = 0;
      for (int fn = 0; fn < 2; ++fn) {
        const auto [res, idx] = acc[fi][si][fn];
        rep.rows.push_back({opt.flavours[fi], fn == 0 ? "linear" : "square", n, counts[si], res, n * res,
                            motifs[static_cast<std::size_t>(idx)].canonical_key()});
        c = std::max(c, n * res);
      }
      rep.fitted[name].emplace_back(n, c);
      if (c > prev) mono = false;
      prev = c;
    }
    rep.nonincreasing[name] = mono;
    rep.pass = rep.pass && mono;
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

struct ColourSumSweepOptions {
  int k_max = 3;        // uncoloured motifs up to this size
  int companion_k = 2;  // second motif ranges over coloured motifs up to this size
  int graphs = 50;
  int n = 8;
  double edge_probability = 0.5;
  std::uint64_t seed = 1;
  std::vector<Flavour> flavours{Flavour::regular};
  int threads = 0;
};

struct ColourSumFailure {
  Flavour flavour;
  std::string motif, companion;
  int graph;
};

struct ColourSumSweepReport {
  std::size_t checks = 0;
  std::size_t motifs = 0;
  std::size_t companions = 0;
  std::vector<ColourSumFailure> failures;
  bool identities_hold = true;
  bool pass = false;

  ojson to_json() const {
    ojson f = ojson::array();
    for (const auto& x : failures)
      f.push_back({{"flavour", to_string(x.flavour)}, {"motif", x.motif}, {"companion", x.companion}, {"graph", x.graph}});
    return {{"checks", checks},       {"uncoloured_motifs", motifs}, {"companions", companions},
            {"failures", f},          {"identities_hold", identities_hold}, {"pass", pass}};
  }
};

/// Exact zero colour sums of drift and diffusion for every uncoloured motif with at
/// most k_max vertices, on random graphs.
inline ColourSumSweepReport verify_colour_sum_sweep(const ColourSumSweepOptions& opt) {
  if (opt.graphs < 1 || opt.n < 1) throw usage_error("colour-sum sweep needs graphs >= 1 and n >= 1");
  const MotifCatalog cat(opt.k_max);
  std::vector<Motif> bare;
  for (const auto& m : cat.motifs())
    if (m.white_count() == 0) bare.push_back(m);
  const auto companions = MotifCatalog(opt.companion_k).motifs();
  const auto w = ColouredGraphon::constant(1, opt.edge_probability, 0.5);
  struct Partial {
    std::size_t checks = 0;
    bool identities = true;
    std::vector<ColourSumFailure> failures;
  };
  const auto parts = run_ensemble(
      opt.graphs,
      [&](int r) {
        Partial p;
        const auto g = sample_graph(w, opt.n, opt.seed, static_cast<std::uint64_t>(r));
        for (Flavour fl : opt.flavours)
          for (const auto& f : bare)
            for (const auto& h2 : companions) {
              const auto rep = verify_colour_sums(f, h2, g, fl);
              ++p.checks;
              p.identities = p.identities && rep.all_identities();
              if (!rep.zero()) p.failures.push_back({fl, f.canonical_key(), h2.canonical_key(), r});
            }
        return p;
      },
      opt.threads);
  ColourSumSweepReport rep;
  rep.motifs = bare.size();
  rep.companions = companions.size();
  for (const auto& p : parts) {
    rep.checks += p.checks;
    rep.identities_hold = rep.identities_hold && p.identities;
    rep.failures.insert(rep.failures.end(), p.failures.begin(), p.failures.end());
  }
  rep.pass = rep.failures.empty() && rep.identities_hold && rep.checks > 0;
  return rep;
}

struct ProjectedCheckOptions {
  std::vector<int> sizes{8, 16, 32};
  int graphs = 3;
  double edge_probability = 0.5;
  std::uint64_t seed = 1;
  ModelParams params{1.0, 1.1, 1.5, 0.5, 0.7, 2.0};
};

struct ProjectedCheckRow {
  int n;
  double max_gap;        // |oracle - (main + remainder)|
  double max_remainder;  // |remainder|
};

struct ProjectedCheckReport {
  std::vector<ProjectedCheckRow> rows;
  bool pass = false;

  ojson to_json() const {
    ojson rs = ojson::array();
    for (const auto& r : rows) rs.push_back({{"n", r.n}, {"max_gap", r.max_gap}, {"max_remainder", r.max_remainder}});
    return {{"rows", rs}, {"pass", pass}};
  }
};

/// Projected generator decomposition against the exact oracle for a fixed quadratic
/// function of three projected densities; passes when the gap shrinks with n.
inline ProjectedCheckReport verify_projected(const ProjectedCheckOptions& opt) {
  opt.params.validate();
  const std::vector<Motif> motifs{Motif({1, 0}, {{0, 1}}), Motif({1, 1, 0}, {{0, 2}, {1, 2}}), Motif({1}, {})};
  const auto f = SmoothFunction::quadratic({{1.0, 0.5, 0.0}, {0.5, -2.0, 0.3}, {0.0, 0.3, 1.0}}, {0.2, 1.0, -0.4});
  const auto w = ColouredGraphon::constant(1, opt.edge_probability, 0.5);
  ProjectedCheckReport rep;
  rep.pass = true;
  double prev = std::numeric_limits<double>::infinity();
  for (int n : opt.sizes) {
    ProjectedCheckRow row{n, 0.0, 0.0};
    for (int r = 0; r < opt.graphs; ++r) {
      auto g = sample_graph(w, n, opt.seed, static_cast<std::uint64_t>(n) * 1000 + r);
      if (g.white_count() == 0 || g.white_count() == n) continue;
      const auto pg = projected_generator(g, opt.params, motifs, f);
      const double oracle = exact_generator_oracle(
          g, opt.params, [&](const ColouredGraph& h) { return f.value(projected_densities(h, motifs)); });
      row.max_gap = std::max(row.max_gap, std::abs(oracle - pg.total));
      row.max_remainder = std::max(row.max_remainder, std::abs(pg.remainder));
    }
    rep.pass = rep.pass && row.max_gap < prev;
    prev = row.max_gap;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace coevonet
