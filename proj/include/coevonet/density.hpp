#pragma once

#include <bit>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "coevonet/coloured_graph.hpp"
#include "coevonet/coloured_graphon.hpp"
#include "coevonet/motif.hpp"

namespace coevonet {

using Rational = boost::multiprecision::cpp_rational;

namespace detail {

// Vertex order that places each vertex after as many of its neighbours as possible.
struct MotifPlan {
  int k = 0;
  std::vector<int> vertex;          // vertex of F at each position
  std::vector<int> colour;          // colour of that vertex
  std::vector<std::uint32_t> back;  // earlier positions adjacent to this one
};

inline MotifPlan make_plan(const Motif& f) {
  MotifPlan p;
  p.k = f.k();
  std::vector<int> pos(f.k(), -1);
  for (int step = 0; step < f.k(); ++step) {
    int best = -1, best_links = -1, best_deg = -1;
    for (int v = 0; v < f.k(); ++v) {
      if (pos[v] >= 0) continue;
      int links = 0;
      for (int u = 0; u < f.k(); ++u)
        if (pos[u] >= 0 && f.has_edge(u, v)) ++links;
      const int deg = std::popcount(f.neighbours(v));
      if (links > best_links || (links == best_links && deg > best_deg)) {
        best = v;
        best_links = links;
        best_deg = deg;
      }
    }
    pos[best] = step;
    p.vertex.push_back(best);
    p.colour.push_back(f.colour(best));
    std::uint32_t mask = 0;
    for (int u = 0; u < f.k(); ++u)
      if (pos[u] >= 0 && pos[u] < step && f.has_edge(u, best)) mask |= 1u << pos[u];
    p.back.push_back(mask);
  }
  return p;
}

}  // namespace detail

using HomCount = unsigned __int128;

namespace detail {

inline std::vector<std::uint64_t> full_set(int n, int W) {
  std::vector<std::uint64_t> all(W, ~std::uint64_t{0});
  if (n % 64) all[W - 1] = (std::uint64_t{1} << (n % 64)) - 1;
  if (n == 0) all.assign(W, 0);
  return all;
}

inline HomCount hom_count_dfs(const ColouredGraph& g, const Motif& f, bool injective, bool coloured) {
  const int n = g.n(), k = f.k(), W = g.words();
  const auto plan = make_plan(f);
  const auto all = full_set(n, W);
  std::vector<std::uint64_t> buf(static_cast<std::size_t>(k) * W);
  std::vector<std::uint64_t> used(W, 0);
  std::vector<int> img(k);
  HomCount total = 0;
  auto rec = [&](auto&& self, int d) -> void {
    std::uint64_t* c = buf.data() + static_cast<std::size_t>(d) * W;
    const std::uint64_t* base = coloured ? g.colour_set(plan.colour[d]) : all.data();
    std::copy(base, base + W, c);
    for (std::uint32_t m = plan.back[d]; m; m &= m - 1) {
      const std::uint64_t* r = g.row(img[std::countr_zero(m)]);
      for (int w = 0; w < W; ++w) c[w] &= r[w];
    }
    if (injective)
      for (int w = 0; w < W; ++w) c[w] &= ~used[w];
    if (d == k - 1) {
      for (int w = 0; w < W; ++w) total += static_cast<std::uint64_t>(std::popcount(c[w]));
      return;
    }
    for (int w = 0; w < W; ++w)
      for (std::uint64_t bits = c[w]; bits; bits &= bits - 1) {
        const int u = w * 64 + std::countr_zero(bits);
        img[d] = u;
        if (injective) used[w] |= std::uint64_t{1} << (u & 63);
        self(self, d + 1);
        if (injective) used[w] &= ~(std::uint64_t{1} << (u & 63));
      }
  };
  rec(rec, 0);
  return total;
}

// Leaves and isolated vertices of F are summed out one at a time, each leaving a
// weight function on its neighbour; the remaining 2-core is enumerated.
inline HomCount hom_count_peeled(const ColouredGraph& g, const Motif& f, bool coloured) {
  const int n = g.n(), k = f.k(), W = g.words();
  const auto all = full_set(n, W);
  auto allowed = [&](int v) { return coloured ? g.colour_set(f.colour(v)) : all.data(); };
  std::vector<std::vector<HomCount>> weight(k);
  std::uint32_t alive = k == 32 ? ~0u : (1u << k) - 1;
  HomCount factor = 1;
  auto weight_at = [&](int v, int u) -> HomCount { return weight[v].empty() ? 1 : weight[v][u]; };
  auto member = [](const std::uint64_t* set, int u) { return (set[u >> 6] >> (u & 63)) & 1u; };
  for (bool progress = true; progress && alive;) {
    progress = false;
    for (int v = 0; v < k; ++v) {
      if (!((alive >> v) & 1u)) continue;
      const std::uint32_t nb = f.neighbours(v) & alive;
      if (std::popcount(nb) > 1) continue;
      const std::uint64_t* av = allowed(v);
      if (nb == 0) {
        HomCount s = 0;
        if (weight[v].empty()) {
          for (int w = 0; w < W; ++w) s += static_cast<std::uint64_t>(std::popcount(av[w]));
        } else {
          for (int u = 0; u < n; ++u)
            if (member(av, u)) s += weight[v][u];
        }
        factor *= s;
      } else {
        const int p = std::countr_zero(nb);
        if (weight[p].empty()) weight[p].assign(n, 1);
        for (int u = 0; u < n; ++u) {
          if (weight[p][u] == 0) continue;
          const std::uint64_t* r = g.row(u);
          HomCount s = 0;
          if (weight[v].empty()) {
            for (int w = 0; w < W; ++w) s += static_cast<std::uint64_t>(std::popcount(r[w] & av[w]));
          } else {
            for (int w = 0; w < W; ++w)
              for (std::uint64_t bits = r[w] & av[w]; bits; bits &= bits - 1)
                s += weight[v][w * 64 + std::countr_zero(bits)];
          }
          weight[p][u] *= s;
        }
      }
      alive &= ~(1u << v);
      weight[v].clear();
      progress = true;
      if (factor == 0) return 0;
    }
  }
  if (!alive) return factor;

  std::vector<int> order;
  std::vector<std::uint32_t> back;
  for (std::uint32_t placed = 0; placed != alive;) {
    int best = -1, best_links = -1;
    for (int v = 0; v < k; ++v) {
      if (!((alive >> v) & 1u) || ((placed >> v) & 1u)) continue;
      const int links = std::popcount(f.neighbours(v) & placed);
      if (links > best_links) {
        best = v;
        best_links = links;
      }
    }
    back.push_back(f.neighbours(best) & placed);
    order.push_back(best);
    placed |= 1u << best;
  }
  const int depth = static_cast<int>(order.size());
  std::vector<std::uint64_t> buf(static_cast<std::size_t>(depth) * W);
  std::vector<int> img(k);
  HomCount total = 0;
  auto rec = [&](auto&& self, int d, HomCount prod) -> void {
    const int v = order[d];
    std::uint64_t* c = buf.data() + static_cast<std::size_t>(d) * W;
    const std::uint64_t* av = allowed(v);
    std::copy(av, av + W, c);
    for (std::uint32_t m = back[d]; m; m &= m - 1) {
      const std::uint64_t* r = g.row(img[std::countr_zero(m)]);
      for (int w = 0; w < W; ++w) c[w] &= r[w];
    }
    if (d == depth - 1) {
      HomCount s = 0;
      if (weight[v].empty()) {
        for (int w = 0; w < W; ++w) s += static_cast<std::uint64_t>(std::popcount(c[w]));
      } else {
        for (int w = 0; w < W; ++w)
          for (std::uint64_t bits = c[w]; bits; bits &= bits - 1) s += weight[v][w * 64 + std::countr_zero(bits)];
      }
      total += prod * s;
      return;
    }
    for (int w = 0; w < W; ++w)
      for (std::uint64_t bits = c[w]; bits; bits &= bits - 1) {
        const int u = w * 64 + std::countr_zero(bits);
        const HomCount x = weight_at(v, u);
        if (x == 0) continue;
        img[v] = u;
        self(self, d + 1, prod * x);
      }
  };
  rec(rec, 0, 1);
  return factor * total;
}

}  // namespace detail

/// Number of maps [k] -> [n] preserving edges (and colours when `coloured`);
/// restricted to injections when `injective`. Edges of F must map to edges of G;
/// non-edges are unconstrained.
inline HomCount hom_count(const ColouredGraph& g, const Motif& f, bool injective, bool coloured = true) {
  const int n = g.n(), k = f.k();
  if (n == 0 || (injective && k > n)) return 0;
  if (k == 0) return 1;
  return injective ? detail::hom_count_dfs(g, f, true, coloured) : detail::hom_count_peeled(g, f, coloured);
}

/// Plain enumeration without peeling, kept as a cross-check.
inline HomCount hom_count_naive(const ColouredGraph& g, const Motif& f, bool injective, bool coloured = true) {
  const int n = g.n(), k = f.k();
  if (n == 0 || (injective && k > n)) return 0;
  if (k == 0) return 1;
  return detail::hom_count_dfs(g, f, injective, coloured);
}

inline double falling_factorial(int n, int k) {
  double r = 1;
  for (int i = 0; i < k; ++i) r *= n - i;
  return r;
}

/// Homomorphism density t_F(G), equal to the density in the embedded graphon.
inline double motif_density(const ColouredGraph& g, const Motif& f) {
  return static_cast<double>(hom_count(g, f, false)) / std::pow(static_cast<double>(g.n()), f.k());
}

inline double uncoloured_density(const ColouredGraph& g, const Motif& f) {
  return static_cast<double>(hom_count(g, f, false, false)) / std::pow(static_cast<double>(g.n()), f.k());
}

/// Injective density: colour- and edge-preserving injections divided by (n)_k.
inline double motif_density_injective(const ColouredGraph& g, const Motif& f) {
  if (f.k() > g.n()) return 0.0;
  return static_cast<double>(hom_count(g, f, true)) / falling_factorial(g.n(), f.k());
}

inline double uncoloured_density_injective(const ColouredGraph& g, const Motif& f) {
  if (f.k() > g.n()) return 0.0;
  return static_cast<double>(hom_count(g, f, true, false)) / falling_factorial(g.n(), f.k());
}

/// Exact density as a rational number (injective or regular).
inline Rational motif_density_rational(const ColouredGraph& g, const Motif& f, bool injective) {
  if (injective && f.k() > g.n()) return Rational(0);
  boost::multiprecision::cpp_int denom = 1;
  for (int i = 0; i < f.k(); ++i) denom *= injective ? g.n() - i : g.n();
  const HomCount c = hom_count(g, f, injective);
  boost::multiprecision::cpp_int num = static_cast<std::uint64_t>(c >> 64);
  num <<= 64;
  num += static_cast<std::uint64_t>(c);
  return Rational(num, denom);
}

namespace detail {

inline double grid_density(const ColouredGraphon& w, const Motif& f, bool coloured) {
  const int m = w.m(), k = f.k();
  const auto plan = make_plan(f);
  std::vector<int> img(k);
  double total = 0;
  auto rec = [&](auto&& self, int d, double weight) -> void {
    for (int x = 0; x < m; ++x) {
      double v = weight;
      if (coloured) v *= plan.colour[d] ? w.colour(x) : 1.0 - w.colour(x);
      for (std::uint32_t mask = plan.back[d]; mask && v != 0.0; mask &= mask - 1)
        v *= w.kernel(img[std::countr_zero(mask)], x);
      if (v == 0.0) continue;
      if (d == k - 1) {
        total += v;
      } else {
        img[d] = x;
        self(self, d + 1, v);
      }
    }
  };
  rec(rec, 0, 1.0);
  return total / std::pow(static_cast<double>(m), k);
}

}  // namespace detail

/// Coloured subgraph density evaluated exactly on the grid.
inline double motif_density(const ColouredGraphon& w, const Motif& f) { return detail::grid_density(w, f, true); }

inline double uncoloured_density(const ColouredGraphon& w, const Motif& f) {
  return detail::grid_density(w, f, false);
}

/// A finite graph viewed through its projection: colours replaced by the white fraction.
struct ProjectedGraph {
  const ColouredGraph* graph;
  double cbar;
};

inline ProjectedGraph projected(const ColouredGraph& g) {
  return {&g, static_cast<double>(g.white_count()) / g.n()};
}

inline double colour_factor(double cbar, const Motif& f) {
  return std::pow(cbar, f.white_count()) * std::pow(1.0 - cbar, f.black_count());
}

inline double motif_density(const ProjectedGraph& p, const Motif& f) {
  return colour_factor(p.cbar, f) * uncoloured_density(*p.graph, f);
}

/// Anything with a coloured motif density.
template <class S>
concept DensitySource = requires(const S& s, const Motif& f) {
  { motif_density(s, f) } -> std::convertible_to<double>;
};

}  // namespace coevonet
