#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <vector>

#include "coevonet/coloured_graph.hpp"
#include "coevonet/coloured_graphon.hpp"
#include "coevonet/density.hpp"
#include "coevonet/motif.hpp"
#include "coevonet/rng.hpp"

namespace coevonet {

/// Canonical graphon of a finite graph: one cell per vertex.
inline ColouredGraphon embed(const ColouredGraph& g) {
  if (g.n() < 1) throw usage_error("cannot embed an empty graph");
  ColouredGraphon w(g.n());
  for (int u = 0; u < g.n(); ++u) {
    w.colour(u) = g.colour(u);
    for (int v = u + 1; v < g.n(); ++v)
      if (g.adjacent(u, v)) w.set_kernel(u, v, 1.0);
  }
  return w;
}

/// Same kernel, colour replaced by its mean.
inline ColouredGraphon project(const ColouredGraphon& w) {
  ColouredGraphon p = w;
  const double c = w.mean_colour();
  for (int i = 0; i < w.m(); ++i) p.colour(i) = c;
  return p;
}

inline ColouredGraphon colour_swapped(const ColouredGraphon& w) {
  ColouredGraphon s = w;
  for (int i = 0; i < w.m(); ++i) s.colour(i) = 1.0 - w.colour(i);
  return s;
}

/// Cell perm[i] of the result carries cell i of w.
inline ColouredGraphon permuted(const ColouredGraphon& w, const std::vector<int>& perm) {
  ColouredGraphon r(w.m());
  for (int i = 0; i < w.m(); ++i) {
    r.colour(perm[i]) = w.colour(i);
    for (int j = 0; j <= i; ++j) r.set_kernel(perm[i], perm[j], w.kernel(i, j));
  }
  return r;
}

/// W-random graph: i.i.d. uniform positions, independent edges and colours.
inline ColouredGraph sample_graph(const ColouredGraphon& w, int n, std::uint64_t seed, std::uint64_t stream = 0) {
  if (n < 1) throw usage_error("sample size must be positive");
  Rng rng = make_stream(seed, stream);
  std::vector<int> cell(n), colours(n);
  for (int i = 0; i < n; ++i) cell[i] = std::min(w.m() - 1, static_cast<int>(uniform01(rng) * w.m()));
  for (int i = 0; i < n; ++i) colours[i] = uniform01(rng) < w.colour(cell[i]) ? 1 : 0;
  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (uniform01(rng) < w.kernel(cell[u], cell[v])) edges.emplace_back(u, v);
  return ColouredGraph(colours, edges);
}

struct DsubResult {
  double value = 0;
  double truncation_bound = 0;
};

inline DsubResult d_sub_from_densities(const std::vector<double>& a, const std::vector<double>& b,
                                       const MotifCatalog& cat) {
  DsubResult r;
  for (std::size_t i = 0; i < cat.size(); ++i) r.value += cat.weight(i) * std::abs(a[i] - b[i]);
  r.truncation_bound = cat.truncation_bound();
  return r;
}

template <DensitySource S>
std::vector<double> catalog_densities(const S& s, const MotifCatalog& cat) {
  std::vector<double> out(cat.size());
  for (std::size_t i = 0; i < cat.size(); ++i) out[i] = motif_density(s, cat.motif(i));
  return out;
}

/// Truncated coloured subgraph distance over the catalog.
template <DensitySource A, DensitySource B>
DsubResult d_sub(const A& a, const B& b, const MotifCatalog& cat) {
  return d_sub_from_densities(catalog_densities(a, cat), catalog_densities(b, cat), cat);
}

struct CutNormResult {
  double value = 0;
  bool exact = false;
};

/// Cut norm of a symmetric m x m step kernel (row-major), normalised by m^2.
/// Exhaustive over row subsets for m <= 16, otherwise a local-search lower bound.
inline CutNormResult kernel_cut_norm(const std::vector<double>& u, int m, std::uint64_t seed = 1) {
  CutNormResult r;
  const double norm = static_cast<double>(m) * m;
  auto best_for_rows = [&](const std::vector<double>& col) {
    double pos = 0, neg = 0;
    for (double c : col) (c > 0 ? pos : neg) += c;
    return std::max(pos, -neg);
  };
  if (m <= 16) {
    std::vector<double> col(m, 0.0);
    std::uint32_t gray = 0;
    for (std::uint32_t s = 1; s < (1u << m); ++s) {
      const int i = std::countr_zero(s);
      gray ^= 1u << i;
      const double sign = (gray >> i) & 1u ? 1.0 : -1.0;
      for (int j = 0; j < m; ++j) col[j] += sign * u[static_cast<std::size_t>(i) * m + j];
      r.value = std::max(r.value, best_for_rows(col));
    }
    r.value /= norm;
    r.exact = true;
    return r;
  }
  Rng rng = make_stream(seed, 0x6375);
  for (int restart = 0; restart < 64; ++restart) {
    for (double sign : {1.0, -1.0}) {
      std::vector<int> rows(m), cols(m);
      for (auto& x : rows) x = uniform01(rng) < 0.5;
      double prev = -1, val = 0;
      for (int it = 0; it < 100; ++it) {
        for (int j = 0; j < m; ++j) {
          double c = 0;
          for (int i = 0; i < m; ++i)
            if (rows[i]) c += u[static_cast<std::size_t>(i) * m + j];
          cols[j] = sign * c > 0;
        }
        val = 0;
        for (int i = 0; i < m; ++i) {
          double c = 0;
          for (int j = 0; j < m; ++j)
            if (cols[j]) c += u[static_cast<std::size_t>(i) * m + j];
          rows[i] = sign * c > 0;
          if (rows[i]) val += sign * c;
        }
        if (val <= prev) break;
        prev = val;
      }
      r.value = std::max(r.value, val / norm);
    }
  }
  return r;
}

/// Cut norm of a colour difference sequence, normalised by m.
inline double colour_cut_norm(const std::vector<double>& d) {
  double pos = 0, neg = 0;
  for (double x : d) (x > 0 ? pos : neg) += x;
  return std::max(pos, -neg) / static_cast<double>(d.size());
}

struct DboxBracket {
  double lower = 0;
  double upper = 0;
  bool exact_cut_norms = false;
  bool exhaustive_permutations = false;
};

/// Bracket on the cut distance. The upper end minimises the cut norms over grid
/// permutations (exhaustive for m <= 8, pairwise-swap descent otherwise); the lower
/// end applies the counting lemma to the catalog densities.
inline DboxBracket cut_distance_dbox(const ColouredGraphon& a, const ColouredGraphon& b, int K = 3) {
  if (a.m() != b.m()) throw usage_error("cut distance needs equal grid resolution");
  const int m = a.m();
  DboxBracket r;
  bool exact = true;
  auto cost = [&](const std::vector<int>& perm) {
    const auto pb = permuted(b, perm);
    std::vector<double> dk(static_cast<std::size_t>(m) * m), dc(m);
    for (std::size_t i = 0; i < dk.size(); ++i) dk[i] = a.kernel_data()[i] - pb.kernel_data()[i];
    for (int i = 0; i < m; ++i) dc[i] = a.colour(i) - pb.colour(i);
    const auto kn = kernel_cut_norm(dk, m);
    exact = exact && kn.exact;
    return kn.value + colour_cut_norm(dc);
  };
  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  double best = cost(perm);
  if (m <= 8) {
    r.exhaustive_permutations = true;
    while (std::next_permutation(perm.begin(), perm.end()) && best > 0) best = std::min(best, cost(perm));
  } else {
    for (int pass = 0; pass < 3 && best > 0; ++pass) {
      bool improved = false;
      for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
          std::swap(perm[i], perm[j]);
          const double c = cost(perm);
          if (c < best) {
            best = c;
            improved = true;
          } else {
            std::swap(perm[i], perm[j]);
          }
        }
      if (!improved) break;
    }
  }
  r.upper = best;
  r.exact_cut_norms = exact;
  const MotifCatalog cat(K, std::max(K, kDefaultKMax));
  for (const auto& f : cat.motifs()) {
    const double gap = std::abs(motif_density(a, f) - motif_density(b, f));
    r.lower = std::max(r.lower, gap / std::max(f.edge_count(), f.k()));
  }
  return r;
}

}  // namespace coevonet
