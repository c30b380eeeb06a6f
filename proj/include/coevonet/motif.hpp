#pragma once

#include <algorithm>
#include <cmath>
#include <bit>
#include <cstdint>
#include <numeric>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "coevonet/params.hpp"

namespace coevonet {

inline constexpr int kMaxMotifVertices = 8;
inline constexpr int kDefaultKMax = 4;

/// Bit position of the unordered pair {i, j}; adding a vertex never moves existing pairs.
constexpr int pair_index(int i, int j) {
  if (i > j) std::swap(i, j);
  return j * (j - 1) / 2 + i;
}

/// A small coloured graph used as a test function. Labels are 0-based.
class Motif {
 public:
  Motif() = default;

  Motif(const std::vector<int>& colours, const std::vector<std::pair<int, int>>& edges)
      : k_(static_cast<int>(colours.size())) {
    if (k_ < 1 || k_ > kMaxMotifVertices) throw usage_error("motif size out of range");
    for (int i = 0; i < k_; ++i) {
      if (colours[i] != 0 && colours[i] != 1) throw usage_error("motif colours must be 0 or 1");
      if (colours[i]) white_ |= 1u << i;
    }
    for (auto [a, b] : edges) {
      check_pair(a, b);
      edges_ |= std::uint64_t{1} << pair_index(a, b);
    }
  }

  static Motif from_bits(int k, std::uint32_t white, std::uint64_t edges) {
    Motif m;
    m.k_ = k;
    m.white_ = white;
    m.edges_ = edges;
    return m;
  }

  int k() const { return k_; }
  int colour(int i) const { return (white_ >> i) & 1u; }
  bool has_edge(int i, int j) const { return i != j && ((edges_ >> pair_index(i, j)) & 1u); }
  int edge_count() const { return std::popcount(edges_); }
  int white_count() const { return std::popcount(white_); }
  int black_count() const { return k_ - white_count(); }
  std::uint32_t white_bits() const { return white_; }
  std::uint64_t edge_bits() const { return edges_; }

  /// Bitmask of the neighbours of i.
  std::uint32_t neighbours(int i) const {
    std::uint32_t m = 0;
    for (int j = 0; j < k_; ++j)
      if (has_edge(i, j)) m |= 1u << j;
    return m;
  }

  std::vector<std::pair<int, int>> edges() const {
    std::vector<std::pair<int, int>> out;
    for (int j = 1; j < k_; ++j)
      for (int i = 0; i < j; ++i)
        if (has_edge(i, j)) out.emplace_back(i, j);
    return out;
  }

  Motif with_colour(int a, int c) const {
    check_label(a);
    Motif m = *this;
    if (c)
      m.white_ |= 1u << a;
    else
      m.white_ &= ~(1u << a);
    return m;
  }

  Motif flipped(int a) const { return with_colour(a, 1 - colour(a)); }

  /// Appends a vertex with label k().
  Motif with_vertex(int c) const {
    if (k_ + 1 > kMaxMotifVertices) throw usage_error("motif would exceed the vertex limit");
    Motif m = *this;
    ++m.k_;
    if (c) m.white_ |= 1u << k_;
    return m;
  }

  Motif with_edge(int a, int b) const {
    check_pair(a, b);
    Motif m = *this;
    m.edges_ |= std::uint64_t{1} << pair_index(a, b);
    return m;
  }

  Motif without_edge(int a, int b) const {
    check_pair(a, b);
    Motif m = *this;
    m.edges_ &= ~(std::uint64_t{1} << pair_index(a, b));
    return m;
  }

  /// Label of the merged vertex after merged(a, b).
  static int merged_label(int a, int b) { return a - (a > b ? 1 : 0); }

  /// Identifies b with a. The merged vertex keeps the colour of a and inherits
  /// the edges of both; remaining labels keep their order.
  Motif merged(int a, int b) const {
    check_pair(a, b);
    std::vector<int> lab(k_);
    for (int x = 0; x < k_; ++x) lab[x] = (x == b ? a : x);
    for (int x = 0; x < k_; ++x) lab[x] -= (lab[x] > b ? 1 : 0);
    Motif m;
    m.k_ = k_ - 1;
    for (int x = 0; x < k_; ++x)
      if (x != b && colour(x)) m.white_ |= 1u << lab[x];
    for (auto [x, y] : edges()) {
      const int u = lab[x], v = lab[y];
      if (u != v) m.edges_ |= std::uint64_t{1} << pair_index(u, v);
    }
    return m;
  }

  /// Disjoint union of f and g with vertex b of g identified with vertex a of f.
  /// Vertices of g other than b receive labels f.k(), f.k()+1, ... in order.
  static Motif cross_merge(const Motif& f, int a, const Motif& g, int b) {
    f.check_label(a);
    g.check_label(b);
    const int k = f.k_ + g.k_ - 1;
    if (k > kMaxMotifVertices) throw usage_error("motif would exceed the vertex limit");
    std::vector<int> lab(g.k_);
    int next = f.k_;
    for (int x = 0; x < g.k_; ++x) lab[x] = (x == b ? a : next++);
    Motif m = f;
    m.k_ = k;
    for (int x = 0; x < g.k_; ++x)
      if (x != b && g.colour(x)) m.white_ |= 1u << lab[x];
    for (auto [x, y] : g.edges()) m.edges_ |= std::uint64_t{1} << pair_index(lab[x], lab[y]);
    return m;
  }

  /// Vertex perm[i] of the result corresponds to vertex i of this motif.
  Motif relabelled(const std::vector<int>& perm) const {
    Motif m;
    m.k_ = k_;
    for (int i = 0; i < k_; ++i)
      if (colour(i)) m.white_ |= 1u << perm[i];
    for (auto [x, y] : edges()) m.edges_ |= std::uint64_t{1} << pair_index(perm[x], perm[y]);
    return m;
  }

  /// Canonical representative: black vertices first, then the lexicographically
  /// smallest edge string over all colour-preserving orderings.
  Motif canonical() const {
    thread_local std::unordered_map<std::uint64_t, Motif> memo;
    const std::uint64_t key = (static_cast<std::uint64_t>(k_) << 60) |
                              (static_cast<std::uint64_t>(white_) << 40) | edges_;
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::vector<int> blacks, whites;
    for (int i = 0; i < k_; ++i) (colour(i) ? whites : blacks).push_back(i);
    const int nb = static_cast<int>(blacks.size());
    const int npairs = k_ * (k_ - 1) / 2;
    std::vector<int> order(k_);
    std::uint64_t best = ~std::uint64_t{0};
    std::vector<int> best_order;
    std::sort(blacks.begin(), blacks.end());
    do {
      std::sort(whites.begin(), whites.end());
      do {
        std::copy(blacks.begin(), blacks.end(), order.begin());
        std::copy(whites.begin(), whites.end(), order.begin() + nb);
        std::uint64_t code = 0;
        for (int p = 0, j = 1; j < k_; ++j)
          for (int i = 0; i < j; ++i, ++p)
            if (has_edge(order[i], order[j])) code |= std::uint64_t{1} << (npairs - 1 - p);
        if (code < best) {
          best = code;
          best_order = order;
        }
      } while (std::next_permutation(whites.begin(), whites.end()));
    } while (std::next_permutation(blacks.begin(), blacks.end()));
    std::vector<int> perm(k_);
    for (int i = 0; i < k_; ++i) perm[best_order[i]] = i;
    Motif c = relabelled(perm);
    memo.emplace(key, c);
    return c;
  }

  /// Printable encoding of this labelling: "k:colours:edge-bits" with colours
  /// as b/w characters and edge bits in pair order (0,1),(0,2),(1,2),(0,3),...
  std::string encoding() const {
    std::string s = std::to_string(k_) + ":";
    for (int i = 0; i < k_; ++i) s += colour(i) ? 'w' : 'b';
    s += ':';
    for (int j = 1; j < k_; ++j)
      for (int i = 0; i < j; ++i) s += has_edge(i, j) ? '1' : '0';
    return s;
  }

  std::string canonical_key() const { return canonical().encoding(); }

  bool isomorphic(const Motif& o) const { return k_ == o.k_ && canonical() == o.canonical(); }

  /// All 2^k labelled colourings of the underlying uncoloured graph.
  std::vector<Motif> colourings() const {
    std::vector<Motif> out;
    for (std::uint32_t c = 0; c < (1u << k_); ++c) out.push_back(from_bits(k_, c, edges_));
    return out;
  }

  bool operator==(const Motif&) const = default;

 private:
  void check_label(int a) const {
    if (a < 0 || a >= k_) throw usage_error("unknown motif vertex label");
  }
  void check_pair(int a, int b) const {
    check_label(a);
    check_label(b);
    if (a == b) throw usage_error("motif pair endpoints must differ");
  }

  int k_ = 0;
  std::uint32_t white_ = 0;
  std::uint64_t edges_ = 0;
};

/// One canonical representative per coloured-isomorphism class on exactly k vertices,
/// sorted by canonical key.
inline std::vector<Motif> enumerate_motifs(int k, int k_max = kDefaultKMax) {
  if (k < 1 || k > k_max || k > kMaxMotifVertices) throw usage_error("motif size outside catalog range");
  const int npairs = k * (k - 1) / 2;
  std::vector<std::pair<std::string, Motif>> found;
  for (std::uint32_t c = 0; c < (1u << k); ++c) {
    // colourings are canonical up to order, so only black-first colour patterns are needed
    if (c != ((1u << k) - (1u << (k - std::popcount(c))))) continue;
    for (std::uint64_t e = 0; e < (std::uint64_t{1} << npairs); ++e) {
      const Motif m = Motif::from_bits(k, c, e).canonical();
      found.emplace_back(m.encoding(), m);
    }
  }
  std::sort(found.begin(), found.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  found.erase(std::unique(found.begin(), found.end(),
                          [](const auto& x, const auto& y) { return x.first == y.first; }),
              found.end());
  std::vector<Motif> out;
  for (auto& [key, m] : found) out.push_back(m);
  return out;
}

/// All motif classes with 1..K vertices in (k, canonical key) order, with weights 2^-(i+1).
class MotifCatalog {
 public:
  explicit MotifCatalog(int K, int k_max = kDefaultKMax) : K_(K) {
    for (int k = 1; k <= K; ++k)
      for (auto& m : enumerate_motifs(k, k_max)) {
        index_.emplace(m.encoding(), static_cast<int>(motifs_.size()));
        motifs_.push_back(m);
      }
  }

  int K() const { return K_; }
  std::size_t size() const { return motifs_.size(); }
  const Motif& motif(std::size_t i) const { return motifs_[i]; }
  const std::vector<Motif>& motifs() const { return motifs_; }
  double weight(std::size_t i) const { return std::ldexp(1.0, -static_cast<int>(i) - 1); }
  /// Weight mass of all motifs beyond the catalog.
  double truncation_bound() const { return std::ldexp(1.0, -static_cast<int>(motifs_.size())); }

  int index_of(const Motif& m) const {
    if (m.k() > K_) return -1;
    auto it = index_.find(m.canonical_key());
    return it == index_.end() ? -1 : it->second;
  }

 private:
  int K_;
  std::vector<Motif> motifs_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace coevonet
