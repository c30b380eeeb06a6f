#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <utility>
#include <vector>

#include "coevonet/params.hpp"
#include "coevonet/rng.hpp"

namespace coevonet {

/// Pair categories indexed as 2*discordant + present.
enum class PairCategory : int { c0 = 0, c1 = 1, d0 = 2, d1 = 3 };

constexpr PairCategory make_category(bool concordant, bool present) {
  return static_cast<PairCategory>((concordant ? 0 : 2) + (present ? 1 : 0));
}

/// A single transition of the chain: a colour flip at u or an edge toggle on {u, v}.
struct Event {
  enum class Kind { flip, toggle } kind;
  int u;
  int v;
  static Event flip(int u) { return {Kind::flip, u, -1}; }
  static Event toggle(int u, int v) { return {Kind::toggle, u, v}; }
};

/// Simple vertex-coloured graph with incrementally maintained pair categories.
///
/// Colours are 0 (black) or 1 (white). Every unordered pair belongs to exactly
/// one of four index sets, supporting uniform sampling within a category in O(1).
class ColouredGraph {
 public:
  ColouredGraph() = default;
  explicit ColouredGraph(int n) : ColouredGraph(std::vector<int>(static_cast<std::size_t>(n), 0), {}) {}

  ColouredGraph(const std::vector<int>& colours, const std::vector<std::pair<int, int>>& edges)
      : n_(static_cast<int>(colours.size())) {
    if (n_ > 65535) throw usage_error("graph too large");
    words_ = (n_ + 63) / 64;
    colour_.resize(n_);
    for (int u = 0; u < n_; ++u) {
      if (colours[u] != 0 && colours[u] != 1) throw usage_error("colours must be 0 or 1");
      colour_[u] = static_cast<std::uint8_t>(colours[u]);
    }
    adj_.assign(static_cast<std::size_t>(n_) * words_, 0);
    white_.assign(words_, 0);
    black_.assign(words_, 0);
    for (int u = 0; u < n_; ++u) set_bit(colour_[u] ? white_.data() : black_.data(), u);
    for (auto [u, v] : edges) {
      check_pair(u, v);
      set_bit(row_mut(u), v);
      set_bit(row_mut(v), u);
    }
    rebuild();
  }

  int n() const { return n_; }
  int colour(int u) const { return colour_[u]; }
  bool adjacent(int u, int v) const { return (row(u)[v >> 6] >> (v & 63)) & 1u; }
  int degree(int u) const { return degree_[u]; }
  int discordant_degree(int u) const { return disc_deg_[u]; }
  std::uint64_t discordant_edges() const { return members_[3].size(); }
  std::uint64_t category_count(PairCategory c) const { return members_[static_cast<int>(c)].size(); }
  std::uint64_t edge_count() const { return members_[1].size() + members_[3].size(); }
  int white_count() const { return white_count_; }

  int words() const { return words_; }
  const std::uint64_t* row(int u) const { return adj_.data() + static_cast<std::size_t>(u) * words_; }
  const std::uint64_t* colour_set(int c) const { return c ? white_.data() : black_.data(); }

  PairCategory category(int u, int v) const {
    return make_category(colour_[u] == colour_[v], adjacent(u, v));
  }

  void flip(int u) {
    check_vertex(u);
    const auto nn = static_cast<std::uint32_t>(n_);
    for (int v = 0; v < n_; ++v) {
      if (v == u) continue;
      const int a = std::min(u, v), b = std::max(u, v);
      const std::uint32_t code = static_cast<std::uint32_t>(a) * nn + static_cast<std::uint32_t>(b);
      const int from = static_cast<int>(category(u, v));
      move(code, from, from ^ 2);
      if (adjacent(u, v)) disc_deg_[v] += (from & 2) ? -1 : 1;
    }
    disc_deg_[u] = degree_[u] - disc_deg_[u];
    clear_bit(colour_[u] ? white_.data() : black_.data(), u);
    white_count_ += colour_[u] ? -1 : 1;
    colour_[u] ^= 1u;
    set_bit(colour_[u] ? white_.data() : black_.data(), u);
  }

  void toggle(int u, int v) {
    check_pair(u, v);
    const int a = std::min(u, v), b = std::max(u, v);
    const std::uint32_t code = static_cast<std::uint32_t>(a) * static_cast<std::uint32_t>(n_) +
                               static_cast<std::uint32_t>(b);
    const int from = static_cast<int>(category(a, b));
    move(code, from, from ^ 1);
    const int delta = (from & 1) ? -1 : 1;
    if (delta > 0) {
      set_bit(row_mut(a), b);
      set_bit(row_mut(b), a);
    } else {
      clear_bit(row_mut(a), b);
      clear_bit(row_mut(b), a);
    }
    degree_[a] += delta;
    degree_[b] += delta;
    if (from & 2) {
      disc_deg_[a] += delta;
      disc_deg_[b] += delta;
    }
  }

  void apply(const Event& e) {
    if (e.kind == Event::Kind::flip)
      flip(e.u);
    else
      toggle(e.u, e.v);
  }

  /// Uniform pair (u < v) from a nonempty category.
  std::pair<int, int> sample_pair(PairCategory c, Rng& rng) const {
    const auto& set = members_[static_cast<int>(c)];
    if (set.empty()) throw usage_error("sampling from an empty pair category");
    const std::uint32_t code = set[uniform_index(rng, set.size())];
    return {static_cast<int>(code / static_cast<std::uint32_t>(n_)),
            static_cast<int>(code % static_cast<std::uint32_t>(n_))};
  }

  /// Recomputes every cache from the raw colour/adjacency data and compares.
  bool check_invariants() const {
    ColouredGraph fresh = *this;
    fresh.rebuild();
    for (int u = 0; u < n_; ++u) {
      if (adjacent(u, u)) return false;
      for (int v = 0; v < n_; ++v)
        if (adjacent(u, v) != adjacent(v, u)) return false;
      if (fresh.degree_[u] != degree_[u] || fresh.disc_deg_[u] != disc_deg_[u]) return false;
    }
    for (int c = 0; c < 4; ++c) {
      if (fresh.members_[c].size() != members_[c].size()) return false;
      for (std::size_t i = 0; i < members_[c].size(); ++i) {
        const std::uint32_t code = members_[c][i];
        if (pos_[code] != i) return false;
        const int a = static_cast<int>(code / static_cast<std::uint32_t>(n_));
        const int b = static_cast<int>(code % static_cast<std::uint32_t>(n_));
        if (static_cast<int>(category(a, b)) != c) return false;
      }
    }
    return fresh.white_count_ == white_count_;
  }

  std::vector<int> colours() const { return {colour_.begin(), colour_.end()}; }

  std::vector<std::pair<int, int>> edges() const {
    std::vector<std::pair<int, int>> out;
    for (int u = 0; u < n_; ++u)
      for (int v = u + 1; v < n_; ++v)
        if (adjacent(u, v)) out.emplace_back(u, v);
    return out;
  }

  /// Graph with vertex perm[u] carrying the colour and edges of vertex u.
  ColouredGraph relabelled(const std::vector<int>& perm) const {
    std::vector<int> col(n_);
    for (int u = 0; u < n_; ++u) col[perm[u]] = colour_[u];
    auto e = edges();
    for (auto& [u, v] : e) {
      u = perm[u];
      v = perm[v];
      if (u > v) std::swap(u, v);
    }
    return ColouredGraph(col, e);
  }

  bool operator==(const ColouredGraph& o) const {
    return n_ == o.n_ && colour_ == o.colour_ && adj_ == o.adj_;
  }

 private:
  static void set_bit(std::uint64_t* w, int i) { w[i >> 6] |= std::uint64_t{1} << (i & 63); }
  static void clear_bit(std::uint64_t* w, int i) { w[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
  std::uint64_t* row_mut(int u) { return adj_.data() + static_cast<std::size_t>(u) * words_; }

  void check_vertex(int u) const {
    if (u < 0 || u >= n_) throw usage_error("vertex index out of range");
  }
  void check_pair(int u, int v) const {
    check_vertex(u);
    check_vertex(v);
    if (u == v) throw usage_error("pair endpoints must differ");
  }

  void move(std::uint32_t code, int from, int to) {
    auto& src = members_[from];
    const std::uint32_t idx = pos_[code];
    const std::uint32_t last = src.back();
    src[idx] = last;
    pos_[last] = idx;
    src.pop_back();
    pos_[code] = static_cast<std::uint32_t>(members_[to].size());
    members_[to].push_back(code);
  }

  void rebuild() {
    const auto nn = static_cast<std::size_t>(n_);
    degree_.assign(nn, 0);
    disc_deg_.assign(nn, 0);
    pos_.assign(nn * nn, 0);
    for (auto& m : members_) m.clear();
    white_count_ = 0;
    for (int u = 0; u < n_; ++u) {
      white_count_ += colour_[u];
      for (int v = u + 1; v < n_; ++v) {
        const auto cat = static_cast<int>(category(u, v));
        const std::uint32_t code = static_cast<std::uint32_t>(u) * static_cast<std::uint32_t>(n_) +
                                   static_cast<std::uint32_t>(v);
        pos_[code] = static_cast<std::uint32_t>(members_[cat].size());
        members_[cat].push_back(code);
        if (cat & 1) {
          ++degree_[u];
          ++degree_[v];
          if (cat & 2) {
            ++disc_deg_[u];
            ++disc_deg_[v];
          }
        }
      }
    }
  }

  int n_ = 0;
  int words_ = 0;
  std::vector<std::uint8_t> colour_;
  std::vector<std::uint64_t> adj_;
  std::vector<std::uint64_t> white_, black_;
  std::vector<int> degree_, disc_deg_;
  std::array<std::vector<std::uint32_t>, 4> members_;
  std::vector<std::uint32_t> pos_;
  int white_count_ = 0;
};

/// Number of neighbours of u with the opposite colour (flip rate divided by eta).
inline int vertex_flip_rate(const ColouredGraph& g, int u) {
  if (u < 0 || u >= g.n()) throw usage_error("vertex index out of range");
  return g.discordant_degree(u);
}

inline PairCategory pair_category(const ColouredGraph& g, int u, int v) {
  if (u < 0 || v < 0 || u >= g.n() || v >= g.n()) throw usage_error("vertex index out of range");
  if (u == v) throw usage_error("pair endpoints must differ");
  return g.category(u, v);
}

/// Switching rate of the pair {u, v} divided by rho.
inline double edge_switch_rate(const ColouredGraph& g, const ModelParams& p, int u, int v) {
  const auto c = pair_category(g, u, v);
  const int i = static_cast<int>(c);
  return p.s((i & 2) == 0, (i & 1) != 0);
}

struct SummaryStats {
  double q = 0;  ///< white fraction
  double p = 0;  ///< edge density over unordered pairs
  double C = 0;  ///< concordant present-edge density
  double D = 0;  ///< discordant present-edge density
  std::uint64_t discordant_count = 0;
};

inline SummaryStats summary_stats(const ColouredGraph& g) {
  if (g.n() == 0) throw usage_error("summary statistics of an empty vertex set");
  SummaryStats s;
  const double n = g.n();
  s.q = g.white_count() / n;
  const double pairs = n * (n - 1) / 2;
  s.discordant_count = g.discordant_edges();
  if (pairs > 0) {
    s.C = static_cast<double>(g.category_count(PairCategory::c1)) / pairs;
    s.D = static_cast<double>(s.discordant_count) / pairs;
    s.p = static_cast<double>(g.edge_count()) / pairs;
  }
  return s;
}

/// Minimum over ordered pairs (i, j), including i = j, of |N_i ∩ N_j| / n.
inline double connectivity_nu(const ColouredGraph& g) {
  const int n = g.n();
  if (n < 2) throw usage_error("connectivity needs at least two vertices");
  int best = n;
  for (int i = 0; i < n; ++i) best = std::min(best, g.degree(i));
  const int w = g.words();
  for (int i = 0; i < n && best > 0; ++i) {
    const auto* ri = g.row(i);
    for (int j = i + 1; j < n; ++j) {
      const auto* rj = g.row(j);
      int c = 0;
      for (int k = 0; k < w && c < best; ++k) c += std::popcount(ri[k] & rj[k]);
      best = std::min(best, c);
    }
  }
  return static_cast<double>(best) / n;
}

}  // namespace coevonet
