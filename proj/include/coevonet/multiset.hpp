#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "coevonet/io.hpp"
#include "coevonet/motif.hpp"

namespace coevonet {

/// Integer-weighted collection of motifs up to coloured isomorphism.
///
/// Every motif is stored through its canonical form, so isomorphic entries merge
/// on insertion. Entries whose multiplicity reaches zero are removed.
class SignedMotifMultiset {
 public:
  struct Entry {
    Motif motif;
    long multiplicity = 0;
  };

  void add(const Motif& m, long multiplicity = 1) {
    if (multiplicity == 0) return;
    const Motif c = m.canonical();
    auto key = c.encoding();
    auto it = entries_.find(key);
    if (it == entries_.end()) {
      entries_.emplace(std::move(key), Entry{c, multiplicity});
      return;
    }
    it->second.multiplicity += multiplicity;
    if (it->second.multiplicity == 0) entries_.erase(it);
  }

  long multiplicity(const Motif& m) const {
    auto it = entries_.find(m.canonical_key());
    return it == entries_.end() ? 0 : it->second.multiplicity;
  }

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  long total_multiplicity() const {
    long s = 0;
    for (const auto& [key, e] : entries_) s += e.multiplicity;
    return s;
  }

  const std::map<std::string, Entry>& entries() const { return entries_; }

  SignedMotifMultiset& operator+=(const SignedMotifMultiset& o) {
    for (const auto& [key, e] : o.entries_) add(e.motif, e.multiplicity);
    return *this;
  }
  SignedMotifMultiset& operator-=(const SignedMotifMultiset& o) {
    for (const auto& [key, e] : o.entries_) add(e.motif, -e.multiplicity);
    return *this;
  }
  friend SignedMotifMultiset operator+(SignedMotifMultiset a, const SignedMotifMultiset& b) { return a += b; }
  friend SignedMotifMultiset operator-(SignedMotifMultiset a, const SignedMotifMultiset& b) { return a -= b; }

  bool operator==(const SignedMotifMultiset& o) const {
    if (entries_.size() != o.entries_.size()) return false;
    for (const auto& [key, e] : entries_) {
      auto it = o.entries_.find(key);
      if (it == o.entries_.end() || it->second.multiplicity != e.multiplicity) return false;
    }
    return true;
  }

  /// List of {key, multiplicity} objects in key order.
  ojson to_json() const {
    ojson out = ojson::array();
    for (const auto& [key, e] : entries_) out.push_back({{"key", key}, {"multiplicity", e.multiplicity}});
    return out;
  }

 private:
  std::map<std::string, Entry> entries_;
};

enum class MultisetKind {
  S_plus,
  S_minus,
  S,
  S_circ_plus,
  S_circ_minus,
  S_circ,
  S_diamond_plus,
  S_diamond_minus,
  S_diamond,
  regular_correction,
};

enum class TKind { eq_plus, eq_minus, ne_plus, ne_minus, T };

namespace detail {

// Merge b into a, attach a new vertex to the merged vertex; `flip` selects the
// colour-preserving variant (new vertex takes c_a, merged vertex flips).
inline Motif merge_and_attach(const Motif& f, int a, int b, bool flip) {
  const Motif m = f.merged(a, b);
  const int am = Motif::merged_label(a, b);
  const int ca = f.colour(a);
  Motif r = m.with_vertex(flip ? ca : 1 - ca).with_edge(am, m.k());
  return flip ? r.flipped(am) : r;
}

}  // namespace detail

/// Drift multisets of a motif. `regular_correction` holds, for each unordered
/// same-coloured non-adjacent pair {a, b}, the merged motif with an opposite-coloured
/// pendant at the merged vertex minus the S-diamond motif of that pair.
inline SignedMotifMultiset build_multiset(const Motif& f, MultisetKind which) {
  SignedMotifMultiset out;
  const int k = f.k();
  switch (which) {
    case MultisetKind::S_plus:
      for (int p = 0; p < k; ++p) out.add(f.with_vertex(f.colour(p)).with_edge(p, k).flipped(p));
      break;
    case MultisetKind::S_minus:
      for (int p = 0; p < k; ++p) out.add(f.with_vertex(1 - f.colour(p)).with_edge(p, k));
      break;
    case MultisetKind::S:
      out = build_multiset(f, MultisetKind::S_plus) - build_multiset(f, MultisetKind::S_minus);
      break;
    case MultisetKind::S_circ_plus:
    case MultisetKind::S_circ_minus: {
      const bool same = which == MultisetKind::S_circ_plus;
      for (int p = 0; p < k; ++p)
        for (int q = 0; q < k; ++q) {
          if (q == p || (f.colour(q) == f.colour(p)) != same) continue;
          out.add(same ? f.flipped(p).with_edge(p, q) : f.with_edge(p, q));
        }
      break;
    }
    case MultisetKind::S_circ:
      out = build_multiset(f, MultisetKind::S_circ_plus) - build_multiset(f, MultisetKind::S_circ_minus);
      break;
    case MultisetKind::S_diamond_plus:
    case MultisetKind::S_diamond_minus: {
      const bool same = which == MultisetKind::S_diamond_plus;
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) {
          if (b == a || f.has_edge(a, b) || (f.colour(a) == f.colour(b)) != same) continue;
          out.add(detail::merge_and_attach(f, a, b, true));
        }
      break;
    }
    case MultisetKind::S_diamond:
      out = build_multiset(f, MultisetKind::S_diamond_plus) - build_multiset(f, MultisetKind::S_diamond_minus);
      break;
    case MultisetKind::regular_correction:
      for (int a = 0; a < k; ++a)
        for (int b = a + 1; b < k; ++b) {
          if (f.has_edge(a, b) || f.colour(a) != f.colour(b)) continue;
          out.add(detail::merge_and_attach(f, a, b, false));
          out.add(detail::merge_and_attach(f, a, b, true), -1);
        }
      break;
  }
  return out;
}

/// Diffusion multisets: vertex a of f merged with vertex b of g, a new vertex
/// attached to the merged one.
inline SignedMotifMultiset build_T(const Motif& f, const Motif& g, TKind which) {
  if (which == TKind::T)
    return build_T(f, g, TKind::eq_plus) + build_T(f, g, TKind::eq_minus) - build_T(f, g, TKind::ne_plus) -
           build_T(f, g, TKind::ne_minus);
  const bool want_equal = which == TKind::eq_plus || which == TKind::eq_minus;
  const bool plus = which == TKind::eq_plus || which == TKind::ne_plus;
  SignedMotifMultiset out;
  for (int a = 0; a < f.k(); ++a)
    for (int b = 0; b < g.k(); ++b) {
      if ((f.colour(a) == g.colour(b)) != want_equal) continue;
      const Motif m = Motif::cross_merge(f, a, g, b);
      const int ca = f.colour(a);
      const Motif r = m.with_vertex(plus ? ca : 1 - ca).with_edge(a, m.k());
      out.add(plus ? r.flipped(a) : r);
    }
  return out;
}

}  // namespace coevonet
