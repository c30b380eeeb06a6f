#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "coevonet/motif.hpp"
#include "coevonet/rng.hpp"

using namespace coevonet;

namespace {

Motif random_motif(int k, Rng& rng, double p = 0.5) {
  std::vector<int> col(k);
  for (auto& c : col) c = uniform01(rng) < 0.5;
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      if (uniform01(rng) < p) e.emplace_back(i, j);
  return Motif(col, e);
}

bool brute_isomorphic(const Motif& a, const Motif& b) {
  if (a.k() != b.k()) return false;
  std::vector<int> perm(a.k());
  std::iota(perm.begin(), perm.end(), 0);
  do {
    bool ok = true;
    for (int i = 0; i < a.k() && ok; ++i) ok = a.colour(i) == b.colour(perm[i]);
    for (int i = 0; i < a.k() && ok; ++i)
      for (int j = i + 1; j < a.k() && ok; ++j) ok = a.has_edge(i, j) == b.has_edge(perm[i], perm[j]);
    if (ok) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

}  // namespace

TEST(Motif, BasicCounts) {
  Motif f({1, 0, 1}, {{0, 1}, {1, 2}});
  EXPECT_EQ(f.k(), 3);
  EXPECT_EQ(f.white_count(), 2);
  EXPECT_EQ(f.black_count(), 1);
  EXPECT_EQ(f.edge_count(), 2);
  EXPECT_TRUE(f.has_edge(2, 1));
  EXPECT_FALSE(f.has_edge(0, 2));
  EXPECT_THROW(Motif({1, 0}, {{0, 0}}), usage_error);
  EXPECT_THROW(Motif(std::vector<int>(kMaxMotifVertices + 1, 0), {}), usage_error);
}

TEST(Motif, CanonicalKeyMatchesBruteForceIsomorphism) {
  Rng rng = make_stream(7, 0);
  for (int trial = 0; trial < 600; ++trial) {
    const int k = 1 + static_cast<int>(uniform_index(rng, 4));
    const Motif a = random_motif(k, rng);
    Motif b = random_motif(k, rng);
    if (trial % 3 == 0) {
      std::vector<int> perm(k);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      b = a.relabelled(perm);
    }
    EXPECT_EQ(a.canonical_key() == b.canonical_key(), brute_isomorphic(a, b));
  }
}

TEST(Motif, CanonicalFormIsIsomorphicAndIdempotent) {
  Rng rng = make_stream(8, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const Motif a = random_motif(1 + static_cast<int>(uniform_index(rng, 6)), rng);
    const Motif c = a.canonical();
    EXPECT_TRUE(brute_isomorphic(a, c));
    EXPECT_EQ(c.canonical(), c);
    EXPECT_EQ(c.canonical_key(), a.canonical_key());
  }
}

TEST(GraphEdit, AddEdgeWhenPresentIsNoOp) {
  Motif f({1, 0}, {{0, 1}});
  EXPECT_EQ(f.with_edge(0, 1), f);
  EXPECT_EQ(f.without_edge(0, 1).without_edge(0, 1), Motif({1, 0}, {}));
  EXPECT_THROW(f.with_edge(0, 2), usage_error);
}

TEST(GraphEdit, MergeIsolatedSameColour) {
  Motif f({1, 1}, {});
  const Motif m = f.merged(0, 1);
  EXPECT_EQ(m, Motif({1}, {}));
}

TEST(GraphEdit, MergeSemantics) {
  Rng rng = make_stream(9, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(uniform_index(rng, 4));
    const Motif f = random_motif(k, rng);
    const int a = static_cast<int>(uniform_index(rng, k));
    int b = static_cast<int>(uniform_index(rng, k - 1));
    if (b >= a) ++b;
    const Motif m = f.merged(a, b);
    EXPECT_EQ(m.k(), k - 1);
    const int la = Motif::merged_label(a, b);
    EXPECT_EQ(m.colour(la), f.colour(a));
    for (int x = 0; x < k; ++x) {
      if (x == a || x == b) continue;
      const int lx = x - (x > b ? 1 : 0);
      EXPECT_EQ(m.colour(lx), f.colour(x));
      EXPECT_EQ(m.has_edge(la, lx), f.has_edge(a, x) || f.has_edge(b, x));
    }
  }
  EXPECT_THROW(Motif({1, 1}, {}).merged(1, 1), usage_error);
}

TEST(GraphEdit, SequencedOperationExample) {
  // Edge on two vertices; add vertex 2 with the colour of 0, flip 0, attach 0 to 2.
  Motif f({1, 0}, {{0, 1}});
  Motif h = f.with_vertex(f.colour(0)).with_colour(0, 1 - f.colour(0)).with_edge(0, 2);
  EXPECT_EQ(h.k(), 3);
  EXPECT_EQ(h.colour(0), 0);
  EXPECT_EQ(h.colour(2), 1);
  EXPECT_TRUE(h.has_edge(0, 2));
  EXPECT_TRUE(h.has_edge(0, 1));
  EXPECT_FALSE(h.has_edge(1, 2));
}

TEST(GraphEdit, CrossMerge) {
  Motif f({1, 0}, {{0, 1}});
  Motif g({0, 0, 1}, {{0, 1}, {1, 2}});
  const Motif m = Motif::cross_merge(f, 0, g, 1);
  EXPECT_EQ(m.k(), 4);
  EXPECT_EQ(m.colour(0), 1);
  EXPECT_EQ(m.colour(1), 0);
  EXPECT_EQ(m.colour(2), 0);
  EXPECT_EQ(m.colour(3), 1);
  EXPECT_TRUE(m.has_edge(0, 1));
  EXPECT_TRUE(m.has_edge(0, 2));
  EXPECT_TRUE(m.has_edge(0, 3));
  EXPECT_EQ(m.edge_count(), 3);
}

TEST(EnumerateMotifs, Counts) {
  EXPECT_EQ(enumerate_motifs(1).size(), 2u);
  EXPECT_EQ(enumerate_motifs(2).size(), 6u);
  EXPECT_EQ(enumerate_motifs(3).size(), 20u);
  EXPECT_THROW(enumerate_motifs(kDefaultKMax + 1), usage_error);
  EXPECT_THROW(enumerate_motifs(0), usage_error);
}

TEST(EnumerateMotifs, FourVertexClassesAgreeWithPairwiseBruteForce) {
  // Build all labelled coloured graphs on 4 vertices and reduce by brute-force isomorphism.
  std::vector<Motif> reps;
  for (int col = 0; col < 16; ++col)
    for (int em = 0; em < 64; ++em) {
      std::vector<int> c(4);
      for (int i = 0; i < 4; ++i) c[i] = (col >> i) & 1;
      std::vector<std::pair<int, int>> e;
      int bit = 0;
      for (int j = 1; j < 4; ++j)
        for (int i = 0; i < j; ++i, ++bit)
          if ((em >> bit) & 1) e.emplace_back(i, j);
      Motif m(c, e);
      bool seen = false;
      for (const auto& r : reps)
        if (brute_isomorphic(r, m)) {
          seen = true;
          break;
        }
      if (!seen) reps.push_back(m);
    }
  const auto listed = enumerate_motifs(4);
  EXPECT_EQ(listed.size(), reps.size());
  std::set<std::string> keys;
  for (const auto& m : listed) keys.insert(m.canonical_key());
  EXPECT_EQ(keys.size(), listed.size());
  EXPECT_EQ(enumerate_motifs(4), listed);
}

TEST(MotifCatalog, OrderAndWeights) {
  MotifCatalog cat(3);
  ASSERT_EQ(cat.size(), 28u);
  for (std::size_t i = 1; i < cat.size(); ++i) {
    const auto& a = cat.motif(i - 1);
    const auto& b = cat.motif(i);
    EXPECT_TRUE(a.k() < b.k() || (a.k() == b.k() && a.canonical_key() < b.canonical_key()));
  }
  EXPECT_DOUBLE_EQ(cat.weight(0), 0.5);
  EXPECT_DOUBLE_EQ(cat.weight(2), 0.125);
  EXPECT_EQ(cat.index_of(Motif({0}, {})), 0);
  EXPECT_EQ(cat.index_of(Motif({1, 0, 0, 0, 0}, {})), -1);
}

TEST(Motif, Colourings) {
  Motif f({0, 0, 0}, {{0, 1}});
  const auto cs = f.colourings();
  EXPECT_EQ(cs.size(), 8u);
  for (const auto& h : cs) EXPECT_EQ(h.edge_bits(), f.edge_bits());
}
