#include <gtest/gtest.h>

#include <cmath>

#include "coevonet/ctmc.hpp"
#include "coevonet/path_metrics.hpp"

using namespace coevonet;

namespace {

ScalarPath random_path(Rng& rng, int pieces, double horizon, double scale = 1.0) {
  std::vector<double> t{0.0};
  for (int i = 1; i < pieces; ++i) t.push_back(t.back() + uniform01(rng) * 2 * horizon / pieces + 1e-6);
  std::vector<double> v;
  for (int i = 0; i < pieces; ++i) v.push_back(scale * uniform01(rng));
  return ScalarPath(PathSpace::scalar, t, v, std::max(horizon, t.back()));
}

// Direct definition: measure of {r > eps} under e^{-t} dt, then bisection on eps.
double exceedance(const ScalarPath& x, const ScalarPath& y, double eps) {
  std::vector<double> cuts = x.times;
  cuts.insert(cuts.end(), y.times.begin(), y.times.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double m = 0;
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    const double a = cuts[i];
    const double b = i + 1 < cuts.size() ? std::exp(-cuts[i + 1]) : 0.0;
    if (std::abs(x.at(a) - y.at(a)) > eps) m += std::exp(-a) - b;
  }
  return m;
}

double bisect_tilde(const ScalarPath& x, const ScalarPath& y) {
  double lo = 0, hi = 1;
  if (exceedance(x, y, 0.0) == 0.0) return 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (exceedance(x, y, mid) <= mid ? hi : lo) = mid;
  }
  return hi;
}

Trajectory q_trajectory(const std::vector<double>& t, const std::vector<double>& q) {
  Trajectory tr;
  for (std::size_t i = 0; i < t.size(); ++i) {
    Checkpoint c;
    c.t = t[i];
    c.stats.q = q[i];
    c.stats.p = 0.5;
    tr.points.push_back(c);
  }
  return tr;
}

}  // namespace

TEST(SampledPath, ValidationAndLookup) {
  const ScalarPath x(PathSpace::scalar, {0.0, 1.0, 2.5}, {0.1, 0.4, 0.2}, 3.0);
  EXPECT_EQ(x.at(0.0), 0.1);
  EXPECT_EQ(x.at(0.999), 0.1);
  EXPECT_EQ(x.at(1.0), 0.4);
  EXPECT_EQ(x.at(100.0), 0.2);
  EXPECT_THROW(ScalarPath(PathSpace::scalar, {0.0, 1.0, 1.0}, {0, 0, 0}, 2.0), usage_error);
  EXPECT_THROW(ScalarPath(PathSpace::scalar, {0.5}, {0}, 2.0), usage_error);
  EXPECT_THROW(ScalarPath(PathSpace::scalar, {0.0, 1.0}, {0}, 2.0), usage_error);
}

TEST(Dm, IdenticalPathsAreAtDistanceZero) {
  Rng rng = make_stream(1, 0);
  const auto x = random_path(rng, 12, 5);
  EXPECT_EQ(d_m(x, x).value, 0.0);
  EXPECT_EQ(d_m_tilde(x, x), 0.0);
}

TEST(Dm, ConstantPaths) {
  for (double r0 : {0.0, 0.25, 0.7, 1.0}) {
    const ScalarPath x(PathSpace::scalar, {0.0}, {0.1}, 1.0), y(PathSpace::scalar, {0.0}, {0.1 + r0}, 1.0);
    const auto d = d_m(x, y, 10.0);
    EXPECT_NEAR(d.value, r0, 1e-15);
    EXPECT_NEAR(d.truncated, r0 * (1 - std::exp(-10.0)), 1e-15);
    EXPECT_NEAR(d.tail_bound, std::exp(-10.0), 1e-18);
    EXPECT_NEAR(d_m_tilde(x, y), r0, 1e-15);
  }
  const ScalarPath x(PathSpace::scalar, {0.0}, {0.0}, 1.0), far(PathSpace::scalar, {0.0}, {3.0}, 1.0);
  EXPECT_NEAR(d_m(x, far).value, 1.0, 1e-15);
  EXPECT_NEAR(d_m_tilde(x, far), 1.0, 1e-15);
}

TEST(Dm, EarlyDifferenceIsCheap) {
  for (double eps : {0.5, 0.05, 0.005}) {
    const ScalarPath x(PathSpace::scalar, {0.0, eps}, {0.0, 0.3}, 2.0);
    const ScalarPath y(PathSpace::scalar, {0.0}, {0.3}, 2.0);
    const double d = d_m(x, y).value;
    EXPECT_LE(d, 1 - std::exp(-eps) + 1e-16);
    EXPECT_NEAR(d, 0.3 * -std::expm1(-eps), 1e-16);
  }
}

TEST(Dm, SymmetryAndTriangleInequality) {
  Rng rng = make_stream(2, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = random_path(rng, 3 + trial % 7, 4, 1.5), y = random_path(rng, 5, 4, 1.5),
               z = random_path(rng, 2 + trial % 5, 6, 1.5);
    EXPECT_EQ(d_m(x, y).value, d_m(y, x).value);
    EXPECT_LE(d_m(x, z).value, d_m(x, y).value + d_m(y, z).value + 1e-15);
  }
}

TEST(DmTilde, MatchesBisectionAndBracket) {
  Rng rng = make_stream(3, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = random_path(rng, 2 + trial % 9, 3, trial % 2 ? 0.3 : 2.0), y = random_path(rng, 4, 3, 0.8);
    const double dt = d_m_tilde(x, y), dm = d_m(x, y).value;
    EXPECT_NEAR(dt, bisect_tilde(x, y), 1e-12);
    EXPECT_LE(0.5 * dm, dt);
    EXPECT_LE(dt, std::sqrt(dm) + 1e-12);
  }
}

TEST(Dm, MismatchedSpacesRejected) {
  const DensityPath a(PathSpace::densities, {0.0}, {{0.1, 0.2}}, 1.0);
  const DensityPath b(PathSpace::densities, {0.0}, {{0.1}}, 1.0);
  const DensityPath c(PathSpace::graphon, {0.0}, {{0.1, 0.2}}, 1.0);
  EXPECT_THROW(d_m(a, b), usage_error);
  EXPECT_THROW(d_m(a, c), usage_error);
  EXPECT_NEAR(d_m(a, DensityPath(PathSpace::densities, {0.0}, {{0.3, 0.2}}, 1.0)).value, 0.5 * 0.2, 1e-15);
}

TEST(Dm, GraphonPathsUseSubgraphDistance) {
  const auto w1 = ColouredGraphon::constant(1, 0.5, 1.0), w2 = ColouredGraphon::constant(1, 0.5, 0.0);
  const GraphonPath a(PathSpace::graphon, {0.0}, {w1}, 1.0), b(PathSpace::graphon, {0.0}, {w2}, 1.0);
  const MotifCatalog cat(2);
  EXPECT_NEAR(d_m(a, b, 10.0, 2).value, std::min(1.0, d_sub(w1, w2, cat).value), 1e-15);
}

TEST(Dm, TimeShiftContinuity) {
  Rng rng = make_stream(4, 0);
  const auto x = random_path(rng, 40, 10);
  double prev = 1;
  for (double h : {0.5, 0.1, 0.01, 0.001}) {
    const double d = d_m(x, time_shift(x, h)).value;
    EXPECT_LT(d, prev);
    prev = d;
  }
  EXPECT_LT(prev, 0.01);
  const auto s = time_shift(ScalarPath(PathSpace::scalar, {0.0, 1.0, 2.0}, {1.0, 2.0, 3.0}, 3.0), 1.5);
  EXPECT_EQ(s.times, (std::vector<double>{0.0, 0.5}));
  EXPECT_EQ(s.values, (std::vector<double>{2.0, 3.0}));
  EXPECT_DOUBLE_EQ(s.horizon, 1.5);
}

TEST(OccupationTime, Examples) {
  const ScalarPath low(PathSpace::scalar, {0.0}, {0.2}, 5.0), high(PathSpace::scalar, {0.0}, {0.8}, 5.0);
  EXPECT_DOUBLE_EQ(occupation_time(low, 1.0, 3.5, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(occupation_time(high, 1.0, 3.5, 0.5), 0.0);
  const ScalarPath cross(PathSpace::scalar, {0.0, 2.25}, {0.8, 0.5}, 5.0);
  EXPECT_DOUBLE_EQ(occupation_time(cross, 1.0, 3.5, 0.5), 1.25);
  EXPECT_THROW(occupation_time(cross, 0.0, 1.0, 0.5), usage_error);
  EXPECT_THROW(occupation_time(cross, 2.0, 1.0, 0.5), usage_error);
  EXPECT_THROW(occupation_time(cross, 1.0, 2.0, 1.0), usage_error);
}

TEST(OccupationTime, AdditiveOverIntervals) {
  Rng rng = make_stream(5, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const auto x = random_path(rng, 20, 8);
    const double a = 0.1 + uniform01(rng), m = a + uniform01(rng) * 3, b = m + uniform01(rng) * 3;
    EXPECT_NEAR(occupation_time(x, a, b, 0.4), occupation_time(x, a, m, 0.4) + occupation_time(x, m, b, 0.4), 1e-12);
  }
}

TEST(Absorption, Examples) {
  std::vector<Trajectory> runs;
  for (int i = 0; i < 10; ++i) runs.push_back(q_trajectory({0.0, 1.0}, {0.5, i < 3 ? 0.0 : 1.0}));
  const auto a = absorption_estimate(runs, 1.0);
  EXPECT_DOUBLE_EQ(a.p0, 0.3);
  EXPECT_DOUBLE_EQ(a.p1, 0.7);
  EXPECT_DOUBLE_EQ(a.p0 + a.p1, 1.0);
  EXPECT_NEAR(a.se0, std::sqrt(0.3 * 0.7 / 10), 1e-15);
  EXPECT_EQ(a.runs, 10u);
  const auto z = absorption_estimate(runs, 0.0);
  EXPECT_EQ(z.p0, 0.0);
  EXPECT_EQ(z.p1, 0.0);
  EXPECT_DOUBLE_EQ(absorption_estimate(runs, 0.5).p1, 0.0);
  EXPECT_THROW(absorption_estimate({}, 1.0), usage_error);
}

TEST(Absorption, NearConsensusIsNotAbsorbed) {
  const std::vector<Trajectory> runs{q_trajectory({0.0}, {1e-12})};
  EXPECT_EQ(absorption_estimate(runs, 0.0).p0, 0.0);
}

TEST(TrajectoryPath, ReadsFields) {
  auto tr = q_trajectory({0.0, 0.5, 2.0}, {0.5, 0.25, 0.0});
  const auto q = trajectory_path(tr, "q");
  EXPECT_EQ(q.at(0.7), 0.25);
  EXPECT_EQ(q.horizon, 2.0);
  EXPECT_EQ(trajectory_path(tr, "p").at(1.0), 0.5);
  EXPECT_THROW(trajectory_path(tr, "x"), usage_error);
  tr.points[1].motif_densities = {0.1};
  EXPECT_THROW(density_path(tr), usage_error);
}

TEST(HomogenisationGap, MonochromaticAndConflictInit) {
  const auto mono = sample_graph(ColouredGraphon::constant(1, 0.5, 1.0), 40, 1);
  Trajectory tr;
  Checkpoint c;
  c.graph = mono;
  tr.points.push_back(c);
  c.t = 1;
  c.graph = init_distance_kernel(60, 3);
  tr.points.push_back(c);
  const auto gap = homogenisation_gap(tr, 3);
  ASSERT_EQ(gap.gap.size(), 2u);
  EXPECT_NEAR(gap.gap[0], 0.0, 1e-15);
  EXPECT_GT(gap.gap[1], 1e-3);
  EXPECT_EQ(gap.t, (std::vector<double>{0.0, 1.0}));
  Trajectory bare;
  bare.points.push_back(Checkpoint{});
  EXPECT_THROW(homogenisation_gap(bare, 3), usage_error);
}

TEST(ComparisonCsv, Format) {
  const std::vector<ComparisonRow> rows{{"0.5", 0.25, 0.01}, {"1", 0.125, std::nan("")}};
  EXPECT_EQ(comparison_csv(rows, "t"), "t,value,stderr\n0.5,0.25,0.01\n1,0.125,\n");
}
