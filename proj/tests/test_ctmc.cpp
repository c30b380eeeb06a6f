#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "coevonet/ctmc.hpp"
#include "coevonet/density.hpp"
#include "coevonet/graphon.hpp"
#include "coevonet/io.hpp"
#include "support/small_chain.hpp"

using namespace coevonet;

namespace {

ColouredGraph random_graph(int n, double p, std::uint64_t seed) {
  return sample_graph(ColouredGraphon::constant(1, p, 0.5), n, seed);
}

double closed_form_edge_rate(const ColouredGraph& g, const ModelParams& p) {
  double r = 0;
  for (int u = 0; u < g.n(); ++u)
    for (int v = u + 1; v < g.n(); ++v) r += p.rho * edge_switch_rate(g, p, u, v);
  return r;
}

}  // namespace

TEST(InitDistanceKernel, ColouringAndDeterminism) {
  for (int n : {2, 3, 10, 11, 101}) {
    const auto g = init_distance_kernel(n, 7);
    EXPECT_DOUBLE_EQ(summary_stats(g).q, static_cast<double>(n / 2) / n);
    for (int u = 0; u < n; ++u) EXPECT_EQ(g.colour(u), u < (n + 1) / 2 ? 0 : 1);
  }
  EXPECT_EQ(init_distance_kernel(60, 3), init_distance_kernel(60, 3));
  EXPECT_FALSE(init_distance_kernel(60, 3) == init_distance_kernel(60, 4));
  EXPECT_THROW(init_distance_kernel(1, 0), usage_error);
}

TEST(InitDistanceKernel, EdgeCountsMatchKernel) {
  const int n = 300;
  const auto g = init_distance_kernel(n, 11);
  double mean_c = 0, var_c = 0, mean_d = 0, var_d = 0;
  std::uint64_t pairs_c = 0, pairs_d = 0;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) {
      const double dist = std::abs(static_cast<double>(u) / n - static_cast<double>(v) / n);
      if (g.colour(u) == g.colour(v)) {
        const double pr = 0.1 * (1 - dist);
        mean_c += pr;
        var_c += pr * (1 - pr);
        ++pairs_c;
      } else {
        const double pr = 0.9 * (1 - dist);
        mean_d += pr;
        var_d += pr * (1 - pr);
        ++pairs_d;
      }
    }
  const double c = static_cast<double>(g.category_count(PairCategory::c1));
  const double d = static_cast<double>(g.category_count(PairCategory::d1));
  EXPECT_LE(std::abs(c - mean_c), 5 * std::sqrt(var_c));
  EXPECT_LE(std::abs(d - mean_d), 5 * std::sqrt(var_d));
  EXPECT_GT(d / pairs_d, c / pairs_c);
}

TEST(InitDistanceKernel, GraphonCellsAreThePairProbabilities) {
  const int m = 10;
  const auto w = init_distance_graphon(m);
  const auto g = init_distance_kernel(m, 1);
  for (int u = 0; u < m; ++u) {
    EXPECT_EQ(w.colour(u), static_cast<double>(g.colour(u)));
    for (int v = u + 1; v < m; ++v) {
      const double pr = (g.colour(u) == g.colour(v) ? 0.1 : 0.9) * (1.0 - static_cast<double>(v - u) / m);
      EXPECT_DOUBLE_EQ(w.kernel(u, v), pr);
    }
  }
  EXPECT_NO_THROW(w.validate());
  EXPECT_THROW(init_distance_graphon(1), usage_error);
}

TEST(Simulate, CheckpointGridValidation) {
  SimState st(random_graph(10, 0.5, 1), ModelParams::mixed_rates(), 1, 0);
  EXPECT_THROW(simulate(st, std::vector<double>{0.5, 1.0}), usage_error);
  EXPECT_THROW(simulate(st, std::vector<double>{0.0, 1.0, 1.0}), usage_error);
  EXPECT_THROW(simulate(st, std::vector<double>{}), usage_error);
  EXPECT_THROW(uniform_grid(0.0, 5), usage_error);
  ModelParams bad = ModelParams::mixed_rates();
  bad.eta = -1;
  EXPECT_THROW(SimState(random_graph(5, 0.5, 1), bad, 1, 0), usage_error);
}

TEST(Simulate, TimesAndInitialObservation) {
  const auto g0 = random_graph(30, 0.4, 2);
  SimState st(g0, ModelParams::mixed_rates(), 5, 0);
  const auto grid = uniform_grid(1.0, 11);
  const auto tr = simulate(st, grid);
  ASSERT_EQ(tr.points.size(), grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_EQ(tr.points[i].t, grid[i]);
  EXPECT_EQ(tr.points[0].stats.q, summary_stats(g0).q);
  EXPECT_EQ(tr.points[0].stats.p, summary_stats(g0).p);
  EXPECT_EQ(tr.n, 30);
  EXPECT_EQ(tr.seed, 5u);
  EXPECT_TRUE(tr.finite);
  EXPECT_EQ(st.time(), 1.0);
}

TEST(Simulate, AbsorbingStateIsConstant) {
  ModelParams p{1.0, 1.0, 0.0, 0.0, 0.0, 0.0};
  ColouredGraph g({1, 1, 1, 0, 0}, {{0, 1}, {1, 2}, {3, 4}});
  SimState st(g, p, 1, 0);
  const auto tr = simulate(st, uniform_grid(5.0, 6));
  EXPECT_EQ(st.events(), 0u);
  for (const auto& c : tr.points) {
    EXPECT_EQ(c.stats.q, 0.6);
    EXPECT_EQ(c.stats.discordant_count, 0u);
    EXPECT_TRUE(c.absorbed);
  }
  EXPECT_EQ(st.graph(), g);
}

TEST(Simulate, FrozenFillAfterAbsorption) {
  ColouredGraph g({1, 0, 1, 0}, {{0, 1}, {2, 3}});
  SimState st(g, ModelParams::deletion_only(), 3, 0);
  const auto tr = simulate(st, uniform_grid(40.0, 5));
  EXPECT_TRUE(tr.points.back().absorbed);
  EXPECT_EQ(tr.points.back().stats.p, 0.0);
  EXPECT_EQ(st.total_rate(), 0.0);
}

TEST(Simulate, RateCachesMatchClosedFormAfterEveryEvent) {
  for (const auto& params : {ModelParams::mixed_rates(), ModelParams::deletion_only(), ModelParams::equal_rates(0.7, 1.3, 1, 2)}) {
    SimState st(random_graph(25, 0.3, 9), params, 4, 1);
    for (int e = 0; e < 3000; ++e) {
      if (!st.step(1e9)) break;
      const auto& g = st.graph();
      ASSERT_DOUBLE_EQ(st.flip_rate(), 2 * params.eta * static_cast<double>(g.discordant_edges()));
      double per_vertex = 0;
      for (int u = 0; u < g.n(); ++u) per_vertex += params.eta * vertex_flip_rate(g, u);
      ASSERT_NEAR(st.flip_rate(), per_vertex, 1e-9);
      ASSERT_NEAR(st.edge_rate(), closed_form_edge_rate(g, params), 1e-9);
      if (e % 50 == 0) {
        ASSERT_TRUE(g.check_invariants());
      }
    }
  }
}

TEST(Simulate, Reproducibility) {
  const auto g = random_graph(40, 0.5, 3);
  Observers obs;
  obs.record_events = true;
  SimState a(g, ModelParams::mixed_rates(), 12, 3), b(g, ModelParams::mixed_rates(), 12, 3), c(g, ModelParams::mixed_rates(), 12, 4);
  const auto ta = simulate(a, uniform_grid(0.5, 3), obs);
  const auto tb = simulate(b, uniform_grid(0.5, 3), obs);
  const auto tc = simulate(c, uniform_grid(0.5, 3), obs);
  ASSERT_EQ(ta.events.size(), tb.events.size());
  for (std::size_t i = 0; i < ta.events.size(); ++i) {
    EXPECT_EQ(ta.events[i].t, tb.events[i].t);
    EXPECT_EQ(ta.events[i].event.u, tb.events[i].event.u);
    EXPECT_EQ(ta.events[i].event.v, tb.events[i].event.v);
  }
  EXPECT_EQ(a.graph(), b.graph());
  EXPECT_FALSE(a.graph() == c.graph());
  EXPECT_NE(trajectory_csv(ta), trajectory_csv(tc));
}

TEST(Simulate, LeftLimitObservationReplaysEventLog) {
  const auto g0 = random_graph(20, 0.5, 8);
  Observers obs;
  obs.record_events = true;
  obs.snapshot_all = true;
  SimState st(g0, ModelParams::mixed_rates(), 2, 0);
  const auto grid = uniform_grid(0.3, 7);
  const auto tr = simulate(st, grid, obs);
  ColouredGraph replay = g0;
  std::size_t next = 0;
  for (const auto& c : tr.points) {
    while (next < tr.events.size() && tr.events[next].t <= c.t) replay.apply(tr.events[next++].event);
    ASSERT_TRUE(c.graph.has_value());
    EXPECT_EQ(*c.graph, replay);
  }
  EXPECT_EQ(next, tr.events.size());
  for (std::size_t i = 1; i < tr.events.size(); ++i) EXPECT_GT(tr.events[i].t, tr.events[i - 1].t);
}

TEST(Simulate, ObserversMatchSnapshots) {
  Observers obs;
  obs.nu = true;
  const MotifCatalog cat(3);
  obs.motifs = cat.motifs();
  obs.snapshot_times = {0.0, 0.2};
  SimState st(random_graph(24, 0.6, 4), ModelParams::mixed_rates(), 6, 0);
  const auto tr = simulate(st, uniform_grid(0.2, 3), obs);
  EXPECT_TRUE(tr.points[0].graph.has_value());
  EXPECT_FALSE(tr.points[1].graph.has_value());
  for (std::size_t i : {std::size_t{0}, std::size_t{2}}) {
    const auto& c = tr.points[i];
    ASSERT_TRUE(c.graph.has_value());
    ASSERT_TRUE(c.nu.has_value());
    EXPECT_EQ(*c.nu, connectivity_nu(*c.graph));
    for (std::size_t m = 0; m < cat.size(); ++m) EXPECT_EQ(c.motif_densities[m], motif_density(*c.graph, cat.motif(m)));
  }
  EXPECT_EQ(tr.motifs.size(), cat.size());
}

TEST(Simulate, QIsAMartingale) {
  const auto g0 = init_distance_kernel(40, 1);
  const double q0 = summary_stats(g0).q;
  const int runs = 400;
  for (double T : {0.5, 2.0}) {
    const auto qs = run_ensemble(runs, [&](int r) {
      SimState st(g0, ModelParams::mixed_rates(), 77, static_cast<std::uint64_t>(r));
      return simulate(st, std::vector<double>{0.0, T}).points.back().stats.q;
    });
    const double mean = std::accumulate(qs.begin(), qs.end(), 0.0) / runs;
    double var = 0;
    for (double q : qs) var += (q - mean) * (q - mean);
    const double se = std::sqrt(var / (runs - 1) / runs);
    EXPECT_LE(std::abs(mean - q0), 3 * se) << "T=" << T;
  }
}

TEST(Simulate, EventCountMatchesIntegratedRate) {
  const auto g0 = random_graph(30, 0.5, 5);
  const int runs = 300;
  const auto diffs = run_ensemble(runs, [&](int r) {
    SimState st(g0, ModelParams::mixed_rates(), 31, static_cast<std::uint64_t>(r));
    simulate(st, std::vector<double>{0.0, 0.5});
    return static_cast<double>(st.events()) - st.integrated_rate();
  });
  const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / runs;
  double var = 0;
  for (double d : diffs) var += (d - mean) * (d - mean);
  EXPECT_LE(std::abs(mean), 5 * std::sqrt(var / (runs - 1) / runs));
}

TEST(Simulate, ThreeVertexChainMatchesMatrixExponential) {
  const ModelParams p = ModelParams::mixed_rates();
  const ColouredGraph g0({1, 0, 0}, {{0, 1}});
  const double t = 0.5;
  const auto truth = chain_oracle::law(3, p, chain_oracle::encode(g0), t);
  EXPECT_NEAR(truth.sum(), 1.0, 1e-12);
  const std::uint64_t runs = 20000;
  std::vector<std::uint64_t> counts(64, 0);
  for (std::uint64_t r = 0; r < runs; ++r) {
    SimState st(g0, p, 99, r);
    simulate(st, std::vector<double>{0.0, t});
    ++counts[chain_oracle::encode(st.graph())];
  }
  const auto [stat, dof] = chain_oracle::chi_square(counts, truth, runs);
  const double crit = boost::math::quantile(boost::math::chi_squared(dof), 0.99);
  EXPECT_LT(stat, crit) << "dof=" << dof;
}

TEST(Ensemble, ResultsIndependentOfWorkerCount) {
  auto body = [](int r) {
    SimState st(ColouredGraph({1, 0, 1, 0, 1}, {{0, 1}, {1, 2}}), ModelParams::mixed_rates(), 5, r);
    return trajectory_csv(simulate(st, uniform_grid(0.7, 4)));
  };
  EXPECT_EQ(run_ensemble(13, body, 1), run_ensemble(13, body, 3));
}

TEST(Ensemble, WorkerCountHonoursEnvironment) {
  ::setenv("COEVONET_THREADS", "2", 1);
  EXPECT_LE(worker_count(8), 2);
  EXPECT_GE(worker_count(8), 1);
  ::setenv("COEVONET_THREADS", "0", 1);
  EXPECT_GE(worker_count(8), 1);
  ::unsetenv("COEVONET_THREADS");
  EXPECT_GE(worker_count(0), 1);
}

TEST(Ensemble, PropagatesExceptions) {
  EXPECT_THROW(run_ensemble(4, [](int r) {
                 if (r == 2) throw usage_error("boom");
                 return r;
               }, 2),
               usage_error);
}

TEST(Mixing, PointMassAtTimeZero) {
  const auto g = random_graph(12, 0.7, 2);
  const auto rows = mixing_check(g, 1.0, {0.0});
  EXPECT_NEAR(rows[0].max_tv, 1.0 - 1.0 / 12, 1e-12);
}

TEST(Mixing, CompleteGraphDecaysBelowBound) {
  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < 15; ++u)
    for (int v = u + 1; v < 15; ++v) edges.emplace_back(u, v);
  ColouredGraph kn(std::vector<int>(15, 0), edges);
  const auto rows = mixing_check(kn, 1.0, {0.05, 0.5, 2.0});
  for (const auto& r : rows) EXPECT_TRUE(r.holds);
  EXPECT_LT(rows.back().max_tv, 1e-10);
}

TEST(Mixing, MatchesMatrixExponential) {
  const auto g = random_graph(16, 0.5, 21);
  const double eta = 0.8, t = 0.3;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(16, 16);
  for (int u = 0; u < 16; ++u)
    for (int v = 0; v < 16; ++v)
      if (u != v && g.adjacent(u, v)) {
        L(u, v) += eta;
        L(u, u) -= eta;
      }
  const Eigen::MatrixXd P = (L * t).exp();
  double worst = 0;
  for (int i = 0; i < 16; ++i) {
    double tv = 0;
    for (int j = 0; j < 16; ++j) tv += std::abs(P(i, j) - 1.0 / 16);
    worst = std::max(worst, tv / 2);
  }
  const auto rows = mixing_check(g, eta, {t});
  EXPECT_NEAR(rows[0].max_tv, worst, 1e-12);
  const double nu = connectivity_nu(g);
  EXPECT_DOUBLE_EQ(rows[0].bound, std::exp(-eta * nu * nu * 16 * t));
}

TEST(Mixing, VacuousWhenNuZeroAndTooLarge) {
  ColouredGraph star(std::vector<int>(6, 0), {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}});
  const auto rows = mixing_check(star, 1.0, {0.1, 1.0});
  for (const auto& r : rows) {
    EXPECT_EQ(r.bound, 1.0);
    EXPECT_TRUE(r.holds);
  }
  EXPECT_THROW(mixing_check(ColouredGraph(513), 1.0, {0.1}), usage_error);
}

TEST(Mixing, DenseRandomGraphRespectsBound) {
  const auto g = random_graph(80, 0.5, 13);
  for (const auto& r : mixing_check(g, 1.0, {0.01, 0.05, 0.1})) EXPECT_TRUE(r.holds) << r.t;
}

TEST(Connectivity, NoRemovalRegimeNeverDropsBelowStart) {
  ModelParams p{1.0, 1.0, 1.0, 0.0, 0.5, 0.0};
  Observers obs;
  obs.snapshot_all = true;
  SimState st(random_graph(40, 0.6, 3), p, 8, 0);
  const auto tr = simulate(st, uniform_grid(1.0, 6), obs);
  const auto rep = monitor_connectivity(tr, p);
  EXPECT_EQ(rep.regime, "z1=0");
  EXPECT_GE(rep.min_nu, rep.nu0);
  EXPECT_EQ(rep.violations, 0);
}

TEST(Connectivity, RegimeLabelsAndThresholds) {
  Observers obs;
  obs.snapshot_all = true;
  {
    SimState st(random_graph(30, 0.6, 1), ModelParams::deletion_only(), 1, 0);
    const auto tr = simulate(st, uniform_grid(0.5, 3), obs);
    const auto rep = monitor_connectivity(tr, ModelParams::deletion_only());
    EXPECT_EQ(rep.regime, "z0=0,z1>0");
    EXPECT_DOUBLE_EQ(rep.rows[2].threshold, 0.5 * rep.nu0 * std::exp(-2 * 2.0 * 0.5));
  }
  {
    SimState st(random_graph(30, 0.6, 1), ModelParams::mixed_rates(), 1, 0);
    const auto tr = simulate(st, uniform_grid(0.5, 3), obs);
    const auto rep = monitor_connectivity(tr, ModelParams::mixed_rates());
    EXPECT_EQ(rep.regime, "z0>0");
    EXPECT_DOUBLE_EQ(rep.p, 0.7 / (0.7 + 2.0));
    EXPECT_DOUBLE_EQ(rep.rows[1].threshold, 0.5 * std::pow(rep.nu0, 3));
  }
  {
    SimState st(ColouredGraph(10), ModelParams::mixed_rates(), 1, 0);
    const auto tr = simulate(st, uniform_grid(0.1, 2), obs);
    const auto rep = monitor_connectivity(tr, ModelParams::mixed_rates());
    EXPECT_EQ(rep.nu0, 0.0);
    EXPECT_FALSE(rep.bound_applies);
  }
  SimState st(random_graph(10, 0.5, 1), ModelParams::mixed_rates(), 1, 0);
  EXPECT_THROW(monitor_connectivity(simulate(st, uniform_grid(0.1, 2)), ModelParams::mixed_rates()), usage_error);
}

TEST(TrajectoryCsv, Schema) {
  Observers obs;
  obs.nu = true;
  SimState st(random_graph(12, 0.5, 1), ModelParams::mixed_rates(), 1, 0);
  const auto tr = simulate(st, uniform_grid(0.2, 3), obs);
  const auto csv = trajectory_csv(tr);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,q,p,C,D,D_count,nu");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  const auto back = read_trajectory_csv(csv);
  ASSERT_EQ(back.points.size(), 3u);
  EXPECT_TRUE(back.finite);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.points[i].t, tr.points[i].t);
    EXPECT_EQ(back.points[i].stats.D, tr.points[i].stats.D);
    EXPECT_EQ(back.points[i].stats.discordant_count, tr.points[i].stats.discordant_count);
    EXPECT_EQ(*back.points[i].nu, *tr.points[i].nu);
  }
}
