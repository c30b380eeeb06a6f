#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "coevonet/coloured_graph.hpp"
#include "coevonet/coloured_graphon.hpp"
#include "coevonet/density.hpp"
#include "coevonet/params.hpp"
#include "coevonet/rng.hpp"
#include "coevonet/trajectory.hpp"

namespace coevonet {

/// Conflict-laden start: positions i/n, the first ceil(n/2) vertices black, concordant
/// pairs joined with probability 0.1(1-|x-y|) and discordant ones with 0.9(1-|x-y|).
inline ColouredGraph init_distance_kernel(int n, std::uint64_t seed, std::uint64_t stream = 0) {
  if (n < 2) throw usage_error("distance-kernel start needs n >= 2");
  std::vector<int> colours(n);
  const int black = (n + 1) / 2;
  for (int u = 0; u < n; ++u) colours[u] = u < black ? 0 : 1;
  Rng rng = make_stream(seed, stream);
  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) {
      const double dist = static_cast<double>(v - u) / n;
      const double pr = (colours[u] == colours[v] ? 0.1 : 0.9) * (1.0 - dist);
      if (uniform01(rng) < pr) edges.emplace_back(u, v);
    }
  return ColouredGraph(colours, edges);
}

/// Grid graphon of the same start: cell i sits at i/m and carries the colour of vertex i.
inline ColouredGraphon init_distance_graphon(int m) {
  if (m < 2) throw usage_error("distance-kernel graphon needs m >= 2");
  ColouredGraphon w(m);
  const int black = (m + 1) / 2;
  for (int i = 0; i < m; ++i) {
    w.colour(i) = i < black ? 0.0 : 1.0;
    for (int j = 0; j <= i; ++j)
      w.set_kernel(i, j, ((i < black) == (j < black) ? 0.1 : 0.9) * (1.0 - static_cast<double>(i - j) / m));
  }
  return w;
}

/// Running state of one exact simulation.
class SimState {
 public:
  SimState(ColouredGraph g, const ModelParams& params, std::uint64_t seed, std::uint64_t stream)
      : graph_(std::move(g)), params_(params), seed_(seed), stream_(stream), rng_(make_stream(seed, stream)) {
    params_.validate();
    refresh();
  }

  const ColouredGraph& graph() const { return graph_; }
  const ModelParams& params() const { return params_; }
  double time() const { return time_; }
  std::uint64_t events() const { return events_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  double flip_rate() const { return flip_rate_; }
  double edge_rate(PairCategory c) const { return edge_rate_[static_cast<int>(c)]; }
  double edge_rate() const { return edge_rate_[0] + edge_rate_[1] + edge_rate_[2] + edge_rate_[3]; }
  double total_rate() const { return total_; }
  /// Integral of the total jump rate along the path so far.
  double integrated_rate() const { return integrated_; }

  /// Performs the next jump if it occurs no later than `limit`; otherwise moves the clock to `limit`.
  std::optional<Event> step(double limit) {
    if (total_ <= 0) {
      advance_to(limit);
      return std::nullopt;
    }
    const double dt = exponential(rng_, total_);
    if (time_ + dt > limit) {
      advance_to(limit);
      return std::nullopt;
    }
    integrated_ += total_ * dt;
    time_ += dt;
    const Event e = choose();
    graph_.apply(e);
    ++events_;
    refresh();
    return e;
  }

 private:
  void advance_to(double limit) {
    if (limit > time_) {
      integrated_ += total_ * (limit - time_);
      time_ = limit;
    }
  }

  void refresh() {
    flip_rate_ = 2.0 * params_.eta * static_cast<double>(graph_.discordant_edges());
    for (int c = 0; c < 4; ++c) {
      const double s = params_.s((c & 2) == 0, (c & 1) != 0);
      edge_rate_[c] = params_.rho * s * static_cast<double>(graph_.category_count(static_cast<PairCategory>(c)));
    }
    total_ = flip_rate_ + edge_rate();
  }

  Event choose() {
    double x = uniform01(rng_) * total_;
    if (x < flip_rate_ || edge_rate() <= 0) {
      auto [u, v] = graph_.sample_pair(PairCategory::d1, rng_);
      return Event::flip(uniform01(rng_) < 0.5 ? u : v);
    }
    x -= flip_rate_;
    int last = -1;
    for (int c = 0; c < 4; ++c) {
      if (edge_rate_[c] <= 0) continue;
      last = c;
      if (x < edge_rate_[c]) break;
      x -= edge_rate_[c];
    }
    auto [u, v] = graph_.sample_pair(static_cast<PairCategory>(last), rng_);
    return Event::toggle(u, v);
  }

  ColouredGraph graph_;
  ModelParams params_;
  std::uint64_t seed_, stream_;
  Rng rng_;
  double time_ = 0;
  std::uint64_t events_ = 0;
  double flip_rate_ = 0;
  double edge_rate_[4] = {0, 0, 0, 0};
  double total_ = 0;
  double integrated_ = 0;
};

/// What to record at each checkpoint besides the scalar statistics.
struct Observers {
  bool nu = false;
  std::vector<Motif> motifs;
  std::vector<double> snapshot_times;
  bool snapshot_all = false;
  bool record_events = false;
};

inline Checkpoint observe(const ColouredGraph& g, double t, const Observers& obs, bool snapshot) {
  Checkpoint c;
  c.t = t;
  c.stats = summary_stats(g);
  if (obs.nu) c.nu = connectivity_nu(g);
  c.motif_densities.reserve(obs.motifs.size());
  for (const auto& f : obs.motifs) c.motif_densities.push_back(motif_density(g, f));
  if (snapshot) c.graph = g;
  return c;
}

/// Runs the chain through the checkpoint grid (absolute times starting at the current clock),
/// recording the state in force at each checkpoint.
inline Trajectory simulate(SimState& state, const std::vector<double>& checkpoints, const Observers& obs = {}) {
  validate_checkpoints(checkpoints);
  if (checkpoints.front() != state.time()) throw usage_error("checkpoint grid must start at the current time");
  Trajectory tr;
  tr.params = state.params();
  tr.seed = state.seed();
  tr.stream = state.stream();
  tr.n = state.graph().n();
  tr.finite = true;
  tr.motifs = obs.motifs;
  auto wants_snapshot = [&](double t) {
    if (obs.snapshot_all) return true;
    return std::any_of(obs.snapshot_times.begin(), obs.snapshot_times.end(),
                       [&](double s) { return std::abs(s - t) <= 1e-12 * std::max(1.0, std::abs(t)); });
  };
  for (double t : checkpoints) {
    while (auto e = state.step(t))
      if (obs.record_events) tr.events.push_back({state.time(), *e});
    Checkpoint c = observe(state.graph(), t, obs, wants_snapshot(t));
    c.absorbed = state.total_rate() <= 0;
    tr.points.push_back(std::move(c));
  }
  return tr;
}

/// Worker threads for ensembles: `requested` (or the hardware count when 0), capped by COEVONET_THREADS.
inline int worker_count(int requested = 0) {
  int n = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("COEVONET_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return std::max(1, n);
}

/// Evaluates fn(0..runs-1) in parallel; results are returned in run order.
template <class F>
auto run_ensemble(int runs, F&& fn, int threads = 0) -> std::vector<std::invoke_result_t<F&, int>> {
  using R = std::invoke_result_t<F&, int>;
  std::vector<std::optional<R>> slots(static_cast<std::size_t>(std::max(0, runs)));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (int r = next++; r < runs; r = next++) {
      try {
        slots[r].emplace(fn(r));
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = runs;
      }
    }
  };
  const int workers = std::min(worker_count(threads), std::max(1, runs));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  std::vector<R> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

struct MixingRow {
  double t = 0;
  double max_tv = 0;
  int worst_vertex = 0;
  double bound = 1;
  bool holds = true;
};

/// Total-variation distance to uniform of the walk jumping at rate eta along each incident
/// edge, from every start vertex, against exp(-eta nu^2 n t).
inline std::vector<MixingRow> mixing_check(const ColouredGraph& g, double eta, const std::vector<double>& times) {
  const int n = g.n();
  if (n > 512) throw usage_error("exact mixing check limited to n <= 512; use a sampling estimate instead");
  if (n < 2) throw usage_error("mixing check needs at least two vertices");
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      if (u != v && g.adjacent(u, v)) {
        L(u, v) = eta;
        L(u, u) -= eta;
      }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
  const Eigen::MatrixXd& V = es.eigenvectors();
  const Eigen::VectorXd& lam = es.eigenvalues();
  const double nu = connectivity_nu(g);
  std::vector<MixingRow> rows;
  for (double t : times) {
    MixingRow row;
    row.t = t;
    const Eigen::VectorXd e = (lam * t).array().exp();
    const Eigen::MatrixXd P = V * e.asDiagonal() * V.transpose();
    for (int i = 0; i < n; ++i) {
      double tv = 0;
      for (int j = 0; j < n; ++j) tv += std::abs(P(i, j) - 1.0 / n);
      tv /= 2;
      if (tv > row.max_tv) {
        row.max_tv = tv;
        row.worst_vertex = i;
      }
    }
    row.bound = nu > 0 ? std::exp(-eta * nu * nu * n * t) : 1.0;
    row.holds = row.max_tv <= row.bound;
    rows.push_back(row);
  }
  return rows;
}

struct ConnectivityRow {
  double t = 0;
  double nu = 0;
  double threshold = 0;
  bool below = false;
};

struct ConnectivityReport {
  double nu0 = 0;
  double min_nu = 0;
  std::string regime;
  double p = 0;
  bool bound_applies = false;
  int violations = 0;
  std::vector<ConnectivityRow> rows;
};

/// Tracks nu along the graph snapshots of a trajectory and compares with the threshold curve of
/// the parameter regime (z0 = min(s_c0, s_d0), z1 = max(s_c1, s_d1)).
inline ConnectivityReport monitor_connectivity(const Trajectory& tr, const ModelParams& params) {
  if (tr.points.empty() || !tr.points.front().graph) throw usage_error("connectivity monitoring needs graph snapshots");
  ConnectivityReport rep;
  const double z0 = std::min(params.s_c0, params.s_d0);
  const double z1 = std::max(params.s_c1, params.s_d1);
  rep.nu0 = connectivity_nu(*tr.points.front().graph);
  rep.min_nu = rep.nu0;
  if (z1 == 0) {
    rep.regime = "z1=0";
    rep.bound_applies = rep.nu0 > 0;
  } else if (z0 == 0) {
    rep.regime = "z0=0,z1>0";
    rep.bound_applies = rep.nu0 > 0;
  } else {
    rep.regime = "z0>0";
    rep.p = z0 / (z0 + z1);
    rep.bound_applies = rep.nu0 > 0 && rep.p > rep.nu0;
  }
  for (const auto& c : tr.points) {
    if (!c.graph) continue;
    ConnectivityRow row;
    row.t = c.t;
    row.nu = connectivity_nu(*c.graph);
    if (rep.regime == "z1=0")
      row.threshold = rep.nu0;
    else if (rep.regime == "z0=0,z1>0")
      row.threshold = 0.5 * rep.nu0 * std::exp(-2 * params.rho * c.t);
    else
      row.threshold = 0.5 * std::pow(rep.nu0, 3);
    row.below = rep.regime == "z1=0" ? row.nu < row.threshold : row.nu <= row.threshold;
    if (row.below && rep.bound_applies) ++rep.violations;
    rep.min_nu = std::min(rep.min_nu, row.nu);
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace coevonet
