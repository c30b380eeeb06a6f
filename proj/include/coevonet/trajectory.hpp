#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "coevonet/coloured_graph.hpp"
#include "coevonet/coloured_graphon.hpp"
#include "coevonet/motif.hpp"
#include "coevonet/params.hpp"

namespace coevonet {

/// Observation recorded at one checkpoint time.
struct Checkpoint {
  double t = 0;
  SummaryStats stats;
  std::optional<double> nu;
  std::vector<double> motif_densities;
  std::optional<ColouredGraph> graph;
  std::optional<ColouredGraphon> graphon;
  bool absorbed = false;
};

struct TimedEvent {
  double t = 0;
  Event event{Event::Kind::flip, -1, -1};
};

/// Time-stamped path of a finite-n run (`finite`) or of the limit process.
struct Trajectory {
  std::vector<Checkpoint> points;
  ModelParams params;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  int n = 0;
  bool finite = true;
  std::vector<Motif> motifs;
  std::vector<TimedEvent> events;

  std::vector<double> times() const {
    std::vector<double> t;
    for (const auto& p : points) t.push_back(p.t);
    return t;
  }
};

/// `count` equally spaced times from 0 to horizon inclusive.
inline std::vector<double> uniform_grid(double horizon, int count) {
  if (count < 2 || !(horizon > 0)) throw usage_error("checkpoint grid needs a positive horizon and two points");
  std::vector<double> t(count);
  for (int i = 0; i < count; ++i) t[i] = horizon * i / (count - 1);
  return t;
}

inline void validate_checkpoints(const std::vector<double>& t) {
  if (t.empty() || t.front() != 0.0) throw usage_error("checkpoint grid must start at 0");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1])) throw usage_error("checkpoint times must be strictly increasing");
}

}  // namespace coevonet
