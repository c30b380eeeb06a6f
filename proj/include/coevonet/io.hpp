#pragma once

#include <charconv>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "coevonet/coloured_graph.hpp"
#include "coevonet/coloured_graphon.hpp"
#include "coevonet/motif.hpp"
#include "coevonet/trajectory.hpp"

namespace coevonet {

using ojson = nlohmann::ordered_json;

/// Shortest decimal form that round-trips exactly.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

inline ojson graph_to_json(const ColouredGraph& g) {
  ojson j;
  j["n"] = g.n();
  j["colours"] = g.colours();
  ojson edges = ojson::array();
  for (auto [u, v] : g.edges()) edges.push_back({u, v});
  j["edges"] = edges;
  return j;
}

inline ColouredGraph graph_from_json(const ojson& j) {
  const int n = j.at("n").get<int>();
  auto colours = j.at("colours").get<std::vector<int>>();
  if (static_cast<int>(colours.size()) != n) throw usage_error("colour list length differs from n");
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : j.at("edges")) {
    const int u = e.at(0).get<int>(), v = e.at(1).get<int>();
    if (u < 0 || v < 0 || u >= n || v >= n || u == v) throw usage_error("invalid edge in graph file");
    edges.emplace_back(std::min(u, v), std::max(u, v));
  }
  return ColouredGraph(colours, edges);
}

/// {m, kernel: row-major lower triangle, colour}.
inline ojson graphon_to_json(const ColouredGraphon& w) {
  ojson j;
  j["m"] = w.m();
  std::vector<double> tri;
  for (int i = 0; i < w.m(); ++i)
    for (int j2 = 0; j2 <= i; ++j2) tri.push_back(w.kernel(i, j2));
  j["kernel"] = tri;
  j["colour"] = w.colour_data();
  return j;
}

inline ColouredGraphon graphon_from_json(const ojson& j) {
  const int m = j.at("m").get<int>();
  const auto tri = j.at("kernel").get<std::vector<double>>();
  const auto col = j.at("colour").get<std::vector<double>>();
  if (static_cast<int>(tri.size()) != m * (m + 1) / 2 || static_cast<int>(col.size()) != m)
    throw usage_error("graphon JSON has inconsistent sizes");
  ColouredGraphon w(m);
  std::size_t k = 0;
  for (int i = 0; i < m; ++i)
    for (int j2 = 0; j2 <= i; ++j2) w.set_kernel(i, j2, tri[k++]);
  for (int i = 0; i < m; ++i) w.colour(i) = col[i];
  w.validate();
  return w;
}

inline std::string motif_density_csv(const std::vector<Motif>& motifs, const std::vector<double>& values) {
  std::string out = "motif,value\n";
  for (std::size_t i = 0; i < motifs.size(); ++i)
    out += motifs[i].canonical_key() + "," + format_double(values[i]) + "\n";
  return out;
}

/// Columns t,q,p,C,D,D_count,nu; D_count is blank for the limit process and nu when not observed.
inline std::string trajectory_csv(const Trajectory& tr) {
  std::string out = "t,q,p,C,D,D_count,nu\n";
  for (const auto& c : tr.points) {
    out += format_double(c.t) + "," + format_double(c.stats.q) + "," + format_double(c.stats.p) + "," +
           format_double(c.stats.C) + "," + format_double(c.stats.D) + ",";
    if (tr.finite) out += std::to_string(c.stats.discordant_count);
    out += ",";
    if (c.nu) out += format_double(*c.nu);
    out += "\n";
  }
  return out;
}

inline std::string motif_trajectory_csv(const Trajectory& tr) {
  std::string out = "t";
  for (const auto& m : tr.motifs) out += "," + m.canonical_key();
  out += "\n";
  for (const auto& c : tr.points) {
    out += format_double(c.t);
    for (double v : c.motif_densities) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

/// Parses the trajectory CSV schema written by either simulator.
inline Trajectory read_trajectory_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,q,p,C,D,D_count,nu", 0) != 0)
    throw usage_error("not a trajectory CSV");
  Trajectory tr;
  tr.finite = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    while (f.size() < 7) f.emplace_back();
    Checkpoint c;
    c.t = std::stod(f[0]);
    c.stats.q = std::stod(f[1]);
    c.stats.p = std::stod(f[2]);
    c.stats.C = std::stod(f[3]);
    c.stats.D = std::stod(f[4]);
    if (!f[5].empty()) {
      c.stats.discordant_count = std::stoull(f[5]);
      tr.finite = true;
    }
    if (!f[6].empty()) c.nu = std::stod(f[6]);
    tr.points.push_back(c);
  }
  return tr;
}

}  // namespace coevonet
