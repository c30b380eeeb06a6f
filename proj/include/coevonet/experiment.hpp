#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <openssl/opensslv.h>

#include "coevonet/ctmc.hpp"
#include "coevonet/generator.hpp"
#include "coevonet/graphon.hpp"
#include "coevonet/hash.hpp"
#include "coevonet/io.hpp"
#include "coevonet/limit_sde.hpp"
#include "coevonet/path_metrics.hpp"

namespace coevonet {

inline constexpr const char* kVersion = "1.0.0";

/// Stream reserved for sampling the initial graph, apart from the per-run streams 0..E-1.
inline constexpr std::uint64_t kInitStream = 1000000000ULL;

/// Invalid configuration; `field` names the offending entry.
class config_error : public std::runtime_error {
 public:
  config_error(std::string field, const std::string& msg)
      : std::runtime_error("field '" + field + "': " + msg), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class Mode { simulate, limit, compare, verify_generator, mixing_check, polarisation };

inline const std::vector<std::pair<std::string, Mode>>& mode_names() {
  static const std::vector<std::pair<std::string, Mode>> names{
      {"simulate", Mode::simulate},         {"limit", Mode::limit},
      {"compare", Mode::compare},           {"verify-generator", Mode::verify_generator},
      {"mixing-check", Mode::mixing_check}, {"polarisation", Mode::polarisation}};
  return names;
}

inline std::string to_string(Mode m) {
  for (const auto& [name, v] : mode_names())
    if (v == m) return name;
  return "?";
}

inline Mode parse_mode(const std::string& s) {
  for (const auto& [name, v] : mode_names())
    if (name == s) return v;
  throw config_error("mode", "unknown mode '" + s + "'");
}

struct InitSpec {
  std::string type = "distance-kernel";  // distance-kernel | constant-graphon | graph-file
  double p = 0.5;
  double q = 0.5;
  std::string path;
};

struct VerifySettings {
  GeneratorCheckOptions generator;
  ColourSumSweepOptions colour_sums;
  ProjectedCheckOptions projected;
};

struct MixingSettings {
  std::vector<double> times{0.01, 0.05, 0.1};
};

struct PolarisationSettings {
  std::vector<double> p0{0.25, 0.5, 1.0};
  double q0 = 0.5;
  std::size_t samples = 20000;
  double dt = 1e-3;
  int finite_runs = 0;
  int finite_n = 1000;
  double finite_horizon = 10.0;
};

struct CompareSettings {
  int gap_K = 3;
  double metric_horizon = 10.0;
};

struct ExperimentConfig {
  Mode mode = Mode::simulate;
  ModelParams params = ModelParams::mixed_rates();
  std::string preset = "mixed-rates";
  InitSpec init;
  int n = 0;
  int grid_m = 16;
  double horizon = 0;
  double step = 1e-3;
  int checkpoints = 21;
  std::vector<double> checkpoint_times;
  int ensemble = 1;
  std::uint64_t seed = 1;
  std::string output_dir = "coevonet-out";
  int K = 0;
  bool record_nu = false;
  int threads = 0;
  VerifySettings verify;
  MixingSettings mixing;
  PolarisationSettings polarisation;
  CompareSettings compare;
  std::filesystem::path base_dir;  // directory of the config file, for relative graph paths

  std::vector<double> grid() const {
    return checkpoint_times.empty() ? uniform_grid(horizon, checkpoints) : checkpoint_times;
  }
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> ensemble;
};

namespace detail {

class Fields {
 public:
  Fields(const ojson& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) throw config_error(prefix_.empty() ? "<root>" : prefix_, "expected an object");
  }

  std::string name(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  void read(const std::string& key, T& out) const {
    seen_.push_back(key);
    if (!j_.contains(key)) return;
    const auto& v = j_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw config_error(name(key), "expected a boolean");
      out = v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw config_error(name(key), "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)
          throw config_error(name(key), "must be nonnegative");
      }
      out = v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw config_error(name(key), "expected a number");
      out = v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw config_error(name(key), "expected a string");
      out = v.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      if (!v.is_array()) throw config_error(name(key), "expected an array of numbers");
      out.clear();
      for (const auto& x : v) {
        if (!x.is_number()) throw config_error(name(key), "expected an array of numbers");
        out.push_back(x.get<double>());
      }
    } else if constexpr (std::is_same_v<T, std::vector<int>>) {
      if (!v.is_array()) throw config_error(name(key), "expected an array of integers");
      out.clear();
      for (const auto& x : v) {
        if (!x.is_number_integer()) throw config_error(name(key), "expected an array of integers");
        out.push_back(x.get<int>());
      }
    } else {
      static_assert(sizeof(T) == 0, "unsupported field type");
    }
  }

  const ojson& child(const std::string& key) const {
    seen_.push_back(key);
    return j_.at(key);
  }

  void reject_unknown() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end())
        throw config_error(name(it.key()), "unknown field");
  }

 private:
  const ojson& j_;
  std::string prefix_;
  mutable std::vector<std::string> seen_;
};

inline void require(bool ok, const std::string& field, const std::string& msg) {
  if (!ok) throw config_error(field, msg);
}

inline ModelParams preset_params(const std::string& name) {
  if (name == "mixed-rates") return ModelParams::mixed_rates();
  if (name == "deletion-only") return ModelParams::deletion_only();
  throw config_error("params.preset", "unknown preset '" + name + "' (mixed-rates, deletion-only)");
}

}  // namespace detail

/// Builds and validates a configuration from JSON; CLI overrides win over file fields.
/// `mode` (when given) overrides the file's "mode" entry.
inline ExperimentConfig parse_config(const ojson& j, std::optional<Mode> mode = std::nullopt,
                                     const Overrides& ov = {}) {
  using detail::require;
  ExperimentConfig c;
  detail::Fields f(j, "");
  std::string mode_name;
  f.read("mode", mode_name);
  if (mode)
    c.mode = *mode;
  else if (!mode_name.empty())
    c.mode = parse_mode(mode_name);
  else
    throw config_error("mode", "missing");
  if (c.mode == Mode::polarisation) {
    c.preset = "deletion-only";
    c.params = ModelParams::deletion_only();
  }

  if (f.has("params")) {
    detail::Fields pf(f.child("params"), "params");
    if (pf.has("preset")) {
      pf.read("preset", c.preset);
      c.params = detail::preset_params(c.preset);
    }
    const bool custom = pf.has("eta") || pf.has("rho") || pf.has("s_c0") || pf.has("s_c1") || pf.has("s_d0") ||
                        pf.has("s_d1");
    pf.read("eta", c.params.eta);
    pf.read("rho", c.params.rho);
    pf.read("s_c0", c.params.s_c0);
    pf.read("s_c1", c.params.s_c1);
    pf.read("s_d0", c.params.s_d0);
    pf.read("s_d1", c.params.s_d1);
    pf.reject_unknown();
    if (custom) c.preset = pf.has("preset") ? c.preset + "+custom" : "custom";
  }
  try {
    c.params.validate();
  } catch (const usage_error& e) {
    throw config_error("params", e.what());
  }

  if (f.has("init")) {
    detail::Fields inf(f.child("init"), "init");
    inf.read("type", c.init.type);
    inf.read("p", c.init.p);
    inf.read("q", c.init.q);
    inf.read("path", c.init.path);
    inf.reject_unknown();
  } else if (c.mode == Mode::mixing_check) {
    c.init.type = "constant-graphon";
  }
  require(c.init.type == "distance-kernel" || c.init.type == "constant-graphon" || c.init.type == "graph-file",
          "init.type", "must be distance-kernel, constant-graphon or graph-file");
  require(c.init.p >= 0 && c.init.p <= 1, "init.p", "must lie in [0,1]");
  require(c.init.q >= 0 && c.init.q <= 1, "init.q", "must lie in [0,1]");
  require(c.init.type != "graph-file" || !c.init.path.empty(), "init.path", "required for graph-file");

  f.read("n", c.n);
  f.read("grid_m", c.grid_m);
  f.read("horizon", c.horizon);
  f.read("step", c.step);
  f.read("checkpoints", c.checkpoints);
  f.read("checkpoint_times", c.checkpoint_times);
  f.read("ensemble", c.ensemble);
  f.read("seed", c.seed);
  f.read("output_dir", c.output_dir);
  f.read("K", c.K);
  f.read("record_nu", c.record_nu);
  f.read("threads", c.threads);

  if (f.has("verify")) {
    detail::Fields vf(f.child("verify"), "verify");
    auto& g = c.verify.generator;
    vf.read("sizes", g.sizes);
    vf.read("random_graphs", g.random_graphs);
    vf.read("k_max", g.k_max);
    vf.read("exhaustive_limit", g.exhaustive_limit);
    vf.read("edge_probability", g.edge_probability);
    vf.read("colour_sum_graphs", c.verify.colour_sums.graphs);
    vf.read("colour_sum_n", c.verify.colour_sums.n);
    vf.read("colour_sum_k", c.verify.colour_sums.k_max);
    vf.read("projected_sizes", c.verify.projected.sizes);
    vf.read("projected_graphs", c.verify.projected.graphs);
    vf.reject_unknown();
  }
  if (f.has("mixing")) {
    detail::Fields mf(f.child("mixing"), "mixing");
    mf.read("times", c.mixing.times);
    mf.reject_unknown();
  }
  if (f.has("polarisation")) {
    detail::Fields pf(f.child("polarisation"), "polarisation");
    pf.read("p0", c.polarisation.p0);
    pf.read("q0", c.polarisation.q0);
    pf.read("samples", c.polarisation.samples);
    pf.read("dt", c.polarisation.dt);
    pf.read("finite_runs", c.polarisation.finite_runs);
    pf.read("finite_n", c.polarisation.finite_n);
    pf.read("finite_horizon", c.polarisation.finite_horizon);
    pf.reject_unknown();
  }
  if (f.has("compare")) {
    detail::Fields cf(f.child("compare"), "compare");
    cf.read("gap_K", c.compare.gap_K);
    cf.read("metric_horizon", c.compare.metric_horizon);
    cf.reject_unknown();
  }
  f.reject_unknown();

  if (ov.seed) c.seed = *ov.seed;
  if (ov.out) c.output_dir = *ov.out;
  if (ov.ensemble) c.ensemble = *ov.ensemble;

  // mode-specific requirements
  const bool finite = c.mode == Mode::simulate || c.mode == Mode::compare || c.mode == Mode::mixing_check;
  const bool timed = c.mode == Mode::simulate || c.mode == Mode::limit || c.mode == Mode::compare;
  if (finite && c.init.type != "graph-file") require(c.n >= 2, "n", "required (>= 2) for mode " + to_string(c.mode));
  if (c.mode == Mode::mixing_check && c.init.type == "graph-file") require(c.n == 0 || c.n >= 2, "n", "must be >= 2");
  if (timed) {
    require(c.horizon > 0, "horizon", "must be positive");
    if (c.checkpoint_times.empty()) {
      require(c.checkpoints >= 2, "checkpoints", "need at least 2");
    } else {
      try {
        validate_checkpoints(c.checkpoint_times);
      } catch (const usage_error& e) {
        throw config_error("checkpoint_times", e.what());
      }
      require(c.checkpoint_times.back() <= c.horizon, "checkpoint_times", "must not exceed the horizon");
    }
  }
  if (c.mode == Mode::limit || c.mode == Mode::compare) {
    require(c.step > 0 && c.step <= c.horizon, "step", "must lie in (0, horizon]");
    require(c.grid_m >= 2 || c.init.type != "distance-kernel", "grid_m", "must be >= 2");
  }
  require(c.ensemble >= 1, "ensemble", "must be >= 1");
  require(c.K >= 0 && c.K <= 4, "K", "must lie in 0..4");
  require(c.threads >= 0, "threads", "must be >= 0");
  require(!c.output_dir.empty(), "output_dir", "must not be empty");
  if (c.mode == Mode::compare) {
    require(c.compare.gap_K >= 1 && c.compare.gap_K <= 4, "compare.gap_K", "must lie in 1..4");
    require(c.compare.metric_horizon > 0, "compare.metric_horizon", "must be positive");
  }
  if (c.mode == Mode::verify_generator) {
    const auto& g = c.verify.generator;
    require(!g.sizes.empty(), "verify.sizes", "must not be empty");
    for (int s : g.sizes) require(s >= 2 && s <= 64, "verify.sizes", "sizes must lie in 2..64");
    require(g.random_graphs >= 1, "verify.random_graphs", "must be >= 1");
    require(g.k_max >= 1 && g.k_max <= 4, "verify.k_max", "must lie in 1..4");
    require(g.exhaustive_limit <= 4, "verify.exhaustive_limit", "must be <= 4");
    require(g.edge_probability >= 0 && g.edge_probability <= 1, "verify.edge_probability", "must lie in [0,1]");
    require(c.verify.colour_sums.graphs >= 1, "verify.colour_sum_graphs", "must be >= 1");
    require(c.verify.colour_sums.n >= 2, "verify.colour_sum_n", "must be >= 2");
    require(c.verify.colour_sums.k_max >= 1 && c.verify.colour_sums.k_max <= 3, "verify.colour_sum_k",
            "must lie in 1..3");
    require(!c.verify.projected.sizes.empty(), "verify.projected_sizes", "must not be empty");
    for (int s : c.verify.projected.sizes)
      require(s >= 2 && s <= 64, "verify.projected_sizes", "sizes must lie in 2..64");
    require(c.verify.projected.graphs >= 1, "verify.projected_graphs", "must be >= 1");
  }
  if (c.mode == Mode::mixing_check) {
    require(!c.mixing.times.empty(), "mixing.times", "must not be empty");
    for (double t : c.mixing.times) require(t >= 0, "mixing.times", "must be nonnegative");
    require(c.n <= 512, "n", "exact mixing check is limited to n <= 512");
  }
  if (c.mode == Mode::polarisation) {
    const auto& p = c.params;
    require(p.s_c0 == 0 && p.s_d0 == 0 && p.s_c1 == p.s_d1 && p.s_c1 > 0, "params",
            "polarisation needs s_c0 = s_d0 = 0 and s_c1 = s_d1 > 0");
    const auto& pl = c.polarisation;
    require(!pl.p0.empty(), "polarisation.p0", "must not be empty");
    for (double x : pl.p0) require(x >= 0 && x <= 1, "polarisation.p0", "values must lie in [0,1]");
    require(pl.q0 > 0 && pl.q0 < 1, "polarisation.q0", "must lie in (0,1)");
    require(pl.samples >= 1, "polarisation.samples", "must be >= 1");
    require(pl.dt > 0, "polarisation.dt", "must be positive");
    require(pl.finite_runs >= 0, "polarisation.finite_runs", "must be >= 0");
    require(pl.finite_runs == 0 || pl.finite_n >= 2, "polarisation.finite_n", "must be >= 2");
    require(pl.finite_horizon > 0, "polarisation.finite_horizon", "must be positive");
  }
  c.verify.generator.params = c.params;
  c.verify.generator.seed = c.seed;
  c.verify.generator.threads = c.threads;
  c.verify.colour_sums.seed = c.seed;
  c.verify.colour_sums.threads = c.threads;
  c.verify.projected.seed = c.seed;
  c.verify.projected.params = c.params;
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path, std::optional<Mode> mode = std::nullopt,
                                    const Overrides& ov = {}) {
  std::ifstream in(path);
  if (!in) throw config_error("--config", "cannot read '" + path.string() + "'");
  ojson j;
  try {
    j = ojson::parse(in);
  } catch (const ojson::parse_error& e) {
    throw config_error("--config", std::string("invalid JSON: ") + e.what());
  }
  auto c = parse_config(j, mode, ov);
  c.base_dir = path.parent_path();
  return c;
}

/// Effective configuration after defaults and overrides; its hash identifies the run.
inline ojson effective_config(const ExperimentConfig& c) {
  ojson j;
  j["mode"] = to_string(c.mode);
  j["params"] = {{"preset", c.preset}, {"eta", c.params.eta},   {"rho", c.params.rho}, {"s_c0", c.params.s_c0},
                 {"s_c1", c.params.s_c1}, {"s_d0", c.params.s_d0}, {"s_d1", c.params.s_d1}};
  j["init"] = {{"type", c.init.type}, {"p", c.init.p}, {"q", c.init.q}, {"path", c.init.path}};
  j["n"] = c.n;
  j["grid_m"] = c.grid_m;
  j["horizon"] = c.horizon;
  j["step"] = c.step;
  j["checkpoints"] = c.checkpoints;
  j["checkpoint_times"] = c.checkpoint_times;
  j["ensemble"] = c.ensemble;
  j["seed"] = c.seed;
  j["K"] = c.K;
  j["record_nu"] = c.record_nu;
  const auto& g = c.verify.generator;
  j["verify"] = {{"sizes", g.sizes},
                 {"random_graphs", g.random_graphs},
                 {"k_max", g.k_max},
                 {"exhaustive_limit", g.exhaustive_limit},
                 {"edge_probability", g.edge_probability},
                 {"colour_sum_graphs", c.verify.colour_sums.graphs},
                 {"colour_sum_n", c.verify.colour_sums.n},
                 {"colour_sum_k", c.verify.colour_sums.k_max},
                 {"projected_sizes", c.verify.projected.sizes},
                 {"projected_graphs", c.verify.projected.graphs}};
  j["mixing"] = {{"times", c.mixing.times}};
  const auto& p = c.polarisation;
  j["polarisation"] = {{"p0", p.p0},
                       {"q0", p.q0},
                       {"samples", p.samples},
                       {"dt", p.dt},
                       {"finite_runs", p.finite_runs},
                       {"finite_n", p.finite_n},
                       {"finite_horizon", p.finite_horizon}};
  j["compare"] = {{"gap_K", c.compare.gap_K}, {"metric_horizon", c.compare.metric_horizon}};
  return j;
}

inline std::string config_hash(const ExperimentConfig& c) { return content_hash(effective_config(c).dump()); }

/// Collects output files and writes them together with metadata.json.
class OutputSet {
 public:
  explicit OutputSet(const ExperimentConfig& c) : dir_(c.output_dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_))
      throw std::runtime_error("cannot create output directory '" + dir_.string() + "'");
  }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary);
    out << content;
    if (!out) throw std::runtime_error("cannot write '" + (dir_ / name).string() + "'");
    hashes_[name] = content_hash(content);
  }

  const std::map<std::string, std::string>& hashes() const { return hashes_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> hashes_;
};

inline ojson version_info() {
  return {{"coevonet", kVersion},
          {"compiler", __VERSION__},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", BOOST_LIB_VERSION},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"openssl", OPENSSL_VERSION_TEXT}};
}

/// Run metadata attached to every report and written as metadata.json.
inline ojson run_metadata(const ExperimentConfig& c, const ojson& seeds) {
  return {{"tool", "coevonet"},
          {"mode", to_string(c.mode)},
          {"config_hash", config_hash(c)},
          {"config", effective_config(c)},
          {"seeds", seeds},
          {"versions", version_info()}};
}

struct RunResult {
  ojson report;
  std::vector<std::string> warnings;
};

namespace detail {

inline ColouredGraph initial_graph(const ExperimentConfig& c, int n) {
  if (c.init.type == "distance-kernel") return init_distance_kernel(n, c.seed, kInitStream);
  if (c.init.type == "constant-graphon")
    return sample_graph(ColouredGraphon::constant(1, c.init.p, c.init.q), n, c.seed, kInitStream);
  const auto path = std::filesystem::path(c.init.path).is_absolute() ? std::filesystem::path(c.init.path)
                                                                      : c.base_dir / c.init.path;
  std::ifstream in(path);
  if (!in) throw config_error("init.path", "cannot read '" + path.string() + "'");
  try {
    return graph_from_json(ojson::parse(in));
  } catch (const ojson::exception& e) {
    throw config_error("init.path", std::string("invalid graph file: ") + e.what());
  } catch (const usage_error& e) {
    throw config_error("init.path", e.what());
  }
}

inline LimitState initial_limit_state(const ExperimentConfig& c) {
  if (c.init.type == "distance-kernel") {
    const auto w = init_distance_graphon(c.grid_m);
    return LimitState(w, w.mean_colour());
  }
  if (c.init.type == "constant-graphon") return LimitState(ColouredGraphon::constant(1, c.init.p, c.init.q), c.init.q);
  const auto w = embed(initial_graph(c, 0));
  return LimitState(w, w.mean_colour());
}

inline ojson seeds_json(const ExperimentConfig& c, int runs, bool init_stream) {
  ojson s{{"seed", c.seed}, {"run_streams", {0, std::max(0, runs - 1)}}};
  if (init_stream) s["init_stream"] = kInitStream;
  return s;
}

inline std::string run_name(const std::string& stem, int r) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", r);
  return stem + "_" + buf + ".csv";
}

struct Moments {
  std::vector<double> t;
  std::vector<std::array<double, 4>> mean, se;  // q, p, C, D
};

inline Moments moments(const std::vector<Trajectory>& runs) {
  Moments m;
  m.t = runs.front().times();
  const double n = static_cast<double>(runs.size());
  for (std::size_t k = 0; k < m.t.size(); ++k) {
    std::array<double, 4> mean{}, var{};
    auto field = [&](const Trajectory& tr, int f) {
      const auto& s = tr.points[k].stats;
      return f == 0 ? s.q : f == 1 ? s.p : f == 2 ? s.C : s.D;
    };
    for (const auto& tr : runs)
      for (int f = 0; f < 4; ++f) mean[f] += field(tr, f);
    for (int f = 0; f < 4; ++f) mean[f] /= n;
    for (const auto& tr : runs)
      for (int f = 0; f < 4; ++f) var[f] += std::pow(field(tr, f) - mean[f], 2);
    std::array<double, 4> se{};
    for (int f = 0; f < 4; ++f) se[f] = runs.size() > 1 ? std::sqrt(var[f] / (n - 1) / n) : NAN;
    m.mean.push_back(mean);
    m.se.push_back(se);
  }
  return m;
}

inline std::string cell(double x) { return std::isnan(x) ? "" : format_double(x); }

inline std::string ensemble_csv(const Moments& m) {
  std::string s = "t,q_mean,q_se,p_mean,p_se,C_mean,C_se,D_mean,D_se\n";
  for (std::size_t k = 0; k < m.t.size(); ++k) {
    s += format_double(m.t[k]);
    for (int f = 0; f < 4; ++f) s += "," + cell(m.mean[k][f]) + "," + cell(m.se[k][f]);
    s += "\n";
  }
  return s;
}

// Column layout of the colour-density and edge-density panels.
inline std::string profile_header(const std::string& prefix) {
  return prefix + "colour_0," + prefix + "colour_1," + prefix + "edge," + prefix + "concordant," + prefix +
         "discordant";
}

inline std::string profile_cells(const std::array<double, 4>& m) {
  return format_double(1.0 - m[0]) + "," + format_double(m[0]) + "," + format_double(m[1]) + "," +
         format_double(m[2]) + "," + format_double(m[3]);
}

inline std::string profile_csv(const Moments& m) {
  std::string s = "t," + profile_header("") + "\n";
  for (std::size_t k = 0; k < m.t.size(); ++k) s += format_double(m.t[k]) + "," + profile_cells(m.mean[k]) + "\n";
  return s;
}

inline Observers observers(const ExperimentConfig& c) {
  Observers obs;
  obs.nu = c.record_nu;
  if (c.K > 0) obs.motifs = MotifCatalog(c.K).motifs();
  return obs;
}

inline std::vector<Trajectory> finite_ensemble(const ExperimentConfig& c, const ColouredGraph& g0) {
  const auto grid = c.grid();
  const auto obs = observers(c);
  return run_ensemble(
      c.ensemble,
      [&](int r) {
        SimState st(g0, c.params, c.seed, static_cast<std::uint64_t>(r));
        return simulate(st, grid, obs);
      },
      c.threads);
}

inline std::vector<Trajectory> limit_ensemble(const ExperimentConfig& c) {
  const auto grid = c.grid();
  const auto s0 = initial_limit_state(c);
  return run_ensemble(
      c.ensemble,
      [&](int r) {
        LimitOptions opt;
        opt.dt = c.step;
        opt.stream = static_cast<std::uint64_t>(r);
        auto tr = integrate_limit(s0, c.params, grid, c.seed, opt);
        tr.n = 0;
        return tr;
      },
      c.threads);
}

inline void write_runs(OutputSet& out, const std::vector<Trajectory>& runs, const std::string& stem) {
  for (std::size_t r = 0; r < runs.size(); ++r) {
    out.write(run_name(stem, static_cast<int>(r)), trajectory_csv(runs[r]));
    if (!runs[r].motifs.empty()) out.write(run_name(stem + "_motifs", static_cast<int>(r)), motif_trajectory_csv(runs[r]));
  }
}

inline ojson absorption_json(const std::vector<Trajectory>& runs, double t) {
  const auto a = absorption_estimate(runs, t);
  return {{"t", t}, {"p_q0", a.p0}, {"p_q1", a.p1}, {"se_q0", a.se0}, {"se_q1", a.se1}, {"runs", a.runs}};
}

inline ojson dm_json(const DmResult& d) {
  return {{"value", d.value}, {"truncated", d.truncated}, {"tail_bound", d.tail_bound}, {"horizon", d.horizon}};
}

inline ScalarPath mean_path(const Moments& m, int field, double horizon) {
  std::vector<double> v;
  for (const auto& x : m.mean) v.push_back(x[field]);
  return ScalarPath(PathSpace::scalar, m.t, v, horizon);
}

inline RunResult run_simulate(const ExperimentConfig& c, OutputSet& out) {
  const auto g0 = initial_graph(c, c.n);
  const auto runs = finite_ensemble(c, g0);
  write_runs(out, runs, "trajectory");
  const auto m = moments(runs);
  out.write("ensemble.csv", ensemble_csv(m));
  out.write("profile.csv", profile_csv(m));
  RunResult r;
  r.report = {{"n", g0.n()},
              {"runs", runs.size()},
              {"initial", {{"q", summary_stats(g0).q}, {"p", summary_stats(g0).p}}},
              {"absorption", absorption_json(runs, c.grid().back())}};
  r.report["seeds"] = seeds_json(c, c.ensemble, c.init.type != "graph-file");
  return r;
}

inline RunResult run_limit(const ExperimentConfig& c, OutputSet& out) {
  const auto runs = limit_ensemble(c);
  write_runs(out, runs, "trajectory");
  const auto m = moments(runs);
  out.write("ensemble.csv", ensemble_csv(m));
  out.write("profile.csv", profile_csv(m));
  const auto s0 = initial_limit_state(c);
  RunResult r;
  ojson eq;
  for (double q : {0.0, 1.0}) {
    const auto e = equilibrium_p(q, c.params);
    eq[q == 0.0 ? "q0" : "q1"] = e.p ? ojson(*e.p) : ojson(nullptr);
  }
  r.report = {{"runs", runs.size()},
              {"grid_m", s0.kappa.m()},
              {"initial", {{"q", s0.q}, {"p", s0.p}}},
              {"equilibrium_p", eq},
              {"absorption", absorption_json(runs, c.grid().back())}};
  r.report["seeds"] = seeds_json(c, c.ensemble, false);
  return r;
}

inline RunResult run_compare(const ExperimentConfig& c, OutputSet& out) {
  RunResult res;
  const auto g0 = initial_graph(c, c.n);
  const double nu0 = connectivity_nu(g0);
  if (nu0 <= 0)
    res.warnings.push_back("nu(initial graph) = 0: the denseness condition behind the limit theorem is not met");
  const auto grid = c.grid();
  const MotifCatalog cat(c.compare.gap_K);
  const auto obs = observers(c);
  struct FiniteRun {
    Trajectory tr;
    std::vector<double> gap;
  };
  const auto fin = run_ensemble(
      c.ensemble,
      [&](int r) {
        SimState st(g0, c.params, c.seed, static_cast<std::uint64_t>(r));
        FiniteRun fr;
        fr.tr = simulate(st, {0.0}, obs);
        fr.gap.push_back(d_sub(st.graph(), projected(st.graph()), cat).value);
        for (std::size_t k = 1; k < grid.size(); ++k) {
          while (st.step(grid[k])) {
          }
          auto point = observe(st.graph(), grid[k], obs, false);
          point.absorbed = st.total_rate() <= 0;
          fr.tr.points.push_back(std::move(point));
          fr.gap.push_back(d_sub(st.graph(), projected(st.graph()), cat).value);
        }
        return fr;
      },
      c.threads);
  std::vector<Trajectory> finite_runs;
  for (const auto& f : fin) finite_runs.push_back(f.tr);
  const auto limit_runs = limit_ensemble(c);
  write_runs(out, finite_runs, "finite");
  write_runs(out, limit_runs, "limit");
  const auto mf = moments(finite_runs), ml = moments(limit_runs);
  out.write("finite_ensemble.csv", ensemble_csv(mf));
  out.write("limit_ensemble.csv", ensemble_csv(ml));
  std::string overlay = "t," + profile_header("finite_") + "," + profile_header("limit_") + "\n";
  for (std::size_t k = 0; k < grid.size(); ++k)
    overlay += format_double(grid[k]) + "," + profile_cells(mf.mean[k]) + "," + profile_cells(ml.mean[k]) + "\n";
  out.write("overlay.csv", overlay);
  std::vector<ComparisonRow> gap_rows;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    std::vector<double> g;
    for (const auto& f : fin) g.push_back(f.gap[k]);
    const double n = static_cast<double>(g.size());
    const double mean = std::accumulate(g.begin(), g.end(), 0.0) / n;
    double var = 0;
    for (double x : g) var += (x - mean) * (x - mean);
    gap_rows.push_back({format_double(grid[k]), mean, g.size() > 1 ? std::sqrt(var / (n - 1) / n) : NAN});
  }
  out.write("homogenisation_gap.csv", comparison_csv(gap_rows, "t"));
  const double H = c.compare.metric_horizon;
  ojson metrics;
  const char* names[4] = {"q", "p", "C", "D"};
  for (int f = 0; f < 4; ++f) {
    const auto x = mean_path(mf, f, grid.back()), y = mean_path(ml, f, grid.back());
    metrics[names[f]] = {{"d_m", dm_json(d_m(x, y, H))}, {"d_m_tilde", d_m_tilde(x, y)}};
  }
  res.report = {{"n", g0.n()},
                {"runs", c.ensemble},
                {"nu_initial", nu0},
                {"gap_K", c.compare.gap_K},
                {"gap_truncation_bound", cat.truncation_bound()},
                {"mean_path_metrics", metrics},
                {"absorption_finite", absorption_json(finite_runs, grid.back())},
                {"absorption_limit", absorption_json(limit_runs, grid.back())}};
  res.report["seeds"] = seeds_json(c, c.ensemble, c.init.type != "graph-file");
  return res;
}

inline RunResult run_verify(const ExperimentConfig& c, OutputSet& out) {
  const auto gen = verify_generator(c.verify.generator);
  const auto sums = verify_colour_sum_sweep(c.verify.colour_sums);
  const auto proj = verify_projected(c.verify.projected);
  std::string csv = "flavour,function,n,graphs,max_residual,constant,worst_motif\n";
  for (const auto& r : gen.rows)
    csv += to_string(r.flavour) + "," + r.function + "," + std::to_string(r.n) + "," + std::to_string(r.graphs) + "," +
           format_double(r.max_residual) + "," + format_double(r.constant) + "," + r.worst_motif + "\n";
  out.write("generator_check.csv", csv);
  std::string pcsv = "n,max_gap,max_remainder\n";
  for (const auto& r : proj.rows)
    pcsv += std::to_string(r.n) + "," + format_double(r.max_gap) + "," + format_double(r.max_remainder) + "\n";
  out.write("projected_check.csv", pcsv);
  auto gj = gen.to_json();
  gj.erase("seconds");
  RunResult r;
  r.report = {{"generator_oracle", gj},
              {"colour_sums", sums.to_json()},
              {"projected_generator", proj.to_json()},
              {"pass", gen.pass && sums.pass && proj.pass}};
  r.report["seeds"] = ojson{{"seed", c.seed}};
  if (!r.report["pass"].get<bool>()) r.warnings.push_back("verification reported failures; see report.json");
  return r;
}

inline RunResult run_mixing(const ExperimentConfig& c, OutputSet& out) {
  const auto g = initial_graph(c, c.n);
  if (g.n() > 512) throw config_error("n", "exact mixing check is limited to n <= 512");
  const auto rows = mixing_check(g, c.params.eta, c.mixing.times);
  std::string csv = "t,max_tv,worst_vertex,bound,holds\n";
  bool all = true;
  for (const auto& r : rows) {
    csv += format_double(r.t) + "," + format_double(r.max_tv) + "," + std::to_string(r.worst_vertex) + "," +
           format_double(r.bound) + "," + (r.holds ? "1" : "0") + "\n";
    all = all && r.holds;
  }
  out.write("mixing.csv", csv);
  RunResult res;
  res.report = {{"n", g.n()}, {"eta", c.params.eta}, {"nu", connectivity_nu(g)}, {"all_hold", all}};
  res.report["seeds"] = seeds_json(c, 0, c.init.type != "graph-file");
  return res;
}

inline RunResult run_polarisation(const ExperimentConfig& c, OutputSet& out) {
  const auto& pl = c.polarisation;
  std::string csv = "p0,time_changed,time_changed_se,direct,direct_se,z\n";
  std::string fcsv = "p0,non_absorbed,se,runs,limit,z\n";
  ojson rows = ojson::array();
  bool consistent = true;
  for (std::size_t i = 0; i < pl.p0.size(); ++i) {
    const double p0 = pl.p0[i];
    const auto a = polarisation_probability(p0, c.params, pl.q0, pl.samples, pl.dt, c.seed);
    const auto b = polarisation_direct(p0, c.params, pl.q0, pl.samples, pl.dt, c.seed + 1);
    const double se = std::hypot(a.std_error, b.std_error);
    const double z = se > 0 ? (a.value - b.value) / se : 0.0;
    consistent = consistent && std::abs(z) <= 2;
    csv += format_double(p0) + "," + format_double(a.value) + "," + format_double(a.std_error) + "," +
           format_double(b.value) + "," + format_double(b.std_error) + "," + format_double(z) + "\n";
    ojson row{{"p0", p0},
              {"time_changed", {{"value", a.value}, {"se", a.std_error}}},
              {"direct", {{"value", b.value}, {"se", b.std_error}}},
              {"z", z}};
    if (pl.finite_runs > 0) {
      const int n = pl.finite_n;
      const auto w = ColouredGraphon::constant(1, p0, pl.q0);
      const int white = static_cast<int>(std::lround(pl.q0 * n));
      const auto alive = run_ensemble(
          pl.finite_runs,
          [&](int r) {
            const auto stream = static_cast<std::uint64_t>(i) * 1000000ULL + static_cast<std::uint64_t>(r);
            const auto sampled = sample_graph(w, n, c.seed + 2, stream);
            std::vector<int> colours(n);
            for (int u = 0; u < n; ++u) colours[u] = u < n - white ? 0 : 1;
            SimState st(ColouredGraph(colours, sampled.edges()), c.params, c.seed + 3, stream);
            const double q = simulate(st, {0.0, pl.finite_horizon}).points.back().stats.q;
            return q != 0.0 && q != 1.0 ? std::size_t{1} : std::size_t{0};
          },
          c.threads);
      const auto fe = binomial_estimate(std::accumulate(alive.begin(), alive.end(), std::size_t{0}),
                                        static_cast<std::size_t>(pl.finite_runs));
      const double fse = std::hypot(fe.std_error, a.std_error);
      const double fz = fse > 0 ? (fe.value - a.value) / fse : 0.0;
      fcsv += format_double(p0) + "," + format_double(fe.value) + "," + format_double(fe.std_error) + "," +
              std::to_string(pl.finite_runs) + "," + format_double(a.value) + "," + format_double(fz) + "\n";
      row["finite"] = {{"n", n}, {"horizon", pl.finite_horizon}, {"non_absorbed", fe.value}, {"se", fe.std_error}, {"z", fz}};
    }
    rows.push_back(row);
  }
  out.write("polarisation.csv", csv);
  if (pl.finite_runs > 0) out.write("polarisation_finite.csv", fcsv);
  RunResult res;
  res.report = {{"q0", pl.q0}, {"samples", pl.samples}, {"dt", pl.dt}, {"rows", rows}, {"estimators_agree", consistent}};
  res.report["seeds"] = {{"time_changed", c.seed},
                         {"direct", c.seed + 1},
                         {"finite_graphs", c.seed + 2},
                         {"finite_dynamics", c.seed + 3}};
  return res;
}

}  // namespace detail

/// Runs one experiment; writes its files plus report.json and metadata.json into the output directory.
inline RunResult run_experiment(const ExperimentConfig& c) {
  OutputSet out(c);
  RunResult r;
  switch (c.mode) {
    case Mode::simulate: r = detail::run_simulate(c, out); break;
    case Mode::limit: r = detail::run_limit(c, out); break;
    case Mode::compare: r = detail::run_compare(c, out); break;
    case Mode::verify_generator: r = detail::run_verify(c, out); break;
    case Mode::mixing_check: r = detail::run_mixing(c, out); break;
    case Mode::polarisation: r = detail::run_polarisation(c, out); break;
  }
  auto meta = run_metadata(c, r.report["seeds"]);
  r.report.erase("seeds");
  r.report["warnings"] = r.warnings;
  ojson report{{"metadata", meta}};
  for (auto it = r.report.begin(); it != r.report.end(); ++it) report[it.key()] = it.value();
  out.write("report.json", report.dump(2) + "\n");
  meta["outputs"] = out.hashes();
  out.write("metadata.json", meta.dump(2) + "\n");
  r.report = report;
  return r;
}

}  // namespace coevonet
