#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "coevonet/params.hpp"

namespace coevonet {

/// Piecewise-constant coloured graphon on an m x m grid of equal cells.
class ColouredGraphon {
 public:
  ColouredGraphon() = default;
  explicit ColouredGraphon(int m)
      : m_(m), kernel_(static_cast<std::size_t>(m) * m, 0.0), colour_(static_cast<std::size_t>(m), 0.0) {
    if (m < 1) throw usage_error("graphon grid must have at least one cell");
  }

  static ColouredGraphon constant(int m, double p, double q) {
    ColouredGraphon w(m);
    std::fill(w.kernel_.begin(), w.kernel_.end(), p);
    std::fill(w.colour_.begin(), w.colour_.end(), q);
    return w;
  }

  int m() const { return m_; }
  double kernel(int i, int j) const { return kernel_[static_cast<std::size_t>(i) * m_ + j]; }
  void set_kernel(int i, int j, double v) {
    kernel_[static_cast<std::size_t>(i) * m_ + j] = v;
    kernel_[static_cast<std::size_t>(j) * m_ + i] = v;
  }
  double colour(int i) const { return colour_[i]; }
  double& colour(int i) { return colour_[i]; }

  const std::vector<double>& kernel_data() const { return kernel_; }
  std::vector<double>& kernel_data() { return kernel_; }
  const std::vector<double>& colour_data() const { return colour_; }

  /// Summed in sorted order so that relabelled grids give bitwise-equal means.
  double mean_kernel() const {
    std::vector<double> v = kernel_;
    std::sort(v.begin(), v.end());
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  }
  double mean_colour() const {
    const double base = colour_[0];
    double d = 0;
    for (double c : colour_) d += c - base;
    return base + d / static_cast<double>(m_);
  }

  void validate() const {
    for (int i = 0; i < m_; ++i) {
      if (!(colour_[i] >= 0.0 && colour_[i] <= 1.0)) throw usage_error("colour entries must lie in [0,1]");
      for (int j = 0; j < m_; ++j) {
        const double v = kernel(i, j);
        if (!(v >= 0.0 && v <= 1.0)) throw usage_error("kernel entries must lie in [0,1]");
        if (v != kernel(j, i)) throw usage_error("kernel must be symmetric");
      }
    }
  }

  bool operator==(const ColouredGraphon&) const = default;

 private:
  int m_ = 0;
  std::vector<double> kernel_;
  std::vector<double> colour_;
};

}  // namespace coevonet
