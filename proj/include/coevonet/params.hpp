#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>

namespace coevonet {

/// Raised for invalid arguments (bad indices, oversize motifs, parameter violations).
class usage_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The six rate constants of the co-evolution dynamics.
struct ModelParams {
  double eta = 1.0;
  double rho = 1.0;
  double s_c0 = 0.0;
  double s_c1 = 0.0;
  double s_d0 = 0.0;
  double s_d1 = 0.0;

  double s_bar() const { return std::max({s_c0, s_c1, s_d0, s_d1}); }

  /// Switching rate for a pair, selected by colour agreement and edge state.
  double s(bool concordant, bool present) const {
    if (concordant) return present ? s_c1 : s_c0;
    return present ? s_d1 : s_d0;
  }

  void validate() const {
    if (!(eta > 0.0)) throw usage_error("eta must be positive");
    if (!(rho > 0.0)) throw usage_error("rho must be positive");
    if (s_c0 < 0.0 || s_c1 < 0.0 || s_d0 < 0.0 || s_d1 < 0.0)
      throw usage_error("switching rates must be nonnegative");
  }

  static ModelParams mixed_rates() { return {1.0, 1.1, 1.5, 0.5, 0.7, 2.0}; }
  static ModelParams deletion_only() { return {1.0, 2.0, 0.0, 1.0, 0.0, 1.0}; }
  static ModelParams equal_rates(double eta, double rho, double s0, double s1) {
    return {eta, rho, s0, s1, s0, s1};
  }

  bool operator==(const ModelParams&) const = default;
};

}  // namespace coevonet
