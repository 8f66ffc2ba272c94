#pragma once

// Hamiltonians and feedback maps for delay in the state only. With controls in
// U = [0, R] and the rescaled control z0 = b0 z / sigma in [0, R~]:
//   H0(p0) = sup_{z0 in [0, R~]} (sigma z0 p0 - h0(sigma z0 / b0)),   H(q0) = H0(q0 / sigma).

#include <algorithm>
#include <cmath>
#include <string>

#include "goodwill/errors.hpp"

namespace goodwill {

enum class CostForm { Quadratic, Linear };

struct HamiltonianSpec {
  CostForm cost = CostForm::Quadratic;
  double beta = 1.0;
  double b0 = 1.0;
  double sigma = 1.0;
  double R = 1.0;

  void validate() const {
    if (!(beta > 0.0) || !(b0 > 0.0) || !(sigma > 0.0) || !(R > 0.0)) {
      throw config_error("hamiltonian: beta, b0, sigma and R must all be > 0");
    }
    if (!std::isfinite(beta) || !std::isfinite(b0) || !std::isfinite(sigma) || !std::isfinite(R)) {
      throw config_error("hamiltonian: non-finite parameter");
    }
  }

  // R~ = b0 R / sigma
  double R_tilde() const { return b0 * R / sigma; }
  // h0(sigma z0 / b0) = beta~ z0^2 (quadratic) or beta~ z0 (linear)
  double beta_tilde() const {
    return cost == CostForm::Quadratic ? sigma * sigma * beta / (b0 * b0) : sigma * beta / b0;
  }
};

inline double hamiltonian_H0(double p0, const HamiltonianSpec& spec) {
  spec.validate();
  const double s = spec.sigma, bt = spec.beta_tilde(), Rt = spec.R_tilde();
  if (spec.cost == CostForm::Quadratic) {
    if (p0 <= 0.0) return 0.0;
    if (p0 <= 2.0 * bt * Rt / s) return (s * p0) * (s * p0) / (4.0 * bt);
    return s * p0 * Rt - bt * Rt * Rt;
  }
  return s * p0 > bt ? (s * p0 - bt) * Rt : 0.0;
}

inline double hamiltonian_H(double q0, const HamiltonianSpec& spec) { return hamiltonian_H0(q0 / spec.sigma, spec); }

// argmax over z in [0, R] of b0 z d0v - beta z^2.
inline double feedback_quadratic(double d0v, const HamiltonianSpec& spec) {
  spec.validate();
  if (spec.cost != CostForm::Quadratic) throw config_error("feedback_quadratic needs a quadratic cost");
  if (d0v < 0.0) return 0.0;
  return std::min(spec.R, spec.b0 * d0v / (2.0 * spec.beta));
}

// b0 z d0v - beta z is maximized at z = R once b0 d0v > beta.
inline double bangbang_threshold(const HamiltonianSpec& spec) { return spec.beta / spec.b0; }

inline double feedback_bangbang(double d0v, const HamiltonianSpec& spec, double tie_value = 0.0) {
  spec.validate();
  if (spec.cost != CostForm::Linear) throw config_error("feedback_bangbang needs a linear cost");
  if (!(tie_value >= 0.0 && tie_value <= spec.R)) {
    throw config_error("feedback_bangbang: tie value " + std::to_string(tie_value) + " outside [0, R]");
  }
  const double th = bangbang_threshold(spec);
  if (d0v < th) return 0.0;
  if (d0v > th) return spec.R;
  return tie_value;
}

// The integrand maximized by both feedback maps.
inline double hamiltonian_integrand(double z, double d0v, const HamiltonianSpec& spec) {
  const double cost = spec.cost == CostForm::Quadratic ? spec.beta * z * z : spec.beta * z;
  return spec.b0 * z * d0v - cost;
}

}  // namespace goodwill
