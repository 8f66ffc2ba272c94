#pragma once

// Delay in the state only: dy = [a0 y(t) + a1 y(t - r) + b0 z(t)] dt + sigma dW,
// closed-loop simulation under the feedback maps, and the parameter condition for
// an invariant measure of the uncontrolled equation.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "goodwill/errors.hpp"
#include "goodwill/hamiltonian.hpp"
#include "goodwill/model.hpp"
#include "goodwill/policy.hpp"
#include "goodwill/sdde.hpp"

namespace goodwill {

struct PointDelayModel {
  double a0 = 0.0;
  double a1 = 0.0;  // weight of y(t - r)
  double b0 = 1.0;
  double sigma = 0.0;
  double r = 1.0;
  double T = 1.0;
  double u_min = 0.0;
  double u_max = 1.0;

  void validate() const {
    for (double v : {a0, a1, b0, sigma, r, T, u_min, u_max}) {
      if (!std::isfinite(v)) throw config_error("point-delay model: non-finite coefficient");
    }
    if (b0 < 0.0) throw config_error("point-delay model: b0 must be >= 0");
    if (sigma < 0.0) throw config_error("point-delay model: sigma must be >= 0");
    if (!(r > 0.0) || T < r) throw config_error("point-delay model: need r > 0 and T >= r");
    if (u_min < 0.0 || u_min > u_max) throw config_error("point-delay model: need 0 <= u_min <= u_max");
  }

  EngineModel engine() const { return {a0, ZeroKernel{}, a1, b0, ZeroKernel{}, sigma, r, T, u_min, u_max}; }
};

inline PathEnsemble simulate_feedback(const PointDelayModel& model, const HistoryPair& history, const Policy& policy,
                                      const SimulationConfig& cfg) {
  model.validate();
  return simulate_paths(model.engine(), history, policy, cfg);
}

inline PathEnsemble simulate_feedback(const PointDelayModel& model, const HistoryPair& history, GradientFn gradient,
                                      const HamiltonianSpec& spec, const SimulationConfig& cfg,
                                      double tie_value = 0.0) {
  spec.validate();
  const Policy policy = spec.cost == CostForm::Quadratic
                            ? Policy(FeedbackQuadraticPolicy{spec, std::move(gradient)})
                            : Policy(FeedbackBangBangPolicy{spec, std::move(gradient), tie_value});
  return simulate_feedback(model, history, policy, cfg);
}

// ---------------------------------------------------------------------------
// a0 < -a1 < sqrt(g^2 + a0^2), with g in ]0, pi[ solving g cot g = a0 ("cot", the
// usual stability boundary of u' = a0 u + a1 u(t - 1)) or g coth g = a0 ("coth").

enum class RootVariant { Cot, Coth };

inline RootVariant parse_root_variant(const std::string& s) {
  if (s == "cot") return RootVariant::Cot;
  if (s == "coth") return RootVariant::Coth;
  throw config_error("unknown variant '" + s + "' (expected cot or coth)");
}

inline const char* to_string(RootVariant v) { return v == RootVariant::Cot ? "cot" : "coth"; }

struct ConditionResult {
  RootVariant variant = RootVariant::Cot;
  bool holds = false;
  std::optional<double> gamma_root;
  std::optional<double> upper_bound;
  std::string diagnostic;
};

inline ConditionResult invariant_measure_condition(double a0, double a1, RootVariant variant = RootVariant::Cot) {
  ConditionResult out;
  out.variant = variant;
  // f is monotone on ]0, pi[: g cot g decreases from 1 to -inf, g coth g increases
  // from 1 to pi coth pi.
  auto f = [variant](double g) { return variant == RootVariant::Cot ? g / std::tan(g) : g / std::tanh(g); };
  const double pi = std::numbers::pi;
  double lo = 1e-12, hi = pi - 1e-12;
  double flo = f(lo) - a0, fhi = f(hi) - a0;
  if (!std::isfinite(a0) || !std::isfinite(a1) || flo * fhi > 0.0) {
    out.diagnostic = std::string("no root of g ") + to_string(variant) + " g = " + std::to_string(a0) + " in ]0, pi[";
    return out;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid) - a0;
    if (fm == 0.0) {
      lo = hi = mid;
      break;
    }
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  const double g = 0.5 * (lo + hi);
  out.gamma_root = g;
  out.upper_bound = std::sqrt(g * g + a0 * a0);
  out.holds = a0 < -a1 && -a1 < *out.upper_bound;
  return out;
}

}  // namespace goodwill
