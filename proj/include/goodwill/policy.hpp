#pragma once

// Reward/cost specification and the advertising policies understood by the
// simulator. Open-loop policies are resolved to a control per lattice step before
// simulation; feedback policies are evaluated at every step from the path so far.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <type_traits>
#include <variant>
#include <vector>

#include "goodwill/costate.hpp"
#include "goodwill/errors.hpp"
#include "goodwill/hamiltonian.hpp"
#include "goodwill/hilbert.hpp"
#include "goodwill/model.hpp"

namespace goodwill {

// ---------------------------------------------------------------------------
// Objective: phi0(y(T)) - int_0^T h0(z(t)) dt

struct LinearReward {
  double gamma = 1.0;
};
// coef ((1 + x)^p - 1) for x >= 0, continued by its tangent coef p x below 0.
struct ConcavePowerReward {
  double coef = 1.0;
  double p = 0.5;
};
// Samples on a uniform grid starting at x_start; linear inside, constant outside.
struct SampledFunction {
  double x_start = 0.0;
  double h = 1.0;
  std::vector<double> values;

  double operator()(double x) const {
    if (values.size() < 2 || !(h > 0.0)) throw config_error("sampled function needs >= 2 values and h > 0");
    const double x_end = x_start + h * static_cast<double>(values.size() - 1);
    return interp_uniform(values, x_start, h, std::clamp(x, x_start, x_end));
  }
};
struct SampledReward {
  SampledFunction f;
};
struct QuadraticCost {
  double beta = 1.0;
};
struct LinearCost {
  double beta = 1.0;
};
struct SampledCost {
  SampledFunction f;
};

using Reward = std::variant<LinearReward, ConcavePowerReward, SampledReward>;
using Cost = std::variant<QuadraticCost, LinearCost, SampledCost>;

struct ObjectiveSpec {
  Reward phi0 = LinearReward{};
  Cost h0 = QuadraticCost{};
  // |phi0(x)| <= K (1 + |x|)^m
  double growth_K = 1.0;
  double growth_m = 1.0;

  double phi(double x) const {
    return std::visit(
        [x](const auto& f) -> double {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, LinearReward>) {
            return f.gamma * x;
          } else if constexpr (std::is_same_v<T, ConcavePowerReward>) {
            return x >= 0.0 ? f.coef * (std::pow(1.0 + x, f.p) - 1.0) : f.coef * f.p * x;
          } else {
            return f.f(x);
          }
        },
        phi0);
  }

  double h(double z) const {
    return std::visit(
        [z](const auto& f) -> double {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, QuadraticCost>) {
            return f.beta * z * z;
          } else if constexpr (std::is_same_v<T, LinearCost>) {
            return f.beta * z;
          } else {
            return f.f(z);
          }
        },
        h0);
  }

  bool within_growth(double x) const { return std::abs(phi(x)) <= growth_K * std::pow(1.0 + std::abs(x), growth_m); }
};

inline ObjectiveSpec lq_objective(double gamma, double beta) {
  return ObjectiveSpec{LinearReward{gamma}, QuadraticCost{beta}, std::abs(gamma), 1.0};
}

// ---------------------------------------------------------------------------
// Policies

// What a feedback map sees at step k: the current time and goodwill, and the
// goodwill path y_0..y_k.
struct FeedbackState {
  double t = 0.0;
  std::size_t step = 0;
  double y = 0.0;
  std::span<const double> path;
};

using GradientFn = std::function<double(const FeedbackState&)>;

// Control samples z(k dt), k = 0..steps; linear in between.
struct OpenLoopPolicy {
  double dt = 0.0;
  std::vector<double> z;

  double at(double t) const {
    if (z.empty() || !(dt > 0.0)) throw config_error("open-loop policy: empty control trajectory");
    const double t_end = dt * static_cast<double>(z.size() - 1);
    if (z.size() == 1) return z.front();
    if (t > t_end + 1e-9 * dt) throw domain_error("open-loop policy: time past the sampled horizon");
    return interp_uniform(z, 0.0, dt, std::min(t, t_end));
  }
};

// gamma b0 e^{(T - t) a0} / (2 beta): optimal when neither kernel is present.
struct MemorylessPolicy {
  double gamma = 1.0;
  double beta = 1.0;
};

struct LQOptimalPolicy {
  std::shared_ptr<const CostateSolution> costate;
};

struct FeedbackQuadraticPolicy {
  HamiltonianSpec spec;
  GradientFn gradient;
};

struct FeedbackBangBangPolicy {
  HamiltonianSpec spec;
  GradientFn gradient;
  double tie_value = 0.0;
};

using Policy =
    std::variant<OpenLoopPolicy, MemorylessPolicy, LQOptimalPolicy, FeedbackQuadraticPolicy, FeedbackBangBangPolicy>;

inline bool is_feedback(const Policy& p) {
  return std::holds_alternative<FeedbackQuadraticPolicy>(p) || std::holds_alternative<FeedbackBangBangPolicy>(p);
}

// The memoryless costate: the same sweep with both kernels removed, so that on a
// kernel-free model the memoryless and optimal controls coincide bit for bit.
inline std::vector<double> memoryless_controls(const ModelParams& params, double gamma, double beta, double dt) {
  ModelParams bare = params;
  bare.a1 = ZeroKernel{};
  bare.b1 = ZeroKernel{};
  const CostateSolution cs = solve_costate(bare, gamma, beta, dt);
  std::vector<double> z(cs.steps + 1);
  for (std::size_t k = 0; k <= cs.steps; ++k) z[k] = cs.z_star(k);
  return z;
}

// Unclipped controls on the lattice for an open-loop policy; nullopt for feedback.
inline std::optional<std::vector<double>> open_loop_controls(const Policy& policy, const ModelParams& params,
                                                            const TimeLattice& lat) {
  const std::size_t N = lat.steps;
  if (const auto* p = std::get_if<OpenLoopPolicy>(&policy)) {
    std::vector<double> z(N + 1);
    const bool same = p->z.size() == N + 1 && std::abs(p->dt - lat.dt) <= 1e-12 * lat.dt;
    for (std::size_t k = 0; k <= N; ++k) z[k] = same ? p->z[k] : p->at(lat.time(k));
    return z;
  }
  if (const auto* p = std::get_if<MemorylessPolicy>(&policy)) {
    return memoryless_controls(params, p->gamma, p->beta, lat.dt);
  }
  if (const auto* p = std::get_if<LQOptimalPolicy>(&policy)) {
    if (!p->costate) throw config_error("LQ policy without a costate");
    const CostateSolution& cs = *p->costate;
    std::vector<double> z(N + 1);
    const bool same = cs.steps == N && std::abs(cs.dt - lat.dt) <= 1e-12 * lat.dt;
    for (std::size_t k = 0; k <= N; ++k) z[k] = same ? cs.z_star(k) : cs.z_star_at(lat.time(k));
    return z;
  }
  return std::nullopt;
}

// Feedback control for one step (unclipped).
inline double feedback_control(const Policy& policy, const FeedbackState& state) {
  if (const auto* p = std::get_if<FeedbackQuadraticPolicy>(&policy)) {
    return feedback_quadratic(p->gradient(state), p->spec);
  }
  if (const auto* p = std::get_if<FeedbackBangBangPolicy>(&policy)) {
    return feedback_bangbang(p->gradient(state), p->spec, p->tie_value);
  }
  throw config_error("feedback_control called on an open-loop policy");
}

}  // namespace goodwill
