#pragma once

// Linear reward / quadratic cost: value function, optimal and memoryless policies,
// mean and variance of the optimal goodwill, and the sensitivity of V to the
// delay horizon r.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <ostream>
#include <variant>
#include <vector>

#include "goodwill/costate.hpp"
#include "goodwill/errors.hpp"
#include "goodwill/hilbert.hpp"
#include "goodwill/lifting.hpp"
#include "goodwill/model.hpp"
#include "goodwill/policy.hpp"

namespace goodwill {

namespace detail {

inline std::size_t lattice_index(double t, double dt, std::size_t steps, const char* who) {
  const double q = t / dt;
  const double k = std::round(q);
  if (!(k >= 0.0 && k <= static_cast<double>(steps)) || std::abs(q - k) > 1e-7 * std::max(1.0, k)) {
    throw domain_error(std::string(who) + ": time " + std::to_string(t) + " is not a lattice point of [0, T]");
  }
  return static_cast<std::size_t>(k);
}

inline bool analytic_kernel(const Kernel& k) { return !std::holds_alternative<SampledKernel>(k); }

}  // namespace detail

// v(t, xbar) = <w(t), xbar> + c(t) for a lifted state xbar.
inline double value_lq(double t, const ProfileX& xbar, const CostateSolution& cs, const SegmentGrid& grid) {
  const double T = cs.T();
  if (!(t >= -1e-12 && t <= T + 1e-12)) throw domain_error("value_lq: t outside [0, T]");
  if (xbar.x1.size() != grid.size()) throw dimension_error("value_lq: state does not match grid");
  if (std::abs(grid.r() - cs.params.r) > 1e-12 * cs.params.r) throw dimension_error("value_lq: grid r differs from model r");
  t = std::clamp(t, 0.0, T);
  double tail = 0.0;
  if (t + grid.r() <= T) {
    for (std::size_t i = 0; i < grid.size(); ++i) tail += grid.weight(i) * cs.w0_at(t - grid.node(i)) * xbar.x1[i];
  } else {
    // w1(t, .) vanishes below xi = t - T.
    const double lo = t - T;
    const std::size_t n = detail::panels(-lo, grid.spacing());
    tail = detail::trapezoid([&](double xi) { return cs.w0_at(std::min(T, t - xi)) * profile_at(xbar.x1, grid, xi); },
                             lo, 0.0, n);
  }
  return cs.w0_at(t) * xbar.x0 + tail + cs.c_at(t);
}

// The same value with the state component given as a function, quadrature on the
// time lattice lags; t must be a lattice point. Used for finite differences in r.
inline double value_lq_lattice(double t, double x0, const std::function<double(double)>& x1,
                               const CostateSolution& cs) {
  const std::size_t k = detail::lattice_index(t, cs.dt, cs.steps, "value_lq_lattice");
  const std::size_t J = std::min(cs.delay_steps, cs.steps - k);
  double tail = 0.0;
  if (J > 0) {
    for (std::size_t j = 0; j <= J; ++j) {
      const double edge = (j == 0 || j == J) ? 0.5 : 1.0;
      tail += edge * cs.w0[k + j] * x1(-cs.dt * static_cast<double>(j));
    }
    tail *= cs.dt;
  }
  return cs.w0[k] * x0 + tail + cs.c[k];
}

inline OpenLoopPolicy optimal_policy_lq(const CostateSolution& cs, const ModelParams& params) {
  if (std::abs(params.T - cs.T()) > 1e-12 * params.T) throw dimension_error("optimal_policy_lq: horizon mismatch");
  OpenLoopPolicy p{cs.dt, std::vector<double>(cs.steps + 1)};
  for (std::size_t k = 0; k <= cs.steps; ++k) p.z[k] = cs.z_star(k);
  return p;
}

inline OpenLoopPolicy memoryless_policy(const ModelParams& params, double gamma, double beta, double dt) {
  return OpenLoopPolicy{dt, memoryless_controls(params, gamma, beta, dt)};
}

// gamma b0 e^{(T - t) a0} / (2 beta), clipped at 0 for gamma < 0.
inline double memoryless_closed_form(const ModelParams& params, double gamma, double beta, double t) {
  return std::max(0.0, gamma * params.b0 * std::exp((params.T - t) * params.a0)) / (2.0 * beta);
}

// ---------------------------------------------------------------------------
// Mean and variance of the goodwill under an open-loop policy

// E y(t_k), k = 0..n, from the fundamental solution phi of the uncontrolled delay
// equation:
//   E Y0(t) = xbar0 phi(t) + int m(xi) phi(t + xi) dxi + int_0^t z(s) g(t - s) ds,
//   g(tau)  = b0 phi(tau) + int b1(xi) phi(tau + xi) dxi.
inline std::vector<double> trajectory_mean_series(const ProfileX& lifted, const SegmentGrid& grid,
                                                  const Policy& policy, const ModelParams& params, double dt) {
  params.validate();
  if (lifted.x1.size() != grid.size()) throw dimension_error("trajectory_mean: state does not match grid");
  const TimeLattice lat = make_lattice(params.T, params.r, dt);
  const std::size_t N = lat.steps, m = lat.delay_steps;
  const DelayTrajectory phi_traj = fundamental_solution(params, params.T, dt);
  const auto phi = phi_traj.values();

  auto controls = open_loop_controls(policy, params, lat);
  if (!controls) throw config_error("trajectory_mean needs an open-loop policy");
  std::vector<double>& z = *controls;
  for (double& v : z) v = std::clamp(v, params.u_min, params.u_max);

  std::vector<double> m_lags(m + 1);
  for (std::size_t j = 0; j <= m; ++j) m_lags[j] = profile_at(lifted.x1, grid, -dt * static_cast<double>(j));
  const bool with_b = !is_zero(params.b1);
  const std::vector<double> b1_lags = with_b ? lag_samples(params.b1, params.r, dt, m) : std::vector<double>{};
  std::vector<double> g(N + 1);
  for (std::size_t i = 0; i <= N; ++i) {
    g[i] = params.b0 * phi[i] + (with_b ? detail::truncated_lag_sum(b1_lags, phi, i, std::min(m, i), dt) : 0.0);
  }

  std::vector<double> mean(N + 1);
  for (std::size_t n = 0; n <= N; ++n) {
    double v = lifted.x0 * phi[n] + detail::truncated_lag_sum(m_lags, phi, n, std::min(m, n), dt);
    if (n > 0) {
      double acc = 0.5 * (z[0] * g[n] + z[n] * g[0]);
      for (std::size_t k = 1; k < n; ++k) acc += z[k] * g[n - k];
      v += dt * acc;
    }
    mean[n] = v;
  }
  return mean;
}

inline double trajectory_mean(double t, const ProfileX& lifted, const SegmentGrid& grid, const Policy& policy,
                              const ModelParams& params, double dt) {
  const TimeLattice lat = make_lattice(params.T, params.r, dt);
  const std::size_t n = detail::lattice_index(t, dt, lat.steps, "trajectory_mean");
  if (n == 0) return lifted.x0;
  return trajectory_mean_series(lifted, grid, policy, params, dt)[n];
}

// Var y(t) = sigma^2 int_0^t phi(tau)^2 dtau
inline double trajectory_variance(double t, const ModelParams& params, double dt) {
  params.validate();
  if (!(t >= -1e-12 && t <= params.T + 1e-12)) throw domain_error("trajectory_variance: t outside [0, T]");
  const TimeLattice lat = make_lattice(params.T, params.r, dt);
  const std::size_t n = detail::lattice_index(t, dt, lat.steps, "trajectory_variance");
  if (n == 0) return 0.0;
  const DelayTrajectory phi = fundamental_solution(params, dt * static_cast<double>(n), dt);
  double acc = 0.5 * (phi[0] * phi[0] + phi[n] * phi[n]);
  for (std::size_t k = 1; k < n; ++k) acc += phi[k] * phi[k];
  return params.sigma * params.sigma * dt * acc;
}

// ---------------------------------------------------------------------------
// Sensitivity of V(t, x; r) to the delay horizon

// dV/dr for V(t, x) = <w(t), x> + c(t), with x1 a function that can be read on
// [-r, 0]. In time-to-go s = T - t with u(s) = w0(T - s):
//   dV/dr = x0 v(s_t) + int v(s_t + xi) x1(xi) dxi + u(s_t - r) 1{s_t >= r} x1(-r)
//         + (1 / 2 beta) int_0^{s_t} <B, w>^+ [b0 v + b1(-r) u(s - r) 1{s >= r} + int b1 v(s + xi) dxi] ds
// where v = du/dr solves the costate equation forced by a1(-r) u(s - r) 1{s >= r}.
// Kernels must keep their shape as r moves, so sampled kernels are rejected.
inline double sensitivity_dV_dr(double t, double x0, const std::function<double(double)>& x1,
                                const ModelParams& params, double gamma, double beta, double dt) {
  params.validate();
  if (!(beta > 0.0)) throw config_error("sensitivity: beta must be > 0");
  if (!(t >= -1e-12 && t <= params.T + 1e-12)) throw domain_error("sensitivity: t outside [0, T]");
  if (!detail::analytic_kernel(params.a1) || !detail::analytic_kernel(params.b1)) {
    throw config_error("sensitivity: kernels must be analytic (zero, constant or exponential)");
  }
  const TimeLattice lat = make_lattice(params.T, params.r, dt);
  const std::size_t N = lat.steps, m = lat.delay_steps;
  const std::size_t k = detail::lattice_index(t, dt, N, "sensitivity");
  const std::size_t it = N - k;  // time-to-go index
  const double r = params.r;

  const bool with_a = !is_zero(params.a1), with_b = !is_zero(params.b1);
  const std::vector<double> a1_lags = with_a ? lag_samples(params.a1, r, dt, m) : std::vector<double>{};
  const std::vector<double> b1_lags = with_b ? lag_samples(params.b1, r, dt, m) : std::vector<double>{};
  auto none = [](std::size_t) { return 0.0; };
  const std::vector<double> u = detail::heun_delay_sweep(params.a0, a1_lags, m, N, dt, gamma, none, none);

  // u(s - r) 1{s >= r} jumps from 0 to gamma at s = r: the right limit applies at the
  // left end of a step and the left limit at its right end.
  auto delayed_right = [&](std::size_t i) { return i >= m ? u[i - m] : 0.0; };
  auto delayed_left = [&](std::size_t i) { return i > m ? u[i - m] : 0.0; };
  std::vector<double> v(N + 1, 0.0);
  if (with_a) {
    const double a1r = kernel_eval(params.a1, -r, r);
    v = detail::heun_delay_sweep(
        params.a0, a1_lags, m, N, dt, 0.0, [&](std::size_t i) { return a1r * delayed_right(i); },
        [&](std::size_t i) { return a1r * delayed_left(i); });
  }

  // State terms.
  double state = x0 * v[it];
  const std::size_t J = std::min(m, it);
  if (J > 0) {
    double acc = 0.0;
    for (std::size_t j = 0; j <= J; ++j) {
      const double edge = (j == 0 || j == J) ? 0.5 : 1.0;
      acc += edge * v[it - j] * x1(-dt * static_cast<double>(j));
    }
    state += dt * acc;
  }
  if (it > m) {
    state += u[it - m] * x1(-r);
  } else if (it == m) {
    state += 0.5 * u[0] * x1(-r);  // one-sided derivatives differ here; take their mean
  }

  // Running-cost term.
  double cost = 0.0;
  if (it > 0 && (with_a || with_b)) {
    const double b1r = with_b ? kernel_eval(params.b1, -r, r) : 0.0;
    auto integrand = [&](std::size_t i) {
      const double bw = params.b0 * u[i] + (with_b ? detail::truncated_lag_sum(b1_lags, u, i, std::min(m, i), dt) : 0.0);
      double jump = 0.0;
      if (i > m) {
        jump = u[i - m];
      } else if (i == m && i < it) {
        jump = 0.5 * u[0];  // interior node at the jump: mean of the two limits
      }
      const double dbw = params.b0 * v[i] + b1r * jump +
                         (with_b ? detail::truncated_lag_sum(b1_lags, v, i, std::min(m, i), dt) : 0.0);
      return std::max(0.0, bw) * dbw;
    };
    double acc = 0.5 * (integrand(0) + integrand(it));
    for (std::size_t i = 1; i < it; ++i) acc += integrand(i);
    cost = dt * acc / (2.0 * beta);
  }
  return state + cost;
}

inline double sensitivity_dV_dr(double t, const HistoryPair& x, const ModelParams& params, double gamma, double beta,
                                double dt) {
  return sensitivity_dV_dr(
      t, x.x0, [&](double xi) { return x.goodwill_at(xi); }, params, gamma, beta, dt);
}

// Closed form for a1 = 0 and b1 zero or constant b^:
//   for t <= T - r:  gamma e^{a0 (T - t - r)} x1(-r)
//                    + b^ gamma^2 e^{-a0 r} K / (4 beta a0) (e^{2 a0 (T - t)} - e^{2 a0 r}),
//   K = b0 + b^ (1 - e^{-a0 r}) / a0  (b0 + b^ r and b^ gamma^2 K (T - r - t) / (2 beta) when a0 = 0);
//   for t > T - r:   0.
// Assumes <B, w> >= 0 throughout, i.e. gamma >= 0.
inline double sensitivity_closed_form(double t, double x1_at_minus_r, const ModelParams& params, double gamma,
                                      double beta) {
  if (!is_zero(params.a1)) throw config_error("sensitivity closed form needs a1 = 0");
  double bhat = 0.0;
  if (const auto* c = std::get_if<ConstantKernel>(&params.b1)) {
    bhat = c->c;
  } else if (!is_zero(params.b1)) {
    throw config_error("sensitivity closed form needs b1 zero or constant");
  }
  if (!(t >= -1e-12 && t <= params.T + 1e-12)) throw domain_error("sensitivity: t outside [0, T]");
  const double a0 = params.a0, r = params.r, T = params.T;
  const double s = T - t;
  if (s < r) return 0.0;
  const double state = gamma * std::exp(a0 * (s - r)) * x1_at_minus_r;
  if (bhat == 0.0) return state;
  if (a0 == 0.0) {
    const double K = params.b0 + bhat * r;
    return state + bhat * gamma * gamma * K * (s - r) / (2.0 * beta);
  }
  const double K = params.b0 + bhat * (1.0 - std::exp(-a0 * r)) / a0;
  return state + bhat * gamma * gamma * std::exp(-a0 * r) * K / (4.0 * beta * a0) *
                     (std::exp(2.0 * a0 * s) - std::exp(2.0 * a0 * r));
}

// ---------------------------------------------------------------------------

inline void write_costate_csv(std::ostream& os, const CostateSolution& cs) {
  const std::vector<double> z0 = memoryless_controls(cs.params, cs.gamma, cs.beta, cs.dt);
  os << "t,w0,c,z_star,z_memoryless\n";
  char line[160];
  for (std::size_t k = 0; k <= cs.steps; ++k) {
    std::snprintf(line, sizeof line, "%.12g,%.12g,%.12g,%.12g,%.12g\n", cs.time(k), cs.w0[k], cs.c[k], cs.z_star(k),
                  z0[k]);
    os << line;
  }
}

}  // namespace goodwill
