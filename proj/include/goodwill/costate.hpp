#pragma once

// Costate of the linear-quadratic problem (reward gamma * y(T), cost beta * z^2):
//   w0'(t) + a0 w0(t) + int a1(xi) w1(t, xi) dxi = 0,   w0(T) = gamma,
//   w1(t, xi) = w0(t - xi) 1{t - xi <= T},
//   c(t) = int_t^T (<B, w(s)>^+)^2 / (4 beta) ds,
// so that v(t, x) = <w(t), x> + c(t) and z*(t) = <B, w(t)>^+ / (2 beta).
//
// In time-to-go s = T - t, u(s) = w0(T - s) solves the delay ODE
// u' = a0 u + int a1(xi) u(s + xi) 1{s + xi >= 0} dxi from u(0) = gamma, which is
// swept forward in s. Every read u(s + xi) has s + xi <= s and is already known.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "goodwill/errors.hpp"
#include "goodwill/hilbert.hpp"
#include "goodwill/model.hpp"

namespace goodwill {

namespace detail {

// Trapezoid over the lags xi = -j dt, j = 0..J, of k(-j dt) u[i - j]. J = 0 is an
// empty interval.
inline double truncated_lag_sum(std::span<const double> k, std::span<const double> u, std::size_t i, std::size_t J,
                                double dt) {
  if (J == 0) return 0.0;
  double acc = 0.5 * (k[0] * u[i] + k[J] * u[i - J]);
  for (std::size_t j = 1; j < J; ++j) acc += k[j] * u[i - j];
  return dt * acc;
}

// Heun sweep for u' = a0 u + (truncated a1 lag integral) + forcing, u(0) = u0.
// `force_left(i)` and `force_right(i)` give the forcing at lattice point i seen as
// the left or the right end of a step, so a jump exactly at a node is integrated
// without an O(dt) kick.
template <class FL, class FR>
std::vector<double> heun_delay_sweep(double a0, std::span<const double> a1_lags, std::size_t m, std::size_t steps,
                                     double dt, double u0, FL&& force_left, FR&& force_right) {
  std::vector<double> u(steps + 1, 0.0);
  u[0] = u0;
  const bool with_a = !a1_lags.empty();
  for (std::size_t i = 0; i < steps; ++i) {
    const double f_i =
        a0 * u[i] + (with_a ? truncated_lag_sum(a1_lags, u, i, std::min(m, i), dt) : 0.0) + force_left(i);
    u[i + 1] = u[i] + dt * f_i;  // predictor
    const double f_pred =
        a0 * u[i + 1] + (with_a ? truncated_lag_sum(a1_lags, u, i + 1, std::min(m, i + 1), dt) : 0.0) +
        force_right(i + 1);
    u[i + 1] = u[i] + 0.5 * dt * (f_i + f_pred);
    if (!std::isfinite(u[i + 1])) throw numerical_error("costate sweep: non-finite value at step " + std::to_string(i + 1));
  }
  return u;
}

}  // namespace detail

struct CostateSolution {
  ModelParams params;
  double gamma = 0.0;
  double beta = 0.0;
  double dt = 0.0;
  std::size_t steps = 0;        // T / dt
  std::size_t delay_steps = 0;  // r / dt
  // Indexed by forward time t_k = k dt.
  std::vector<double> w0;
  std::vector<double> bw;  // <B, w(t_k)>
  std::vector<double> c;

  double T() const { return params.T; }
  double time(std::size_t k) const { return dt * static_cast<double>(k); }

  double w0_at(double t) const { return sample(w0, t); }
  double bw_at(double t) const { return sample(bw, t); }
  double c_at(double t) const { return sample(c, t); }
  double z_star_at(double t) const { return std::max(0.0, bw_at(t)) / (2.0 * beta); }
  double z_star(std::size_t k) const { return std::max(0.0, bw[k]) / (2.0 * beta); }

  // w1(t, xi) = w0(t - xi) 1{t - xi <= T}
  double w1(double t, double xi) const {
    if (xi < -params.r - 1e-12 || xi > 1e-12) throw domain_error("costate: lag outside [-r, 0]");
    const double arg = t - xi;
    if (arg > params.T + 1e-12 * std::max(1.0, params.T)) return 0.0;
    return w0_at(std::min(arg, params.T));
  }

  // w(t) as an element of X sampled on `grid`.
  ProfileX w_at(double t, const SegmentGrid& grid) const {
    ProfileX out{w0_at(t), std::vector<double>(grid.size())};
    for (std::size_t i = 0; i < grid.size(); ++i) out.x1[i] = w1(t, grid.node(i));
    return out;
  }

 private:
  double sample(const std::vector<double>& v, double t) const {
    const double slack = 1e-9 * dt;
    if (!(t >= -slack && t <= params.T + slack)) throw domain_error("costate: time outside [0, T]");
    return interp_uniform(v, 0.0, dt, std::clamp(t, 0.0, params.T));
  }
};

// Backward Heun sweep for w0 and trapezoid accumulation of c.
inline CostateSolution solve_costate(const ModelParams& params, double gamma, double beta, double dt) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw config_error("costate: beta must be > 0");
  if (!std::isfinite(gamma)) throw config_error("costate: gamma must be finite");
  params.validate();
  const TimeLattice lat = make_lattice(params.T, params.r, dt);
  const std::size_t N = lat.steps, m = lat.delay_steps;

  std::vector<double> a1_lags;
  if (!is_zero(params.a1)) a1_lags = lag_samples(params.a1, params.r, dt, m);
  auto none = [](std::size_t) { return 0.0; };
  const std::vector<double> u = detail::heun_delay_sweep(params.a0, a1_lags, m, N, dt, gamma, none, none);

  // <B, w> at time-to-go index i, then c by trapezoid in time-to-go.
  std::vector<double> bw_rev(N + 1), c_rev(N + 1, 0.0);
  const bool with_b = !is_zero(params.b1);
  const std::vector<double> b1_lags = with_b ? lag_samples(params.b1, params.r, dt, m) : std::vector<double>{};
  for (std::size_t i = 0; i <= N; ++i) {
    bw_rev[i] = params.b0 * u[i] + (with_b ? detail::truncated_lag_sum(b1_lags, u, i, std::min(m, i), dt) : 0.0);
  }
  auto running = [beta](double b) {
    const double p = std::max(0.0, b);
    return p * p / (4.0 * beta);
  };
  for (std::size_t i = 1; i <= N; ++i) c_rev[i] = c_rev[i - 1] + 0.5 * dt * (running(bw_rev[i - 1]) + running(bw_rev[i]));

  CostateSolution sol;
  sol.params = params;
  sol.gamma = gamma;
  sol.beta = beta;
  sol.dt = dt;
  sol.steps = N;
  sol.delay_steps = m;
  sol.w0.resize(N + 1);
  sol.bw.resize(N + 1);
  sol.c.resize(N + 1);
  for (std::size_t k = 0; k <= N; ++k) {
    sol.w0[k] = u[N - k];
    sol.bw[k] = bw_rev[N - k];
    sol.c[k] = c_rev[N - k];
  }
  sol.w0[N] = gamma;
  sol.c[N] = 0.0;
  return sol;
}

}  // namespace goodwill
