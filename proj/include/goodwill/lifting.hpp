#pragma once

// The structural map M taking (goodwill, goodwill history, advertising history)
// to a point of X, the linear delay ODE engine, and the two delay semigroups
// built on it:
//   e^{tA*}(x0, x1) = (phi(t), phi(t + .))  with phi' = a0 phi + int a1(xi) phi(t+xi) dxi
//   S(t)(x0, x1)    = (u(t),   u(t + .))    with u'   = a0 u + a1 u(t - r)

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "goodwill/errors.hpp"
#include "goodwill/hilbert.hpp"
#include "goodwill/model.hpp"

namespace goodwill {

// M(x0, x1, v) = (x0, m) with
//   m(xi) = int_{-r}^{xi} a1(zeta) x1(zeta - xi) dzeta + int_{-r}^{xi} b1(zeta) v(zeta - xi) dzeta.
// On a uniform grid every shifted argument zeta_j - xi_i is itself a node, so the
// trapezoid sums read x1 and v directly.
inline ProfileX lift_M(double x0, std::span<const double> x1, std::span<const double> v, const ModelParams& params,
                       const SegmentGrid& grid) {
  const std::size_t n = grid.size();
  if (x1.size() != n || v.size() != n) throw dimension_error("lift_M: profile length does not match grid");
  ProfileX out{x0, std::vector<double>(n, 0.0)};
  const bool with_a = !is_zero(params.a1);
  const bool with_b = !is_zero(params.b1);
  if (!with_a && !with_b) return out;
  const std::vector<double> a1 = with_a ? sample_kernel(params.a1, grid) : std::vector<double>(n, 0.0);
  const std::vector<double> b1 = with_b ? sample_kernel(params.b1, grid) : std::vector<double>(n, 0.0);
  const double h = grid.spacing();
  for (std::size_t i = 1; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j <= i; ++j) {
      const std::size_t shifted = n - 1 - i + j;
      const double edge = (j == 0 || j == i) ? 0.5 : 1.0;
      acc += edge * (a1[j] * x1[shifted] + b1[j] * v[shifted]);
    }
    out.x1[i] = h * acc;
  }
  return out;
}

inline ProfileX lift_M(const HistoryPair& history, const ModelParams& params) {
  return lift_M(history.x0, history.x1, history.delta, params, history.grid);
}

// ---------------------------------------------------------------------------
// Linear delay ODE

struct DistributedDelay {
  Kernel a1;
};
struct PointDelay {
  double a1 = 0.0;
};

struct DelayODEProblem {
  double a0 = 0.0;
  std::variant<DistributedDelay, PointDelay> delay;
  double x0 = 0.0;
  std::vector<double> x1;  // initial profile on `grid`, i.e. on [-r, 0]
  SegmentGrid grid;
  double t_end = 0.0;
};

// Solution on the lattice t_k = k dt, with derivative samples for cubic Hermite
// reads between nodes. Negative arguments read the initial profile.
class DelayTrajectory {
 public:
  DelayTrajectory(double dt, std::vector<double> u, std::vector<double> du, std::vector<double> x1, SegmentGrid grid)
      : dt_(dt), u_(std::move(u)), du_(std::move(du)), x1_(std::move(x1)), grid_(std::move(grid)) {}

  double dt() const { return dt_; }
  std::size_t steps() const { return u_.size() - 1; }
  double end_time() const { return dt_ * static_cast<double>(steps()); }
  std::span<const double> values() const { return u_; }
  double operator[](std::size_t k) const { return u_[k]; }

  double at(double s) const {
    if (s < 0.0) return profile_at(x1_, grid_, s);
    const double q = s / dt_;
    const double last = static_cast<double>(steps());
    if (q > last + 1e-9) throw domain_error("delay trajectory read past its end time");
    if (q >= last) return u_.back();
    const auto i = static_cast<std::size_t>(q);
    return hermite(i, q - static_cast<double>(i));
  }

  // Cubic Hermite on [t_i, t_{i+1}] at fraction c.
  double hermite(std::size_t i, double c) const {
    if (c == 0.0) return u_[i];
    if (c == 1.0) return u_[i + 1];
    const double c2 = c * c, c3 = c2 * c;
    const double h00 = 2 * c3 - 3 * c2 + 1, h10 = c3 - 2 * c2 + c, h01 = -2 * c3 + 3 * c2, h11 = c3 - c2;
    return h00 * u_[i] + h10 * dt_ * du_[i] + h01 * u_[i + 1] + h11 * dt_ * du_[i + 1];
  }

 private:
  double dt_;
  std::vector<double> u_;
  std::vector<double> du_;
  std::vector<double> x1_;
  SegmentGrid grid_;
};

namespace detail {

// Composite trapezoid of f over [a, b] with n equal panels.
template <class F>
double trapezoid(F&& f, double a, double b, std::size_t n) {
  if (!(b > a) || n == 0) return 0.0;
  const double h = (b - a) / static_cast<double>(n);
  double acc = 0.5 * (f(a) + f(b));
  for (std::size_t i = 1; i < n; ++i) acc += f(a + h * static_cast<double>(i));
  return h * acc;
}

inline std::size_t panels(double length, double dt) {
  if (!(length > 0.0)) return 0;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(length / dt - 1e-9)));
}

}  // namespace detail

// Classical RK4 on the lattice. Delayed reads at stage time t_k + c dt fall on
// t_{k-q} + c dt and use the Hermite interpolant of already accepted steps. The
// distributed delay integral is a trapezoid split at the lag -s where the argument
// crosses 0, so a jump between x1(0) and x0 does not degrade the quadrature.
inline DelayTrajectory solve_delay_ode(const DelayODEProblem& problem, double dt) {
  const SegmentGrid& grid = problem.grid;
  const double r = grid.r();
  if (problem.x1.size() != grid.size()) throw dimension_error("delay ODE: initial profile does not match grid");
  if (!(problem.t_end >= 0.0)) throw config_error("delay ODE: horizon must be >= 0");
  if (!(dt > 0.0)) throw config_error("delay ODE: dt must be > 0");
  const std::size_t m = exact_ratio(r, dt, "r");
  const std::size_t steps = problem.t_end == 0.0 ? 0 : exact_ratio(problem.t_end, dt, "t_end");

  std::vector<double> u(steps + 1, 0.0), du(steps + 1, 0.0);
  u[0] = problem.x0;
  auto history = [&](double s) { return profile_at(problem.x1, grid, s); };

  const auto* dist = std::get_if<DistributedDelay>(&problem.delay);
  const bool zero_kernel = dist != nullptr && is_zero(dist->a1);
  std::vector<double> lag_k;
  if (dist != nullptr && !zero_kernel) lag_k = lag_samples(dist->a1, r, dt, m);
  const double point_a1 = dist == nullptr ? std::get<PointDelay>(problem.delay).a1 : 0.0;

  // Reads u at t_i + c dt for i + c <= k using the Hermite interpolant.
  auto stored = [&](std::size_t i, double c) {
    if (c == 0.0) return u[i];
    if (c == 1.0) return u[i + 1];
    const double c2 = c * c, c3 = c2 * c;
    return (2 * c3 - 3 * c2 + 1) * u[i] + (c3 - 2 * c2 + c) * dt * du[i] + (-2 * c3 + 3 * c2) * u[i + 1] +
           (c3 - c2) * dt * du[i + 1];
  };

  // Right-hand side at s = (k + c) dt with current value us.
  auto rhs = [&](std::size_t k, double c, double us) {
    if (c == 1.0) {
      ++k;
      c = 0.0;
    }
    const double s = (static_cast<double>(k) + c) * dt;
    double out = problem.a0 * us;
    if (dist == nullptr) {
      // u(s - r): lattice interval k - m at the same fraction, or the history.
      if (k >= m) {
        out += point_a1 * stored(k - m, c);
      } else {
        out += point_a1 * history(std::min(0.0, s - r));
      }
      return out;
    }
    if (zero_kernel) return out;
    const double kc = static_cast<double>(k) + c;
    double integral = 0.0;
    if (kc >= static_cast<double>(m)) {
      // Whole window in the solved range; lags are lattice points -q dt.
      double acc = 0.5 * lag_k[0] * us;
      for (std::size_t q = 1; q < m; ++q) acc += lag_k[q] * stored(k - q, c);
      acc += 0.5 * lag_k[m] * stored(k - m, c);
      integral = dt * acc;
    } else {
      // Solved piece: lags in [-s, 0]; lattice lags q = 1..k then a partial panel
      // of length c dt ending at argument 0.
      double acc = 0.0;
      double prev_val = lag_k[0] * us;
      for (std::size_t q = 1; q <= k; ++q) {
        const double val = lag_k[q] * stored(k - q, c);
        acc += 0.5 * dt * (prev_val + val);
        prev_val = val;
      }
      if (c > 0.0) acc += 0.5 * c * dt * (prev_val + kernel_eval(dist->a1, -s, r) * u[0]);
      integral += acc;
      // History piece: lags in [-r, -s], arguments in [s - r, 0].
      const double len = r - s;
      const std::size_t n = detail::panels(len, dt);
      integral += detail::trapezoid(
          [&](double xi) { return kernel_eval(dist->a1, xi, r) * history(std::min(0.0, s + xi)); }, -r, -s, n);
    }
    return out + integral;
  };

  for (std::size_t k = 0; k < steps; ++k) {
    const double k1 = rhs(k, 0.0, u[k]);
    du[k] = k1;
    const double k2 = rhs(k, 0.5, u[k] + 0.5 * dt * k1);
    const double k3 = rhs(k, 0.5, u[k] + 0.5 * dt * k2);
    const double k4 = rhs(k, 1.0, u[k] + dt * k3);
    u[k + 1] = u[k] + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!std::isfinite(u[k + 1])) {
      throw numerical_error("delay ODE: non-finite value at step " + std::to_string(k + 1));
    }
  }
  du[steps] = rhs(steps, 0.0, u[steps]);
  return DelayTrajectory(dt, std::move(u), std::move(du), problem.x1, grid);
}

namespace detail {

inline ProfileX sample_orbit(const DelayTrajectory& traj, double t, const ProfileX& x, const SegmentGrid& grid) {
  ProfileX out{traj[traj.steps()], std::vector<double>(grid.size())};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double s = t + grid.node(i);
    out.x1[i] = s < 0.0 ? profile_at(x.x1, grid, s) : traj.at(s);
  }
  return out;
}

}  // namespace detail

// e^{tA*} x: the distributed delay ODE run from (x0, x1) for time t.
inline ProfileX adjoint_semigroup_apply(double t, const ProfileX& x, const SegmentGrid& grid,
                                        const ModelParams& params, double dt) {
  if (!(t >= 0.0)) throw domain_error("adjoint semigroup: t must be >= 0");
  if (x.x1.size() != grid.size()) throw dimension_error("adjoint semigroup: profile does not match grid");
  if (grid.r() != params.r) throw dimension_error("adjoint semigroup: grid horizon differs from model r");
  if (t == 0.0) return x;
  const DelayODEProblem problem{params.a0, DistributedDelay{params.a1}, x.x0, x.x1, grid, t};
  return detail::sample_orbit(solve_delay_ode(problem, dt), t, x, grid);
}

// S(t) x for the point-delay equation u' = a0 u + a1 u(t - r).
inline ProfileX state_semigroup_apply(double t, const ProfileX& x, const SegmentGrid& grid, double a0,
                                      double a1_scalar, double dt) {
  if (!(t >= 0.0)) throw domain_error("state semigroup: t must be >= 0");
  if (x.x1.size() != grid.size()) throw dimension_error("state semigroup: profile does not match grid");
  if (t == 0.0) return x;
  const DelayODEProblem problem{a0, PointDelay{a1_scalar}, x.x0, x.x1, grid, t};
  return detail::sample_orbit(solve_delay_ode(problem, dt), t, x, grid);
}

// phi with phi(0) = 1 and zero history: e^{tA*} e1 = (phi(t), phi(t + .)).
inline DelayTrajectory fundamental_solution(const ModelParams& params, double t_end, double dt) {
  const SegmentGrid grid(params.r, 2);
  const DelayODEProblem problem{params.a0, DistributedDelay{params.a1}, 1.0, {0.0, 0.0}, grid, t_end};
  return solve_delay_ode(problem, dt);
}

}  // namespace goodwill
