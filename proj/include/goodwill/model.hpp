#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "goodwill/errors.hpp"
#include "goodwill/hilbert.hpp"

namespace goodwill {

// Coefficients of the controlled goodwill equation
//   dy = [a0 y + int a1(xi) y(t+xi) dxi + b0 z + int b1(xi) z(t+xi) dxi] dt + sigma dW
// with controls restricted to U = [u_min, u_max].
struct ModelParams {
  double a0 = 0.0;
  Kernel a1 = ZeroKernel{};
  double b0 = 0.0;
  Kernel b1 = ZeroKernel{};
  double sigma = 0.0;
  double r = 1.0;
  double T = 1.0;
  double u_min = 0.0;
  double u_max = 1.0;

  void validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(a0) || !finite(b0) || !finite(sigma) || !finite(r) || !finite(T) || !finite(u_min) ||
        !finite(u_max)) {
      throw config_error("model: non-finite coefficient");
    }
    if (a0 > 0.0) throw config_error("model: a0 must be <= 0");
    if (b0 < 0.0) throw config_error("model: b0 must be >= 0");
    if (sigma < 0.0) throw config_error("model: sigma must be >= 0");
    if (!(r > 0.0)) throw config_error("model: r must be > 0");
    if (!(T > 0.0)) throw config_error("model: T must be > 0");
    if (T < r) throw config_error("model: T must be >= r");
    if (u_min < 0.0 || u_min > u_max) throw config_error("model: need 0 <= u_min <= u_max");
    validate_kernel(a1, "a1");
    validate_kernel(b1, "b1");
    if (!is_nonnegative(b1)) throw config_error("model: b1 must be non-negative");
  }
};

// Initial goodwill x0, goodwill history x1 and advertising history delta on [-r, 0].
struct HistoryPair {
  SegmentGrid grid;
  double x0 = 0.0;
  std::vector<double> x1;
  std::vector<double> delta;

  template <class F, class G>
  static HistoryPair from_functions(const SegmentGrid& grid, double x0, F&& x1_fn, G&& delta_fn) {
    HistoryPair h{grid, x0, std::vector<double>(grid.size()), std::vector<double>(grid.size())};
    for (std::size_t i = 0; i < grid.size(); ++i) {
      h.x1[i] = x1_fn(grid.node(i));
      h.delta[i] = delta_fn(grid.node(i));
    }
    return h;
  }

  // Constant goodwill history x0 and zero advertising history.
  static HistoryPair constant(const SegmentGrid& grid, double x0) {
    return from_functions(grid, x0, [x0](double) { return x0; }, [](double) { return 0.0; });
  }

  void validate() const {
    if (x1.size() != grid.size() || delta.size() != grid.size()) {
      throw dimension_error("history: profiles do not match the segment grid");
    }
    if (!(x0 >= 0.0)) throw config_error("history: x0 must be >= 0");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!(x1[i] >= 0.0)) throw config_error("history: x1 must be >= 0");
      if (!(delta[i] >= 0.0)) throw config_error("history: delta must be >= 0");
    }
    if (std::abs(x1.back() - x0) > 1e-12 * std::max(1.0, std::abs(x0))) {
      throw config_error("history: x1(0) must equal x0");
    }
  }

  double goodwill_at(double xi) const { return profile_at(x1, grid, xi); }
  double advertising_at(double xi) const { return profile_at(delta, grid, xi); }
};

// Uniform time lattice t_k = k dt on [0, T] where dt divides both T and r.
struct TimeLattice {
  double dt = 0.0;
  std::size_t steps = 0;        // T / dt
  std::size_t delay_steps = 0;  // r / dt

  double time(std::size_t k) const { return dt * static_cast<double>(k); }
  double horizon() const { return time(steps); }
};

inline std::size_t exact_ratio(double num, double dt, const char* what) {
  const double q = num / dt;
  const double n = std::round(q);
  if (n < 1.0 || std::abs(q - n) > 1e-7 * std::max(1.0, n)) {
    throw config_error(std::string("dt must divide ") + what + " evenly (" + what + "/dt = " + std::to_string(q) + ")");
  }
  return static_cast<std::size_t>(n);
}

inline TimeLattice make_lattice(double T, double r, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw config_error("dt must be positive and finite");
  if (dt > r) throw config_error("dt exceeds the delay horizon r");
  if (dt > T) throw config_error("dt exceeds the horizon T");
  return {dt, exact_ratio(T, dt, "T"), exact_ratio(r, dt, "r")};
}

// Trapezoid weights on the lags xi_j = -j dt, j = 0..m, scaled by the kernel:
// int_{-m dt}^0 k(xi) f(t+xi) dxi ~ sum_j w_j f(t - j dt).
inline std::vector<double> lag_weights(const Kernel& k, double r, double dt, std::size_t m) {
  std::vector<double> w(m + 1, 0.0);
  if (is_zero(k) || m == 0) return w;
  for (std::size_t j = 0; j <= m; ++j) {
    const double edge = (j == 0 || j == m) ? 0.5 : 1.0;
    w[j] = edge * dt * kernel_eval(k, -dt * static_cast<double>(j), r);
  }
  return w;
}

// Kernel samples k(-j dt), j = 0..m.
inline std::vector<double> lag_samples(const Kernel& k, double r, double dt, std::size_t m) {
  std::vector<double> s(m + 1, 0.0);
  if (is_zero(k)) return s;
  for (std::size_t j = 0; j <= m; ++j) s[j] = kernel_eval(k, -dt * static_cast<double>(j), r);
  return s;
}

}  // namespace goodwill
