#pragma once

// Regularizations behind the convergence V_eps -> V: mollified reward and cost,
// the Lasry-Lions sup-inf convolution, and the lifted dynamics with an extra noise
// eps1 b1(.) dW1 on the function component.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include "goodwill/errors.hpp"
#include "goodwill/hilbert.hpp"
#include "goodwill/model.hpp"
#include "goodwill/parallel.hpp"
#include "goodwill/policy.hpp"
#include "goodwill/sdde.hpp"

namespace goodwill {

// zeta(u) = c exp(-1 / (1 - u^2)) on (-1, 1), normalized on its own quadrature
// grid so that the discrete integral is 1. Nodes are symmetric about 0, so the
// discrete convolution reproduces affine functions.
class Mollifier {
 public:
  explicit Mollifier(std::size_t n_nodes = 2001) {
    if (n_nodes < 3 || n_nodes % 2 == 0) throw config_error("mollifier: need an odd node count >= 3");
    u_.resize(n_nodes);
    w_.resize(n_nodes);
    const double h = 2.0 / static_cast<double>(n_nodes - 1);
    double total = 0.0;
    for (std::size_t i = 0; i < n_nodes; ++i) {
      const double u = -1.0 + h * static_cast<double>(i);
      u_[i] = u;
      w_[i] = raw(u) * h;  // trapezoid: the end nodes carry zero mass anyway
      total += w_[i];
    }
    // Symmetrize exactly, then normalize.
    for (std::size_t i = 0; i < n_nodes / 2; ++i) {
      const double s = 0.5 * (w_[i] + w_[n_nodes - 1 - i]);
      w_[i] = w_[n_nodes - 1 - i] = s;
      u_[n_nodes - 1 - i] = -u_[i];
    }
    u_[n_nodes / 2] = 0.0;
    norm_ = h / total;
    for (double& w : w_) w /= total;
  }

  static double raw(double u) { return std::abs(u) < 1.0 ? std::exp(-1.0 / (1.0 - u * u)) : 0.0; }
  // Normalized density.
  double density(double u) const { return raw(u) * norm_; }
  double integral() const {
    double s = 0.0;
    for (double w : w_) s += w;
    return s;
  }
  // int u^2 zeta(u) du
  double second_moment() const {
    double s = 0.0;
    for (std::size_t i = 0; i < u_.size(); ++i) s += w_[i] * u_[i] * u_[i];
    return s;
  }
  std::span<const double> nodes() const { return u_; }
  std::span<const double> masses() const { return w_; }

  // (f * zeta_eps)(x) = int f(x - eps u) zeta(u) du
  template <class F>
  double convolve(F&& f, double x, double eps) const {
    double s = 0.0;
    for (std::size_t i = 0; i < u_.size(); ++i) {
      if (w_[i] != 0.0) s += w_[i] * f(x - eps * u_[i]);
    }
    return s;
  }

 private:
  std::vector<double> u_, w_;
  double norm_ = 1.0;
};

struct MollifierConfig {
  double eps1 = 0.0;
  double eps2 = 0.1;

  void validate() const {
    if (!(eps1 >= 0.0) || !std::isfinite(eps1)) throw config_error("eps1 must be >= 0");
    if (!(eps2 > 0.0) || !std::isfinite(eps2)) throw config_error("eps2 must be > 0");
  }
};

inline const Mollifier& default_mollifier() {
  static const Mollifier m;
  return m;
}

// phi~(x) = phi0(x) 1{|x| <= 1/eps}, then phi~ * zeta_eps.
template <class F>
double mollified_phi_at(F&& phi0, double eps, double x, const Mollifier& moll = default_mollifier()) {
  const double cut = 1.0 / eps;
  return moll.convolve([&](double y) { return std::abs(y) <= cut ? phi0(y) : 0.0; }, x, eps);
}

template <class F>
double mollified_h_at(F&& h0, double eps, double x, const Mollifier& moll = default_mollifier()) {
  return moll.convolve(h0, x, eps);
}

inline std::vector<double> mollify_phi(const std::function<double(double)>& phi0, double eps2,
                                       std::span<const double> eval_points) {
  if (!(eps2 > 0.0)) throw config_error("mollify_phi: eps2 must be > 0");
  std::vector<double> out(eval_points.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mollified_phi_at(phi0, eps2, eval_points[i]);
  return out;
}

inline std::vector<double> mollify_h(const std::function<double(double)>& h0, double eps2,
                                     std::span<const double> eval_points) {
  if (!(eps2 > 0.0)) throw config_error("mollify_h: eps2 must be > 0");
  std::vector<double> out(eval_points.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mollified_h_at(h0, eps2, eval_points[i]);
  return out;
}

// h_{eps,delta}(x) = sup_z inf_y (|z - y|^2 / 2 eps - |z - x|^2 / 2 delta + h(y)) with
// y, z, x on the same uniform grid.
inline std::vector<double> sup_inf_convolution(std::span<const double> h, double x_start, double dx, double eps,
                                               double delta) {
  if (!(delta > 0.0) || !(delta < eps)) throw config_error("sup_inf_convolution: need 0 < delta < eps");
  if (h.empty() || !(dx > 0.0)) throw config_error("sup_inf_convolution: empty grid");
  const std::size_t n = h.size();
  (void)x_start;  // values depend only on grid offsets
  std::vector<double> inner(n);
  for (std::size_t z = 0; z < n; ++z) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t y = 0; y < n; ++y) {
      const double d = dx * (static_cast<double>(z) - static_cast<double>(y));
      best = std::min(best, d * d / (2.0 * eps) + h[y]);
    }
    inner[z] = best;
  }
  std::vector<double> out(n);
  for (std::size_t x = 0; x < n; ++x) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t z = 0; z < n; ++z) {
      const double d = dx * (static_cast<double>(z) - static_cast<double>(x));
      best = std::max(best, inner[z] - d * d / (2.0 * delta));
    }
    out[x] = best;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lifted dynamics
//   dY0 = (a0 Y0 + Y1(0) + b0 z) dt + sigma dW0
//   dY1 = (-dY1/dxi + a1(xi) Y0 + b1(xi) z) dt + eps1 b1(xi) dW1,  Y1(-r) = 0
// Transport is first-order upwind with Courant number nu = dt / dxi <= 1; the
// source is integrated by the trapezoid rule along the characteristic, which makes
// nu = 1 an exact shift. W0 uses the same substream as the SDDE simulator.

struct LiftedEnsemble {
  TimeLattice lattice;
  std::uint64_t seed = 0;
  std::vector<double> y0_T;                 // Y0(T) per path
  std::vector<std::vector<double>> y0_path;  // Y0(t_k) per path when requested
  std::vector<std::vector<double>> y1_T;     // Y1(T, .) per path when requested
};

inline LiftedEnsemble simulate_lifted_perturbed(const ModelParams& params, const ProfileX& lifted_init,
                                                const SegmentGrid& grid, const Policy& policy, double eps1,
                                                const SimulationConfig& cfg, bool keep_paths = false) {
  params.validate();
  if (!(eps1 >= 0.0)) throw config_error("eps1 must be >= 0");
  if (lifted_init.x1.size() != grid.size()) throw dimension_error("lifted state does not match grid");
  if (std::abs(grid.r() - params.r) > 1e-12 * params.r) throw dimension_error("grid r differs from model r");
  if (cfg.n_paths == 0) throw config_error("n_paths must be >= 1");
  const TimeLattice lat = make_lattice(params.T, params.r, cfg.dt);
  const double h = grid.spacing();
  const double nu = cfg.dt / h;
  if (nu > 1.0 + 1e-9) throw config_error("lifted scheme: CFL violated (dt > grid spacing)");
  const std::size_t N = lat.steps, n = grid.size();
  const double dt = cfg.dt;

  auto controls = open_loop_controls(policy, params, lat);
  if (!controls) throw config_error("lifted simulation needs an open-loop policy");
  std::vector<double>& z = *controls;
  for (double& v : z) v = std::clamp(v, params.u_min, params.u_max);
  const std::vector<double> a1 = sample_kernel(params.a1, grid);
  const std::vector<double> b1 = sample_kernel(params.b1, grid);

  LiftedEnsemble ens;
  ens.lattice = lat;
  ens.seed = cfg.seed;
  ens.y0_T.resize(cfg.n_paths);
  if (keep_paths) {
    ens.y0_path.resize(cfg.n_paths);
    ens.y1_T.resize(cfg.n_paths);
  }
  const double noise0 = params.sigma * std::sqrt(dt);
  const double noise1 = eps1 * std::sqrt(dt);
  const unsigned workers = std::max(1u, std::min<unsigned>(cfg.workers == 0 ? default_workers() : cfg.workers,
                                                           static_cast<unsigned>(cfg.n_paths)));
  std::vector<std::vector<double>> cur(workers, std::vector<double>(n)), nxt(workers, std::vector<double>(n)),
      half(workers, std::vector<double>(n));

  parallel_for(cfg.n_paths, workers, [&](unsigned w, std::size_t p) {
    std::vector<double>& Y1 = cur[w];
    std::vector<double>& Y1n = nxt[w];
    std::vector<double>& S = half[w];
    Y1 = lifted_init.x1;
    Y1[0] = 0.0;
    double Y0 = lifted_init.x0;
    std::mt19937_64 rng0 = path_rng(cfg.seed, p, 0);
    std::mt19937_64 rng1 = path_rng(cfg.seed, p, 1);
    std::normal_distribution<double> normal0(0.0, 1.0), normal1(0.0, 1.0);
    std::vector<double>* traj = keep_paths ? &ens.y0_path[p] : nullptr;
    if (traj) {
      traj->resize(N + 1);
      (*traj)[0] = Y0;
    }
    for (std::size_t k = 0; k < N; ++k) {
      double Y0n = Y0 + dt * (params.a0 * Y0 + Y1[n - 1] + params.b0 * z[k]);
      if (noise0 != 0.0) Y0n += noise0 * normal0(rng0);
      const double dW1 = noise1 != 0.0 ? noise1 * normal1(rng1) : 0.0;
      // Departure values with half the old source, upwind-interpolated.
      for (std::size_t i = 0; i < n; ++i) S[i] = Y1[i] + 0.5 * dt * (a1[i] * Y0 + b1[i] * z[k]);
      Y1n[0] = 0.0;
      for (std::size_t i = 1; i < n; ++i) {
        const double dep = nu == 1.0 ? S[i - 1] : (1.0 - nu) * S[i] + nu * S[i - 1];
        Y1n[i] = dep + 0.5 * dt * (a1[i] * Y0n + b1[i] * z[k + 1]) + b1[i] * dW1;
      }
      std::swap(Y1, Y1n);
      Y0 = Y0n;
      if (!std::isfinite(Y0) || std::abs(Y0) > 1e12) {
        throw numerical_error("lifted scheme blow-up at step " + std::to_string(k + 1) + " of path " +
                              std::to_string(p));
      }
      if (traj) (*traj)[k + 1] = Y0;
    }
    ens.y0_T[p] = Y0;
    if (keep_paths) ens.y1_T[p] = Y1;
  });
  return ens;
}

// ---------------------------------------------------------------------------
// Convergence of the regularized objective

struct ConvergenceRow {
  double eps1 = 0.0;
  double eps2 = 0.0;
  double J_eps = 0.0;
  double stderr_ = 0.0;
  double gap = 0.0;
};

// J_eps = E phi_eps(Y0(T)) - int h_eps(z) dt under an open-loop policy, for every
// (eps1, eps2) pair. Each eps1 reuses the same seed, so rows share their noise.
inline std::vector<ConvergenceRow> convergence_study(const ModelParams& params, const ProfileX& lifted_init,
                                                     const SegmentGrid& grid, const Policy& policy,
                                                     const ObjectiveSpec& obj, std::span<const double> eps1_values,
                                                     std::span<const double> eps2_values,
                                                     const SimulationConfig& cfg, double baseline) {
  for (double e : eps2_values) {
    if (!(e > 0.0)) throw config_error("convergence_study: eps2 values must be > 0");
  }
  const TimeLattice lat = make_lattice(params.T, params.r, cfg.dt);
  auto controls = open_loop_controls(policy, params, lat);
  if (!controls) throw config_error("convergence_study needs an open-loop policy");
  for (double& v : *controls) v = std::clamp(v, params.u_min, params.u_max);

  std::vector<ConvergenceRow> rows;
  auto phi = [&](double x) { return obj.phi(x); };
  auto hc = [&](double x) { return obj.h(x); };
  for (double e1 : eps1_values) {
    const LiftedEnsemble ens = simulate_lifted_perturbed(params, lifted_init, grid, policy, e1, cfg);
    for (double e2 : eps2_values) {
      double running = 0.0;
      for (std::size_t k = 0; k < lat.steps; ++k) running += mollified_h_at(hc, e2, (*controls)[k]);
      running *= lat.dt;
      std::vector<double> values(ens.y0_T.size());
      for (std::size_t p = 0; p < values.size(); ++p) values[p] = mollified_phi_at(phi, e2, ens.y0_T[p]) - running;
      const MCEstimate est = estimate_from(values, cfg.seed);
      rows.push_back({e1, e2, est.mean, est.stderr_, std::abs(est.mean - baseline)});
    }
  }
  return rows;
}

inline void write_convergence_csv(std::ostream& os, std::span<const ConvergenceRow> rows) {
  os << "eps1,eps2,J_eps,stderr,gap\n";
  char line[160];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%.12g,%.12g,%.12g,%.12g,%.12g\n", r.eps1, r.eps2, r.J_eps, r.stderr_, r.gap);
    os << line;
  }
}

}  // namespace goodwill
