#pragma once

// Euler-Maruyama for the controlled goodwill equation on t_k = k dt:
//   y_{k+1} = y_k + [a0 y_k + Q_a(k) + a1p y_{k-m} + b0 z_k + Q_b(k)] dt + sigma sqrt(dt) N_k
// where Q_a, Q_b are trapezoid sums over the lags -j dt, j = 0..m = r/dt, and
// negative times read the history by linear interpolation. The point-delay term
// a1p is used only by the state-delay model.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "goodwill/errors.hpp"
#include "goodwill/hilbert.hpp"
#include "goodwill/model.hpp"
#include "goodwill/parallel.hpp"
#include "goodwill/policy.hpp"

namespace goodwill {

struct SimulationConfig {
  double dt = 1e-3;
  std::size_t n_paths = 1000;
  std::uint64_t seed = 1;
  unsigned workers = 0;  // 0: hardware concurrency
};

struct PathEnsemble {
  TimeLattice lattice;
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> y;  // per path, steps + 1 samples
  std::vector<std::vector<double>> z;  // per path, steps + 1 samples (clipped)
  std::size_t clip_events = 0;

  std::size_t n_paths() const { return y.size(); }

  void write_csv(std::ostream& os) const {
    os << "path_id,t,y,z\n";
    char line[128];
    for (std::size_t p = 0; p < y.size(); ++p) {
      for (std::size_t k = 0; k < y[p].size(); ++k) {
        std::snprintf(line, sizeof line, "%zu,%.12g,%.12g,%.12g\n", p, lattice.time(k), y[p][k], z[p][k]);
        os << line;
      }
    }
  }
};

struct MCEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const { return {{"mean", mean}, {"stderr", stderr_}, {"n_paths", n_paths}, {"seed", seed}}; }
};

inline MCEstimate estimate_from(std::span<const double> values, std::uint64_t seed) {
  if (values.empty()) throw config_error("Monte Carlo estimate of an empty sample");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return {mean, sd / std::sqrt(n), values.size(), seed};
}

// ---------------------------------------------------------------------------
// Engine

// Coefficients in the form the stepper consumes.
struct EngineModel {
  double a0 = 0.0;
  Kernel a1 = ZeroKernel{};
  double a1_point = 0.0;
  double b0 = 0.0;
  Kernel b1 = ZeroKernel{};
  double sigma = 0.0;
  double r = 1.0;
  double T = 1.0;
  double u_min = 0.0;
  double u_max = 1.0;

  static EngineModel from(const ModelParams& p) {
    return {p.a0, p.a1, 0.0, p.b0, p.b1, p.sigma, p.r, p.T, p.u_min, p.u_max};
  }
  // For policy resolution, which only needs the distributed form.
  ModelParams as_params() const { return {a0, a1, b0, b1, sigma, r, T, u_min, u_max}; }
};

namespace detail {

inline double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

class Stepper {
 public:
  Stepper(const EngineModel& model, const HistoryPair& history, const Policy& policy, double dt)
      : model_(model), policy_(policy), lat_(make_lattice(model.T, model.r, dt)) {
    history.validate();
    if (std::abs(history.grid.r() - model.r) > 1e-12 * model.r) {
      throw dimension_error("history grid horizon differs from model r");
    }
    const std::size_t m = lat_.delay_steps, N = lat_.steps;
    // Reversed weights so that Q(k) = dot(w_rev, buf + k) over buf[k..k+m].
    with_a_ = !is_zero(model.a1);
    with_b_ = !is_zero(model.b1);
    wa_rev_ = reversed(lag_weights(model.a1, model.r, dt, m));
    wb_rev_ = reversed(lag_weights(model.b1, model.r, dt, m));
    y_prefix_.resize(m + 1);
    z_prefix_.resize(m + 1);
    for (std::size_t j = 0; j <= m; ++j) {
      const double xi = -dt * static_cast<double>(j);
      y_prefix_[m - j] = history.goodwill_at(xi);
      z_prefix_[m - j] = history.advertising_at(xi);
    }
    y_prefix_[m] = history.x0;
    if (auto z = open_loop_controls(policy, model.as_params(), lat_)) {
      open_z_.resize(N + 1);
      open_clips_ = 0;
      for (std::size_t k = 0; k <= N; ++k) {
        open_z_[k] = clip((*z)[k], open_clips_, k < N);
      }
      // Advertising is deterministic, so its delay term is too.
      std::vector<double> zbuf(m + N + 1);
      std::copy(z_prefix_.begin(), z_prefix_.end(), zbuf.begin());
      for (std::size_t k = 0; k <= N; ++k) zbuf[m + k] = open_z_[k];
      open_qb_.assign(N + 1, 0.0);
      if (with_b_) {
        for (std::size_t k = 0; k <= N; ++k) open_qb_[k] = dot(wb_rev_.data(), zbuf.data() + k, m + 1);
      }
      open_loop_ = true;
    }
  }

  const TimeLattice& lattice() const { return lat_; }
  std::size_t buffer_size() const { return lat_.delay_steps + lat_.steps + 1; }

  // Runs path `path`; on return y[m..m+N] and z[m..m+N] hold the path. Returns the
  // number of clipped controls on [0, T).
  std::size_t run(std::uint64_t seed, std::size_t path, std::vector<double>& y, std::vector<double>& z) const {
    const std::size_t m = lat_.delay_steps, N = lat_.steps;
    const double dt = lat_.dt;
    y.resize(buffer_size());
    z.resize(buffer_size());
    std::copy(y_prefix_.begin(), y_prefix_.end(), y.begin());
    std::copy(z_prefix_.begin(), z_prefix_.end(), z.begin());
    std::mt19937_64 rng = path_rng(seed, path, 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double noise = model_.sigma * std::sqrt(dt);
    std::size_t clips = open_loop_ ? open_clips_ : 0;

    for (std::size_t k = 0; k < N; ++k) {
      const double yk = y[m + k];
      double zk;
      double qb;
      if (open_loop_) {
        zk = open_z_[k];
        qb = open_qb_[k];
      } else {
        const FeedbackState state{lat_.time(k), k, yk, std::span<const double>(y.data() + m, k + 1)};
        zk = clip(feedback_control(policy_, state), clips, true);
        z[m + k] = zk;
        qb = with_b_ ? dot(wb_rev_.data(), z.data() + k, m + 1) : 0.0;
      }
      z[m + k] = zk;
      double drift = model_.a0 * yk + model_.b0 * zk + qb;
      if (with_a_) drift += dot(wa_rev_.data(), y.data() + k, m + 1);
      if (model_.a1_point != 0.0) drift += model_.a1_point * y[k];
      double next = yk + drift * dt;
      if (noise != 0.0) next += noise * normal(rng);
      if (!std::isfinite(next) || std::abs(next) > 1e12) {
        throw numerical_error("goodwill blow-up at step " + std::to_string(k + 1) + " of path " +
                              std::to_string(path) + " (y = " + std::to_string(next) + ")");
      }
      y[m + k + 1] = next;
    }
    if (open_loop_) {
      z[m + N] = open_z_[N];
    } else {
      const FeedbackState state{lat_.time(N), N, y[m + N], std::span<const double>(y.data() + m, N + 1)};
      std::size_t ignored = 0;
      z[m + N] = clip(feedback_control(policy_, state), ignored, false);
    }
    return clips;
  }

 private:
  static std::vector<double> reversed(std::vector<double> v) {
    std::reverse(v.begin(), v.end());
    return v;
  }

  double clip(double z, std::size_t& count, bool counted) const {
    if (!std::isfinite(z)) throw numerical_error("policy produced a non-finite control");
    if (z < model_.u_min || z > model_.u_max) {
      if (counted) ++count;
      return std::clamp(z, model_.u_min, model_.u_max);
    }
    return z;
  }

  EngineModel model_;
  const Policy& policy_;
  TimeLattice lat_;
  bool with_a_ = false, with_b_ = false;
  std::vector<double> wa_rev_, wb_rev_;
  std::vector<double> y_prefix_, z_prefix_;
  bool open_loop_ = false;
  std::vector<double> open_z_, open_qb_;
  std::size_t open_clips_ = 0;
};

}  // namespace detail

// Calls visit(path, y, z, clips) for every path, with y and z spanning t_0..t_N.
// Visits for different paths may run concurrently.
template <class Visitor>
void for_each_path(const EngineModel& model, const HistoryPair& history, const Policy& policy,
                   const SimulationConfig& cfg, Visitor&& visit) {
  if (cfg.n_paths == 0) throw config_error("n_paths must be >= 1");
  const detail::Stepper stepper(model, history, policy, cfg.dt);
  const std::size_t m = stepper.lattice().delay_steps, N = stepper.lattice().steps;
  const unsigned workers = std::max(1u, std::min<unsigned>(cfg.workers == 0 ? default_workers() : cfg.workers,
                                                           static_cast<unsigned>(cfg.n_paths)));
  std::vector<std::vector<double>> ybufs(workers), zbufs(workers);
  parallel_for(cfg.n_paths, workers, [&](unsigned w, std::size_t p) {
    const std::size_t clips = stepper.run(cfg.seed, p, ybufs[w], zbufs[w]);
    visit(p, std::span<const double>(ybufs[w].data() + m, N + 1), std::span<const double>(zbufs[w].data() + m, N + 1),
          clips);
  });
}

inline PathEnsemble simulate_paths(const EngineModel& model, const HistoryPair& history, const Policy& policy,
                                   const SimulationConfig& cfg) {
  PathEnsemble ens;
  ens.lattice = make_lattice(model.T, model.r, cfg.dt);
  ens.seed = cfg.seed;
  ens.y.resize(cfg.n_paths);
  ens.z.resize(cfg.n_paths);
  std::vector<std::size_t> clips(cfg.n_paths, 0);
  for_each_path(model, history, policy, cfg,
                [&](std::size_t p, std::span<const double> y, std::span<const double> z, std::size_t c) {
                  ens.y[p].assign(y.begin(), y.end());
                  ens.z[p].assign(z.begin(), z.end());
                  clips[p] = c;
                });
  ens.clip_events = std::accumulate(clips.begin(), clips.end(), std::size_t{0});
  return ens;
}

inline PathEnsemble simulate_paths(const ModelParams& params, const HistoryPair& history, const Policy& policy,
                                   double dt, std::size_t n_paths, std::uint64_t seed, unsigned workers = 0) {
  params.validate();
  return simulate_paths(EngineModel::from(params), history, policy, SimulationConfig{dt, n_paths, seed, workers});
}

// phi0(y_N) - sum_{k<N} h0(z_k) dt
inline double path_objective(std::span<const double> y, std::span<const double> z, double dt,
                             const ObjectiveSpec& obj) {
  double cost = 0.0;
  for (std::size_t k = 0; k + 1 < y.size(); ++k) cost += obj.h(z[k]);
  return obj.phi(y.back()) - cost * dt;
}

inline std::vector<double> path_objectives(const PathEnsemble& ens, const ObjectiveSpec& obj) {
  std::vector<double> v(ens.n_paths());
  for (std::size_t p = 0; p < v.size(); ++p) v[p] = path_objective(ens.y[p], ens.z[p], ens.lattice.dt, obj);
  return v;
}

inline MCEstimate objective_estimate(const PathEnsemble& ens, const ObjectiveSpec& obj) {
  return estimate_from(path_objectives(ens, obj), ens.seed);
}

// Per-path objective values without storing trajectories.
inline std::vector<double> policy_values(const EngineModel& model, const HistoryPair& history, const Policy& policy,
                                         const ObjectiveSpec& obj, const SimulationConfig& cfg,
                                         std::size_t* clip_events = nullptr) {
  std::vector<double> values(cfg.n_paths);
  std::vector<std::size_t> clips(cfg.n_paths, 0);
  for_each_path(model, history, policy, cfg,
                [&](std::size_t p, std::span<const double> y, std::span<const double> z, std::size_t c) {
                  values[p] = path_objective(y, z, cfg.dt, obj);
                  clips[p] = c;
                });
  if (clip_events) *clip_events = std::accumulate(clips.begin(), clips.end(), std::size_t{0});
  return values;
}

inline std::vector<double> policy_values(const ModelParams& params, const HistoryPair& history, const Policy& policy,
                                         const ObjectiveSpec& obj, const SimulationConfig& cfg,
                                         std::size_t* clip_events = nullptr) {
  params.validate();
  return policy_values(EngineModel::from(params), history, policy, obj, cfg, clip_events);
}

inline MCEstimate evaluate_policy(const ModelParams& params, const HistoryPair& history, const Policy& policy,
                                  const ObjectiveSpec& obj, double dt, std::size_t n_paths, std::uint64_t seed,
                                  unsigned workers = 0) {
  const SimulationConfig cfg{dt, n_paths, seed, workers};
  return estimate_from(policy_values(params, history, policy, obj, cfg), seed);
}

// Goodwill at the lattice point `step` for every path.
inline std::vector<double> goodwill_samples(const EngineModel& model, const HistoryPair& history,
                                            const Policy& policy, const SimulationConfig& cfg, std::size_t step) {
  std::vector<double> out(cfg.n_paths);
  for_each_path(model, history, policy, cfg,
                [&](std::size_t p, std::span<const double> y, std::span<const double>, std::size_t) {
                  if (step >= y.size()) throw domain_error("goodwill_samples: step past the horizon");
                  out[p] = y[step];
                });
  return out;
}

// ---------------------------------------------------------------------------
// Relative performance gap (V - V0) / V

struct GapEstimate {
  double gap = 0.0;
  double stderr_ = 0.0;
};

// Independent estimates: first-order error propagation.
inline GapEstimate relative_gap(const MCEstimate& v_opt, const MCEstimate& v_base) {
  if (v_opt.mean == 0.0) throw domain_error("relative_gap: optimal value is zero");
  const double mo = v_opt.mean, mb = v_base.mean;
  const double gap = (mo - mb) / mo;
  const double se = std::hypot(v_base.stderr_ / mo, mb * v_opt.stderr_ / (mo * mo));
  return {gap, se};
}

// Paired samples from common random numbers: delta method on the ratio of means,
// which keeps the correlation between the two estimates.
inline GapEstimate paired_relative_gap(std::span<const double> v_opt, std::span<const double> v_base) {
  if (v_opt.size() != v_base.size() || v_opt.empty()) throw dimension_error("paired_relative_gap: sample sizes differ");
  const double n = static_cast<double>(v_opt.size());
  const double mo = std::accumulate(v_opt.begin(), v_opt.end(), 0.0) / n;
  const double mb = std::accumulate(v_base.begin(), v_base.end(), 0.0) / n;
  if (mo == 0.0) throw domain_error("relative_gap: optimal value is zero");
  const double ratio = mb / mo;
  double mean_d = 0.0;
  for (std::size_t i = 0; i < v_opt.size(); ++i) mean_d += v_base[i] - ratio * v_opt[i];
  mean_d /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < v_opt.size(); ++i) {
    const double d = v_base[i] - ratio * v_opt[i] - mean_d;
    ss += d * d;
  }
  const double se = v_opt.size() > 1 ? std::sqrt(ss / (n - 1.0)) / (std::sqrt(n) * std::abs(mo)) : 0.0;
  return {1.0 - ratio, se};
}

}  // namespace goodwill
