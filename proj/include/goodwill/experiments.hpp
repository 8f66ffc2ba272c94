#pragma once

// Scenario configs and the experiment runners behind the command-line tool.
// A user config is merged onto the shipped defaults: objects merge key by key,
// arrays and profile specs (objects with a "type" key) are replaced whole, and a
// key absent from the defaults is an error.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "goodwill/approximation.hpp"
#include "goodwill/costate.hpp"
#include "goodwill/errors.hpp"
#include "goodwill/hilbert.hpp"
#include "goodwill/lifting.hpp"
#include "goodwill/lq_control.hpp"
#include "goodwill/model.hpp"
#include "goodwill/policy.hpp"
#include "goodwill/sdde.hpp"
#include "goodwill/state_delay.hpp"

namespace goodwill {

using json = nlohmann::json;

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw config_error("malformed JSON in '" + path + "': " + e.what());
  }
}

#ifdef GOODWILL_DEFAULTS_PATH
inline json load_defaults(const std::string& path = GOODWILL_DEFAULTS_PATH) { return read_json_file(path); }
#else
inline json load_defaults(const std::string& path) { return read_json_file(path); }
#endif

namespace detail {

inline bool is_profile_spec(const json& j) { return j.is_object() && j.contains("type"); }

inline void merge_into(json& base, const json& user, const std::string& where) {
  if (!user.is_object()) throw config_error("config: '" + where + "' must be an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = where.empty() ? it.key() : where + "." + it.key();
    if (!base.contains(it.key())) throw config_error("config: unknown key '" + key + "'");
    json& slot = base[it.key()];
    const json& val = it.value();
    if (is_profile_spec(slot)) {
      if (!is_profile_spec(val)) throw config_error("config: '" + key + "' must be an object with a \"type\"");
      slot = val;
    } else if (slot.is_object()) {
      merge_into(slot, val, key);
    } else if (slot.is_number()) {
      if (!val.is_number()) throw config_error("config: '" + key + "' must be a number");
      slot = val;
    } else if (slot.is_array()) {
      if (!val.is_array()) throw config_error("config: '" + key + "' must be an array");
      slot = val;
    } else if (slot.is_string()) {
      if (!val.is_string()) throw config_error("config: '" + key + "' must be a string");
      slot = val;
    } else {
      slot = val;
    }
  }
}

inline double number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) throw config_error(std::string("config: missing number '") + key + "'");
  return j.at(key).get<double>();
}

}  // namespace detail

inline json merge_config(const json& defaults, const json& user) {
  json out = defaults;
  if (user.is_null()) return out;
  detail::merge_into(out, user, "");
  return out;
}

// FNV-1a over the canonical dump (object keys sorted).
inline std::uint64_t config_hash(const json& config) {
  const std::string s = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Profile on [-r, 0] (history goodwill or advertising) read from a kernel-style
// spec. Zero, constant and exponential specs extend beyond [-r, 0].
inline std::function<double(double)> profile_function(const json& spec, double r) {
  const Kernel k = kernel_from_json(spec, r);
  if (std::holds_alternative<SampledKernel>(k)) {
    return [k, r](double xi) { return kernel_eval(k, xi, r); };
  }
  return [k](double xi) {
    return std::visit(
        [xi](const auto& v) -> double {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, ZeroKernel>) return 0.0;
          else if constexpr (std::is_same_v<T, ConstantKernel>) return v.c;
          else if constexpr (std::is_same_v<T, ExponentialKernel>) return v.amp * std::exp(-std::abs(xi) / v.decay);
          else return 0.0;
        },
        k);
  };
}

struct Scenario {
  json config;
  int defaults_version = 0;
  std::uint64_t hash = 0;
  ModelParams params;
  double gamma = 1.0;
  double beta = 1.0;
  SegmentGrid grid{1.0};
  HistoryPair history{SegmentGrid{1.0}, 0.0, {}, {}};
  std::function<double(double)> x1_fn;
  SimulationConfig sim;

  ObjectiveSpec objective() const { return lq_objective(gamma, beta); }

  // The same scenario with other kernel amplitudes (decay scales kept).
  ModelParams with_amplitudes(double a1_amp, double b1_amp) const {
    ModelParams p = params;
    auto decay_of = [](const Kernel& k, const char* name) {
      if (const auto* e = std::get_if<ExponentialKernel>(&k)) return e->decay;
      throw config_error(std::string("amplitude sweeps need an exponential ") + name + " kernel");
    };
    p.a1 = a1_amp == 0.0 ? Kernel(ZeroKernel{}) : Kernel(ExponentialKernel{a1_amp, decay_of(params.a1, "a1")});
    p.b1 = b1_amp == 0.0 ? Kernel(ZeroKernel{}) : Kernel(ExponentialKernel{b1_amp, decay_of(params.b1, "b1")});
    return p;
  }

  std::string header() const {
    char line[96];
    std::snprintf(line, sizeof line, "# config_hash=%016llx defaults_version=%d\n",
                  static_cast<unsigned long long>(hash), defaults_version);
    return line;
  }
};

inline Scenario make_scenario(const json& merged) {
  Scenario sc;
  sc.config = merged;
  try {
    sc.defaults_version = merged.at("defaults_version").get<int>();
    const json& m = merged.at("model");
    ModelParams p;
    p.a0 = detail::number(m, "a0");
    p.b0 = detail::number(m, "b0");
    p.sigma = detail::number(m, "sigma");
    p.r = detail::number(m, "r");
    p.T = detail::number(m, "T");
    p.u_min = detail::number(m, "u_min");
    p.u_max = detail::number(m, "u_max");
    p.a1 = kernel_from_json(m.at("a1"), p.r);
    p.b1 = kernel_from_json(m.at("b1"), p.r);
    p.validate();
    sc.params = p;

    const json& o = merged.at("objective");
    sc.gamma = detail::number(o, "gamma");
    sc.beta = detail::number(o, "beta");
    if (!(sc.beta > 0.0)) throw config_error("config: objective.beta must be > 0");

    const json& h = merged.at("history");
    const double n_nodes = detail::number(h, "n_nodes");
    if (n_nodes < 2 || n_nodes != std::floor(n_nodes)) throw config_error("config: history.n_nodes must be an integer >= 2");
    sc.grid = SegmentGrid(p.r, static_cast<std::size_t>(n_nodes));
    const double x0 = detail::number(h, "x0");
    sc.x1_fn = profile_function(h.at("x1"), p.r);
    const auto delta_fn = profile_function(h.at("delta"), p.r);
    sc.history = HistoryPair::from_functions(sc.grid, x0, sc.x1_fn, delta_fn);
    sc.history.validate();

    const json& s = merged.at("simulation");
    sc.sim.dt = detail::number(s, "dt");
    const double n_paths = detail::number(s, "n_paths"), seed = detail::number(s, "seed");
    const double workers = detail::number(s, "workers");
    if (n_paths < 1 || n_paths != std::floor(n_paths)) throw config_error("config: simulation.n_paths must be a positive integer");
    if (seed < 0 || seed != std::floor(seed)) throw config_error("config: simulation.seed must be a non-negative integer");
    if (workers < 0 || workers != std::floor(workers)) throw config_error("config: simulation.workers must be >= 0");
    sc.sim.n_paths = static_cast<std::size_t>(n_paths);
    sc.sim.seed = merged.at("simulation").at("seed").get<std::uint64_t>();
    sc.sim.workers = static_cast<unsigned>(workers);
    make_lattice(p.T, p.r, sc.sim.dt);
  } catch (const json::exception& e) {
    throw config_error(std::string("config: ") + e.what());
  }
  sc.hash = config_hash(merged);
  return sc;
}

// ---------------------------------------------------------------------------
// Runners. Each writes CSV (header comment, header row, "%.12g" values).

namespace detail {

inline void csv_row(std::ostream& os, std::initializer_list<double> values) {
  char buf[32];
  bool first = true;
  for (double v : values) {
    std::snprintf(buf, sizeof buf, "%.12g", v);
    if (!first) os << ',';
    os << buf;
    first = false;
  }
  os << '\n';
}

inline std::vector<double> number_array(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) throw config_error(std::string("config: missing array '") + key + "'");
  std::vector<double> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) throw config_error(std::string("config: '") + key + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace detail

// Optimal controls in the four churn settings.
inline void run_fig1(const Scenario& sc, std::ostream& os) {
  const json& f = sc.config.at("fig1");
  const double a_amp = detail::number(f, "a1_amp"), b_amp = detail::number(f, "b1_amp");
  const double dt = sc.sim.dt;
  std::vector<std::vector<double>> cols;
  for (auto [a, b] : {std::pair{0.0, 0.0}, std::pair{a_amp, 0.0}, std::pair{0.0, b_amp}, std::pair{a_amp, b_amp}}) {
    const ModelParams p = sc.with_amplitudes(a, b);
    cols.push_back(optimal_policy_lq(solve_costate(p, sc.gamma, sc.beta, dt), p).z);
  }
  os << sc.header() << "t,z_no_churn,z_goodwill_churn,z_advertising_churn,z_both\n";
  for (std::size_t k = 0; k < cols[0].size(); ++k) {
    detail::csv_row(os, {dt * static_cast<double>(k), cols[0][k], cols[1][k], cols[2][k], cols[3][k]});
  }
}

struct GapPoint {
  double amplitude = 0.0;
  MCEstimate v_opt, v_base;
  GapEstimate gap;
  double v_analytic = 0.0;
  std::size_t clip_events = 0;
};

// Optimal vs memoryless along one churn axis, with common random numbers.
inline std::vector<GapPoint> fig2_points(const Scenario& sc, bool a1_axis, std::span<const double> amplitudes,
                                         std::size_t n_paths) {
  std::vector<GapPoint> out;
  SimulationConfig cfg = sc.sim;
  cfg.n_paths = n_paths;
  for (double amp : amplitudes) {
    const ModelParams p = a1_axis ? sc.with_amplitudes(amp, 0.0) : sc.with_amplitudes(0.0, amp);
    const CostateSolution cs = solve_costate(p, sc.gamma, sc.beta, cfg.dt);
    const Policy opt = optimal_policy_lq(cs, p);
    const Policy base = memoryless_policy(p, sc.gamma, sc.beta, cfg.dt);
    GapPoint g;
    g.amplitude = amp;
    std::size_t c1 = 0, c2 = 0;
    const auto vo = policy_values(p, sc.history, opt, sc.objective(), cfg, &c1);
    const auto vb = policy_values(p, sc.history, base, sc.objective(), cfg, &c2);
    g.v_opt = estimate_from(vo, cfg.seed);
    g.v_base = estimate_from(vb, cfg.seed);
    g.gap = paired_relative_gap(vo, vb);
    g.v_analytic = value_lq(0.0, lift_M(sc.history, p), cs, sc.grid);
    g.clip_events = c1 + c2;
    out.push_back(g);
  }
  return out;
}

inline void run_fig2(const Scenario& sc, bool a1_axis, std::ostream& os) {
  const json& f = sc.config.at("fig2");
  const auto amps = detail::number_array(f, a1_axis ? "a1_amplitudes" : "b1_amplitudes");
  const auto n_paths = static_cast<std::size_t>(detail::number(f, "n_paths"));
  const auto pts = fig2_points(sc, a1_axis, amps, n_paths);
  os << sc.header() << "amplitude,V_hat,V0_hat,gap,gap_stderr\n";
  for (const auto& g : pts) detail::csv_row(os, {g.amplitude, g.v_opt.mean, g.v_base.mean, g.gap.gap, g.gap.stderr_});
}

struct SensitivityRow {
  double r = 0.0;
  double formula = 0.0;
  double finite_difference = 0.0;
};

// dV/dr against a central difference of re-solved costates with h = h_fraction r.
inline std::vector<SensitivityRow> sensitivity_rows(const Scenario& sc, double t, std::span<const double> r_grid,
                                                    double h_fraction) {
  std::vector<SensitivityRow> rows;
  const double dt = sc.sim.dt;
  const double x0 = sc.history.x0;
  for (double r : r_grid) {
    ModelParams p = sc.params;
    p.r = r;
    const double h = h_fraction * r;
    ModelParams lo = p, hi = p;
    lo.r = r - h;
    hi.r = r + h;
    const double v_hi = value_lq_lattice(t, x0, sc.x1_fn, solve_costate(hi, sc.gamma, sc.beta, dt));
    const double v_lo = value_lq_lattice(t, x0, sc.x1_fn, solve_costate(lo, sc.gamma, sc.beta, dt));
    rows.push_back({r, sensitivity_dV_dr(t, x0, sc.x1_fn, p, sc.gamma, sc.beta, dt), (v_hi - v_lo) / (2.0 * h)});
  }
  return rows;
}

inline void run_sensitivity(const Scenario& sc, std::ostream& os) {
  const json& s = sc.config.at("sensitivity");
  const auto rows = sensitivity_rows(sc, detail::number(s, "t"), detail::number_array(s, "r_grid"),
                                     detail::number(s, "h_fraction"));
  os << sc.header() << "r,dV_dr_formula,dV_dr_finite_difference,abs_diff\n";
  for (const auto& r : rows) {
    detail::csv_row(os, {r.r, r.formula, r.finite_difference, std::abs(r.formula - r.finite_difference)});
  }
}

inline void run_costate(const Scenario& sc, std::ostream& os) {
  os << sc.header();
  write_costate_csv(os, solve_costate(sc.params, sc.gamma, sc.beta, sc.sim.dt));
}

// Monte Carlo value of the configured policy, next to the analytic LQ value.
inline json run_evaluate(const Scenario& sc) {
  const std::string which = sc.config.at("evaluate").at("policy").get<std::string>();
  const CostateSolution cs = solve_costate(sc.params, sc.gamma, sc.beta, sc.sim.dt);
  Policy policy;
  if (which == "lq") {
    policy = optimal_policy_lq(cs, sc.params);
  } else if (which == "memoryless") {
    policy = memoryless_policy(sc.params, sc.gamma, sc.beta, sc.sim.dt);
  } else {
    throw config_error("config: evaluate.policy must be \"lq\" or \"memoryless\"");
  }
  std::size_t clips = 0;
  const auto values = policy_values(sc.params, sc.history, policy, sc.objective(), sc.sim, &clips);
  json out = estimate_from(values, sc.sim.seed).to_json();
  out["policy"] = which;
  out["clip_events"] = clips;
  out["value_lq"] = value_lq(0.0, lift_M(sc.history, sc.params), cs, sc.grid);
  char hash[24];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(sc.hash));
  out["config_hash"] = hash;
  out["defaults_version"] = sc.defaults_version;
  return out;
}

inline std::vector<ConvergenceRow> approx_rows(const Scenario& sc) {
  const json& a = sc.config.at("approx");
  SimulationConfig cfg = sc.sim;
  cfg.dt = detail::number(a, "dt");
  cfg.n_paths = static_cast<std::size_t>(detail::number(a, "n_paths"));
  const auto eps1 = detail::number_array(a, "eps1");
  const auto eps2 = detail::number_array(a, "eps2");
  const CostateSolution cs = solve_costate(sc.params, sc.gamma, sc.beta, cfg.dt);
  const ProfileX lifted = lift_M(sc.history, sc.params);
  const double baseline = value_lq(0.0, lifted, cs, sc.grid);
  return convergence_study(sc.params, lifted, sc.grid, optimal_policy_lq(cs, sc.params), sc.objective(), eps1, eps2,
                           cfg, baseline);
}

inline void run_approx(const Scenario& sc, std::ostream& os) {
  const auto rows = approx_rows(sc);
  os << sc.header();
  write_convergence_csv(os, rows);
}

inline json run_feedback_check(double a0, double a1, RootVariant variant) {
  const ConditionResult res = invariant_measure_condition(a0, a1, variant);
  json out{{"variant", to_string(variant)}, {"holds", res.holds}};
  out["gamma_root"] = res.gamma_root ? json(*res.gamma_root) : json(nullptr);
  out["upper_bound"] = res.upper_bound ? json(*res.upper_bound) : json(nullptr);
  if (!res.diagnostic.empty()) out["diagnostic"] = res.diagnostic;
  return out;
}

}  // namespace goodwill
