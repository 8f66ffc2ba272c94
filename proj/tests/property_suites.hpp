#pragma once

// Randomized property suites. Each returns the number of cases run and the
// number that failed, with a description of the first failure.

#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "goodwill/approximation.hpp"
#include "goodwill/hilbert.hpp"
#include "goodwill/lifting.hpp"
#include "goodwill/sdde.hpp"

namespace props {

using namespace goodwill;

struct SuiteResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  std::string first_failure;

  void record(bool ok, const std::string& what) {
    ++cases;
    if (!ok) {
      if (failures == 0) first_failure = what;
      ++failures;
    }
  }
};

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Non-negative smooth profile with value x0 at 0.
inline HistoryPair random_history(std::mt19937_64& rng, const SegmentGrid& g) {
  const double x0 = uniform(rng, 0.5, 5.0), slope = uniform(rng, 0.0, 3.0), wig = uniform(rng, 0.0, 0.4);
  const double freq = uniform(rng, 1.0, 10.0), adv = uniform(rng, 0.0, 2.0);
  return HistoryPair::from_functions(
      g, x0, [=](double xi) { return x0 * (1.0 + wig * std::sin(freq * xi)) * std::exp(slope * xi); },
      [=](double xi) { return adv * (1.0 + xi / g.r()); });
}

inline ModelParams random_model(std::mt19937_64& rng, bool nonnegative_a1) {
  ModelParams p;
  p.r = 0.5;
  p.T = 1.0;
  p.a0 = uniform(rng, -2.0, 0.0);
  const double amp = nonnegative_a1 ? uniform(rng, 0.0, 5.0) : uniform(rng, -6.0, 3.0);
  p.a1 = ExponentialKernel{amp, uniform(rng, 0.05, 0.5)};
  p.b0 = uniform(rng, 0.0, 2.0);
  p.b1 = ExponentialKernel{uniform(rng, 0.0, 5.0), uniform(rng, 0.05, 0.5)};
  p.sigma = uniform(rng, 0.0, 1.0);
  p.u_min = 0.0;
  p.u_max = 100.0;
  return p;
}

inline OpenLoopPolicy random_control(std::mt19937_64& rng, double dt, std::size_t steps) {
  OpenLoopPolicy z{dt, std::vector<double>(steps + 1)};
  const double a = uniform(rng, 0.0, 3.0), b = uniform(rng, 0.0, 2.0), f = uniform(rng, 0.5, 6.0);
  for (std::size_t k = 0; k <= steps; ++k) z.z[k] = a + b * std::abs(std::sin(f * dt * static_cast<double>(k)));
  return z;
}

// Histories h1 >= h2 nodewise and shared noise and control: y1 >= y2 at every step
// when a1 >= 0.
inline SuiteResult monotone_coupling(std::size_t n_cases = 100, std::uint64_t seed = 1) {
  SuiteResult res;
  res.name = "pathwise monotone coupling (a1 >= 0)";
  std::mt19937_64 rng(seed);
  const SegmentGrid g(0.5, 51);
  const double dt = 0.01;
  for (std::size_t c = 0; c < n_cases; ++c) {
    const ModelParams p = random_model(rng, true);
    const HistoryPair lo = random_history(rng, g);
    HistoryPair hi = lo;
    const double bump = uniform(rng, 0.1, 2.0), tilt = uniform(rng, 0.0, 1.0);
    hi.x0 += bump;
    for (std::size_t i = 0; i < g.size(); ++i) {
      hi.x1[i] += bump * (1.0 - tilt * (-g.node(i)) / g.r());
      hi.delta[i] += uniform(rng, 0.0, 1.0);
    }
    hi.x1.back() = hi.x0;
    const OpenLoopPolicy z = random_control(rng, dt, 100);
    const SimulationConfig cfg{dt, 4, 1000 + c, 1};
    const PathEnsemble a = simulate_paths(EngineModel::from(p), lo, z, cfg);
    const PathEnsemble b = simulate_paths(EngineModel::from(p), hi, z, cfg);
    bool ok = true;
    for (std::size_t q = 0; q < a.y.size() && ok; ++q) {
      for (std::size_t k = 0; k < a.y[q].size(); ++k) {
        if (!(a.y[q][k] <= b.y[q][k])) {
          ok = false;
          break;
        }
      }
    }
    res.record(ok, "case " + std::to_string(c));
  }
  return res;
}

// y is affine in (history, control) for fixed noise, so with concave phi0 and
// convex h0 the per-path objective is concave along any segment.
inline SuiteResult concavity_certificate(std::size_t n_cases = 100, std::uint64_t seed = 2) {
  SuiteResult res;
  res.name = "pathwise concavity certificate";
  std::mt19937_64 rng(seed);
  const SegmentGrid g(0.5, 51);
  const double dt = 0.01;
  for (std::size_t c = 0; c < n_cases; ++c) {
    const ModelParams p = random_model(rng, false);
    const ObjectiveSpec obj{ConcavePowerReward{uniform(rng, 0.5, 3.0), uniform(rng, 0.2, 0.9)},
                            QuadraticCost{uniform(rng, 0.1, 2.0)}};
    const HistoryPair h1 = random_history(rng, g), h2 = random_history(rng, g);
    const OpenLoopPolicy z1 = random_control(rng, dt, 100), z2 = random_control(rng, dt, 100);
    const double lam = uniform(rng, 0.0, 1.0);
    HistoryPair hm = h1;
    hm.x0 = lam * h1.x0 + (1 - lam) * h2.x0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      hm.x1[i] = lam * h1.x1[i] + (1 - lam) * h2.x1[i];
      hm.delta[i] = lam * h1.delta[i] + (1 - lam) * h2.delta[i];
    }
    hm.x1.back() = hm.x0;
    OpenLoopPolicy zm = z1;
    for (std::size_t k = 0; k < zm.z.size(); ++k) zm.z[k] = lam * z1.z[k] + (1 - lam) * z2.z[k];
    const SimulationConfig cfg{dt, 4, 2000 + c, 1};
    const EngineModel m = EngineModel::from(p);
    const auto v1 = policy_values(m, h1, z1, obj, cfg);
    const auto v2 = policy_values(m, h2, z2, obj, cfg);
    const auto vm = policy_values(m, hm, zm, obj, cfg);
    bool ok = true;
    for (std::size_t q = 0; q < vm.size(); ++q) {
      const double rhs = lam * v1[q] + (1 - lam) * v2[q];
      if (!(vm[q] >= rhs - 1e-10 * (1.0 + std::abs(rhs)))) ok = false;
    }
    res.record(ok, "case " + std::to_string(c));
  }
  return res;
}

inline ProfileX random_profile(std::mt19937_64& rng, const SegmentGrid& g) {
  ProfileX x{uniform(rng, -5, 5), std::vector<double>(g.size())};
  for (double& v : x.x1) v = uniform(rng, -5, 5);
  return x;
}

// Symmetry (exact), bilinearity and norm consistency (4 ulps per node), and the
// partial-order laws of order_leq.
inline SuiteResult inner_product_axioms(std::size_t n_cases = 100, std::uint64_t seed = 3) {
  SuiteResult res;
  res.name = "inner-product axioms";
  std::mt19937_64 rng(seed);
  const double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t c = 0; c < n_cases; ++c) {
    const SegmentGrid g(uniform(rng, 0.1, 2.0), 11 + 10 * (c % 30));
    const ProfileX x = random_profile(rng, g), y = random_profile(rng, g), z = random_profile(rng, g);
    const double a = uniform(rng, -3, 3), b = uniform(rng, -3, 3);
    bool ok = inner_product(x, y, g) == inner_product(y, x, g);
    const double lhs = inner_product(a * x + b * z, y, g);
    const double rhs = a * inner_product(x, y, g) + b * inner_product(z, y, g);
    double scale = std::abs(a * x.x0 * y.x0) + std::abs(b * z.x0 * y.x0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      scale += g.weight(i) * (std::abs(a * x.x1[i]) + std::abs(b * z.x1[i])) * std::abs(y.x1[i]);
    }
    ok = ok && std::abs(lhs - rhs) <= 4.0 * eps * static_cast<double>(g.size() + 1) * scale;
    const double nx = norm(x, g), ipx = inner_product(x, x, g);
    ok = ok && nx >= 0.0 && std::abs(nx * nx - ipx) <= 4.0 * eps * static_cast<double>(g.size() + 1) * ipx;
    // order: reflexive, antisymmetric, transitive
    ProfileX up = x, upper = x;
    up.x0 += 1.0;
    upper.x0 += 2.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      up.x1[i] += uniform(rng, 0, 1);
      upper.x1[i] = up.x1[i] + uniform(rng, 0, 1);
    }
    ok = ok && order_leq(x, x) && order_leq(x, up) && order_leq(up, upper) && order_leq(x, upper);
    ok = ok && !order_leq(up, x);
    res.record(ok, "case " + std::to_string(c));
  }
  return res;
}

// T(s) T(t) x = T(s + t) x for both semigroups.
inline SuiteResult semigroup_laws(std::size_t n_cases = 100, std::uint64_t seed = 4, double tol = 1e-5) {
  SuiteResult res;
  res.name = "semigroup laws";
  std::mt19937_64 rng(seed);
  const double r = 0.5;
  const SegmentGrid g(r, 101);
  const double dt = g.spacing();
  for (std::size_t c = 0; c < n_cases; ++c) {
    const ModelParams p = random_model(rng, false);
    const double a0 = p.a0, a1p = uniform(rng, -2.0, 2.0);
    const double s = dt * std::floor(uniform(rng, 1, 200)), t = dt * std::floor(uniform(rng, 1, 200));
    const double f = uniform(rng, 1, 8), x0 = uniform(rng, -2, 2);
    const ProfileX x = ProfileX::from_function(g, x0, [&](double xi) { return x0 + std::sin(f * xi); });
    const bool adjoint = c % 2 == 0;
    ProfileX two, one;
    if (adjoint) {
      two = adjoint_semigroup_apply(s, adjoint_semigroup_apply(t, x, g, p, dt), g, p, dt);
      one = adjoint_semigroup_apply(s + t, x, g, p, dt);
    } else {
      two = state_semigroup_apply(s, state_semigroup_apply(t, x, g, a0, a1p, dt), g, a0, a1p, dt);
      one = state_semigroup_apply(s + t, x, g, a0, a1p, dt);
    }
    double err = std::abs(two.x0 - one.x0), scale = std::abs(one.x0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      err = std::max(err, std::abs(two.x1[i] - one.x1[i]));
      scale = std::max(scale, std::abs(one.x1[i]));
    }
    res.record(err <= tol * (1.0 + scale),
               std::string(adjoint ? "adjoint" : "state") + " case " + std::to_string(c) + " err " + std::to_string(err));
  }
  return res;
}

// inf h <= h_{eps,delta} <= h nodewise.
inline SuiteResult mollification_sandwich(std::size_t n_cases = 100, std::uint64_t seed = 5) {
  SuiteResult res;
  res.name = "mollification sandwich";
  std::mt19937_64 rng(seed);
  for (std::size_t c = 0; c < n_cases; ++c) {
    const std::size_t n = 41 + c % 40;
    const double dx = uniform(rng, 0.02, 0.2);
    std::vector<double> h(n);
    const double a = uniform(rng, -2, 2), b = uniform(rng, 0, 3), f = uniform(rng, 0.5, 5);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = dx * (static_cast<double>(i) - static_cast<double>(n) / 2);
      h[i] = a + b * std::abs(x) + std::sin(f * x) + uniform(rng, -0.1, 0.1);
    }
    const double eps = uniform(rng, 0.05, 2.0), delta = eps * uniform(rng, 0.05, 0.95);
    const auto s = sup_inf_convolution(h, 0.0, dx, eps, delta);
    const double hmin = *std::min_element(h.begin(), h.end());
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) ok = ok && s[i] >= hmin && s[i] <= h[i];
    res.record(ok, "case " + std::to_string(c));
  }
  return res;
}

// |h * zeta_eps|_Lip <= |h|_Lip on a test grid.
inline SuiteResult lipschitz_nonexpansion(std::size_t n_cases = 100, std::uint64_t seed = 6) {
  SuiteResult res;
  res.name = "Lipschitz non-expansion";
  std::mt19937_64 rng(seed);
  for (std::size_t c = 0; c < n_cases; ++c) {
    // Piecewise linear h through random knots; its Lipschitz constant is the
    // largest knot slope.
    const std::size_t k = 8;
    const double lo = -3.0, step = 6.0 / static_cast<double>(k - 1);
    std::vector<double> knots(k);
    for (double& v : knots) v = uniform(rng, -2, 2);
    double L = 0.0;
    for (std::size_t i = 1; i < k; ++i) L = std::max(L, std::abs(knots[i] - knots[i - 1]) / step);
    const SampledFunction h{lo, step, knots};
    const double eps = uniform(rng, 0.01, 1.0);
    std::vector<double> xs;
    for (int i = 0; i <= 120; ++i) xs.push_back(-3.5 + 7.0 * i / 120.0);
    const auto v = mollify_h([&](double x) { return h(x); }, eps, xs);
    bool ok = true;
    for (std::size_t i = 1; i < xs.size(); ++i) {
      ok = ok && std::abs(v[i] - v[i - 1]) / (xs[i] - xs[i - 1]) <= L * (1.0 + 1e-9) + 1e-12;
    }
    res.record(ok, "case " + std::to_string(c));
  }
  return res;
}

inline std::vector<SuiteResult> all_suites() {
  return {monotone_coupling(), concavity_certificate(), inner_product_axioms(),
          semigroup_laws(),    mollification_sandwich(), lipschitz_nonexpansion()};
}

}  // namespace props
