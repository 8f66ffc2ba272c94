#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "goodwill/lq_control.hpp"
#include "goodwill/sdde.hpp"
#include "oracles.hpp"

using namespace goodwill;

namespace {

ModelParams base(double a0 = -0.5) {
  ModelParams p;
  p.a0 = a0;
  p.b0 = 1.0;
  p.sigma = 0.5;
  p.r = 0.5;
  p.T = 1.0;
  p.u_min = 0.0;
  p.u_max = 100.0;
  return p;
}

ModelParams full_delay() {
  ModelParams p = base();
  p.a1 = ExponentialKernel{-5.0, 1.0 / 6.0};
  p.b1 = ExponentialKernel{5.0, 1.0 / 6.0};
  return p;
}

double x1_paper(double xi) { return 10.0 * std::exp(-std::abs(xi)); }

}  // namespace

TEST(Costate, ExponentialWithoutKernel) {
  const ModelParams p = base(-0.8);
  const CostateSolution cs = solve_costate(p, 1.5, 0.5, 1e-3);
  double err = 0.0;
  for (std::size_t k = 0; k <= cs.steps; ++k) {
    err = std::max(err, std::abs(cs.w0[k] - 1.5 * std::exp((p.T - cs.time(k)) * p.a0)));
  }
  EXPECT_LT(err, 1e-6);
}

TEST(Costate, ConstantWhenA0Zero) {
  const CostateSolution cs = solve_costate(base(0.0), 2.0, 0.5, 0.01);
  for (double w : cs.w0) EXPECT_EQ(w, 2.0);
}

TEST(Costate, RunningCostIntegral) {
  ModelParams p = base(-1.0);
  const CostateSolution cs = solve_costate(p, 1.0, 0.5, 1e-3);
  EXPECT_NEAR(cs.c[0], (1.0 - std::exp(-2.0)) / 4.0, 1e-6);
  EXPECT_NEAR(cs.c[0], 0.21617, 1e-5);
}

TEST(Costate, Invariants) {
  const CostateSolution cs = solve_costate(full_delay(), 1.0, 0.5, 1e-3);
  EXPECT_EQ(cs.w0.back(), 1.0);
  EXPECT_EQ(cs.c.back(), 0.0);
  for (std::size_t k = 0; k < cs.steps; ++k) {
    EXPECT_GE(cs.c[k], cs.c[k + 1]);
    EXPECT_GE(cs.c[k], 0.0);
  }
  EXPECT_THROW(solve_costate(full_delay(), 1.0, 0.0, 1e-3), config_error);
  EXPECT_THROW(solve_costate(full_delay(), 1.0, 0.5, 3e-3), config_error);
}

TEST(Costate, SecondOrderInDt) {
  const ModelParams p = full_delay();
  const double w1 = solve_costate(p, 1.0, 0.5, 0.01).w0[0];
  const double w2 = solve_costate(p, 1.0, 0.5, 0.005).w0[0];
  const double w3 = solve_costate(p, 1.0, 0.5, 0.0025).w0[0];
  const double ratio = (w1 - w2) / (w2 - w3);
  EXPECT_GE(ratio, 3.5);
  EXPECT_LE(ratio, 4.5);
}

TEST(Costate, ConstantKernelMatchesMethodOfSteps) {
  // In time-to-go u(s) = w0(T - s) solves u' = a0 u + c int_{s-r}^{s} u with u = 0
  // before s = 0 and u(0) = gamma.
  ModelParams p = base(-0.5);
  p.T = 1.5;
  p.a1 = ConstantKernel{-2.0};
  const double gamma = 1.2;
  const oracle::ConstantKernelDDE ref(p.a0, -2.0, p.r, 0.0, gamma);
  const CostateSolution cs = solve_costate(p, gamma, 0.5, 1e-3);
  for (double t : {0.0, 0.3, 0.5, 0.9, 1.2, 1.5}) {
    EXPECT_NEAR(cs.w0_at(t), ref(p.T - t), 2e-6) << "t=" << t;
  }
}

TEST(Policy, ConstantWithoutDiscounting) {
  const ModelParams p = base(0.0);
  const OpenLoopPolicy z = optimal_policy_lq(solve_costate(p, 1.0, 0.5, 0.01), p);
  for (double v : z.z) EXPECT_NEAR(v, 1.0 * 1.0 / (2 * 0.5), 1e-15);
}

TEST(Policy, ConstantAdvertisingKernelClosedForm) {
  ModelParams p = base(-0.5);
  const double bhat = 3.0, gamma = 1.0, beta = 0.5;
  p.b1 = ConstantKernel{bhat};
  const CostateSolution cs = solve_costate(p, gamma, beta, 1e-3);
  const OpenLoopPolicy z = optimal_policy_lq(cs, p);
  for (double t : {0.0, 0.2, 0.5, 0.7, 0.9, 1.0}) {
    // w1(t, xi) = w0(t - xi) = gamma e^{(T - t + xi) a0} for t - xi <= T
    const double lo = std::max(-p.r, t - p.T);
    const double integral =
        lo < 0.0 ? oracle::simpson([&](double xi) { return bhat * std::exp(p.a0 * xi); }, lo, 0.0, 200) : 0.0;
    const double expect = gamma * std::exp((p.T - t) * p.a0) / (2 * beta) * (p.b0 + integral);
    EXPECT_NEAR(z.at(t), expect, 1e-5) << "t=" << t;
  }
}

TEST(Policy, NegativeRewardGivesZero) {
  const ModelParams p = base();
  const OpenLoopPolicy z = optimal_policy_lq(solve_costate(p, -1.0, 0.5, 0.01), p);
  for (double v : z.z) EXPECT_EQ(v, 0.0);
}

TEST(Policy, NonNegativeEverywhere) {
  ModelParams p = full_delay();
  p.a1 = ExponentialKernel{-20.0, 1.0 / 6.0};
  const OpenLoopPolicy z = optimal_policy_lq(solve_costate(p, 1.0, 0.5, 0.001), p);
  for (double v : z.z) EXPECT_GE(v, 0.0);
}

TEST(Memoryless, Examples) {
  const ModelParams p = base(-0.5);
  const OpenLoopPolicy z = memoryless_policy(p, 1.0, 0.5, 1e-3);
  EXPECT_NEAR(z.z.back(), 1.0, 1e-15);
  for (std::size_t k = 0; k < z.z.size(); k += 100) {
    EXPECT_NEAR(z.z[k], memoryless_closed_form(p, 1.0, 0.5, 1e-3 * static_cast<double>(k)), 1e-7);
  }
  const OpenLoopPolicy flat = memoryless_policy(base(0.0), 1.0, 0.5, 1e-2);
  for (double v : flat.z) EXPECT_EQ(v, 1.0);
  const OpenLoopPolicy opt = optimal_policy_lq(solve_costate(p, 1.0, 0.5, 1e-3), p);
  EXPECT_EQ(opt.z, z.z);
  // kernels do not change the memoryless control
  EXPECT_EQ(memoryless_policy(full_delay(), 1.0, 0.5, 1e-3).z, z.z);
}

TEST(Value, TerminalAndAffine) {
  const ModelParams p = full_delay();
  const SegmentGrid g(p.r);
  const CostateSolution cs = solve_costate(p, 1.3, 0.5, 1e-3);
  const ProfileX x = ProfileX::from_function(g, 2.0, [](double xi) { return 1.0 + xi; });
  EXPECT_NEAR(value_lq(1.0, x, cs, g), 1.3 * 2.0, 1e-12);
  const ProfileX y = ProfileX::from_function(g, -1.0, [](double xi) { return xi * xi; });
  for (double t : {0.0, 0.3, 0.6}) {
    const double c = cs.c_at(t);
    const double lhs = value_lq(t, 2.5 * x + y, cs, g) - c;
    const double rhs = 2.5 * (value_lq(t, x, cs, g) - c) + (value_lq(t, y, cs, g) - c);
    EXPECT_NEAR(lhs, rhs, 1e-12);
  }
  EXPECT_THROW(value_lq(1.5, x, cs, g), domain_error);
}

TEST(Value, LatticeFormAgreesWithGridForm) {
  const ModelParams p = full_delay();
  const SegmentGrid g(p.r, 501);
  const CostateSolution cs = solve_costate(p, 1.0, 0.5, 1e-3);
  const ProfileX x = ProfileX::from_function(g, 10.0, x1_paper);
  for (double t : {0.0, 0.4, 0.7}) {
    EXPECT_NEAR(value_lq(t, x, cs, g), value_lq_lattice(t, 10.0, x1_paper, cs), 1e-5) << "t=" << t;
  }
}

TEST(Mean, Examples) {
  const ModelParams p = base(-0.7);
  const SegmentGrid g(p.r, 51);
  const ProfileX x{3.0, std::vector<double>(51, 0.0)};
  const Policy zero = OpenLoopPolicy{0.01, std::vector<double>(101, 0.0)};
  EXPECT_EQ(trajectory_mean(0.0, x, g, zero, p, 0.01), 3.0);
  EXPECT_NEAR(trajectory_mean(0.8, x, g, zero, p, 0.01), 3.0 * std::exp(-0.7 * 0.8), 1e-9);
}

TEST(Mean, MatchesDeterministicSimulation) {
  ModelParams p = full_delay();
  p.sigma = 0.0;
  const SegmentGrid g(p.r, 201);
  const HistoryPair h = HistoryPair::from_functions(g, 10.0, x1_paper, [](double xi) { return 1.0 + xi; });
  const double dt = 0.0025;
  const CostateSolution cs = solve_costate(p, 1.0, 0.5, dt);
  const Policy pol = optimal_policy_lq(cs, p);
  const std::vector<double> mean = trajectory_mean_series(lift_M(h, p), g, pol, p, dt);
  const PathEnsemble e = simulate_paths(p, h, pol, dt, 1, 1);
  for (std::size_t k = 0; k < mean.size(); ++k) EXPECT_NEAR(mean[k], e.y[0][k], 0.02) << "k=" << k;
}

TEST(Variance, Examples) {
  ModelParams p = base(-0.6);
  p.sigma = 0.7;
  EXPECT_EQ(trajectory_variance(0.0, p, 1e-3), 0.0);
  for (double t : {0.5, 1.0}) {
    const double exact = p.sigma * p.sigma * (std::exp(2 * p.a0 * t) - 1.0) / (2 * p.a0);
    EXPECT_NEAR(trajectory_variance(t, p, 1e-3), exact, 1e-7);
  }
}

TEST(Sensitivity, ReducedFormula) {
  const ModelParams p = base(-0.5);
  const double dV = sensitivity_dV_dr(0.0, 10.0, x1_paper, p, 1.0, 0.5, 1e-3);
  EXPECT_NEAR(dV, 1.0 * std::exp(p.a0 * (p.T - 0.0 - p.r)) * x1_paper(-p.r), 1e-6);
  EXPECT_NEAR(dV, sensitivity_closed_form(0.0, x1_paper(-p.r), p, 1.0, 0.5), 1e-6);
}

TEST(Sensitivity, ConstantAdvertisingKernelClosedForm) {
  for (double a0 : {-0.5, 0.0}) {
    ModelParams p = base(a0);
    p.b1 = ConstantKernel{2.0};
    // dV/dr jumps at t = T - r, so stay off that point
    for (double t : {0.0, 0.25, 0.45}) {
      const double num = sensitivity_dV_dr(t, 10.0, x1_paper, p, 1.0, 0.5, 1e-3);
      const double closed = sensitivity_closed_form(t, x1_paper(-p.r), p, 1.0, 0.5);
      EXPECT_NEAR(num, closed, 1e-5 * (1.0 + std::abs(closed))) << "a0=" << a0 << " t=" << t;
    }
    EXPECT_EQ(sensitivity_closed_form(0.75, 1.0, p, 1.0, 0.5), 0.0);
  }
}

TEST(Sensitivity, MatchesFiniteDifference) {
  const ModelParams p = full_delay();
  const double dt = 1e-3, r = p.r, h = r / 50;
  ModelParams lo = p, hi = p;
  lo.r = r - h;
  hi.r = r + h;
  const double fd = (value_lq_lattice(0.0, 10.0, x1_paper, solve_costate(hi, 1.0, 0.5, dt)) -
                     value_lq_lattice(0.0, 10.0, x1_paper, solve_costate(lo, 1.0, 0.5, dt))) /
                    (2 * h);
  const double dV = sensitivity_dV_dr(0.0, 10.0, x1_paper, p, 1.0, 0.5, dt);
  EXPECT_NEAR(dV, fd, 1e-3 * (1.0 + std::abs(dV)));
}

TEST(Sensitivity, Errors) {
  ModelParams p = base();
  EXPECT_THROW(sensitivity_dV_dr(1.5, 1.0, x1_paper, p, 1.0, 0.5, 1e-3), domain_error);
  p.b1 = SampledKernel{p.r, {1.0, 2.0}};
  EXPECT_THROW(sensitivity_dV_dr(0.0, 1.0, x1_paper, p, 1.0, 0.5, 1e-3), config_error);
  p.b1 = ZeroKernel{};
  p.a1 = ConstantKernel{-1.0};
  EXPECT_THROW(sensitivity_closed_form(0.0, 1.0, p, 1.0, 0.5), config_error);
}

TEST(Optimality, BumpDoesNotImprove) {
  const ModelParams p = full_delay();
  const SegmentGrid g(p.r);
  const HistoryPair h = HistoryPair::from_functions(g, 10.0, x1_paper, [](double) { return 0.0; });
  const double dt = 2e-3;
  const CostateSolution cs = solve_costate(p, 1.0, 0.5, dt);
  const OpenLoopPolicy opt = optimal_policy_lq(cs, p);
  const ObjectiveSpec obj = lq_objective(1.0, 0.5);
  const SimulationConfig cfg{dt, 2000, 17, 0};
  const auto v_opt = policy_values(p, h, opt, obj, cfg);
  const MCEstimate e_opt = estimate_from(v_opt, cfg.seed);
  for (double amp : {-0.3, 0.3}) {
    OpenLoopPolicy bumped = opt;
    for (std::size_t k = 0; k < bumped.z.size(); ++k) {
      const double t = dt * static_cast<double>(k);
      bumped.z[k] = std::max(0.0, bumped.z[k] + amp * std::exp(-50.0 * (t - 0.4) * (t - 0.4)));
    }
    const auto v_b = policy_values(p, h, bumped, obj, cfg);
    std::vector<double> diff(v_opt.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = v_opt[i] - v_b[i];
    const MCEstimate d = estimate_from(diff, cfg.seed);
    EXPECT_GE(d.mean, -3.0 * d.stderr_ - 1e-12) << "amp=" << amp << " J=" << e_opt.mean;
  }
}

TEST(CostateCsv, Columns) {
  const ModelParams p = base();
  std::ostringstream os;
  write_costate_csv(os, solve_costate(p, 1.0, 0.5, 0.5));
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "t,w0,c,z_star,z_memoryless");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 3);
}
