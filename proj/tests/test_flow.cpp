#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "confflow/flow.hpp"

using namespace confflow;

namespace {

double potential(double r) { return 24.0 * std::pow(1.0 + r * r, -2.5); }
double exact_w(double r) { return 1.0 / std::sqrt(1.0 + r * r); }
double cone_factor(double r) { return std::pow(1.0 + r * r, -0.125); }

FlowProblem manufactured(const Domain& d) {
  return FlowProblem(ConformalMetric::flat(d), ScalarField::radial_profile(d, potential));
}

FlowProblem trivial(const Domain& d) { return FlowProblem(ConformalMetric::flat(d), ScalarField::constant(d, 0.0)); }

DtPolicy semi(double dt) {
  DtPolicy p;
  p.scheme = Scheme::semi_implicit;
  p.max_dt = dt;
  return p;
}

double sup_diff(const ScalarField& a, const ScalarField& b, std::size_t end) {
  double d = 0.0;
  for (std::size_t i = 0; i < end; ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

TEST(Checkpoints, MergesExtraTimes) {
  const auto t = checkpoint_times(1.0, 0.25, {0.5, 0.6, 3.0});
  const std::vector<double> want{0.0, 0.25, 0.5, 0.6, 0.75, 1.0};
  EXPECT_EQ(t, want);
  const auto d = default_checkpoints(5.0);
  EXPECT_EQ(d.front(), 0.0);
  EXPECT_EQ(d.back(), 5.0);
  bool has_e = false;
  for (double x : d) has_e = has_e || x == std::exp(1.0);
  EXPECT_TRUE(has_e);
  EXPECT_THROW(checkpoint_times(0.0, 0.1, {}), Error);
}

TEST(Ladder, Validation) {
  const auto d = Domain::radial(3, 10.0, 0.05);
  EXPECT_NO_THROW(ExhaustionLadder(d, {2.5, 5.0, 10.0}));
  EXPECT_THROW(ExhaustionLadder(d, {5.0, 2.5}), Error);
  EXPECT_THROW(ExhaustionLadder(d, {5.0, 20.0}), Error);
  EXPECT_THROW(ExhaustionLadder(d, {2.51}), Error);
  EXPECT_THROW(ExhaustionLadder(d, {0.1}), Error);
  EXPECT_THROW(ExhaustionLadder(d, {}), Error);
}

TEST(Cfl, ExampleValueAndScaling) {
  const auto d = Domain::radial(3, 1.0, 0.01);
  const auto flat = ConformalMetric::flat(d);
  const auto one = ScalarField::constant(d, 1.0);
  EXPECT_NEAR(cfl_dt(one, flat, 0.5), 0.5 * 1e-4 / 12.0, 1e-18);
  // p - 1 = 4 in three dimensions
  EXPECT_NEAR(cfl_dt(ScalarField::constant(d, 0.5), flat, 0.5), cfl_dt(one, flat, 0.5) / 16.0, 1e-20);
  EXPECT_EQ(cfl_dt(one, flat, 0.0), 0.0);
  EXPECT_THROW(cfl_dt(ScalarField::constant(d, 0.0), flat, 0.5), Error);
}

TEST(Step, RejectsUnstableExplicitStep) {
  const auto d = Domain::radial(3, 5.0, 0.05);
  const auto pr = manufactured(d);
  FlowState s{0.0, pr.initial, flow_curvature(pr, pr.initial), 0, 0.0};
  const double limit = cfl_dt(s, pr.base, 1.0);
  try {
    step(s, pr, 5.0, 2.0 * limit);
    FAIL() << "expected precondition";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::precondition);
  }
  EXPECT_NO_THROW(step(s, pr, 5.0, 2.0 * limit, semi(2.0 * limit)));
}

TEST(Step, InitialSlopeIsMinusQuarterPotential) {
  const auto d = Domain::radial(3, 5.0, 0.05);
  const auto pr = manufactured(d);
  FlowState s{0.0, pr.initial, flow_curvature(pr, pr.initial), 0, 0.0};
  // u = 1 on a flat base: R(0) = R0, du/dt = -R0 / 4
  for (std::size_t i = 0; i < d.node_count(); ++i) EXPECT_NEAR(s.R[i], pr.R0[i], 1e-12);
  const double dt = cfl_dt(s, pr.base, 0.5);
  const auto next = step(s, pr, 5.0, dt);
  EXPECT_DOUBLE_EQ(next.t, dt);
  EXPECT_NEAR(next.u[0], 1.0 - 6.0 * dt, 1e-12);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_NEAR((next.u[i] - 1.0) / dt, -pr.R0[i] / 4.0, 1e-9);
  // held at the initial value outside the ball
  EXPECT_EQ(next.u[d.node_at(5.0)], 1.0);
}

TEST(Flow, FlatDataIsFixed) {
  const auto d = Domain::radial(3, 5.0, 0.05);
  const auto pr = trivial(d);
  for (auto policy : {DtPolicy{}, semi(0.01)}) {
    const auto tr = run_on_domain(pr, 5.0, 0, checkpoint_times(0.2, 0.05, {}), policy);
    ASSERT_EQ(tr.checkpoints.size(), 5u);
    for (const auto& cp : tr.checkpoints) {
      EXPECT_NEAR(cp.u.min(), 1.0, 1e-13);
      EXPECT_NEAR(cp.u.max(), 1.0, 1e-13);
      EXPECT_LT(cp.R.max_abs(), 1e-10);
    }
  }
}

TEST(Flow, LandsOnCheckpointsAndKeepsStats) {
  const auto d = Domain::radial(3, 5.0, 0.05);
  const auto pr = manufactured(d);
  const auto times = checkpoint_times(0.1, 0.03, {std::sqrt(2.0) / 20.0});
  const auto tr = run_on_domain(pr, 5.0, 0, times);
  ASSERT_EQ(tr.checkpoints.size(), times.size());
  ASSERT_EQ(tr.stats.size(), times.size() - 1);
  for (std::size_t k = 0; k < times.size(); ++k) EXPECT_EQ(tr.checkpoints[k].t, times[k]);
  for (const auto& s : tr.stats) {
    EXPECT_GT(s.steps, 0u);
    EXPECT_LE(s.dt_max, tr.policy.max_dt);
    EXPECT_GT(s.min_u, 0.0);
  }
  EXPECT_TRUE(tr.find(0.06).has_value());
  EXPECT_FALSE(tr.find(0.05).has_value());
}

TEST(Flow, BarriersOnManufacturedPotential) {
  const auto d = Domain::radial(3, 10.0, 0.05);
  const auto pr = manufactured(d);
  const auto tr = run_on_domain(pr, 10.0, 0, checkpoint_times(1.0, 0.05, {0.01}), semi(5e-4));
  for (const auto& cp : tr.checkpoints) {
    EXPECT_LE(cp.u.max(), 1.0 + 1e-12);
    for (std::size_t i = 0; i < d.node_count(); ++i) ASSERT_GT(cp.u[i], std::exp(-exact_w(d.radius(i))));
    if (cp.t >= 0.01) {
      for (std::size_t i = 0; i < tr.interior_end(); ++i) ASSERT_GT(cp.R[i], 0.0) << "t=" << cp.t << " i=" << i;
    }
  }
  // decreasing in time at the origin
  for (std::size_t k = 1; k < tr.checkpoints.size(); ++k) {
    EXPECT_LT(tr.checkpoints[k].u[0], tr.checkpoints[k - 1].u[0]);
  }
}

TEST(Flow, ExplicitAndSemiImplicitAgree) {
  const auto d = Domain::radial(3, 5.0, 0.05);
  const auto pr = manufactured(d);
  const auto times = checkpoint_times(0.2, 0.1, {});
  const auto ex = run_on_domain(pr, 5.0, 0, times);
  const auto si = run_on_domain(pr, 5.0, 0, times, semi(1e-4));
  const auto si2 = run_on_domain(pr, 5.0, 0, times, semi(5e-5));
  const double e1 = sup_diff(ex.checkpoints.back().u, si.checkpoints.back().u, d.node_count());
  const double e2 = sup_diff(ex.checkpoints.back().u, si2.checkpoints.back().u, d.node_count());
  EXPECT_LT(e1, 1e-3);
  // first order in the semi-implicit step
  EXPECT_LT(e2, 0.6 * e1);
}

TEST(Flow, StencilMatchesLaplaceBeltrami) {
  const auto d = Domain::radial(3, 8.0, 0.05);
  const ConformalMetric base(ScalarField::radial_profile(d, cone_factor));
  const auto f = ScalarField::radial_profile(d, [](double r) { return std::exp(-r * r / 4.0) + 0.3 * std::cos(r); });
  const detail::RadialStencil s(base);
  const auto lap = laplace_beltrami(base, f);
  for (std::size_t i = 0; i + 1 < d.node_count(); ++i) {
    const double v = (i == 0 ? 0.0 : s.lower[i] * f[i - 1]) + s.diag[i] * f[i] + s.upper[i] * f[i + 1];
    EXPECT_NEAR(v, lap[i], 1e-10 * (1.0 + std::abs(lap[i]))) << i;
  }
}

TEST(Flow, CurvedBaseMatchesFlatReformulation) {
  // g(t) = (U0 u)^4 delta: flowing u from 1 over the base U0 equals flowing
  // U0 itself over the flat metric with no potential.
  const double h = 0.05, radius = 6.0;
  const auto d = Domain::radial(3, radius, h);
  const auto U0 = ScalarField::radial_profile(d, cone_factor);
  const ConformalMetric base(U0);
  const FlowProblem relative(base, scalar_curvature(base));
  const FlowProblem absolute(ConformalMetric::flat(d), ScalarField::constant(d, 0.0), U0);
  const auto times = checkpoint_times(0.5, 0.25, {});
  const auto a = run_on_domain(relative, radius, 0, times, semi(1e-4));
  const auto b = run_on_domain(absolute, radius, 0, times, semi(1e-4));
  const auto composed = U0 * a.checkpoints.back().u;
  const double diff = sup_diff(composed, b.checkpoints.back().u, d.node_count());
  EXPECT_LT(diff, 2e-3);
  EXPECT_GT(std::abs(b.checkpoints.back().u[0] - U0[0]), 10.0 * diff);
}

TEST(Flow, ThinKeepsEveryStrideAndMergesStats) {
  const auto d = Domain::radial(3, 5.0, 0.05);
  const auto pr = manufactured(d);
  const auto tr = run_on_domain(pr, 5.0, 0, checkpoint_times(0.05, 0.01, {}), semi(1e-3));
  const auto t2 = thin(tr, 2);
  ASSERT_EQ(t2.checkpoints.size(), 4u);
  EXPECT_DOUBLE_EQ(t2.checkpoints[1].t, 0.02);
  EXPECT_DOUBLE_EQ(t2.checkpoints.back().t, 0.05);
  ASSERT_EQ(t2.stats.size(), 3u);
  EXPECT_EQ(t2.stats[0].steps, tr.stats[0].steps + tr.stats[1].steps);
  EXPECT_EQ(t2.stats[2].steps, tr.stats[4].steps);
  EXPECT_THROW(thin(tr, 0), Error);
}

TEST(Exhaustion, DifferencesShrinkOnCompactBall) {
  const auto d = Domain::radial(3, 20.0, 0.1);
  const auto pr = manufactured(d);
  const ExhaustionLadder ladder(d, {5.0, 10.0, 20.0});
  const auto times = checkpoint_times(1.0, 0.25, {});
  const auto ex = run_exhaustion(pr, ladder, times, semi(2e-3), {2.5, 1});
  ASSERT_EQ(ex.differences.size(), 2u);
  for (std::size_t k = 1; k < times.size(); ++k) {
    EXPECT_TRUE(ex.decreasing[k]) << k;
    EXPECT_GT(ex.differences[0][k], 0.0);
  }
  EXPECT_EQ(ex.differences[0][0], 0.0);
  EXPECT_TRUE(std::isfinite(ex.limit_ratio));
  EXPECT_LT(ex.limit_ratio, 1.0);
  // larger balls give smaller factors: u_{j+1} <= u_j up to discretization
  EXPECT_LT(ex.max_monotone_excess, 1e-3);
}

TEST(Exhaustion, TrivialPotentialGivesNoDifferences) {
  const auto d = Domain::radial(3, 10.0, 0.1);
  const ExhaustionLadder ladder(d, {2.5, 5.0, 10.0});
  const auto ex = run_exhaustion(trivial(d), ladder, checkpoint_times(0.2, 0.1, {}), semi(1e-2));
  for (const auto& row : ex.differences) {
    for (double v : row) EXPECT_LT(v, 1e-14);
  }
  EXPECT_EQ(ex.compact_radius, 1.25);
}

TEST(Exhaustion, ThreadedRunIsBitIdentical) {
  const auto d = Domain::radial(3, 10.0, 0.1);
  const auto pr = manufactured(d);
  const ExhaustionLadder ladder(d, {2.5, 5.0, 10.0});
  const auto times = checkpoint_times(0.3, 0.1, {});
  const auto a = run_exhaustion(pr, ladder, times, semi(2e-3), {0.0, 1});
  const auto b = run_exhaustion(pr, ladder, times, semi(2e-3), {0.0, 3});
  const auto c = run_exhaustion(pr, ladder, times, semi(2e-3), {0.0, 1});
  for (std::size_t j = 0; j < 3; ++j) {
    for (std::size_t k = 0; k < times.size(); ++k) {
      const auto& ua = a.trajectories[j].checkpoints[k].u;
      for (std::size_t i = 0; i < d.node_count(); ++i) {
        ASSERT_EQ(ua[i], b.trajectories[j].checkpoints[k].u[i]);
        ASSERT_EQ(ua[i], c.trajectories[j].checkpoints[k].u[i]);
      }
    }
  }
  EXPECT_EQ(a.differences, b.differences);
}

TEST(Exhaustion, RejectsCompactBallOutsideFirstDomain) {
  const auto d = Domain::radial(3, 10.0, 0.1);
  const ExhaustionLadder ladder(d, {2.5, 5.0});
  EXPECT_THROW(run_exhaustion(trivial(d), ladder, checkpoint_times(0.1, 0.1, {}), {}, {3.0, 1}), Error);
}

TEST(Residual, RoundingLevelForStaticFlatData) {
  const auto d = Domain::radial(3, 5.0, 0.05);
  const auto tr = run_on_domain(trivial(d), 5.0, 0, checkpoint_times(0.1, 0.02, {}), semi(1e-2));
  const auto res = scalar_evolution_residual(tr, ConformalMetric::flat(d));
  EXPECT_EQ(res.size(), 4u);
  // rounding only: R is a second difference of u = 1 + O(eps)
  EXPECT_LT(max_residual(res), 1e-6);
}

TEST(Residual, ConvergesUnderJointRefinementAndControlFails) {
  double prev = 0.0;
  double control = 0.0;
  for (int level = 0; level < 2; ++level) {
    const double h = 0.1 / (1 << level), dt = 0.04 / (1 << level);
    const auto d = Domain::radial(3, 10.0, h);
    const auto pr = manufactured(d);
    const auto tr = run_on_domain(pr, 10.0, 0, checkpoint_times(0.6, dt, {}), semi(0.5 * dt * dt));
    ResidualOptions opts;
    opts.t_min = 0.2;
    const double r = max_residual(scalar_evolution_residual(tr, pr.base, opts));
    if (level > 0) {
      EXPECT_GT(prev / r, 3.0) << prev << " " << r;
    }
    prev = r;
    opts.flat_laplacian = true;
    control = max_residual(scalar_evolution_residual(tr, pr.base, opts));
  }
  EXPECT_GT(control, 10.0 * 5.0 * (0.05 * 0.05 + 0.02));
}

TEST(Residual, NeedsEquallySpacedTriples) {
  const auto d = Domain::radial(3, 5.0, 0.05);
  const auto tr = run_on_domain(trivial(d), 5.0, 0, {0.0, 0.1}, semi(1e-2));
  EXPECT_THROW(scalar_evolution_residual(tr, ConformalMetric::flat(d)), Error);
  const auto tr2 = run_on_domain(trivial(d), 5.0, 0, {0.0, 0.1, 0.3}, semi(1e-2));
  EXPECT_THROW(scalar_evolution_residual(tr2, ConformalMetric::flat(d)), Error);
}
