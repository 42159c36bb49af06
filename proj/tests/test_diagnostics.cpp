#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "confflow/diagnostics.hpp"

using namespace confflow;

namespace {

// Hand-built trajectory on a flat chart with u(r, t) and R(r, t) given in closed form.
Trajectory synthetic(const Domain& d, const std::vector<double>& times, const std::function<double(double, double)>& u,
                     const std::function<double(double, double)>& R) {
  Trajectory tr;
  tr.radius = d.r_max();
  tr.boundary_node = d.node_count() - 1;
  for (double t : times) {
    tr.checkpoints.push_back(FlowState{t, ScalarField::radial_profile(d, [&](double r) { return u(r, t); }),
                                       ScalarField::radial_profile(d, [&](double r) { return R(r, t); }), 0, 0.0});
  }
  tr.stats.resize(times.size() - 1);
  return tr;
}

std::vector<double> uniform(double t0, double t1, double dt) {
  std::vector<double> out;
  const int m = static_cast<int>(std::lround((t1 - t0) / dt));
  for (int k = 0; k <= m; ++k) out.push_back(t0 + k * dt);
  return out;
}

double sphere_factor(double r) { return std::sqrt(2.0 / (1.0 + r * r)); }

constexpr double kA = 0.5;
double pair_v(double r) { return 1.0 - kA / std::sqrt(1.0 + r * r); }
double pair_R0(double r) { return 24.0 * kA * std::pow(1.0 + r * r, -2.5) / pair_v(r); }

DtPolicy semi(double dt) {
  DtPolicy p;
  p.scheme = Scheme::semi_implicit;
  p.max_dt = dt;
  return p;
}

}  // namespace

TEST(Tolerance, DefaultFormula) {
  EXPECT_DOUBLE_EQ(default_tolerance(0.02, 0.01), 5.0 * (0.0004 + 0.01));
  const auto d = Domain::radial(3, 2.0, 0.1);
  const auto tr = synthetic(d, {0.0, 0.1, 0.3, 0.35}, [](double, double) { return 1.0; },
                            [](double, double) { return 0.0; });
  EXPECT_DOUBLE_EQ(checkpoint_spacing(tr), 0.2);
}

TEST(Harnack, ZeroFormMatchesClosedForm) {
  // u = 1, R = exp(-r^2): Z = 2 Delta R + R^2 + R / t with Delta R = (4 r^2 - 6) exp(-r^2)
  const auto d = Domain::radial(3, 6.0, 0.01);
  const auto flat = ConformalMetric::flat(d);
  const auto tr = synthetic(d, {0.0, 0.5, 1.0}, [](double, double) { return 1.0; },
                            [](double r, double) { return std::exp(-r * r); });
  const double t = 0.5;
  const auto Z = harnack_Z(tr.checkpoints[1], flat, HarnackForm::zero(), t);
  double worst = 0.0;
  for (std::size_t i = 0; i + 3 < d.node_count(); ++i) {
    const double r = d.radius(i), R = std::exp(-r * r);
    worst = std::max(worst, std::abs(Z[i] - (2.0 * (4.0 * r * r - 6.0) * R + R * R + R / t)));
  }
  EXPECT_LT(worst, 1e-3);
  // Z(0) = -12 + 1 + 1/t < 0 for t > 1/11: the series must flag it
  const auto z = harnack_series(tr, flat, HarnackForm::minus_dlogR());
  EXPECT_TRUE(z.violated);
  EXPECT_NEAR(z.points.back().value, -12.0 + 1.0 + 1.0, 1e-3);
  EXPECT_THROW(harnack_Z(tr.checkpoints[1], flat, HarnackForm::zero(), 0.0), Error);
  EXPECT_THROW(harnack_Z(tr.checkpoints[1], flat, HarnackForm::custom_form({1.0}), t), Error);
}

TEST(Harnack, CustomFormIsQuadraticInX) {
  // on a flat metric Z(X) - Z(0) = dR X + Ric(X, X) / 4 with Ric = 0
  const auto d = Domain::radial(3, 4.0, 0.02);
  const auto flat = ConformalMetric::flat(d);
  const auto tr = synthetic(d, {0.0, 1.0, 2.0}, [](double, double) { return 1.0; },
                            [](double r, double) { return 1.0 / (1.0 + r * r); });
  std::vector<double> x(d.node_count(), 2.0);
  const auto Z0 = harnack_Z(tr.checkpoints[1], flat, HarnackForm::zero(), 1.0);
  const auto Zx = harnack_Z(tr.checkpoints[1], flat, HarnackForm::custom_form(x), 1.0);
  const auto dR = radial_derivative(tr.checkpoints[1].R);
  for (std::size_t i = 0; i + 1 < d.node_count(); ++i) EXPECT_NEAR(Zx[i] - Z0[i], 2.0 * dR[i], 1e-9);
}

TEST(Harnack, SpatiallyConstantSolutionOfRiccatiFlow) {
  // R' = R^2: R = 1 / (2 - t); traced quantity R' + R / t > 0 with known value
  const auto d = Domain::radial(3, 2.0, 0.1);
  const auto tr = synthetic(d, uniform(0.0, 1.0, 0.01), [](double, double) { return 1.0; },
                            [](double, double t) { return 1.0 / (2.0 - t); });
  const auto s = traced_harnack_check(tr, ConformalMetric::flat(d));
  ASSERT_FALSE(s.points.empty());
  EXPECT_DOUBLE_EQ(s.points.front().t, 0.01);
  for (const auto& p : s.points) {
    const double R = 1.0 / (2.0 - p.t);
    // three-point derivative, one-sided at the end: O(dt^2)
    EXPECT_NEAR(p.value, R * R + R / p.t, 5e-4) << p.t;
  }
  EXPECT_FALSE(s.violated);
  EXPECT_DOUBLE_EQ(s.tolerance, default_tolerance(0.1, 0.01));
}

TEST(Harnack, FlagsDecayFasterThanOneOverT) {
  const auto d = Domain::radial(3, 2.0, 0.1);
  const auto tr = synthetic(d, uniform(0.0, 4.0, 0.01), [](double, double) { return 1.0; },
                            [](double, double t) { return 10.0 * std::exp(-2.0 * t); });
  const auto s = traced_harnack_check(tr, ConformalMetric::flat(d));
  EXPECT_TRUE(s.violated);
  // 10 (1/t - 2) exp(-2t) is smallest where 4t^2 - 2t - 1 = 0
  const double t = (1.0 + std::sqrt(5.0)) / 4.0;
  EXPECT_NEAR(s.worst, 10.0 * (1.0 / t - 2.0) * std::exp(-2.0 * t), 1e-3);
}

TEST(Harnack, FlatTrajectoryIsZero) {
  const auto d = Domain::radial(3, 2.0, 0.1);
  const auto tr = synthetic(d, uniform(0.0, 0.5, 0.05), [](double, double) { return 1.0; },
                            [](double, double) { return 0.0; });
  const auto s = traced_harnack_check(tr, ConformalMetric::flat(d));
  EXPECT_EQ(s.worst, 0.0);
  EXPECT_FALSE(s.violated);
  const auto z = harnack_series(tr, ConformalMetric::flat(d), HarnackForm::minus_dlogR());
  EXPECT_EQ(z.worst, 0.0);
}

TEST(Monotone, SlopesAndComparison) {
  const auto d = Domain::radial(3, 2.0, 0.1);
  auto times = uniform(0.0, 4.0, 0.5);
  // tR = t / (1 + t) increases
  const auto up = synthetic(d, times, [](double, double) { return 1.0; },
                            [](double, double t) { return 1.0 / (1.0 + t); });
  const auto rep = monotone_tR_check(up);
  EXPECT_FALSE(rep.slopes.violated);
  EXPECT_NEAR(rep.slopes.points.front().value, (1.0 / 2.0 - 0.5 / 1.5) / 0.5, 1e-12);
  ASSERT_EQ(rep.comparisons.points.size(), 1u);
  EXPECT_NEAR(rep.comparisons.worst, 0.0, 1e-15);
  EXPECT_FALSE(rep.comparisons.violated);

  // tR = 100 t exp(-t) decreases after t = 1, well beyond the tolerance
  const auto down = synthetic(d, times, [](double, double) { return 1.0; },
                              [](double, double t) { return 100.0 * std::exp(-t); });
  const auto bad = monotone_tR_check(down);
  EXPECT_TRUE(bad.slopes.violated);
  EXPECT_TRUE(bad.comparisons.violated);
  EXPECT_NEAR(bad.comparisons.worst, 100.0 * (4.0 * std::exp(-4.0) - 2.0 * std::exp(-2.0)), 1e-10);

  MonotoneOptions missing;
  missing.compare_at = {9.0};
  EXPECT_THROW(monotone_tR_check(up, missing), Error);
}

TEST(Barrier, LogIdentityIsExactForConstantCurvature) {
  // R = a, u = exp(-a t / 4): int R = a t = -4 log u; trapezoid exact
  const auto d = Domain::radial(3, 2.0, 0.1);
  const double a = 0.3, w0 = 0.2;
  const auto tr = synthetic(d, uniform(0.0, 1.0, 0.1), [a](double, double t) { return std::exp(-a * t / 4.0); },
                            [a](double, double) { return a; });
  const auto w = ScalarField::constant(d, w0);
  const auto rep = barrier_and_logintegral_check(tr, w, ConformalMetric::flat(d));
  EXPECT_LT(rep.log_identity_max, 1e-14);
  EXPECT_NEAR(rep.barrier.worst, std::exp(-a / 4.0) - std::exp(-w0), 1e-14);
  EXPECT_FALSE(rep.barrier.violated);
  EXPECT_NEAR(rep.ledger_max, a - 4.0 * w0, 1e-14);
  ASSERT_EQ(rep.integrated.size(), 11u);
  EXPECT_NEAR(rep.integrated.back()[0], a, 1e-14);

  // barrier touched: margin zero counts as a violation
  const auto tight = barrier_and_logintegral_check(tr, ScalarField::constant(d, a / 4.0), ConformalMetric::flat(d));
  EXPECT_TRUE(tight.barrier.violated);
}

TEST(Barrier, LogIdentityRefinesOnAFlow) {
  const auto d = Domain::radial(3, 10.0, 0.05);
  const FlowProblem pr(ConformalMetric::flat(d),
                       ScalarField::radial_profile(d, [](double r) { return 24.0 * std::pow(1.0 + r * r, -2.5); }));
  const auto tr = run_on_domain(pr, 10.0, 0, checkpoint_times(0.5, 0.005, {}), semi(1e-5));
  const auto w = ScalarField::radial_profile(d, [](double r) { return 1.0 / std::sqrt(1.0 + r * r); });
  const double coarse = barrier_and_logintegral_check(thin(tr, 4), w, pr.base).log_identity_max;
  const double fine = barrier_and_logintegral_check(thin(tr, 2), w, pr.base).log_identity_max;
  EXPECT_GT(coarse / fine, 2.0) << coarse << " " << fine;
  const auto rep = barrier_and_logintegral_check(tr, w, pr.base);
  EXPECT_GT(rep.barrier.worst, 0.0);
  EXPECT_LT(rep.ledger_max, 0.0);
}

TEST(Decay, InsufficientHorizon) {
  const auto d = Domain::radial(3, 2.0, 0.1);
  const auto tr = synthetic(d, uniform(0.0, 2.0, 0.5), [](double, double) { return 1.0; },
                            [](double, double) { return 0.0; });
  try {
    decay_check(tr, ScalarField::constant(d, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::insufficient_horizon);
  }
}

TEST(Decay, BoundAndTrendOnSyntheticCurvature) {
  const auto d = Domain::radial(3, 2.0, 0.1);
  const double e = std::exp(1.0);
  auto times = checkpoint_times(e * e, 0.5, {std::sqrt(e), e});
  const auto tr = synthetic(d, times, [](double, double) { return 1.0; },
                            [](double, double t) { return 1.0 / (1.0 + t * t); });
  const auto w = ScalarField::constant(d, 0.1);
  DecayOptions tight;
  tight.tolerance = 0.01;
  const auto rep = decay_check(tr, w, tight);
  ASSERT_EQ(rep.bound.size(), 2u);
  const double s = std::sqrt(e);
  EXPECT_NEAR(rep.bound[0].value, s / (1.0 + e) * 1.0 - 0.4, 1e-12);
  EXPECT_NEAR(rep.bound[1].value, e / (1.0 + e * e) * 2.0 - 0.4, 1e-12);
  EXPECT_NEAR(rep.chain_bound_max, rep.bound_max - 0.4, 1e-12);
  EXPECT_TRUE(rep.violated);
  ASSERT_EQ(rep.trend.size(), 3u);
  EXPECT_TRUE(rep.trend_decreasing);

  DecayOptions opt;
  opt.trend_times = {0.5, 1.0};  // t / (1 + t^2) rises before t = 1
  EXPECT_FALSE(decay_check(tr, w, opt).trend_decreasing);
  EXPECT_FALSE(decay_check(tr, ScalarField::constant(d, 1.0)).violated);
}

TEST(Schrodinger, ConstantSolutionWithoutPotential) {
  const auto d = Domain::radial(3, 5.0, 0.05);
  const auto flat = ConformalMetric::flat(d);
  const auto zero = ScalarField::constant(d, 0.0);
  const FlowProblem pr(flat, zero);
  const auto tr = run_on_domain(pr, 5.0, 0, checkpoint_times(0.1, 0.05, {}), semi(0.01));
  const auto rep = schrodinger_compare(tr, ScalarField::constant(d, 0.5), flat, zero);
  EXPECT_EQ(rep.residual, 0.0);
  EXPECT_NEAR(rep.margins.worst, 0.5, 1e-12);
  EXPECT_FALSE(rep.margins.violated);
  // v = 1 touches u = 1
  EXPECT_TRUE(schrodinger_compare(tr, ScalarField::constant(d, 1.0), flat, zero).margins.violated);
}

TEST(Schrodinger, ManufacturedPairStaysBelowTheFlow) {
  const auto d = Domain::radial(3, 10.0, 0.05);
  const auto flat = ConformalMetric::flat(d);
  const auto v = ScalarField::radial_profile(d, pair_v);
  const auto R0 = ScalarField::radial_profile(d, pair_R0);
  EXPECT_LT(schrodinger_residual(v, flat, R0), 5e-3);
  const FlowProblem pr(flat, R0);
  const auto tr = run_on_domain(pr, 10.0, 0, checkpoint_times(2.0, 0.25, {}), semi(1e-3));
  const auto rep = schrodinger_compare(tr, v, flat, R0);
  EXPECT_LE(rep.residual, rep.residual_tolerance);
  EXPECT_FALSE(rep.margins.violated);
  EXPECT_GT(rep.margins.worst, 0.0);
  // the gap closes as u relaxes towards v
  EXPECT_LT(rep.margins.points.back().value, rep.margins.points[1].value);
}

TEST(Schrodinger, RejectsNonSolutions) {
  const auto d = Domain::radial(3, 5.0, 0.05);
  const auto flat = ConformalMetric::flat(d);
  const auto zero = ScalarField::constant(d, 0.0);
  const auto tr = run_on_domain(FlowProblem(flat, zero), 5.0, 0, {0.0, 0.1}, semi(0.01));
  auto kind_of = [&](const ScalarField& v) {
    try {
      schrodinger_compare(tr, v, flat, zero);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::config;
  };
  EXPECT_EQ(kind_of(ScalarField::radial_profile(d, [](double r) { return 0.5 * std::exp(-r * r); })),
            ErrorKind::not_a_solution);
  EXPECT_EQ(kind_of(ScalarField::constant(d, 2.0)), ErrorKind::not_a_solution);
  EXPECT_EQ(kind_of(ScalarField::constant(d, 0.0)), ErrorKind::not_a_solution);
}

TEST(Pinching, SphereIsOneThird) {
  for (double h : {0.02, 0.01}) {
    const auto d = Domain::radial(3, 10.0, h);
    const auto rep = pinching_report(ConformalMetric(ScalarField::radial_profile(d, sphere_factor)));
    EXPECT_NEAR(rep.epsilon, 1.0 / 3.0, 1e-3) << h;
    EXPECT_FALSE(rep.hypothesis_violated);
  }
}

TEST(Pinching, FlatGivesSentinel) {
  const auto d = Domain::radial(3, 10.0, 0.05);
  const auto rep = pinching_report(ConformalMetric::flat(d));
  EXPECT_TRUE(std::isinf(rep.epsilon));
  EXPECT_FALSE(rep.hypothesis_violated);
  EXPECT_TRUE(std::isinf(pinching_epsilon(ConformalMetric::flat(d))));
}

TEST(Pinching, NegativeRicciIsFlagged) {
  const auto d = Domain::radial(3, 10.0, 0.05);
  const ConformalMetric m(ScalarField::radial_profile(d, [](double r) { return std::pow(1.0 + r * r, 0.125); }));
  const auto rep = pinching_report(m);
  EXPECT_TRUE(rep.hypothesis_violated);
  EXPECT_LT(rep.min_ricci_eigenvalue, 0.0);
  EXPECT_LE(rep.epsilon, 0.0);
}
