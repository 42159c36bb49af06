#pragma once

// Inequalities checked along flow trajectories: Harnack quantities, monotone tR,
// the barrier and log identity, decay, Schrodinger comparison and Ricci pinching.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "confflow/error.hpp"
#include "confflow/flow.hpp"
#include "confflow/geometry.hpp"

namespace confflow {

/// Default violation threshold 5 (h^2 + dt).
inline double default_tolerance(double h, double dt) { return 5.0 * (h * h + dt); }

/// Largest checkpoint spacing of a trajectory.
inline double checkpoint_spacing(const Trajectory& traj) {
  double d = 0.0;
  for (std::size_t k = 1; k < traj.checkpoints.size(); ++k) {
    d = std::max(d, traj.checkpoints[k].t - traj.checkpoints[k - 1].t);
  }
  return d;
}

enum class HarnackKind { zero, minus_dlogR, custom };

/// The 1-form X in Z(g, X), radial component only.
struct HarnackForm {
  HarnackKind kind = HarnackKind::minus_dlogR;
  std::vector<double> custom;  // X_r per node when kind == custom
  /// Nodes with R <= floor_fraction * max R get X = 0.
  double floor_fraction = 1e-12;

  static HarnackForm zero() { return HarnackForm{HarnackKind::zero, {}, 1e-12}; }
  static HarnackForm minus_dlogR() { return HarnackForm{}; }
  static HarnackForm custom_form(std::vector<double> x) { return HarnackForm{HarnackKind::custom, std::move(x), 1e-12}; }
};

namespace detail {

inline double curvature_floor(const ScalarField& R, double fraction) { return fraction * std::max(R.max(), 0.0); }

// d/dt at checkpoint k by three-point Lagrange differentiation on (possibly
// nonuniform) neighbouring checkpoints.
inline std::vector<double> time_derivative(const Trajectory& traj, std::size_t k) {
  const auto& cps = traj.checkpoints;
  require(cps.size() >= 3, ErrorKind::invalid_input, "time derivative needs at least 3 checkpoints");
  const std::size_t k0 = k == 0 ? 0 : (k + 1 == cps.size() ? k - 2 : k - 1);
  const double t0 = cps[k0].t, t1 = cps[k0 + 1].t, t2 = cps[k0 + 2].t, t = cps[k].t;
  const double w0 = ((t - t1) + (t - t2)) / ((t0 - t1) * (t0 - t2));
  const double w1 = ((t - t0) + (t - t2)) / ((t1 - t0) * (t1 - t2));
  const double w2 = ((t - t0) + (t - t1)) / ((t2 - t0) * (t2 - t1));
  const auto& a = cps[k0].R;
  const auto& b = cps[k0 + 1].R;
  const auto& c = cps[k0 + 2].R;
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = w0 * a[i] + w1 * b[i] + w2 * c[i];
  return out;
}

inline std::size_t checkpoint_at(const Trajectory& traj, double t) {
  const auto k = traj.find(t, 1e-9 * std::max(1.0, t));
  if (!k) throw Error(ErrorKind::invalid_time, "no checkpoint at t = " + std::to_string(t));
  return *k;
}

}  // namespace detail

/// Z = (n-1) Delta_g R + g(grad_g R, X) + Rc(X, X) / (2(n-1)) + R^2 + R/t for g = g(t).
inline ScalarField harnack_Z(const FlowState& state, const ConformalMetric& base, const HarnackForm& form, double t) {
  require(t > 0.0, ErrorKind::invalid_time, "Harnack quantity needs t > 0");
  const auto g = base.compose(state.u);
  const auto& R = state.R;
  const double n1 = static_cast<double>(base.dim() - 1);
  const auto lap = laplace_beltrami(g, R);
  const auto dR = radial_derivative(R);
  const auto weight = g.weight();
  const auto ricci = ricci_conformal(g);
  const double floor = detail::curvature_floor(R, form.floor_fraction);
  if (form.kind == HarnackKind::custom) {
    require(form.custom.size() == R.size(), ErrorKind::invalid_input, "custom form has the wrong size");
  }
  std::vector<double> out(R.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double x = 0.0;
    if (form.kind == HarnackKind::custom) x = form.custom[i];
    if (form.kind == HarnackKind::minus_dlogR && R[i] > floor) x = -dR[i] / R[i];
    const double grad_term = dR[i] * x / weight[i];
    out[i] = n1 * lap[i] + grad_term + ricci.radial_form(i, x) / (2.0 * n1) + R[i] * R[i] + R[i] / t;
  }
  return ScalarField(R.domain(), std::move(out));
}

struct SeriesPoint {
  double t = 0.0;
  double value = 0.0;
};

/// A per-checkpoint series with its extremum and a violation verdict against tol.
struct CheckSeries {
  std::vector<SeriesPoint> points;
  double worst = 0.0;
  double tolerance = 0.0;
  bool violated = false;
};

struct HarnackOptions {
  double t_min = 0.01;
  std::size_t margin = 3;
  /// Evaluate on r <= core * r_j only (the Dirichlet boundary breaks the inequality nearby).
  double core = 1.0;
  /// Violation threshold; negative means default_tolerance(h, spacing).
  double tolerance = -1.0;
};

namespace detail {

inline double resolve_tolerance(const Trajectory& traj, double requested) {
  return requested >= 0.0 ? requested : default_tolerance(traj.domain().h(), checkpoint_spacing(traj));
}

inline CheckSeries lower_bound_series(std::vector<SeriesPoint> points, double tol) {
  CheckSeries s;
  s.points = std::move(points);
  s.tolerance = tol;
  s.worst = std::numeric_limits<double>::infinity();
  for (const auto& p : s.points) s.worst = std::min(s.worst, p.value);
  if (s.points.empty()) s.worst = 0.0;
  s.violated = s.worst < -tol;
  return s;
}

}  // namespace detail

/// min over interior nodes of Z(g(t), X) at each checkpoint with t >= t_min.
inline CheckSeries harnack_series(const Trajectory& traj, const ConformalMetric& base, const HarnackForm& form,
                                  const HarnackOptions& options = {}) {
  std::vector<SeriesPoint> pts;
  const std::size_t end = traj.evaluation_end(options.margin, options.core);
  for (const auto& cp : traj.checkpoints) {
    if (cp.t < options.t_min || cp.t <= 0.0) continue;
    const auto Z = harnack_Z(cp, base, form, cp.t);
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < end; ++i) lo = std::min(lo, Z[i]);
    pts.push_back({cp.t, lo});
  }
  return detail::lower_bound_series(std::move(pts), detail::resolve_tolerance(traj, options.tolerance));
}

/// min over nodes of dR/dt + R/t - |grad_g R|^2 / (2R) per checkpoint.
inline CheckSeries traced_harnack_check(const Trajectory& traj, const ConformalMetric& base,
                                        const HarnackOptions& options = {}) {
  std::vector<SeriesPoint> pts;
  const std::size_t end = traj.evaluation_end(options.margin, options.core);
  const auto& cps = traj.checkpoints;
  for (std::size_t k = 0; k < cps.size(); ++k) {
    const double t = cps[k].t;
    if (t < options.t_min || t <= 0.0) continue;
    const auto dRdt = detail::time_derivative(traj, k);
    const auto& R = cps[k].R;
    const auto grad2 = gradient_norm_squared(base.compose(cps[k].u), R);
    const double floor = detail::curvature_floor(R, 1e-12);
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < end; ++i) {
      const double quotient = R[i] > floor ? grad2[i] / (2.0 * R[i]) : 0.0;
      lo = std::min(lo, dRdt[i] + R[i] / t - quotient);
    }
    pts.push_back({t, lo});
  }
  return detail::lower_bound_series(std::move(pts), detail::resolve_tolerance(traj, options.tolerance));
}

struct MonotoneOptions {
  double t_min = 0.01;
  std::size_t margin = 3;
  double core = 1.0;
  double tolerance = -1.0;
  /// Times t at which tau R(tau) >= sqrt(t) R(sqrt t) is checked for checkpoints tau in [sqrt t, t].
  std::vector<double> compare_at{4.0};
};

struct MonotoneReport {
  /// min over nodes of (t2 R2 - t1 R1) / (t2 - t1) per consecutive pair, stamped at t2.
  CheckSeries slopes;
  /// min over nodes and tau of tau R(tau) - sqrt(t) R(sqrt t), one point per compare time.
  CheckSeries comparisons;
};

inline MonotoneReport monotone_tR_check(const Trajectory& traj, const MonotoneOptions& options = {}) {
  const auto& cps = traj.checkpoints;
  std::vector<std::size_t> ks;
  for (std::size_t k = 0; k < cps.size(); ++k) {
    if (cps[k].t >= options.t_min && cps[k].t > 0.0) ks.push_back(k);
  }
  require(ks.size() >= 2, ErrorKind::invalid_input, "monotonicity needs two checkpoints with t > 0");
  const std::size_t end = traj.evaluation_end(options.margin, options.core);
  const double tol = detail::resolve_tolerance(traj, options.tolerance);
  std::vector<SeriesPoint> slopes;
  for (std::size_t m = 1; m < ks.size(); ++m) {
    const auto& a = cps[ks[m - 1]];
    const auto& b = cps[ks[m]];
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < end; ++i) lo = std::min(lo, (b.t * b.R[i] - a.t * a.R[i]) / (b.t - a.t));
    slopes.push_back({b.t, lo});
  }
  std::vector<SeriesPoint> comparisons;
  for (double t : options.compare_at) {
    require(t > 1.0, ErrorKind::invalid_time, "comparison needs t > 1 so that sqrt(t) < t");
    const std::size_t ks0 = detail::checkpoint_at(traj, std::sqrt(t));
    const std::size_t ks1 = detail::checkpoint_at(traj, t);
    const auto& base = cps[ks0];
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t k = ks0; k <= ks1; ++k) {
      for (std::size_t i = 0; i < end; ++i) lo = std::min(lo, cps[k].t * cps[k].R[i] - base.t * base.R[i]);
    }
    comparisons.push_back({t, lo});
  }
  return {detail::lower_bound_series(std::move(slopes), tol), detail::lower_bound_series(std::move(comparisons), tol)};
}

struct BarrierReport {
  /// min(u - exp(-w)) over the active ball.
  CheckSeries barrier;
  /// max over nodes of |int_0^t R + C(n) log u|.
  std::vector<SeriesPoint> log_identity;
  double log_identity_max = 0.0;
  /// max over nodes of int_0^t R - C(n) w; the ledger holds when <= 0.
  std::vector<SeriesPoint> ledger;
  double ledger_max = -std::numeric_limits<double>::infinity();
  /// int_0^t R dtau per checkpoint (trapezoid), kept for the decay chain.
  std::vector<std::vector<double>> integrated;
};

inline BarrierReport barrier_and_logintegral_check(const Trajectory& traj, const ScalarField& w,
                                                   const ConformalMetric& m) {
  require(w.domain() == traj.domain() && m.domain() == traj.domain(), ErrorKind::invalid_input,
          "barrier inputs live on different grids");
  const double C = m.log_barrier_constant();
  const auto& cps = traj.checkpoints;
  const std::size_t active = traj.boundary_node;
  BarrierReport rep;
  std::vector<double> running(w.size(), 0.0);
  std::vector<SeriesPoint> margins;
  for (std::size_t k = 0; k < cps.size(); ++k) {
    if (k > 0) {
      const double dt = cps[k].t - cps[k - 1].t;
      for (std::size_t i = 0; i < running.size(); ++i) running[i] += 0.5 * dt * (cps[k - 1].R[i] + cps[k].R[i]);
    }
    const auto& u = cps[k].u;
    double margin = std::numeric_limits<double>::infinity(), ident = 0.0;
    double ledger = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < active; ++i) {
      margin = std::min(margin, u[i] - std::exp(-w[i]));
      ident = std::max(ident, std::abs(running[i] + C * std::log(u[i])));
      ledger = std::max(ledger, running[i] - C * w[i]);
    }
    margins.push_back({cps[k].t, margin});
    rep.log_identity.push_back({cps[k].t, ident});
    rep.log_identity_max = std::max(rep.log_identity_max, ident);
    rep.ledger.push_back({cps[k].t, ledger});
    rep.ledger_max = std::max(rep.ledger_max, ledger);
    rep.integrated.push_back(running);
  }
  rep.barrier = detail::lower_bound_series(std::move(margins), 0.0);
  // strict: the barrier must hold with a positive margin
  rep.barrier.violated = rep.barrier.worst <= 0.0;
  return rep;
}

struct DecayOptions {
  /// Times t (>= e) where sqrt(t) R(sqrt t) log t <= C(n) w is checked; each sqrt(t) must be a checkpoint.
  std::vector<double> times{std::exp(1.0), std::exp(2.0)};
  /// Times tau for the trend tau max R(tau); empty means the last three checkpoints.
  std::vector<double> trend_times;
  std::size_t margin = 3;
  double core = 1.0;
  double tolerance = -1.0;
};

struct DecayReport {
  /// max over nodes of sqrt(t) R(x, sqrt t) log t - C(n) w(x), one point per t.
  std::vector<SeriesPoint> bound;
  double bound_max = -std::numeric_limits<double>::infinity();
  /// Same with 2 C(n) w, the constant the monotone-tR chain actually delivers.
  double chain_bound_max = -std::numeric_limits<double>::infinity();
  double tolerance = 0.0;
  bool violated = false;
  /// tau max R(tau) at the trend times, and whether it strictly decreases.
  std::vector<SeriesPoint> trend;
  bool trend_decreasing = true;
};

inline DecayReport decay_check(const Trajectory& traj, const ScalarField& w, const DecayOptions& options = {}) {
  require(w.domain() == traj.domain(), ErrorKind::invalid_input, "potential lives on a different grid");
  const auto& cps = traj.checkpoints;
  const double e = std::exp(1.0);
  require(cps.back().t >= e * (1.0 - 1e-12), ErrorKind::insufficient_horizon, "decay check needs t_end >= e");
  const int n = traj.domain().dim();
  const double C = 4.0 / static_cast<double>(n - 2);
  const std::size_t end = traj.evaluation_end(options.margin, options.core);
  DecayReport rep;
  rep.tolerance = detail::resolve_tolerance(traj, options.tolerance);
  for (double t : options.times) {
    require(t >= e * (1.0 - 1e-12), ErrorKind::invalid_time, "decay bound is stated for t >= e");
    const auto& cp = cps[detail::checkpoint_at(traj, std::sqrt(t))];
    double worst = -std::numeric_limits<double>::infinity(), chain = worst;
    for (std::size_t i = 0; i < end; ++i) {
      const double lhs = cp.t * cp.R[i] * std::log(t);
      worst = std::max(worst, lhs - C * w[i]);
      chain = std::max(chain, lhs - 2.0 * C * w[i]);
    }
    rep.bound.push_back({t, worst});
    rep.bound_max = std::max(rep.bound_max, worst);
    rep.chain_bound_max = std::max(rep.chain_bound_max, chain);
  }
  rep.violated = rep.bound_max > rep.tolerance;

  std::vector<std::size_t> ks;
  if (options.trend_times.empty()) {
    for (std::size_t k = cps.size() >= 3 ? cps.size() - 3 : 0; k < cps.size(); ++k) ks.push_back(k);
  } else {
    for (double t : options.trend_times) ks.push_back(detail::checkpoint_at(traj, t));
  }
  for (std::size_t k : ks) {
    double mx = 0.0;
    for (std::size_t i = 0; i < end; ++i) mx = std::max(mx, cps[k].R[i]);
    rep.trend.push_back({cps[k].t, cps[k].t * mx});
  }
  for (std::size_t m = 1; m < rep.trend.size(); ++m) {
    const double a = rep.trend[m - 1].value, b = rep.trend[m].value;
    if (!(b < a || (a == 0.0 && b == 0.0))) rep.trend_decreasing = false;
  }
  return rep;
}

struct SchrodingerOptions {
  /// Residual gate on -Delta_{g0} v + c_n R0 v; negative means 5 h^2 (1 + max |c_n R0|).
  double residual_tolerance = -1.0;
};

struct SchrodingerReport {
  double residual = 0.0;
  double residual_tolerance = 0.0;
  /// min(u - v) over the active ball per checkpoint; violated when any margin <= 0.
  CheckSeries margins;
};

/// -Delta_{g0} v + c_n R0 v on all nodes but the chart edge, sup norm.
inline double schrodinger_residual(const ScalarField& v, const ConformalMetric& base, const ScalarField& R0) {
  const auto lap = laplace_beltrami(base, v);
  const double c = base.coupling();
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) worst = std::max(worst, std::abs(-lap[i] + c * R0[i] * v[i]));
  return worst;
}

inline SchrodingerReport schrodinger_compare(const Trajectory& traj, const ScalarField& v, const ConformalMetric& base,
                                             const ScalarField& R0, const SchrodingerOptions& options = {}) {
  require(v.domain() == traj.domain() && R0.domain() == traj.domain(), ErrorKind::invalid_input,
          "comparison inputs live on different grids");
  SchrodingerReport rep;
  const double h = traj.domain().h();
  rep.residual_tolerance = options.residual_tolerance >= 0.0
                               ? options.residual_tolerance
                               : 5.0 * h * h * (1.0 + base.coupling() * R0.max_abs());
  require(v.min() > 0.0 && v.max() <= 1.0, ErrorKind::not_a_solution, "v must take values in (0, 1]");
  rep.residual = schrodinger_residual(v, base, R0);
  if (rep.residual > rep.residual_tolerance) {
    throw Error(ErrorKind::not_a_solution, "v fails the Schrodinger equation: residual " +
                                               std::to_string(rep.residual) + " above " +
                                               std::to_string(rep.residual_tolerance));
  }
  std::vector<SeriesPoint> pts;
  for (const auto& cp : traj.checkpoints) {
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < traj.boundary_node; ++i) lo = std::min(lo, cp.u[i] - v[i]);
    pts.push_back({cp.t, lo});
  }
  rep.margins = detail::lower_bound_series(std::move(pts), 0.0);
  rep.margins.violated = rep.margins.worst <= 0.0;
  return rep;
}

struct PinchingReport {
  /// +infinity when R vanishes (to the floor) everywhere.
  double epsilon = std::numeric_limits<double>::infinity();
  double min_ricci_eigenvalue = 0.0;
  /// The smallest Ricci eigenvalue is negative somewhere.
  bool hypothesis_violated = false;
};

/// Largest eps with Rc >= eps R g at nodes where R exceeds max(1e-12 max R, 1e-10).
inline PinchingReport pinching_report(const ConformalMetric& m, std::size_t margin = 1) {
  const auto R = scalar_curvature(m);
  const auto ricci = ricci_conformal(m);
  const auto lo = ricci.min_eigenvalue();
  // absolute part: a resampled flat factor carries curvature noise near 1e-14
  const double floor = std::max(detail::curvature_floor(R, 1e-12), 1e-10);
  PinchingReport rep;
  rep.min_ricci_eigenvalue = std::numeric_limits<double>::infinity();
  const std::size_t end = R.size() > margin ? R.size() - margin : 0;
  for (std::size_t i = 0; i < end; ++i) {
    rep.min_ricci_eigenvalue = std::min(rep.min_ricci_eigenvalue, lo[i]);
    if (R[i] > floor && R.max() > 0.0) rep.epsilon = std::min(rep.epsilon, lo[i] / R[i]);
  }
  // rounding-level negatives on flat regions do not count
  rep.hypothesis_violated = rep.min_ricci_eigenvalue < -1e-9 * std::max(1.0, R.max_abs());
  if (rep.hypothesis_violated) rep.epsilon = std::min(rep.epsilon, 0.0);
  return rep;
}

inline double pinching_epsilon(const ConformalMetric& m) { return pinching_report(m).epsilon; }

}  // namespace confflow
