#pragma once

// Orchestration: hypotheses -> Poisson potential -> exhaustion flow -> diagnostics -> files.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "confflow/scenario.hpp"

namespace confflow {

inline constexpr const char* kVersion = "0.1.0";

struct CheckResult {
  std::string name;
  /// pass | fail | report-only | skipped
  std::string status;
  bool asserted = false;
  /// Hypotheses the check is asserted under.
  std::vector<std::string> requires_hypotheses;
  std::string reason;
  double worst = std::numeric_limits<double>::quiet_NaN();
  double tolerance = std::numeric_limits<double>::quiet_NaN();
  /// The value must stay below (upper) or above (lower) the tolerance.
  std::string sense;
  std::string csv;
  Json extra = Json::object();
};

struct RunResult {
  std::string verdict;
  int exit_status = 0;
  HypothesisReport hypotheses;
  std::vector<CheckResult> checks;
  ExhaustionResult exhaustion;
  std::optional<ScalarField> w;
  Json summary;
};

struct RunOptions {
  unsigned jobs = 1;
  /// Skip writing files (the result is still returned).
  bool write = true;
};

namespace detail {

inline std::string time_label(double t) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "t_%.6f", t);
  return buf;
}

inline std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline double nan() { return std::numeric_limits<double>::quiet_NaN(); }

inline Json num(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

/// Resolves the status of a check from its gate and its outcome.
inline void settle(CheckResult& c, const HypothesisReport& hyp, bool violated) {
  bool gated_in = true;
  std::vector<std::string> missing;
  for (const auto& h : c.requires_hypotheses) {
    if (!hyp.passed(h)) {
      gated_in = false;
      missing.push_back(h);
    }
  }
  c.asserted = gated_in;
  if (!gated_in) {
    c.status = "report-only";
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    c.reason = "hypotheses unmet: " + list;
    return;
  }
  c.status = violated ? "fail" : "pass";
}

inline CheckResult skipped(std::string name, std::string reason) {
  CheckResult c;
  c.name = std::move(name);
  c.status = "skipped";
  c.reason = std::move(reason);
  return c;
}

inline std::vector<std::vector<double>> series_rows(const std::vector<SeriesPoint>& pts) {
  std::vector<std::vector<double>> rows;
  for (const auto& p : pts) rows.push_back({p.t, p.value});
  return rows;
}

}  // namespace detail

inline Json to_json(const CheckResult& c) {
  Json j;
  j["name"] = c.name;
  j["status"] = c.status;
  j["asserted"] = c.asserted;
  j["requires"] = c.requires_hypotheses;
  j["worst"] = detail::num(c.worst);
  j["tolerance"] = detail::num(c.tolerance);
  j["sense"] = c.sense;
  j["reason"] = c.reason;
  j["csv"] = c.csv.empty() ? Json(nullptr) : Json(c.csv);
  j["extra"] = c.extra;
  return j;
}

/// Runs the pipeline. With options.write, every artifact lands under out_dir.
inline RunResult run_scenario(const Scenario& s, const std::filesystem::path& out_dir, const RunOptions& options = {}) {
  const auto wall_start = std::chrono::steady_clock::now();
  const std::string started = detail::utc_now();
  io::ArtifactWriter out(out_dir);
  auto emit_csv = [&](const std::string& rel, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
    if (options.write) out.csv(rel, header, rows);
  };
  auto emit_json = [&](const std::string& rel, const Json& j) {
    if (options.write) out.json(rel, j);
  };

  RunResult res;
  const auto profile = build_profile(s);
  const auto& base = profile.base;
  const Domain& dom = base.domain();
  const int n = s.n;
  res.hypotheses = validate_hypotheses(s, profile);
  const auto& hyp = res.hypotheses;

  // Poisson potential of c_n R0; the barrier is exp(-w)
  std::string w_error;
  try {
    res.w = solve_poisson(base, profile.R0.map([c = base.coupling()](double x) { return c * x; }));
  } catch (const Error& e) {
    w_error = e.what();
  }

  const auto times = s.checkpoints();
  const FlowProblem problem(base, profile.R0, profile.initial);
  const ExhaustionLadder ladder(dom, s.ladder);
  res.exhaustion = run_exhaustion(problem, ladder, times, s.dt, {s.diagnostics.compact_radius, options.jobs});
  const auto& ex = res.exhaustion;
  const Trajectory& tr = ex.trajectories.back();
  const double spacing = checkpoint_spacing(tr);
  const double default_tol = default_tolerance(s.h, spacing);
  const auto& D = s.diagnostics;
  const std::size_t eval_end = tr.evaluation_end(D.margin, D.core);
  const auto& cps = tr.checkpoints;
  const std::size_t K = cps.size();

  const std::vector<std::string> barrier_gate{"potential_nonnegative", "bounded_curvature", "average_condition",
                                              "volume_growth"};
  // parabolic charts put the Dirichlet cut a short geodesic distance from the core
  const std::vector<std::string> harnack_gate{"potential_nonnegative", "bounded_curvature", "ricci_nonnegative",
                                              "curvature_consistent", "volume_growth"};
  const std::vector<std::string> residual_gate{"potential_nonnegative", "bounded_curvature", "volume_growth"};
  const std::vector<std::string> sign_gate{"potential_nonnegative"};

  // per-checkpoint records, NaN where a quantity is not defined
  enum Col { barrier_c, harnack_c, traced_c, slope_c, decay_c, schrod_c, logid_c, residual_c, ncols };
  std::vector<std::array<double, ncols>> records(K);
  for (auto& r : records) r.fill(detail::nan());
  auto record = [&](Col c, const std::vector<SeriesPoint>& pts) {
    for (const auto& p : pts) {
      if (const auto k = tr.find(p.t)) records[*k][c] = p.value;
    }
  };

  auto& checks = res.checks;

  // -- barrier family
  if (D.barrier) {
    CheckResult up;
    up.name = "upper_bound";
    up.requires_hypotheses = sign_gate;
    up.sense = "upper";
    up.tolerance = 1.0 + 1e-12;
    up.worst = -std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> rows;
    for (const auto& cp : cps) {
      const double mx = cp.u.max();
      up.worst = std::max(up.worst, mx);
      rows.push_back({cp.t, mx});
    }
    up.csv = "diagnostics/upper_bound.csv";
    emit_csv(up.csv, {"t", "max_u"}, rows);
    detail::settle(up, hyp, up.worst > up.tolerance);
    checks.push_back(up);

    CheckResult pos;
    pos.name = "positive_curvature";
    pos.requires_hypotheses = sign_gate;
    pos.sense = "lower";
    // far out, where R0 has underflowed, R is zero up to rounding
    pos.tolerance = -1e-9 * std::max(1.0, profile.R0.max_abs());
    pos.worst = std::numeric_limits<double>::infinity();
    rows.clear();
    for (const auto& cp : cps) {
      if (cp.t < 0.01) continue;
      double lo = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < eval_end; ++i) lo = std::min(lo, cp.R[i]);
      pos.worst = std::min(pos.worst, lo);
      rows.push_back({cp.t, lo});
    }
    pos.csv = "diagnostics/positive_curvature.csv";
    emit_csv(pos.csv, {"t", "min_R"}, rows);
    detail::settle(pos, hyp, !(pos.worst >= pos.tolerance));
    checks.push_back(pos);
  }

  const auto w_or_zero = res.w ? *res.w : ScalarField::constant(dom, 0.0);
  const auto bar = barrier_and_logintegral_check(tr, w_or_zero, base);
  record(logid_c, bar.log_identity);
  {
    CheckResult c;
    c.name = "log_identity";
    c.sense = "upper";
    c.worst = bar.log_identity_max;
    c.tolerance = s.tolerances.log_identity.value_or(default_tol);
    c.csv = "diagnostics/log_identity.csv";
    emit_csv(c.csv, {"t", "max_abs_defect"}, detail::series_rows(bar.log_identity));
    detail::settle(c, hyp, c.worst > c.tolerance);
    checks.push_back(c);
  }
  if (D.barrier) {
    if (!res.w) {
      checks.push_back(detail::skipped("barrier", "no potential: " + w_error));
      checks.push_back(detail::skipped("ledger", "no potential: " + w_error));
    } else {
      record(barrier_c, bar.barrier.points);
      CheckResult c;
      c.name = "barrier";
      c.requires_hypotheses = barrier_gate;
      c.sense = "lower";
      c.worst = bar.barrier.worst;
      c.tolerance = 0.0;
      c.csv = "diagnostics/barrier.csv";
      emit_csv(c.csv, {"t", "min_margin"}, detail::series_rows(bar.barrier.points));
      // strict unless the source vanishes, where u = exp(-w) = 1
      const bool trivial = profile.R0.max_abs() == 0.0;
      if (trivial) c.tolerance = -1e-12;
      detail::settle(c, hyp, trivial ? c.worst < c.tolerance : bar.barrier.violated);
      checks.push_back(c);

      CheckResult l;
      l.name = "ledger";
      l.requires_hypotheses = barrier_gate;
      l.sense = "upper";
      l.worst = bar.ledger_max;
      l.tolerance = s.tolerances.log_identity.value_or(default_tol);
      l.csv = "diagnostics/ledger.csv";
      emit_csv(l.csv, {"t", "max_integral_minus_Cw"}, detail::series_rows(bar.ledger));
      detail::settle(l, hyp, l.worst > l.tolerance);
      checks.push_back(l);
    }
  }

  // -- evolution identity
  if (D.residual) {
    ResidualOptions ro;
    ro.t_min = D.residual_t_min;
    ro.margin = D.margin;
    ro.core = D.core;
    try {
      const auto series = scalar_evolution_residual(tr, base, ro);
      ro.flat_laplacian = true;
      const auto control = scalar_evolution_residual(tr, base, ro);
      CheckResult c;
      c.name = "evolution_residual";
      c.requires_hypotheses = residual_gate;
      c.sense = "upper";
      c.worst = max_residual(series);
      c.tolerance = s.tolerances.residual.value_or(default_tol);
      std::vector<std::vector<double>> rows;
      std::vector<SeriesPoint> pts;
      for (std::size_t m = 0; m < series.size(); ++m) {
        rows.push_back({series[m].t, series[m].dt, series[m].residual, control[m].residual});
        pts.push_back({series[m].t, series[m].residual});
      }
      record(residual_c, pts);
      c.extra["control_max"] = max_residual(control);
      c.extra["control_separated"] = max_residual(control) > 10.0 * c.tolerance;
      c.extra["t_min"] = D.residual_t_min;
      c.csv = "diagnostics/evolution_residual.csv";
      emit_csv(c.csv, {"t", "dt", "residual", "flat_laplacian_control"}, rows);
      detail::settle(c, hyp, c.worst > c.tolerance);
      checks.push_back(c);
    } catch (const Error& e) {
      checks.push_back(detail::skipped("evolution_residual", e.what()));
    }
  }

  // -- Harnack and monotonicity
  if (D.harnack) {
    HarnackOptions ho;
    ho.margin = D.margin;
    ho.core = D.core;
    ho.tolerance = s.tolerances.harnack.value_or(-1.0);
    const auto traced = traced_harnack_check(tr, base, ho);
    const auto z = harnack_series(tr, base, HarnackForm::minus_dlogR(), ho);
    record(traced_c, traced.points);
    record(harnack_c, z.points);
    for (const auto* sr : {&traced, &z}) {
      CheckResult c;
      c.name = sr == &traced ? "harnack_traced" : "harnack_Z";
      c.requires_hypotheses = harnack_gate;
      c.sense = "lower";
      c.worst = sr->worst;
      c.tolerance = -sr->tolerance;
      c.csv = "diagnostics/" + c.name + ".csv";
      emit_csv(c.csv, {"t", "min_value"}, detail::series_rows(sr->points));
      detail::settle(c, hyp, sr->violated);
      checks.push_back(c);
    }
  }
  if (D.monotone) {
    MonotoneOptions mo;
    mo.margin = D.margin;
    mo.core = D.core;
    mo.tolerance = s.tolerances.monotone.value_or(-1.0);
    mo.compare_at.clear();
    for (double t : D.compare_at) {
      if (t <= s.t_end + 1e-12) mo.compare_at.push_back(t);
    }
    try {
      const auto m = monotone_tR_check(tr, mo);
      record(slope_c, m.slopes.points);
      CheckResult c;
      c.name = "monotone_slope";
      c.requires_hypotheses = harnack_gate;
      c.sense = "lower";
      c.worst = m.slopes.worst;
      c.tolerance = -m.slopes.tolerance;
      c.csv = "diagnostics/monotone_slope.csv";
      emit_csv(c.csv, {"t", "min_slope"}, detail::series_rows(m.slopes.points));
      detail::settle(c, hyp, m.slopes.violated);
      checks.push_back(c);
      if (mo.compare_at.empty()) {
        checks.push_back(detail::skipped("monotone_comparison", "no comparison time within the horizon"));
      } else {
        CheckResult k;
        k.name = "monotone_comparison";
        k.requires_hypotheses = harnack_gate;
        k.sense = "lower";
        k.worst = m.comparisons.worst;
        k.tolerance = -m.comparisons.tolerance;
        k.csv = "diagnostics/monotone_comparison.csv";
        emit_csv(k.csv, {"t", "min_difference"}, detail::series_rows(m.comparisons.points));
        detail::settle(k, hyp, m.comparisons.violated);
        checks.push_back(k);
      }
    } catch (const Error& e) {
      checks.push_back(detail::skipped("monotone_slope", e.what()));
    }
  }

  // -- decay chain
  if (D.decay) {
    if (!res.w) {
      checks.push_back(detail::skipped("decay_bound", "no potential: " + w_error));
    } else if (s.t_end < std::exp(1.0) * (1.0 - 1e-12)) {
      checks.push_back(detail::skipped("decay_bound", "insufficient-horizon: t_end < e"));
    } else {
      DecayOptions dop;
      dop.margin = D.margin;
      dop.core = D.core;
      dop.tolerance = s.tolerances.decay.value_or(-1.0);
      dop.times.clear();
      for (double t : D.decay_times) {
        if (std::sqrt(t) <= s.t_end + 1e-12) dop.times.push_back(t);
      }
      try {
        const auto d = decay_check(tr, *res.w, dop);
        CheckResult c;
        c.name = "decay_bound";
        c.requires_hypotheses = barrier_gate;
        c.sense = "upper";
        c.worst = d.bound_max;
        c.tolerance = d.tolerance;
        c.extra["chain_bound_max"] = detail::num(d.chain_bound_max);
        c.csv = "diagnostics/decay_bound.csv";
        emit_csv(c.csv, {"t", "max_lhs_minus_Cw"}, detail::series_rows(d.bound));
        detail::settle(c, hyp, d.violated);
        checks.push_back(c);

        CheckResult tcheck;
        tcheck.name = "decay_trend";
        tcheck.requires_hypotheses = barrier_gate;
        tcheck.sense = "decreasing";
        tcheck.worst = d.trend.empty() ? detail::nan() : d.trend.back().value;
        tcheck.csv = "diagnostics/decay_trend.csv";
        emit_csv(tcheck.csv, {"t", "t_max_R"}, detail::series_rows(d.trend));
        detail::settle(tcheck, hyp, !d.trend_decreasing);
        checks.push_back(tcheck);
      } catch (const Error& e) {
        checks.push_back(detail::skipped("decay_bound", e.what()));
      }
      // ratio sqrt(t) R(sqrt t) log t / (C w) at every checkpoint tau = sqrt(t) with t >= e
      const double C = 4.0 / static_cast<double>(n - 2);
      for (std::size_t k = 0; k < K; ++k) {
        const double tau = cps[k].t;
        if (tau * tau < std::exp(1.0) * (1.0 - 1e-12)) continue;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < eval_end; ++i) {
          mx = std::max(mx, tau * cps[k].R[i] * std::log(tau * tau) / (C * (*res.w)[i]));
        }
        records[k][decay_c] = mx;
      }
    }
  }

  // -- Schrodinger comparison
  if (D.schrodinger && profile.v) {
    SchrodingerOptions so;
    so.residual_tolerance = s.tolerances.schrodinger_residual.value_or(-1.0);
    CheckResult c;
    c.name = "schrodinger";
    c.requires_hypotheses = sign_gate;
    c.sense = "lower";
    c.tolerance = 0.0;
    try {
      const auto r = schrodinger_compare(tr, *profile.v, base, profile.R0, so);
      record(schrod_c, r.margins.points);
      c.worst = r.margins.worst;
      c.extra["residual"] = r.residual;
      c.extra["residual_tolerance"] = r.residual_tolerance;
      c.csv = "diagnostics/schrodinger.csv";
      emit_csv(c.csv, {"t", "min_u_minus_v"}, detail::series_rows(r.margins.points));
      detail::settle(c, hyp, r.margins.violated);
    } catch (const Error& e) {
      detail::settle(c, hyp, true);
      c.reason = e.what();
    }
    checks.push_back(c);
  }

  // -- exhaustion
  if (D.exhaustion) {
    std::vector<std::string> header{"t"};
    for (std::size_t j = 0; j + 1 < ex.trajectories.size(); ++j) {
      header.push_back("d_" + std::to_string(j) + "_" + std::to_string(j + 1));
    }
    header.push_back("decreasing");
    std::vector<std::vector<double>> rows;
    bool all = true;
    for (std::size_t k = 0; k < K; ++k) {
      std::vector<double> row{times[k]};
      for (const auto& d : ex.differences) row.push_back(d[k]);
      row.push_back(ex.decreasing[k] ? 1.0 : 0.0);
      rows.push_back(std::move(row));
      all = all && ex.decreasing[k];
    }
    emit_csv("exhaustion.csv", header, rows);
    if (ex.trajectories.size() < 3) {
      checks.push_back(detail::skipped("exhaustion", "needs at least three ladder domains"));
    } else {
      CheckResult c;
      c.name = "exhaustion";
      c.requires_hypotheses = sign_gate;
      c.sense = "decreasing";
      c.csv = "exhaustion.csv";
      double last = 0.0;
      for (const auto& d : ex.differences) last = d.back();
      c.worst = last;
      c.extra["compact_radius"] = ex.compact_radius;
      c.extra["monotone_violations"] = ex.monotone_violations;
      c.extra["max_monotone_excess"] = ex.max_monotone_excess;
      c.extra["limit_ratio"] = detail::num(ex.limit_ratio);
      c.extra["limit_correction"] = ex.limit_correction;
      detail::settle(c, hyp, !all);
      checks.push_back(c);
    }
  }

  // -- reported quantities
  if (D.pinching) {
    const auto p = pinching_report(base);
    CheckResult c;
    c.name = "pinching";
    c.status = "report-only";
    c.sense = "value";
    c.worst = p.epsilon;
    c.extra["epsilon"] = std::isfinite(p.epsilon) ? Json(p.epsilon) : Json("inf");
    c.extra["min_ricci_eigenvalue"] = p.min_ricci_eigenvalue;
    c.extra["hypothesis_violated"] = p.hypothesis_violated;
    checks.push_back(c);
  }
  if (D.liyau) {
    bool flat = true;
    for (double x : base.factor().values()) flat = flat && x == 1.0;
    if (!flat) {
      checks.push_back(detail::skipped("liyau", "the Green function is known in closed form only for flat bases"));
    } else {
      try {
        std::mt19937_64 rng(s.seed);
        const double hi = std::min(20.0, 0.5 * s.r_max), lo = std::min(0.5, 0.25 * hi);
        std::vector<std::pair<double, double>> samples;
        for (std::size_t m = 0; m < D.liyau_samples; ++m) {
          // 53 random bits mapped to [0, 1); portable across standard libraries
          const double x = static_cast<double>(rng() >> 11) * 0x1.0p-53;
          const double d = lo + (hi - lo) * x;
          samples.emplace_back(d, green_kernel(n, d));
        }
        const auto st = liyau_bound_check(base, samples);
        CheckResult c;
        c.name = "liyau";
        c.status = "report-only";
        c.sense = "value";
        c.worst = st.min;
        c.extra["ratio_min"] = st.min;
        c.extra["ratio_max"] = st.max;
        c.extra["expected"] = 1.0 / n;
        c.csv = "diagnostics/liyau.csv";
        std::vector<std::vector<double>> rows;
        for (std::size_t m = 0; m < samples.size(); ++m) {
          rows.push_back({samples[m].first, samples[m].second, st.ratios[m]});
        }
        emit_csv(c.csv, {"distance", "green", "ratio"}, rows);
        checks.push_back(c);
      } catch (const Error& e) {
        checks.push_back(detail::skipped("liyau", e.what()));
      }
    }
  }

  // -- verdict
  bool any_fail = false;
  for (const auto& c : checks) any_fail = any_fail || c.status == "fail";
  res.verdict = any_fail ? "fail" : (hyp.all_passed() ? "pass" : "hypotheses-unmet");
  res.exit_status = any_fail ? 1 : 0;

  if (!options.write) return res;

  // -- files
  emit_json("scenario.json", to_json(s));
  emit_json("hypotheses.json", to_json(hyp));
  {
    const auto R_base = scalar_curvature(base);
    std::vector<std::string> header{"r", "U0", "R0", "R_base", "u_initial"};
    if (res.w) header.push_back("w");
    if (profile.v) header.push_back("v");
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < dom.node_count(); ++i) {
      std::vector<double> row{dom.radius(i), base.factor()[i], profile.R0[i], R_base[i], profile.initial[i]};
      if (res.w) row.push_back((*res.w)[i]);
      if (profile.v) row.push_back((*profile.v)[i]);
      rows.push_back(std::move(row));
    }
    emit_csv("fields/initial.csv", header, rows);
  }

  Json traj_summary = Json::array();
  const auto snaps = s.snapshot_times();
  for (const auto& t : ex.trajectories) {
    const std::string dir = "trajectories/domain_" + std::to_string(t.domain_index) + "/";
    Json files = Json::array();
    for (double ts : snaps) {
      const auto k = t.find(ts);
      if (!k) continue;
      const auto& cp = t.checkpoints[*k];
      std::vector<std::vector<double>> rows;
      for (std::size_t i = 0; i < dom.node_count(); ++i) rows.push_back({dom.radius(i), cp.u[i], cp.R[i]});
      const std::string rel = dir + detail::time_label(ts) + ".csv";
      emit_csv(rel, {"r", "u", "R"}, rows);
      files.push_back(Json{{"t", cp.t}, {"path", rel}});
    }
    std::vector<std::vector<double>> rows;
    std::size_t steps = 0, rejections = 0;
    const std::size_t active = t.interior_end(D.margin);
    for (std::size_t k = 0; k < t.checkpoints.size(); ++k) {
      const auto& cp = t.checkpoints[k];
      double min_u = std::numeric_limits<double>::infinity(), max_R = -min_u, min_R = min_u;
      for (std::size_t i = 0; i < active; ++i) {
        min_u = std::min(min_u, cp.u[i]);
        max_R = std::max(max_R, cp.R[i]);
        min_R = std::min(min_R, cp.R[i]);
      }
      const StepStats st = k == 0 ? StepStats{} : t.stats[k - 1];
      steps += st.steps;
      rejections += st.rejections;
      rows.push_back({cp.t, cp.u[0], cp.R[0], min_u, min_R, max_R, static_cast<double>(st.steps),
                      static_cast<double>(st.rejections), k == 0 ? 0.0 : st.dt_min, st.dt_max});
    }
    const std::string series = dir + "series.csv";
    emit_csv(series, {"t", "u_origin", "R_origin", "min_u", "min_R", "max_R", "steps", "rejections", "dt_min", "dt_max"},
             rows);
    const auto& last = t.checkpoints.back();
    traj_summary.push_back(Json{{"domain_index", t.domain_index},
                                {"radius", t.radius},
                                {"boundary_node", t.boundary_node},
                                {"scheme", to_string(t.policy.scheme)},
                                {"checkpoints", t.checkpoints.size()},
                                {"steps", steps},
                                {"rejections", rejections},
                                {"final_t", last.t},
                                {"final_u_origin", last.u[0]},
                                {"final_R_origin", last.R[0]},
                                {"series", series},
                                {"snapshots", files}});
  }
  emit_json("trajectories/summary.json", Json{{"h", s.h}, {"n", n}, {"domains", traj_summary}});

  {
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < K; ++k) {
      std::vector<double> row{cps[k].t, static_cast<double>(tr.domain_index), s.h};
      row.insert(row.end(), records[k].begin(), records[k].end());
      rows.push_back(std::move(row));
    }
    emit_csv("diagnostics/records.csv",
             {"t", "domain_index", "h", "barrier_margin_min", "harnack_Z_min", "traced_harnack_min", "tR_slope_min",
              "decay_ratio_max", "schrodinger_margin_min", "log_identity_defect", "evolution_residual"},
             rows);
  }
  Json check_list = Json::array();
  for (const auto& c : checks) check_list.push_back(to_json(c));
  emit_json("diagnostics/report.json",
            Json{{"domain_index", tr.domain_index},
                 {"radius", tr.radius},
                 {"h", s.h},
                 {"checkpoint_spacing", spacing},
                 {"default_tolerance", default_tol},
                 {"evaluation_radius", dom.radius(eval_end > 0 ? eval_end - 1 : 0)},
                 {"potential_error", w_error.empty() ? Json(nullptr) : Json(w_error)},
                 {"checks", check_list},
                 {"records", "diagnostics/records.csv"}});

  const std::string finished = detail::utc_now();
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  emit_json("run_metadata.json", Json{{"started_at", started},
                                      {"finished_at", finished},
                                      {"wall_seconds", wall},
                                      {"jobs", options.jobs},
                                      {"version", kVersion}});

  Json brief = Json::array();
  for (const auto& c : checks) {
    brief.push_back(Json{{"name", c.name}, {"status", c.status}, {"worst", detail::num(c.worst)}});
  }
  Json summary;
  summary["name"] = s.name;
  summary["profile"] = s.profile;
  summary["verdict"] = res.verdict;
  summary["exit_status"] = res.exit_status;
  summary["all_asserted_checks_passed"] = !any_fail;
  summary["hypotheses_unmet"] = hyp.failed();
  summary["checks"] = brief;
  summary["artifacts"] = out.paths();
  summary["version"] = kVersion;
  res.summary = summary;
  emit_json("summary.json", summary);
  return res;
}

/// Error document written when a run aborts.
inline Json error_json(const std::string& kind, const std::string& message) {
  return Json{{"verdict", "error"}, {"error", Json{{"kind", kind}, {"message", message}}}};
}

}  // namespace confflow
