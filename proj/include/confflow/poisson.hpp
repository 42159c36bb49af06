#pragma once

// Potentials w = int G(x,y) f(y) dv on radial model manifolds, and the
// growth integrals that decide whether they exist.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "confflow/error.hpp"
#include "confflow/geometry.hpp"
#include "confflow/quadrature.hpp"

namespace confflow {

/// Flat Green function of -Delta on R^n: G = |x-y|^{2-n} / ((n-2) omega_{n-1}).
struct GreenKernel {
  int n;

  double normalization() const { return 1.0 / (static_cast<double>(n - 2) * sphere_area(n)); }

  double operator()(double distance) const {
    require(n >= 3, ErrorKind::precondition, "Green kernel needs n >= 3");
    require(distance > 0.0, ErrorKind::singularity, "Green kernel evaluated on the diagonal");
    return normalization() * std::pow(distance, 2.0 - static_cast<double>(n));
  }
};

inline double green_kernel(int n, double distance) { return GreenKernel{n}(distance); }

struct TailOptions {
  /// Convergence threshold on the tail uncertainty relative to the total.
  double tolerance = 1e-3;
  /// The power law is fitted on [s_end / window, s_end].
  double window = 2.0;
  /// A second, wider fit whose disagreement measures the tail uncertainty.
  double wide_window = 10.0;
};

/// Truncated improper integral plus a power-law model of what lies beyond.
struct AverageConditionReport {
  double value_at_rmax = 0.0;
  double tail_estimate = 0.0;
  double tail_exponent = std::numeric_limits<double>::infinity();
  double tail_uncertainty = 0.0;
  bool converged = true;

  double total() const { return value_at_rmax + tail_estimate; }
};

namespace detail {

// Integral of uniformly sampled g over [a, b] (both within the samples),
// using the O(h^4) running quadrature started a few nodes below a.
inline double integral_between(std::span<const double> g, double h, double a, double b) {
  const auto first = static_cast<std::size_t>(std::max(0.0, std::floor(a / h) - 1.0));
  const std::size_t start = std::min(first, g.size() - 4);
  const auto sub = g.subspan(start);
  const auto running = quadrature::cumulative(sub, h);
  const double x0 = static_cast<double>(start) * h;
  return quadrature::interpolate(running, x0, h, b) - quadrature::interpolate(running, x0, h, a);
}

inline AverageConditionReport close_tail(double value, std::span<const double> s, std::span<const double> integrand,
                                         double s_end, const TailOptions& options) {
  AverageConditionReport report;
  report.value_at_rmax = value;
  const auto fit = quadrature::fit_power_tail(s, integrand, options.window);
  const auto wide = quadrature::fit_power_tail(s, integrand, options.wide_window);
  report.tail_exponent = fit.q;
  if (fit.c == 0.0) return report;
  if (!fit.integrable() || fit.q <= 1.0 + 1e-9) {
    report.tail_estimate = std::numeric_limits<double>::infinity();
    report.tail_uncertainty = std::numeric_limits<double>::infinity();
    report.converged = false;
    return report;
  }
  report.tail_estimate = fit.tail_from(s_end);
  report.tail_uncertainty = std::abs(wide.tail_from(s_end) - report.tail_estimate);
  report.converged = report.tail_uncertainty <= options.tolerance * std::abs(report.total());
  return report;
}

inline void require_radial(const ConformalMetric& m) {
  require(m.domain().mode() == DomainMode::radial, ErrorKind::invalid_domain, "radial mode required");
}

inline void require_nonnegative(const ScalarField& f) {
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] < 0.0) throw Error(ErrorKind::precondition, "source is negative at node " + std::to_string(i));
  }
}

// mass(r) = int_{B(r)} f dv_g on every radial node.
inline std::vector<double> enclosed_mass(const RadialMeasure& measure, const ScalarField& f) {
  return measure.enclosed(f.values());
}

}  // namespace detail

namespace detail {

// Potential generated beyond the chart edge: int_{s_end}^inf mass(s) / A(s) ds.
// Models 1/A ~ b s^{-beta} and the source density per unit s, f A ~ a s^{-alpha};
// the mass already enclosed contributes mass_end * int 1/A exactly within that model.
inline double exterior_potential(const RadialMeasure& measure, const ScalarField& f, double mass_end,
                                 const TailOptions& options) {
  const std::size_t count = measure.area.size();
  std::vector<double> inv_area(count, 0.0), density(count, 0.0);
  for (std::size_t i = 1; i < count; ++i) {
    inv_area[i] = 1.0 / measure.area[i];
    density[i] = f[i] * measure.area[i];
  }
  const auto area_fit = quadrature::fit_power_tail(measure.geodesic, inv_area, options.window);
  const double s_end = measure.s_max();
  if (!area_fit.integrable() || area_fit.q <= 1.0 + 1e-9) {
    if (mass_end == 0.0 && f.max_abs() == 0.0) return 0.0;
    throw Error(ErrorKind::divergent_potential, "ends are too thin for a positive Green function");
  }
  double tail = mass_end * area_fit.tail_from(s_end);
  const auto source_fit = quadrature::fit_power_tail(measure.geodesic, density, options.window);
  if (source_fit.c == 0.0) return tail;
  const double beta = area_fit.q, alpha = source_fit.q;
  if (!std::isfinite(alpha)) return tail;
  if (alpha + beta <= 2.0 + 1e-9) {
    throw Error(ErrorKind::divergent_potential,
                "potential tail does not converge (source decay exponent " + std::to_string(alpha) + ")");
  }
  // anchored on the last samples rather than on c, which overflows for steep fits
  tail += density.back() * inv_area.back() * s_end * s_end / ((beta - 1.0) * (alpha + beta - 2.0));
  return tail;
}

}  // namespace detail

/// Nonnegative solution of -Delta_g w = f for a radial source on a radial metric.
///
/// Integrates dw/ds = -mass(s)/A(s) inwards from the chart edge; the part of
/// the potential generated beyond the chart comes from power-law models of the
/// area and the source there. For the flat metric this equals the Green convolution.
inline ScalarField solve_poisson(const ConformalMetric& m, const ScalarField& f, const TailOptions& options = {}) {
  detail::require_radial(m);
  require(m.domain() == f.domain(), ErrorKind::invalid_input, "metric and source live on different domains");
  detail::require_nonnegative(f);
  const auto measure = radial_measure(m);
  const auto mass = detail::enclosed_mass(measure, f);
  const std::size_t count = mass.size();

  std::vector<double> slope(count, 0.0);  // -dw/dr
  for (std::size_t i = 1; i < count; ++i) slope[i] = mass[i] / measure.area[i] * measure.stretch[i];
  const double tail = detail::exterior_potential(measure, f, mass.back(), options);
  const auto running = quadrature::cumulative(slope, m.domain().h());
  std::vector<double> w(count);
  for (std::size_t i = 0; i < count; ++i) w[i] = running.back() - running[i] + tail;
  return ScalarField(m.domain(), std::move(w));
}

/// int_0^{R} (s / Vol(s)) int_{B(s)} f dv ds about the chart origin, R geodesic.
inline AverageConditionReport average_integral(const ConformalMetric& m, const ScalarField& f, double r_max_int,
                                               const TailOptions& options = {}) {
  detail::require_radial(m);
  require(m.domain() == f.domain(), ErrorKind::invalid_input, "metric and source live on different domains");
  detail::require_nonnegative(f);
  require(r_max_int > 0.0, ErrorKind::invalid_range, "integration radius must be positive");
  const auto measure = radial_measure(m);
  const double r_end = measure.chart_radius(r_max_int);
  const auto mass = detail::enclosed_mass(measure, f);
  const std::size_t count = mass.size();

  std::vector<double> integrand(count, 0.0);  // with respect to s
  std::vector<double> chart(count, 0.0);      // with respect to r
  for (std::size_t i = 1; i < count; ++i) {
    if (!(measure.volume[i] > 0.0)) throw Error(ErrorKind::degenerate_metric, "ball volume vanishes");
    integrand[i] = measure.geodesic[i] * mass[i] / measure.volume[i];
    chart[i] = integrand[i] * measure.stretch[i];
  }
  const double value = detail::integral_between(chart, m.domain().h(), 0.0, r_end);

  const std::size_t last = std::min(count - 1, static_cast<std::size_t>(std::floor(r_end / m.domain().h() + 1e-9)));
  const std::span<const double> s(measure.geodesic.data(), last + 1);
  const std::span<const double> y(integrand.data(), last + 1);
  return detail::close_tail(value, s, y, r_max_int, options);
}

/// int_1^{R} s / Vol(s) ds; convergence certifies non-parabolicity.
inline AverageConditionReport volume_growth_integral(const ConformalMetric& m, double r_max_int,
                                                     const TailOptions& options = {}) {
  detail::require_radial(m);
  require(r_max_int > 1.0, ErrorKind::invalid_range, "volume growth integral needs r_max_int > 1");
  const auto measure = radial_measure(m);
  const double r_start = measure.chart_radius(1.0);
  const double r_end = measure.chart_radius(r_max_int);
  const std::size_t count = measure.volume.size();
  std::vector<double> integrand(count, 0.0);
  std::vector<double> chart(count, 0.0);
  for (std::size_t i = 1; i < count; ++i) {
    if (!(measure.volume[i] > 0.0)) throw Error(ErrorKind::degenerate_metric, "ball volume vanishes");
    integrand[i] = measure.geodesic[i] / measure.volume[i];
    chart[i] = integrand[i] * measure.stretch[i];
  }
  const double value = detail::integral_between(chart, m.domain().h(), r_start, r_end);
  const std::size_t last = std::min(count - 1, static_cast<std::size_t>(std::floor(r_end / m.domain().h() + 1e-9)));
  const std::span<const double> s(measure.geodesic.data(), last + 1);
  const std::span<const double> y(integrand.data(), last + 1);
  return detail::close_tail(value, s, y, r_max_int, options);
}

struct RatioStatistics {
  double min = std::numeric_limits<double>::infinity();
  double max = 0.0;
  std::size_t samples = 0;
  std::vector<double> ratios;
};

/// Ratios G(d) / int_d^inf s / Vol(s) ds for (geodesic distance, Green value) samples.
inline RatioStatistics liyau_bound_check(const ConformalMetric& m, std::span<const std::pair<double, double>> samples,
                                         const TailOptions& options = {}) {
  detail::require_radial(m);
  const auto measure = radial_measure(m);
  const std::size_t count = measure.volume.size();
  std::vector<double> integrand(count, 0.0);
  std::vector<double> chart(count, 0.0);
  for (std::size_t i = 1; i < count; ++i) {
    integrand[i] = measure.geodesic[i] / measure.volume[i];
    chart[i] = integrand[i] * measure.stretch[i];
  }
  const auto fit = quadrature::fit_power_tail(measure.geodesic, integrand, options.window);
  if (!fit.integrable() || fit.q <= 1.0 + 1e-9) {
    throw Error(ErrorKind::divergent_potential, "comparison integral diverges: the metric looks parabolic");
  }
  const double tail = fit.tail_from(measure.s_max());
  RatioStatistics stats;
  for (const auto& [distance, green] : samples) {
    require(distance > 0.0, ErrorKind::singularity, "sample on the diagonal");
    const double r = measure.chart_radius(distance);
    const double comparison = detail::integral_between(chart, m.domain().h(), r, m.domain().r_max()) + tail;
    const double ratio = green / comparison;
    stats.ratios.push_back(ratio);
    stats.min = std::min(stats.min, ratio);
    stats.max = std::max(stats.max, ratio);
    ++stats.samples;
  }
  return stats;
}

/// w(origin) against C times the average-condition integral of the same source.
struct FubiniBound {
  double potential_at_origin = 0.0;
  double average_value = 0.0;
  double constant = 1.0;
  bool holds = true;
};

inline FubiniBound fubini_chain_check(const ConformalMetric& m, const ScalarField& f, const TailOptions& options = {}) {
  const auto measure = radial_measure(m);
  const auto average = average_integral(m, f, measure.s_max(), options);
  require(average.converged, ErrorKind::precondition, "average condition integral has not converged");
  const auto w = solve_poisson(m, f, options);
  FubiniBound out;
  out.potential_at_origin = w[0];
  out.average_value = average.total();
  out.holds = out.potential_at_origin <= out.constant * out.average_value * (1.0 + 1e-12) + 1e-300;
  return out;
}

}  // namespace confflow
