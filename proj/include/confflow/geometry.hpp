#pragma once

// Conformal calculus on a single flat chart: every metric is g = U^{4/(n-2)} delta.

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "confflow/domain.hpp"
#include "confflow/error.hpp"
#include "confflow/quadrature.hpp"

namespace confflow {

/// Area of the unit (n-1)-sphere in R^n.
inline double sphere_area(int n) {
  const double half = 0.5 * static_cast<double>(n);
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

/// g = U^{4/(n-2)} delta on the chart of U's domain.
class ConformalMetric {
 public:
  explicit ConformalMetric(ScalarField factor) : factor_(std::move(factor)) {
    const auto v = factor_.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!(v[i] > 0.0)) {
        throw Error(ErrorKind::degenerate_metric, "conformal factor is not positive at node " + std::to_string(i));
      }
    }
  }

  static ConformalMetric flat(const Domain& domain) { return ConformalMetric(ScalarField::constant(domain, 1.0)); }

  const Domain& domain() const noexcept { return factor_.domain(); }
  const ScalarField& factor() const noexcept { return factor_; }
  int dim() const noexcept { return domain().dim(); }

  /// (n+2)/(n-2)
  double p() const noexcept { return static_cast<double>(dim() + 2) / static_cast<double>(dim() - 2); }
  /// (n-2)/(4(n-1)), the coupling in front of the scalar curvature.
  double coupling() const noexcept { return static_cast<double>(dim() - 2) / (4.0 * static_cast<double>(dim() - 1)); }
  /// 4/(n-2), relating the time integral of R to -log u.
  double log_barrier_constant() const noexcept { return 4.0 / static_cast<double>(dim() - 2); }
  /// 4(n-1)/(n-2), the weight of the Laplacian in the conformal Laplacian.
  double conformal_laplacian_weight() const noexcept { return 1.0 / coupling(); }

  /// Pointwise e^{2 phi} = U^{4/(n-2)}.
  ScalarField weight() const {
    const double e = 4.0 / static_cast<double>(dim() - 2);
    return factor_.map([e](double u) { return std::pow(u, e); });
  }

  /// Composition: the metric (other * U)^{4/(n-2)} delta.
  ConformalMetric compose(const ScalarField& relative) const { return ConformalMetric(factor_ * relative); }

 private:
  ScalarField factor_;
};

namespace detail {

inline void require_stencil(const Domain& d) {
  require(d.per_axis() >= 5, ErrorKind::invalid_domain, "domain needs at least 5 nodes per axis");
}

// Radial first derivative; zero at the origin by symmetry, third-order one-sided at r_max.
inline std::vector<double> radial_d1(std::span<const double> f, double h) {
  const std::size_t m = f.size();
  std::vector<double> d(m, 0.0);
  for (std::size_t i = 1; i + 1 < m; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
  d[m - 1] = (11.0 * f[m - 1] - 18.0 * f[m - 2] + 9.0 * f[m - 3] - 2.0 * f[m - 4]) / (6.0 * h);
  return d;
}

// Radial second derivative with the even reflection at the origin.
inline std::vector<double> radial_d2(std::span<const double> f, double h) {
  const std::size_t m = f.size();
  const double h2 = h * h;
  std::vector<double> d(m, 0.0);
  d[0] = 2.0 * (f[1] - f[0]) / h2;
  for (std::size_t i = 1; i + 1 < m; ++i) d[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
  d[m - 1] = (35.0 * f[m - 1] - 104.0 * f[m - 2] + 114.0 * f[m - 3] - 56.0 * f[m - 4] + 11.0 * f[m - 5]) / (12.0 * h2);
  return d;
}

// Box derivatives along one axis; third-order one-sided closures on faces.
inline std::vector<double> box_d1(const Domain& dom, std::span<const double> f, int axis) {
  const std::size_t m = dom.per_axis();
  const double h = dom.h();
  std::vector<double> d(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    auto l = dom.lattice(i);
    auto at = [&](std::ptrdiff_t off) {
      auto q = l;
      q[axis] = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(q[axis]) + off);
      return f[dom.index(q[0], q[1], q[2])];
    };
    if (l[axis] == 0) {
      d[i] = -(11.0 * at(0) - 18.0 * at(1) + 9.0 * at(2) - 2.0 * at(3)) / (6.0 * h);
    } else if (l[axis] == m - 1) {
      d[i] = (11.0 * at(0) - 18.0 * at(-1) + 9.0 * at(-2) - 2.0 * at(-3)) / (6.0 * h);
    } else {
      d[i] = (at(1) - at(-1)) / (2.0 * h);
    }
  }
  return d;
}

inline std::vector<double> box_d2(const Domain& dom, std::span<const double> f, int axis) {
  const std::size_t m = dom.per_axis();
  const double h2 = dom.h() * dom.h();
  std::vector<double> d(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    auto l = dom.lattice(i);
    auto at = [&](std::ptrdiff_t off) {
      auto q = l;
      q[axis] = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(q[axis]) + off);
      return f[dom.index(q[0], q[1], q[2])];
    };
    if (l[axis] == 0) {
      d[i] = (35.0 * at(0) - 104.0 * at(1) + 114.0 * at(2) - 56.0 * at(3) + 11.0 * at(4)) / (12.0 * h2);
    } else if (l[axis] == m - 1) {
      d[i] = (35.0 * at(0) - 104.0 * at(-1) + 114.0 * at(-2) - 56.0 * at(-3) + 11.0 * at(-4)) / (12.0 * h2);
    } else {
      d[i] = (at(1) - 2.0 * at(0) + at(-1)) / h2;
    }
  }
  return d;
}

inline std::array<std::vector<double>, 3> box_gradient(const Domain& dom, std::span<const double> f) {
  return {box_d1(dom, f, 0), box_d1(dom, f, 1), box_d1(dom, f, 2)};
}

}  // namespace detail

/// Flat Laplacian. Radial mode: f'' + (n-1) f'/r, with n f''(0) at the origin.
inline ScalarField laplacian_flat(const ScalarField& f) {
  const Domain& dom = f.domain();
  detail::require_stencil(dom);
  const auto v = f.values();
  std::vector<double> out(v.size());
  if (dom.mode() == DomainMode::radial) {
    const double h = dom.h();
    const double n1 = static_cast<double>(dom.dim() - 1);
    const auto d1 = detail::radial_d1(v, h);
    const auto d2 = detail::radial_d2(v, h);
    out[0] = static_cast<double>(dom.dim()) * d2[0];
    for (std::size_t i = 1; i < v.size(); ++i) out[i] = d2[i] + n1 * d1[i] / dom.radius(i);
  } else {
    const auto xx = detail::box_d2(dom, v, 0);
    const auto yy = detail::box_d2(dom, v, 1);
    const auto zz = detail::box_d2(dom, v, 2);
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = xx[i] + yy[i] + zz[i];
  }
  return ScalarField(dom, std::move(out));
}

/// d f / dr in radial mode.
inline ScalarField radial_derivative(const ScalarField& f) {
  require(f.domain().mode() == DomainMode::radial, ErrorKind::invalid_domain, "radial derivative needs radial mode");
  detail::require_stencil(f.domain());
  return ScalarField(f.domain(), detail::radial_d1(f.values(), f.domain().h()));
}

/// Flat inner product of gradients, grad a . grad b.
inline ScalarField gradient_dot(const ScalarField& a, const ScalarField& b) {
  const Domain& dom = a.domain();
  require(dom == b.domain(), ErrorKind::invalid_input, "fields live on different domains");
  detail::require_stencil(dom);
  std::vector<double> out(a.size());
  if (dom.mode() == DomainMode::radial) {
    const auto da = detail::radial_d1(a.values(), dom.h());
    const auto db = detail::radial_d1(b.values(), dom.h());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] * db[i];
  } else {
    const auto ga = detail::box_gradient(dom, a.values());
    const auto gb = detail::box_gradient(dom, b.values());
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = ga[0][i] * gb[0][i] + ga[1][i] * gb[1][i] + ga[2][i] * gb[2][i];
    }
  }
  return ScalarField(dom, std::move(out));
}

/// R = U^{-p} [ -(4(n-1)/(n-2)) Delta U + R0_base U ].
inline ScalarField scalar_curvature(const ConformalMetric& m, const ScalarField& base_curvature) {
  const ScalarField& u = m.factor();
  const auto lap = laplacian_flat(u);
  const double a = m.conformal_laplacian_weight();
  const double p = m.p();
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::pow(u[i], -p) * (-a * lap[i] + base_curvature[i] * u[i]);
  }
  return ScalarField(u.domain(), std::move(out));
}

inline ScalarField scalar_curvature(const ConformalMetric& m) {
  return scalar_curvature(m, ScalarField::constant(m.domain(), 0.0));
}

/// Laplace-Beltrami operator of g: U^{-4/(n-2)} (Delta f + 2 grad log U . grad f).
/// grad log U is formed as grad U / U.
inline ScalarField laplace_beltrami(const ConformalMetric& m, const ScalarField& f) {
  const ScalarField& u = m.factor();
  require(u.domain() == f.domain(), ErrorKind::invalid_input, "metric and field live on different domains");
  const auto lap = laplacian_flat(f);
  const auto cross = gradient_dot(u, f);
  const double e = -4.0 / static_cast<double>(m.dim() - 2);
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::pow(u[i], e) * (lap[i] + 2.0 * cross[i] / u[i]);
  }
  return ScalarField(f.domain(), std::move(out));
}

/// |grad f|^2 measured in g.
inline ScalarField gradient_norm_squared(const ConformalMetric& m, const ScalarField& f) {
  const auto w = m.weight();
  return gradient_dot(f, f).zip(w, [](double g2, double e) { return g2 / e; });
}

/// Ricci tensor of a conformally flat metric.
///
/// Radial mode stores the eigenvalues of Ric relative to g in the radial and
/// tangential directions. Box mode stores coordinate components
/// (xx, yy, zz, xy, xz, yz) together with the conformal weight e^{2 phi}.
struct RicciDiagonal {
  DomainMode mode;
  int n;
  std::vector<double> radial_eigenvalue;
  std::vector<double> tangential_eigenvalue;
  std::vector<std::array<double, 6>> components;
  std::vector<double> weight;
  Domain domain;

  ScalarField scalar_trace() const {
    std::vector<double> out(domain.node_count());
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (mode == DomainMode::radial) {
        out[i] = radial_eigenvalue[i] + static_cast<double>(n - 1) * tangential_eigenvalue[i];
      } else {
        const auto& c = components[i];
        out[i] = (c[0] + c[1] + c[2]) / weight[i];
      }
    }
    return ScalarField(domain, std::move(out));
  }

  /// Eigenvalues of Ric relative to g at node i, ascending.
  std::vector<double> eigenvalues(std::size_t i) const {
    if (mode == DomainMode::radial) {
      std::vector<double> ev(static_cast<std::size_t>(n), tangential_eigenvalue[i]);
      ev[0] = radial_eigenvalue[i];
      std::sort(ev.begin(), ev.end());
      return ev;
    }
    const auto& c = components[i];
    Eigen::Matrix3d a;
    a << c[0], c[3], c[4], c[3], c[1], c[5], c[4], c[5], c[2];
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver;
    solver.computeDirect(a / weight[i], Eigen::EigenvaluesOnly);
    const auto& e = solver.eigenvalues();
    return {e[0], e[1], e[2]};
  }

  ScalarField min_eigenvalue() const {
    std::vector<double> out(domain.node_count());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = eigenvalues(i).front();
    return ScalarField(domain, std::move(out));
  }

  ScalarField max_eigenvalue() const {
    std::vector<double> out(domain.node_count());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = eigenvalues(i).back();
    return ScalarField(domain, std::move(out));
  }

  /// Rc(X, X) for a radial covector X = x_r dr.
  double radial_form(std::size_t i, double x_r) const {
    return radial_eigenvalue[i] * x_r * x_r / weight[i];
  }
};

/// Ric = -(n-2)(Hess phi - dphi dphi) - (Delta phi + (n-2)|dphi|^2) delta,
/// with phi = (2/(n-2)) log U.
inline RicciDiagonal ricci_conformal(const ConformalMetric& m) {
  const Domain& dom = m.domain();
  detail::require_stencil(dom);
  const int n = dom.dim();
  const double nm2 = static_cast<double>(n - 2);
  const double k = 2.0 / nm2;
  const auto u = m.factor().values();
  const auto w = m.weight();

  RicciDiagonal ric{dom.mode(), n, {}, {}, {}, std::vector<double>(w.values().begin(), w.values().end()), dom};
  const std::size_t count = dom.node_count();

  if (dom.mode() == DomainMode::radial) {
    const double h = dom.h();
    const auto d1 = detail::radial_d1(u, h);
    const auto d2 = detail::radial_d2(u, h);
    ric.radial_eigenvalue.resize(count);
    ric.tangential_eigenvalue.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      const double g = d1[i] / u[i];
      const double phi1 = k * g;
      const double phi2 = k * (d2[i] / u[i] - g * g);
      const double phi1_over_r = i == 0 ? phi2 : phi1 / dom.radius(i);
      const double lap_phi = phi2 + static_cast<double>(n - 1) * phi1_over_r;
      const double iso = lap_phi + nm2 * phi1 * phi1;
      const double rr = -nm2 * (phi2 - phi1 * phi1) - iso;
      const double tt = -nm2 * phi1_over_r - iso;
      ric.radial_eigenvalue[i] = rr / w[i];
      ric.tangential_eigenvalue[i] = tt / w[i];
    }
    return ric;
  }

  const auto grad = detail::box_gradient(dom, u);
  std::array<std::vector<double>, 3> pure{detail::box_d2(dom, u, 0), detail::box_d2(dom, u, 1),
                                          detail::box_d2(dom, u, 2)};
  const auto uxy = detail::box_d1(dom, grad[0], 1);
  const auto uxz = detail::box_d1(dom, grad[0], 2);
  const auto uyz = detail::box_d1(dom, grad[1], 2);
  ric.components.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::array<double, 3> g{grad[0][i] / u[i], grad[1][i] / u[i], grad[2][i] / u[i]};
    const std::array<double, 3> dphi{k * g[0], k * g[1], k * g[2]};
    auto hess = [&](double uij, int a, int b) { return k * (uij / u[i] - g[a] * g[b]); };
    const double pxx = hess(pure[0][i], 0, 0), pyy = hess(pure[1][i], 1, 1), pzz = hess(pure[2][i], 2, 2);
    const double pxy = hess(uxy[i], 0, 1), pxz = hess(uxz[i], 0, 2), pyz = hess(uyz[i], 1, 2);
    const double grad2 = dphi[0] * dphi[0] + dphi[1] * dphi[1] + dphi[2] * dphi[2];
    const double iso = pxx + pyy + pzz + nm2 * grad2;
    ric.components[i] = {
        -nm2 * (pxx - dphi[0] * dphi[0]) - iso, -nm2 * (pyy - dphi[1] * dphi[1]) - iso,
        -nm2 * (pzz - dphi[2] * dphi[2]) - iso, -nm2 * (pxy - dphi[0] * dphi[1]),
        -nm2 * (pxz - dphi[0] * dphi[2]),       -nm2 * (pyz - dphi[1] * dphi[2]),
    };
  }
  return ric;
}

/// Geodesic radius, geodesic-sphere area and ball volume about the chart
/// origin, tabulated on the radial nodes.
struct RadialMeasure {
  Domain domain;
  std::vector<double> radius;
  std::vector<double> geodesic;  // s(r) = int_0^r U^{2/(n-2)}
  std::vector<double> area;      // omega (U^{2/(n-2)} r)^{n-1}
  std::vector<double> volume;    // omega int_0^r U^{2n/(n-2)} rho^{n-1}
  std::vector<double> stretch;   // ds/dr = U^{2/(n-2)}
  std::vector<double> solid;     // dv = solid * r^{n-1} dr

  double s_max() const { return geodesic.back(); }

  /// Running integral of f dv_g over the balls B(r_i).
  std::vector<double> enclosed(std::span<const double> f) const {
    std::vector<double> g(solid.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = f[i] * solid[i];
    return quadrature::cumulative_moment(g, domain.h(), domain.dim() - 1);
  }

  double volume_at(double r) const { return quadrature::interpolate(volume, 0.0, domain.h(), r); }

  /// Chart radius of the geodesic sphere of radius s.
  double chart_radius(double s) const {
    require(s >= 0.0, ErrorKind::invalid_range, "geodesic radius must be nonnegative");
    require(s <= s_max() * (1.0 + 1e-12), ErrorKind::out_of_chart, "geodesic radius beyond the chart");
    const auto it = std::lower_bound(geodesic.begin(), geodesic.end(), s);
    std::size_t k = it == geodesic.begin() ? 0 : static_cast<std::size_t>(it - geodesic.begin()) - 1;
    k = std::min(k, geodesic.size() - 2);
    const double h = domain.h();
    double r = radius[k] + h * (s - geodesic[k]) / (geodesic[k + 1] - geodesic[k]);
    for (int iter = 0; iter < 8; ++iter) {
      r = std::clamp(r, 0.0, domain.r_max());
      const double f = quadrature::interpolate(geodesic, 0.0, h, r) - s;
      const double df = quadrature::interpolate(stretch, 0.0, h, r);
      const double step = f / df;
      r -= step;
      if (std::abs(step) < 1e-15 * std::max(1.0, r)) break;
    }
    return std::clamp(r, 0.0, domain.r_max());
  }
};

inline RadialMeasure radial_measure(const ConformalMetric& m) {
  const Domain& dom = m.domain();
  require(dom.mode() == DomainMode::radial, ErrorKind::invalid_domain, "radial measure needs radial mode");
  detail::require_stencil(dom);
  const int n = dom.dim();
  const double omega = sphere_area(n);
  const double ks = 2.0 / static_cast<double>(n - 2);
  const std::size_t count = dom.node_count();
  RadialMeasure out{dom, {}, {}, {}, {}, {}, {}};
  out.radius.resize(count);
  out.stretch.resize(count);
  out.area.resize(count);
  out.solid.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double r = dom.radius(i);
    const double a = std::pow(m.factor()[i], ks);
    out.radius[i] = r;
    out.stretch[i] = a;
    out.area[i] = omega * std::pow(a * r, n - 1);
    out.solid[i] = omega * std::pow(a, n);
  }
  out.geodesic = quadrature::cumulative(out.stretch, dom.h());
  out.volume = quadrature::cumulative_moment(out.solid, dom.h(), n - 1);
  return out;
}

/// Volume of the geodesic ball of radius s about the chart origin.
inline double ball_volume(const ConformalMetric& m, double geodesic_radius) {
  const auto measure = radial_measure(m);
  return measure.volume_at(measure.chart_radius(geodesic_radius));
}

}  // namespace confflow
