#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "confflow/error.hpp"

namespace confflow::quadrature {

/// Running integral of samples g(x_0 + k h), k = 0..m-1.
///
/// Composite trapezoid with the first Euler-Maclaurin endpoint correction,
/// so smooth integrands are integrated to O(h^4). Entry k holds the integral
/// from x_0 to x_k. Summation runs strictly left to right.
inline std::vector<double> cumulative(std::span<const double> g, double h) {
  const std::size_t m = g.size();
  require(m >= 3, ErrorKind::invalid_input, "cumulative quadrature needs at least 3 samples");
  auto slope = [&](std::size_t k) {
    if (k == 0) return (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * h);
    if (k == m - 1) return (3.0 * g[m - 1] - 4.0 * g[m - 2] + g[m - 3]) / (2.0 * h);
    return (g[k + 1] - g[k - 1]) / (2.0 * h);
  };
  std::vector<double> out(m, 0.0);
  const double s0 = slope(0);
  double trap = 0.0;
  for (std::size_t k = 1; k < m; ++k) {
    trap += 0.5 * h * (g[k - 1] + g[k]);
    out[k] = trap - h * h / 12.0 * (slope(k) - s0);
  }
  return out;
}

/// Running integral of g(x) x^k over [0, x_i] for samples g(i h), i = 0..m-1.
///
/// g is replaced by its local cubic interpolant on each cell and the product
/// with x^k is integrated by 8-point Gauss-Legendre (exact for k <= 12). Keeps
/// full relative accuracy near x = 0, where x^k is tiny.
inline std::vector<double> cumulative_moment(std::span<const double> g, double h, int k) {
  const std::size_t m = g.size();
  require(m >= 4, ErrorKind::invalid_input, "moment quadrature needs at least 4 samples");
  require(k >= 0 && k <= 12, ErrorKind::invalid_input, "moment order out of range");
  static constexpr double nodes[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                      0.9602898564975363};
  static constexpr double weights[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                        0.1012285362903763};
  std::vector<double> out(m, 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < m; ++j) {
    const std::size_t base = std::min(j == 0 ? 0 : j - 1, m - 4);
    double cell = 0.0;
    for (int side = -1; side <= 1; side += 2) {
      for (int q = 0; q < 4; ++q) {
        const double t = 0.5 + 0.5 * side * nodes[q];  // position within the cell
        const double s = static_cast<double>(j) + t - static_cast<double>(base);
        double value = 0.0;
        for (int a = 0; a < 4; ++a) {
          double basis = 1.0;
          for (int b = 0; b < 4; ++b) {
            if (a != b) basis *= (s - b) / static_cast<double>(a - b);
          }
          value += basis * g[base + static_cast<std::size_t>(a)];
        }
        const double x = (static_cast<double>(j) + t) * h;
        cell += weights[q] * value * std::pow(x, k);
      }
    }
    total += 0.5 * h * cell;
    out[j + 1] = total;
  }
  return out;
}

/// Four-point Lagrange interpolation of uniformly spaced samples.
inline double interpolate(std::span<const double> values, double x0, double h, double x) {
  const std::size_t m = values.size();
  require(m >= 4, ErrorKind::invalid_input, "interpolation needs at least 4 samples");
  const double s = (x - x0) / h;
  require(s >= -1e-9 && s <= static_cast<double>(m - 1) + 1e-9, ErrorKind::out_of_chart,
          "interpolation point outside the sampled range");
  auto k = static_cast<std::ptrdiff_t>(std::floor(s)) - 1;
  k = std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(m) - 4);
  double result = 0.0;
  for (std::ptrdiff_t a = 0; a < 4; ++a) {
    double weight = 1.0;
    for (std::ptrdiff_t b = 0; b < 4; ++b) {
      if (a != b) weight *= (s - static_cast<double>(k + b)) / static_cast<double>(a - b);
    }
    result += weight * values[static_cast<std::size_t>(k + a)];
  }
  return result;
}

/// Power law c x^{-q} fitted to the tail of a positive integrand.
struct PowerTail {
  double c = 0.0;
  double q = std::numeric_limits<double>::infinity();

  bool integrable() const noexcept { return c == 0.0 || q > 1.0; }

  /// Integral of the fitted law over [x_end, infinity); +inf when not integrable.
  double tail_from(double x_end) const {
    if (c == 0.0) return 0.0;
    if (q <= 1.0) return std::numeric_limits<double>::infinity();
    return c * std::pow(x_end, 1.0 - q) / (q - 1.0);
  }
};

/// Least-squares fit of log y = log c - q log x over samples with x in
/// [x_end / ratio, x_end]. Integrands that vanish identically on the window
/// give c = 0.
inline PowerTail fit_power_tail(std::span<const double> x, std::span<const double> y, double ratio) {
  require(x.size() == y.size() && !x.empty(), ErrorKind::invalid_input, "tail fit needs matching samples");
  const double x_end = x.back();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t count = 0;
  bool all_zero = true;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < x_end / ratio || x[i] <= 0.0) continue;
    if (y[i] != 0.0) all_zero = false;
    if (y[i] <= 0.0) continue;
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++count;
  }
  PowerTail fit;
  if (all_zero) {
    fit.c = 0.0;
    return fit;
  }
  require(count >= 3, ErrorKind::invalid_input, "tail window has too few positive samples");
  const double nn = static_cast<double>(count);
  const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
  fit.q = -slope;
  fit.c = std::exp((sy - slope * sx) / nn);
  return fit;
}

}  // namespace confflow::quadrature
