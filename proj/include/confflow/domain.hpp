#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "confflow/error.hpp"

namespace confflow {

enum class DomainMode { radial, box };

/// Discretization of a model manifold chart.
///
/// Radial mode samples r = 0, h, ..., r_max for rotationally symmetric fields
/// on R^n. Box mode (n = 3 only) samples the cube [-r_max, r_max]^3 with
/// spacing h in every direction, x fastest.
class Domain {
 public:
  static Domain radial(int n, double r_max, double h) { return Domain(DomainMode::radial, n, r_max, h); }
  static Domain box(double half_width, double h) { return Domain(DomainMode::box, 3, half_width, h); }

  DomainMode mode() const noexcept { return mode_; }
  int dim() const noexcept { return n_; }
  double r_max() const noexcept { return r_max_; }
  double h() const noexcept { return h_; }
  /// Number of spacings from the origin (radial) or centre (box) to the edge.
  std::size_t intervals() const noexcept { return intervals_; }
  std::size_t per_axis() const noexcept {
    return mode_ == DomainMode::radial ? intervals_ + 1 : 2 * intervals_ + 1;
  }
  std::size_t node_count() const noexcept {
    const std::size_t m = per_axis();
    return mode_ == DomainMode::radial ? m : m * m * m;
  }

  /// Euclidean distance of node i from the chart origin.
  double radius(std::size_t i) const {
    if (mode_ == DomainMode::radial) return static_cast<double>(i) * h_;
    const auto x = point(i);
    return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
  }

  std::array<std::size_t, 3> lattice(std::size_t i) const {
    const std::size_t m = per_axis();
    return {i % m, (i / m) % m, i / (m * m)};
  }

  std::size_t index(std::size_t ix, std::size_t iy, std::size_t iz) const {
    const std::size_t m = per_axis();
    return ix + m * (iy + m * iz);
  }

  /// Cartesian coordinates of a box node.
  std::array<double, 3> point(std::size_t i) const {
    const auto l = lattice(i);
    const auto c = [this](std::size_t k) {
      return (static_cast<double>(k) - static_cast<double>(intervals_)) * h_;
    };
    return {c(l[0]), c(l[1]), c(l[2])};
  }

  /// Index of the radial node nearest to r.
  std::size_t node_at(double r) const {
    const double k = std::round(r / h_);
    require(k >= 0.0 && k <= static_cast<double>(intervals_), ErrorKind::invalid_range,
            "radius " + std::to_string(r) + " outside [0, r_max]");
    return static_cast<std::size_t>(k);
  }

  bool is_grid_radius(double r) const {
    return std::abs(r / h_ - std::round(r / h_)) < 1e-9 * std::max(1.0, r / h_);
  }

  friend bool operator==(const Domain& a, const Domain& b) {
    return a.mode_ == b.mode_ && a.n_ == b.n_ && a.intervals_ == b.intervals_ && a.h_ == b.h_;
  }

 private:
  Domain(DomainMode mode, int n, double r_max, double h) : mode_(mode), n_(n), r_max_(r_max), h_(h) {
    require(n >= 3, ErrorKind::invalid_domain, "dimension must be >= 3");
    require(mode != DomainMode::box || n == 3, ErrorKind::invalid_domain, "box mode supports n = 3 only");
    require(h > 0.0 && std::isfinite(h), ErrorKind::invalid_domain, "spacing must be positive");
    require(std::isfinite(r_max) && r_max >= 10.0 * h * (1.0 - 1e-12), ErrorKind::invalid_domain,
            "r_max must be at least 10 h");
    const double ratio = r_max / h;
    require(std::abs(ratio - std::round(ratio)) < 1e-9 * ratio, ErrorKind::invalid_domain,
            "r_max must be an integer multiple of h");
    intervals_ = static_cast<std::size_t>(std::round(ratio));
    r_max_ = static_cast<double>(intervals_) * h_;
  }

  DomainMode mode_;
  int n_;
  double r_max_;
  double h_;
  std::size_t intervals_ = 0;
};

/// Real values on the nodes of a Domain; always finite.
class ScalarField {
 public:
  ScalarField(Domain domain, std::vector<double> values) : domain_(std::move(domain)), values_(std::move(values)) {
    require(values_.size() == domain_.node_count(), ErrorKind::invalid_input, "field size does not match domain");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        throw Error(ErrorKind::invalid_input, "non-finite field value at node " + std::to_string(i));
      }
    }
  }

  static ScalarField constant(const Domain& domain, double c) {
    return ScalarField(domain, std::vector<double>(domain.node_count(), c));
  }

  /// Samples a rotationally symmetric profile f(|x|).
  template <typename F>
  static ScalarField radial_profile(const Domain& domain, F&& f) {
    std::vector<double> v(domain.node_count());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(domain.radius(i));
    return ScalarField(domain, std::move(v));
  }

  /// Samples f(x, y, z) on a box domain.
  template <typename F>
  static ScalarField cartesian(const Domain& domain, F&& f) {
    require(domain.mode() == DomainMode::box, ErrorKind::invalid_domain, "cartesian sampling needs a box domain");
    std::vector<double> v(domain.node_count());
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto x = domain.point(i);
      v[i] = f(x[0], x[1], x[2]);
    }
    return ScalarField(domain, std::move(v));
  }

  const Domain& domain() const noexcept { return domain_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }
  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  template <typename F>
  ScalarField map(F&& f) const {
    std::vector<double> v(values_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(values_[i]);
    return ScalarField(domain_, std::move(v));
  }

  template <typename F>
  ScalarField zip(const ScalarField& other, F&& f) const {
    require(domain_ == other.domain_, ErrorKind::invalid_input, "fields live on different domains");
    std::vector<double> v(values_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(values_[i], other.values_[i]);
    return ScalarField(domain_, std::move(v));
  }

  friend ScalarField operator+(const ScalarField& a, const ScalarField& b) {
    return a.zip(b, std::plus<>{});
  }
  friend ScalarField operator-(const ScalarField& a, const ScalarField& b) {
    return a.zip(b, std::minus<>{});
  }
  friend ScalarField operator*(const ScalarField& a, const ScalarField& b) {
    return a.zip(b, std::multiplies<>{});
  }
  friend ScalarField operator*(double s, const ScalarField& a) {
    return a.map([s](double x) { return s * x; });
  }

 private:
  Domain domain_;
  std::vector<double> values_;
};

}  // namespace confflow
