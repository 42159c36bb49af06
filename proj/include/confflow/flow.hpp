#pragma once

// Yamabe flow d/dt u^p = (n-1) p (Delta_{g0} u - c_n R0 u) on balls B(0, r_j),
// u = 1 (the initial value) outside, and the exhaustion built from them.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "confflow/error.hpp"
#include "confflow/geometry.hpp"

namespace confflow {

enum class Scheme { explicit_euler, semi_implicit };

inline const char* to_string(Scheme s) { return s == Scheme::explicit_euler ? "explicit" : "semi-implicit"; }

struct DtPolicy {
  Scheme scheme = Scheme::explicit_euler;
  /// Fraction of the diffusion limit used by the explicit scheme.
  double safety = 0.5;
  /// Upper bound on any step; the semi-implicit scheme steps at this size.
  double max_dt = 1e-3;
  int max_rejections = 40;
};

/// Base metric g0 = U0^{4/(n-2)} delta, the potential R0 and the data held
/// outside the active domain (also the initial value).
struct FlowProblem {
  ConformalMetric base;
  ScalarField R0;
  ScalarField initial;

  FlowProblem(ConformalMetric b, ScalarField r0)
      : base(std::move(b)), R0(std::move(r0)), initial(ScalarField::constant(base.domain(), 1.0)) {
    validate();
  }
  FlowProblem(ConformalMetric b, ScalarField r0, ScalarField u0)
      : base(std::move(b)), R0(std::move(r0)), initial(std::move(u0)) {
    validate();
  }

  const Domain& domain() const { return base.domain(); }

 private:
  void validate() const {
    require(base.domain().mode() == DomainMode::radial, ErrorKind::invalid_domain, "the flow runs in radial mode");
    require(R0.domain() == base.domain() && initial.domain() == base.domain(), ErrorKind::invalid_input,
            "flow inputs live on different domains");
    require(initial.min() > 0.0, ErrorKind::flow_degeneracy, "initial factor must be positive");
  }
};

struct FlowState {
  double t = 0.0;
  ScalarField u;
  ScalarField R;
  std::size_t domain_index = 0;
  double dt_last = 0.0;
};

/// Radii r_1 < ... < r_J of the balls Omega_j = B(0, r_j).
class ExhaustionLadder {
 public:
  ExhaustionLadder(const Domain& d, std::vector<double> radii) : radii_(std::move(radii)) {
    require(!radii_.empty(), ErrorKind::invalid_input, "ladder needs at least one radius");
    for (std::size_t j = 0; j < radii_.size(); ++j) {
      require(d.is_grid_radius(radii_[j]), ErrorKind::invalid_input,
              "ladder radius " + std::to_string(radii_[j]) + " is not a grid node");
      require(radii_[j] <= d.r_max() + 1e-12, ErrorKind::invalid_input, "ladder radius beyond r_max");
      require(d.node_at(radii_[j]) >= 4, ErrorKind::invalid_input, "ladder radius spans fewer than 4 cells");
      require(j == 0 || radii_[j] > radii_[j - 1], ErrorKind::invalid_input, "ladder radii must increase");
    }
  }

  const std::vector<double>& radii() const noexcept { return radii_; }
  std::size_t size() const noexcept { return radii_.size(); }
  double operator[](std::size_t j) const { return radii_[j]; }

 private:
  std::vector<double> radii_;
};

/// Sorted union of a uniform grid k * spacing on (0, t_end] with extra times,
/// t = 0 included. Extra times replace grid times closer than 1e-9.
inline std::vector<double> checkpoint_times(double t_end, double spacing, const std::vector<double>& extra) {
  require(t_end > 0.0, ErrorKind::invalid_time, "t_end must be positive");
  std::vector<double> out{0.0};
  if (spacing > 0.0) {
    const auto k_max = static_cast<long>(std::floor(t_end / spacing + 1e-9));
    for (long k = 1; k <= k_max; ++k) out.push_back(static_cast<double>(k) * spacing);
  }
  for (double t : extra) {
    require(t >= 0.0, ErrorKind::invalid_time, "checkpoint times must be nonnegative");
    if (t <= t_end + 1e-12) out.push_back(std::min(t, t_end));
  }
  out.push_back(t_end);
  std::sort(out.begin(), out.end());
  std::vector<double> merged;
  for (double t : out) {
    if (!merged.empty() && t - merged.back() < 1e-9) {
      // keep the extra (exact) time over the accumulated grid one
      if (std::find(extra.begin(), extra.end(), t) != extra.end() || t == t_end) merged.back() = t;
      continue;
    }
    merged.push_back(t);
  }
  return merged;
}

/// Default checkpoint set: spacing 0.01 plus the named times used by the diagnostics.
inline std::vector<double> default_checkpoints(double t_end, double spacing = 0.01) {
  const double e = std::exp(1.0);
  return checkpoint_times(t_end, spacing, {0.01, 0.1, 0.5, 1.0, 2.0, 4.0, 5.0, std::sqrt(e), e});
}

/// R = u^{-p} [ -(4(n-1)/(n-2)) Delta_{g0} u + R0 u ].
inline ScalarField flow_curvature(const FlowProblem& problem, const ScalarField& u) {
  const auto lap = laplace_beltrami(problem.base, u);
  const double a = problem.base.conformal_laplacian_weight();
  const double p = problem.base.p();
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::pow(u[i], -p) * (-a * lap[i] + problem.R0[i] * u[i]);
  return ScalarField(u.domain(), std::move(out));
}

/// Explicit diffusion limit: safety h^2 min(u^{p-1} U0^{4/(n-2)}) / (2n(n-1)).
inline double cfl_dt(const ScalarField& u, const ConformalMetric& base, double safety) {
  require(u.min() > 0.0, ErrorKind::flow_degeneracy, "factor must be positive");
  const int n = base.dim();
  const double pm1 = base.p() - 1.0;
  const auto w = base.weight();
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < u.size(); ++i) lo = std::min(lo, std::pow(u[i], pm1) * w[i]);
  const double h = base.domain().h();
  return safety * h * h * lo / (2.0 * n * (n - 1));
}

inline double cfl_dt(const FlowState& state, const ConformalMetric& base, double safety) {
  return cfl_dt(state.u, base, safety);
}

namespace detail {

// x^e with e = (p-1) or its negative; small integer exponents (n = 3, 4, 6)
// are done by multiplication.
struct PowerOf {
  double e;
  int k = 0;
  explicit PowerOf(double exponent) : e(exponent) {
    const double r = std::round(e);
    if (std::abs(e - r) < 1e-14 && std::abs(r) <= 8) k = static_cast<int>(r);
  }
  double operator()(double x) const {
    if (k == 0 && e != 0.0) return std::pow(x, e);
    double y = 1.0;
    for (int j = 0; j < std::abs(k); ++j) y *= x;
    return k < 0 ? 1.0 / y : y;
  }
};

// Delta_{g0} as three-point rows on radial nodes 0..N-1, matching
// laplace_beltrami of the base metric node for node.
struct RadialStencil {
  std::vector<double> lower, diag, upper;

  explicit RadialStencil(const ConformalMetric& base) {
    const Domain& dom = base.domain();
    const std::size_t count = dom.node_count();
    const double h = dom.h();
    const int n = dom.dim();
    const auto U = base.factor().values();
    const auto dU = radial_d1(U, h);
    const double e = -4.0 / static_cast<double>(n - 2);
    lower.assign(count, 0.0);
    diag.assign(count, 0.0);
    upper.assign(count, 0.0);
    const double inv_w0 = std::pow(U[0], e);
    // n f''(0) with f''(0) = 2 (f1 - f0) / h^2
    diag[0] = -2.0 * n / (h * h) * inv_w0;
    upper[0] = 2.0 * n / (h * h) * inv_w0;
    for (std::size_t i = 1; i + 1 < count; ++i) {
      const double r = dom.radius(i);
      const double inv_w = std::pow(U[i], e);
      const double drift = (static_cast<double>(n - 1) / r + 2.0 * dU[i] / U[i]) / (2.0 * h);
      lower[i] = (1.0 / (h * h) - drift) * inv_w;
      diag[i] = -2.0 / (h * h) * inv_w;
      upper[i] = (1.0 / (h * h) + drift) * inv_w;
    }
  }
};

struct StepWork {
  std::vector<double> rhs, next, c_prime, d_prime;
};

}  // namespace detail

/// Per checkpoint interval: step statistics of the integrator.
struct StepStats {
  double t_begin = 0.0;
  double t_end = 0.0;
  std::size_t steps = 0;
  std::size_t rejections = 0;
  double min_u = std::numeric_limits<double>::infinity();
  double max_R = -std::numeric_limits<double>::infinity();
  double dt_min = std::numeric_limits<double>::infinity();
  double dt_max = 0.0;
};

/// Integrates one ball Omega = B(0, radius); nodes at r >= radius keep their initial values.
class DomainStepper {
 public:
  DomainStepper(const FlowProblem& problem, double radius, DtPolicy policy)
      : problem_(problem), policy_(policy), stencil_(problem.base), pm1_(problem.base.p() - 1.0),
        neg_pm1_(-(problem.base.p() - 1.0)) {
    const Domain& dom = problem.domain();
    require(dom.is_grid_radius(radius) && radius <= dom.r_max() + 1e-12, ErrorKind::invalid_input,
            "domain radius must be a grid node within the chart");
    boundary_ = dom.node_at(radius);
    require(boundary_ >= 4, ErrorKind::invalid_input, "domain too small");
    const int n = dom.dim();
    speed_ = static_cast<double>(n - 1);
    coupling_ = problem.base.coupling();
    curvature_scale_ = 4.0 / static_cast<double>(n - 2);
    const auto w = problem.base.weight();
    weight_.assign(w.values().begin(), w.values().end());
    const std::size_t count = dom.node_count();
    work_.rhs.assign(count, 0.0);
    work_.next.assign(count, 0.0);
    work_.c_prime.assign(count, 0.0);
    work_.d_prime.assign(count, 0.0);
  }

  std::size_t boundary_node() const noexcept { return boundary_; }

  /// Diffusion-limited explicit step over the active nodes.
  double cfl(std::span<const double> u, double safety) const {
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < boundary_; ++i) lo = std::min(lo, pm1_(u[i]) * weight_[i]);
    const double h = problem_.domain().h();
    const int n = problem_.domain().dim();
    return safety * h * h * lo / (2.0 * n * (n - 1));
  }

  /// du/dt on the active nodes, written into work_.rhs. Returns max R there.
  double rates(std::span<const double> u) {
    const auto& s = stencil_;
    const auto R0 = problem_.R0.values();
    double max_r = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < boundary_; ++i) {
      const double lap = (i == 0 ? 0.0 : s.lower[i] * u[i - 1]) + s.diag[i] * u[i] + s.upper[i] * u[i + 1];
      const double rate = speed_ * neg_pm1_(u[i]) * (lap - coupling_ * R0[i] * u[i]);
      work_.rhs[i] = rate;
      max_r = std::max(max_r, -curvature_scale_ * rate / u[i]);
    }
    return max_r;
  }

  /// One attempted step from u into work_.next; false if positivity fails.
  bool attempt(std::span<const double> u, double dt) {
    auto& next = work_.next;
    std::copy(u.begin(), u.end(), next.begin());
    if (policy_.scheme == Scheme::explicit_euler) {
      for (std::size_t i = 0; i < boundary_; ++i) next[i] = u[i] + dt * work_.rhs[i];
    } else {
      solve_implicit(u, dt);
    }
    for (std::size_t i = 0; i < boundary_; ++i) {
      if (!(next[i] > 0.0) || !std::isfinite(next[i])) return false;
    }
    return true;
  }

  const std::vector<double>& next() const noexcept { return work_.next; }

  /// Advances u by dt (rejecting and halving on loss of positivity); returns the step taken.
  double advance(std::vector<double>& u, double dt, StepStats& stats) {
    const double max_r = rates(u);
    stats.max_R = std::max(stats.max_R, max_r);
    for (int rejected = 0;; ++rejected) {
      if (attempt(u, dt)) break;
      if (rejected + 1 > policy_.max_rejections) {
        throw Error(ErrorKind::flow_degeneracy, "factor lost positivity after " +
                                                    std::to_string(policy_.max_rejections) + " step rejections");
      }
      ++stats.rejections;
      dt *= 0.5;
    }
    std::copy(work_.next.begin(), work_.next.begin() + static_cast<std::ptrdiff_t>(boundary_), u.begin());
    ++stats.steps;
    stats.dt_min = std::min(stats.dt_min, dt);
    stats.dt_max = std::max(stats.dt_max, dt);
    for (std::size_t i = 0; i < boundary_; ++i) stats.min_u = std::min(stats.min_u, u[i]);
    return dt;
  }

  /// Step size proposed by the policy before landing on the next checkpoint.
  double proposal(std::span<const double> u) const {
    if (policy_.scheme == Scheme::explicit_euler) return std::min(cfl(u, policy_.safety), policy_.max_dt);
    return policy_.max_dt;
  }

 private:
  // (1 - dt k L + dt k c R0) u' = u with k = (n-1) u^{1-p} frozen; Thomas algorithm.
  void solve_implicit(std::span<const double> u, double dt) {
    const auto& s = stencil_;
    const auto R0 = problem_.R0.values();
    auto& cp = work_.c_prime;
    auto& dp = work_.d_prime;
    auto& next = work_.next;
    const std::size_t m = boundary_;
    for (std::size_t i = 0; i < m; ++i) {
      const double k = dt * speed_ * neg_pm1_(u[i]);
      const double a = i == 0 ? 0.0 : -k * s.lower[i];
      const double b = 1.0 - k * s.diag[i] + k * coupling_ * R0[i];
      double c = -k * s.upper[i];
      double d = u[i];
      if (i + 1 == m) {
        d -= c * u[m];
        c = 0.0;
      }
      const double denom = i == 0 ? b : b - a * cp[i - 1];
      cp[i] = c / denom;
      dp[i] = (i == 0 ? d : d - a * dp[i - 1]) / denom;
    }
    next[m - 1] = dp[m - 1];
    for (std::size_t i = m - 1; i-- > 0;) next[i] = dp[i] - cp[i] * next[i + 1];
  }

  const FlowProblem& problem_;
  DtPolicy policy_;
  detail::RadialStencil stencil_;
  detail::PowerOf pm1_;
  detail::PowerOf neg_pm1_;
  std::size_t boundary_ = 0;
  double speed_ = 0.0;
  double coupling_ = 0.0;
  double curvature_scale_ = 0.0;
  std::vector<double> weight_;
  detail::StepWork work_;
};

/// One step of the flow on B(0, radius). The explicit scheme refuses dt above its stability limit.
inline FlowState step(const FlowState& state, const FlowProblem& problem, double radius, double dt,
                      const DtPolicy& policy = {}) {
  require(dt >= 0.0, ErrorKind::invalid_time, "negative time step");
  require(state.u.min() > 0.0, ErrorKind::flow_degeneracy, "factor must be positive");
  DomainStepper stepper(problem, radius, policy);
  if (policy.scheme == Scheme::explicit_euler) {
    require(dt <= stepper.cfl(state.u.values(), 1.0) * (1.0 + 1e-12), ErrorKind::precondition,
            "time step above the explicit stability limit");
  }
  std::vector<double> u(state.u.values().begin(), state.u.values().end());
  StepStats stats;
  const double taken = dt > 0.0 ? stepper.advance(u, dt, stats) : 0.0;
  ScalarField next(problem.domain(), std::move(u));
  auto R = flow_curvature(problem, next);
  return FlowState{state.t + taken, std::move(next), std::move(R), state.domain_index, taken};
}

struct Trajectory {
  std::size_t domain_index = 0;
  double radius = 0.0;
  std::size_t boundary_node = 0;
  DtPolicy policy;
  std::vector<FlowState> checkpoints;
  /// stats[k] covers (t_{k}, t_{k+1}].
  std::vector<StepStats> stats;

  const Domain& domain() const { return checkpoints.front().u.domain(); }
  std::optional<std::size_t> find(double t, double tol = 1e-9) const {
    for (std::size_t k = 0; k < checkpoints.size(); ++k) {
      if (std::abs(checkpoints[k].t - t) <= tol) return k;
    }
    return std::nullopt;
  }
  /// Nodes at least `margin` cells inside the Dirichlet boundary.
  std::size_t interior_end(std::size_t margin = 3) const { return boundary_node > margin ? boundary_node - margin : 0; }
  /// As interior_end, further restricted to r <= core * radius.
  std::size_t evaluation_end(std::size_t margin, double core) const {
    const auto core_end = static_cast<std::size_t>(std::floor(core * static_cast<double>(boundary_node) + 1e-9)) + 1;
    return std::min(interior_end(margin), core_end);
  }
};

/// Every stride-th checkpoint (the last one always kept); step statistics are merged.
inline Trajectory thin(const Trajectory& traj, std::size_t stride) {
  require(stride >= 1, ErrorKind::invalid_input, "stride must be positive");
  Trajectory out = traj;
  out.checkpoints.clear();
  out.stats.clear();
  StepStats merged;
  bool open = false;
  for (std::size_t k = 0; k < traj.checkpoints.size(); ++k) {
    if (k > 0) {
      const auto& s = traj.stats[k - 1];
      if (!open) merged = s;
      else {
        merged.t_end = s.t_end;
        merged.steps += s.steps;
        merged.rejections += s.rejections;
        merged.min_u = std::min(merged.min_u, s.min_u);
        merged.max_R = std::max(merged.max_R, s.max_R);
        merged.dt_min = std::min(merged.dt_min, s.dt_min);
        merged.dt_max = std::max(merged.dt_max, s.dt_max);
      }
      open = true;
    }
    if (k % stride == 0 || k + 1 == traj.checkpoints.size()) {
      out.checkpoints.push_back(traj.checkpoints[k]);
      if (k > 0) out.stats.push_back(merged);
      open = false;
    }
  }
  return out;
}

/// Integrates from the initial data to t_end, landing exactly on every checkpoint time.
inline Trajectory run_on_domain(const FlowProblem& problem, double radius, std::size_t domain_index,
                                const std::vector<double>& times, const DtPolicy& policy = {}) {
  require(!times.empty() && times.front() == 0.0, ErrorKind::invalid_time, "checkpoints must start at t = 0");
  require(times.back() > 0.0, ErrorKind::invalid_time, "t_end must be positive");
  for (std::size_t k = 1; k < times.size(); ++k) {
    require(times[k] > times[k - 1], ErrorKind::invalid_time, "checkpoint times must increase");
  }
  require(policy.safety >= 0.0 && policy.max_dt > 0.0, ErrorKind::invalid_input, "invalid step policy");
  DomainStepper stepper(problem, radius, policy);
  Trajectory traj;
  traj.domain_index = domain_index;
  traj.radius = radius;
  traj.boundary_node = stepper.boundary_node();
  traj.policy = policy;

  std::vector<double> u(problem.initial.values().begin(), problem.initial.values().end());
  auto snapshot = [&](double t, double dt_last) {
    ScalarField field(problem.domain(), u);
    auto R = flow_curvature(problem, field);
    traj.checkpoints.push_back(FlowState{t, std::move(field), std::move(R), domain_index, dt_last});
  };
  snapshot(0.0, 0.0);
  double t = 0.0, dt_last = 0.0;
  for (std::size_t k = 1; k < times.size(); ++k) {
    StepStats stats;
    stats.t_begin = t;
    const double target = times[k];
    while (t < target) {
      double dt = stepper.proposal(u);
      require(dt > 0.0, ErrorKind::flow_degeneracy, "step size collapsed to zero");
      const bool lands = t + dt >= target * (1.0 - 1e-14) || target - (t + dt) < 1e-3 * dt;
      if (lands) dt = target - t;
      dt_last = stepper.advance(u, dt, stats);
      // a rejected landing step no longer reaches the target
      t = (lands && dt_last == dt) ? target : t + dt_last;
    }
    stats.t_end = target;
    traj.stats.push_back(stats);
    snapshot(target, dt_last);
  }
  return traj;
}

struct ExhaustionOptions {
  /// Radius of the compact ball where successive solutions are compared; 0 means r_1 / 2.
  double compact_radius = 0.0;
  unsigned jobs = 1;
};

struct ExhaustionResult {
  std::vector<Trajectory> trajectories;
  double compact_radius = 0.0;
  std::vector<double> times;
  /// differences[j][k] = sup |u_j - u_{j+1}| on the compact ball at times[k].
  std::vector<std::vector<double>> differences;
  /// differences shrink with j at times[k]; values below 1e-12 count as zero.
  std::vector<bool> decreasing;
  /// Nodes where u_{j+1} > u_j + 1e-12, summed over pairs and checkpoints (reported, not asserted).
  std::size_t monotone_violations = 0;
  double max_monotone_excess = 0.0;
  /// Geometric extrapolation of u_infinity on the compact ball at the final time.
  std::vector<double> limit;
  double limit_ratio = std::numeric_limits<double>::quiet_NaN();
  double limit_correction = 0.0;
};

inline ExhaustionResult run_exhaustion(const FlowProblem& problem, const ExhaustionLadder& ladder,
                                       const std::vector<double>& times, const DtPolicy& policy = {},
                                       const ExhaustionOptions& options = {}) {
  const Domain& dom = problem.domain();
  ExhaustionResult out;
  out.times = times;
  out.compact_radius = options.compact_radius > 0.0 ? options.compact_radius : 0.5 * ladder[0];
  require(out.compact_radius <= ladder[0] + 1e-12, ErrorKind::invalid_input, "compact ball must lie in Omega_1");
  const std::size_t J = ladder.size();
  out.trajectories.resize(J);

  std::vector<std::exception_ptr> failures(J);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < J; j = next++) {
      try {
        out.trajectories[j] = run_on_domain(problem, ladder[j], j, times, policy);
      } catch (...) {
        failures[j] = std::current_exception();
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(J)));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < jobs; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  std::size_t compact_end = 0;
  while (compact_end + 1 < dom.node_count() && dom.radius(compact_end + 1) <= out.compact_radius + 1e-12) ++compact_end;
  const std::size_t K = times.size();
  out.differences.assign(J > 0 ? J - 1 : 0, std::vector<double>(K, 0.0));
  for (std::size_t j = 0; j + 1 < J; ++j) {
    for (std::size_t k = 0; k < K; ++k) {
      const auto& a = out.trajectories[j].checkpoints[k].u;
      const auto& b = out.trajectories[j + 1].checkpoints[k].u;
      double d = 0.0;
      for (std::size_t i = 0; i <= compact_end; ++i) d = std::max(d, std::abs(a[i] - b[i]));
      out.differences[j][k] = d;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double excess = b[i] - a[i];
        if (excess > 1e-12) {
          ++out.monotone_violations;
          out.max_monotone_excess = std::max(out.max_monotone_excess, excess);
        }
      }
    }
  }
  out.decreasing.assign(K, true);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j + 2 < J; ++j) {
      constexpr double floor = 1e-12;
      const double d0 = out.differences[j][k], d1 = out.differences[j + 1][k];
      if (!(d1 < d0 || (d0 <= floor && d1 <= floor))) out.decreasing[k] = false;
    }
  }

  const auto& last = out.trajectories.back().checkpoints.back().u;
  out.limit.assign(last.values().begin(), last.values().begin() + static_cast<std::ptrdiff_t>(compact_end + 1));
  if (J >= 3) {
    const double d0 = out.differences[J - 3][K - 1], d1 = out.differences[J - 2][K - 1];
    if (d0 > 0.0 && d1 < d0) {
      const double rho = d1 / d0;
      out.limit_ratio = rho;
      const auto& prev = out.trajectories[J - 2].checkpoints.back().u;
      for (std::size_t i = 0; i <= compact_end; ++i) {
        const double c = (last[i] - prev[i]) * rho / (1.0 - rho);
        out.limit[i] += c;
        out.limit_correction = std::max(out.limit_correction, std::abs(c));
      }
    }
  }
  return out;
}

struct ResidualOptions {
  /// Negative control: use the flat Laplacian in place of Delta_{g(t)}.
  bool flat_laplacian = false;
  double t_min = 0.0;
  std::size_t margin = 3;
  double core = 1.0;
};

struct ResidualSample {
  double t = 0.0;
  double dt = 0.0;
  double residual = 0.0;
};

/// sup over interior nodes of |(R(t+dt) - R(t-dt)) / 2dt - (n-1) Delta_{g(t)} R - R^2|
/// at every checkpoint with equally spaced neighbours.
inline std::vector<ResidualSample> scalar_evolution_residual(const Trajectory& traj, const ConformalMetric& base,
                                                             const ResidualOptions& options = {}) {
  const auto& cps = traj.checkpoints;
  require(cps.size() >= 3, ErrorKind::invalid_input, "residual needs at least 3 checkpoints");
  const double n1 = static_cast<double>(base.dim() - 1);
  const std::size_t end = traj.evaluation_end(options.margin, options.core);
  std::vector<ResidualSample> out;
  for (std::size_t k = 1; k + 1 < cps.size(); ++k) {
    const double a = cps[k].t - cps[k - 1].t, b = cps[k + 1].t - cps[k].t;
    if (std::abs(a - b) > 1e-9 * std::max(a, b) || cps[k].t < options.t_min) continue;
    const auto& R = cps[k].R;
    const auto lap = options.flat_laplacian ? laplacian_flat(R) : laplace_beltrami(base.compose(cps[k].u), R);
    double worst = 0.0;
    for (std::size_t i = 0; i < end; ++i) {
      const double dRdt = (cps[k + 1].R[i] - cps[k - 1].R[i]) / (a + b);
      worst = std::max(worst, std::abs(dRdt - n1 * lap[i] - R[i] * R[i]));
    }
    out.push_back({cps[k].t, a, worst});
  }
  require(!out.empty(), ErrorKind::invalid_input, "no equally spaced checkpoint triples");
  return out;
}

inline double max_residual(const std::vector<ResidualSample>& series) {
  double m = 0.0;
  for (const auto& s : series) m = std::max(m, s.residual);
  return m;
}

}  // namespace confflow
