#pragma once

// Scenario description, JSON schema, presets and the hypothesis gate.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "confflow/diagnostics.hpp"
#include "confflow/io.hpp"
#include "confflow/poisson.hpp"

namespace confflow {

using io::Json;

struct ToleranceOverrides {
  // unset means the default 5 (h^2 + dt) with dt the checkpoint spacing
  std::optional<double> harnack, monotone, decay, residual, log_identity;
  std::optional<double> schrodinger_residual;
  /// Smallest Ricci eigenvalue accepted as nonnegative; unset means 1e-9 max(1, max|R|).
  std::optional<double> ricci;
};

struct DiagnosticsSettings {
  bool barrier = true;
  bool harnack = true;
  bool monotone = true;
  bool decay = true;
  bool residual = true;
  bool schrodinger = true;
  bool pinching = true;
  bool exhaustion = true;
  bool liyau = true;
  /// Checks use r <= core * r_J, at least `margin` cells inside the boundary.
  double core = 1.0;
  std::size_t margin = 3;
  double residual_t_min = 0.2;
  /// 0 means half the first ladder radius.
  double compact_radius = 0.0;
  std::vector<double> compare_at{4.0};
  std::vector<double> decay_times{std::exp(1.0), std::exp(2.0)};
  std::size_t liyau_samples = 16;
};

struct Scenario {
  std::string name;
  /// A preset name, or "csv" with profile_path set.
  std::string profile;
  std::string profile_path;
  int n = 3;
  std::string mode = "radial";
  double r_max = 40.0;
  double h = 0.02;
  std::vector<double> ladder{10.0, 20.0, 40.0};
  double t_end = 5.0;
  double spacing = 0.01;
  /// Named times: always checkpoints, and the times written as field snapshots.
  std::vector<double> extra_times{0.01, 0.1, 0.5, 1.0, 2.0, 4.0, 5.0, std::sqrt(std::exp(1.0)), std::exp(1.0)};
  DtPolicy dt{Scheme::semi_implicit, 0.5, 5e-5, 40};
  ToleranceOverrides tolerances;
  DiagnosticsSettings diagnostics;
  std::string output_dir;
  std::uint64_t seed = 0;

  std::vector<double> checkpoints() const { return checkpoint_times(t_end, spacing, extra_times); }
  /// Named times within the horizon, plus 0 and t_end.
  std::vector<double> snapshot_times() const {
    std::vector<double> out{0.0};
    for (double t : extra_times) {
      if (t <= t_end + 1e-12) out.push_back(std::min(t, t_end));
    }
    out.push_back(t_end);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }),
              out.end());
    return out;
  }
};

struct PresetInfo {
  std::string name;
  std::string description;
};

inline const std::vector<PresetInfo>& preset_catalog() {
  static const std::vector<PresetInfo> list{
      {"flat", "Euclidean space, no curvature: the flow is stationary and every margin is zero"},
      {"sphere_factor", "stereographic round sphere U0 = (2/(1+r^2))^{1/2}, R = 6; parabolic, pinching 1/3"},
      {"manufactured_w", "flat base with potential R0 = 24 (1+r^2)^{-5/2}; w = (1+r^2)^{-1/2}"},
      {"schrodinger_pair", "flat base with R0 = 12 (1+r^2)^{-5/2} / v, v = 1 - 1/(2 (1+r^2)^{1/2}) solving the Schrodinger equation"},
      {"positive_cone", "U0 = (1+r^2)^{-1/8}: positive Ricci, R ~ r^{-1/2}; average condition fails"},
      {"divergent_average", "flat base with R0 = 8 (1+r)^{-2}: the average integral diverges"},
      {"mis_signed", "flat base with R0 = 24 (1 - r^2/4) (1+r^2)^{-5/2}, negative beyond r = 2"},
      {"cylinder_like", "U0 = (1+r^2)^{-1/4}: asymptotically a cylinder, parabolic"},
  };
  return list;
}

inline bool is_preset(const std::string& name) {
  for (const auto& p : preset_catalog()) {
    if (p.name == name) return true;
  }
  return false;
}

/// The scenario a preset runs with by default.
inline Scenario preset_scenario(const std::string& name) {
  require(is_preset(name), ErrorKind::config, "$.preset: unknown preset '" + name + "'");
  Scenario s;
  s.name = name;
  s.profile = name;
  auto quick = [&s](double r_max, double h, std::vector<double> ladder, double t_end) {
    s.r_max = r_max;
    s.h = h;
    s.ladder = std::move(ladder);
    s.t_end = t_end;
    s.dt.max_dt = 0.5 * s.spacing * s.spacing;
  };
  if (name == "flat") {
    quick(20.0, 0.05, {5.0, 10.0, 20.0}, 1.0);
  } else if (name == "sphere_factor") {
    quick(20.0, 0.02, {5.0, 10.0, 20.0}, 0.05);
    s.spacing = 0.005;
    s.dt.max_dt = 0.5 * s.spacing * s.spacing;
  } else if (name == "manufactured_w" || name == "schrodinger_pair") {
    s.diagnostics.compact_radius = 5.0;
  } else if (name == "positive_cone") {
    // a wide chart keeps the Dirichlet data away from the core where the checks run
    s.r_max = 160.0;
    s.ladder = {40.0, 80.0, 160.0};
    s.diagnostics.core = 0.5;
    s.diagnostics.compact_radius = 10.0;
  } else if (name == "divergent_average" || name == "cylinder_like") {
    quick(40.0, 0.05, {10.0, 20.0, 40.0}, 1.0);
  } else if (name == "mis_signed") {
    quick(20.0, 0.05, {5.0, 10.0, 20.0}, 1.0);
  }
  return s;
}

// ---------------------------------------------------------------- schema

namespace detail {

class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    require(j_.is_object(), ErrorKind::config, path_ + ": expected an object");
  }

  /// Rejects keys outside `allowed`.
  void only(std::initializer_list<const char*> allowed) const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || it.key() == a;
      require(ok, ErrorKind::config, field(it.key()) + ": unknown key");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  std::string field(const std::string& key) const { return path_ + "." + key; }
  const Json& at(const char* key) const { return j_.at(key); }

  void number(const char* key, double& out, bool positive = false) const {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    require(v.is_number(), ErrorKind::config, field(key) + ": expected a number");
    const double x = v.get<double>();
    require(std::isfinite(x), ErrorKind::config, field(key) + ": must be finite");
    require(!positive || x > 0.0, ErrorKind::config, field(key) + ": must be positive");
    out = x;
  }
  void optional_number(const char* key, std::optional<double>& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (v.is_null()) {
      out.reset();
      return;
    }
    require(v.is_number(), ErrorKind::config, field(key) + ": expected a number or null");
    const double x = v.get<double>();
    require(std::isfinite(x) && x >= 0.0, ErrorKind::config, field(key) + ": must be a nonnegative number");
    out = x;
  }
  void integer(const char* key, int& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    require(v.is_number_integer(), ErrorKind::config, field(key) + ": expected an integer");
    out = v.get<int>();
  }
  void count(const char* key, std::size_t& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    require(v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0), ErrorKind::config,
            field(key) + ": expected a nonnegative integer");
    out = v.get<std::size_t>();
  }
  void boolean(const char* key, bool& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    require(v.is_boolean(), ErrorKind::config, field(key) + ": expected true or false");
    out = v.get<bool>();
  }
  void string(const char* key, std::string& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    require(v.is_string(), ErrorKind::config, field(key) + ": expected a string");
    out = v.get<std::string>();
  }
  void numbers(const char* key, std::vector<double>& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    require(v.is_array(), ErrorKind::config, field(key) + ": expected an array of numbers");
    std::vector<double> xs;
    for (std::size_t i = 0; i < v.size(); ++i) {
      require(v[i].is_number() && std::isfinite(v[i].get<double>()), ErrorKind::config,
              field(key) + "[" + std::to_string(i) + "]: expected a finite number");
      xs.push_back(v[i].get<double>());
    }
    out = std::move(xs);
  }

 private:
  const Json& j_;
  std::string path_;
};

}  // namespace detail

/// Parses a scenario document. A "preset" key seeds every field from that
/// preset; other keys override. Relative CSV paths resolve against base_dir.
inline Scenario parse_scenario(const Json& doc, const std::filesystem::path& base_dir = {}) {
  const detail::ObjectReader top(doc, "$");
  top.only({"preset", "name", "profile", "n", "mode", "r_max", "h", "ladder", "t_end", "checkpoints", "dt_policy",
            "tolerances", "diagnostics", "output_dir", "seed"});
  Scenario s;
  if (top.has("preset")) {
    std::string p;
    top.string("preset", p);
    s = preset_scenario(p);
  }
  top.string("name", s.name);
  if (top.has("profile")) {
    const auto& p = top.at("profile");
    if (p.is_string()) {
      s.profile = p.get<std::string>();
      require(is_preset(s.profile), ErrorKind::config, "$.profile: unknown preset '" + s.profile + "'");
      s.profile_path.clear();
    } else {
      const detail::ObjectReader pr(p, "$.profile");
      pr.only({"csv"});
      require(pr.has("csv"), ErrorKind::config, "$.profile.csv: required");
      pr.string("csv", s.profile_path);
      std::filesystem::path path(s.profile_path);
      if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
      s.profile_path = path.string();
      s.profile = "csv";
    }
  }
  require(!s.profile.empty(), ErrorKind::config, "$.profile: required unless a preset is given");
  if (s.name.empty()) s.name = s.profile;
  top.integer("n", s.n);
  top.string("mode", s.mode);
  top.number("r_max", s.r_max, true);
  top.number("h", s.h, true);
  top.numbers("ladder", s.ladder);
  top.number("t_end", s.t_end, true);
  if (top.has("checkpoints")) {
    const detail::ObjectReader c(top.at("checkpoints"), "$.checkpoints");
    c.only({"spacing", "extra"});
    c.number("spacing", s.spacing, true);
    c.numbers("extra", s.extra_times);
  }
  if (top.has("dt_policy")) {
    const detail::ObjectReader d(top.at("dt_policy"), "$.dt_policy");
    d.only({"scheme", "safety", "max_dt", "max_rejections"});
    if (d.has("scheme")) {
      std::string scheme;
      d.string("scheme", scheme);
      if (scheme == "explicit") {
        s.dt.scheme = Scheme::explicit_euler;
      } else if (scheme == "semi-implicit") {
        s.dt.scheme = Scheme::semi_implicit;
      } else {
        throw Error(ErrorKind::config, "$.dt_policy.scheme: expected \"explicit\" or \"semi-implicit\"");
      }
    }
    d.number("safety", s.dt.safety, true);
    d.number("max_dt", s.dt.max_dt, true);
    d.integer("max_rejections", s.dt.max_rejections);
  }
  if (top.has("tolerances")) {
    const detail::ObjectReader t(top.at("tolerances"), "$.tolerances");
    t.only({"harnack", "monotone", "decay", "residual", "log_identity", "schrodinger_residual", "ricci"});
    t.optional_number("harnack", s.tolerances.harnack);
    t.optional_number("monotone", s.tolerances.monotone);
    t.optional_number("decay", s.tolerances.decay);
    t.optional_number("residual", s.tolerances.residual);
    t.optional_number("log_identity", s.tolerances.log_identity);
    t.optional_number("schrodinger_residual", s.tolerances.schrodinger_residual);
    t.optional_number("ricci", s.tolerances.ricci);
  }
  if (top.has("diagnostics")) {
    const detail::ObjectReader d(top.at("diagnostics"), "$.diagnostics");
    d.only({"barrier", "harnack", "monotone", "decay", "residual", "schrodinger", "pinching", "exhaustion", "liyau",
            "core", "margin", "residual_t_min", "compact_radius", "compare_at", "decay_times", "liyau_samples"});
    auto& g = s.diagnostics;
    d.boolean("barrier", g.barrier);
    d.boolean("harnack", g.harnack);
    d.boolean("monotone", g.monotone);
    d.boolean("decay", g.decay);
    d.boolean("residual", g.residual);
    d.boolean("schrodinger", g.schrodinger);
    d.boolean("pinching", g.pinching);
    d.boolean("exhaustion", g.exhaustion);
    d.boolean("liyau", g.liyau);
    d.number("core", g.core, true);
    d.count("margin", g.margin);
    d.number("residual_t_min", g.residual_t_min);
    d.number("compact_radius", g.compact_radius);
    d.numbers("compare_at", g.compare_at);
    d.numbers("decay_times", g.decay_times);
    d.count("liyau_samples", g.liyau_samples);
  }
  top.string("output_dir", s.output_dir);
  if (top.has("seed")) {
    const auto& v = top.at("seed");
    require(v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0), ErrorKind::config,
            "$.seed: expected a nonnegative integer");
    s.seed = v.get<std::uint64_t>();
  }

  // semantic checks, still reported with field paths
  require(s.n >= 3 && s.n <= 8, ErrorKind::config, "$.n: supported dimensions are 3..8");
  require(s.mode == "radial" || s.mode == "box", ErrorKind::config, "$.mode: expected \"radial\" or \"box\"");
  require(s.mode == "radial", ErrorKind::config, "$.mode: the pipeline runs in radial mode only");
  require(std::abs(s.r_max / s.h - std::round(s.r_max / s.h)) < 1e-9 * (s.r_max / s.h), ErrorKind::config,
          "$.h: r_max must be a whole number of steps");
  require(s.r_max / s.h >= 8.0, ErrorKind::config, "$.h: the chart needs at least 8 cells");
  require(!s.ladder.empty(), ErrorKind::config, "$.ladder: needs at least one radius");
  const auto dom = Domain::radial(s.n, s.r_max, s.h);
  for (std::size_t j = 0; j < s.ladder.size(); ++j) {
    const std::string f = "$.ladder[" + std::to_string(j) + "]";
    require(s.ladder[j] > 0.0, ErrorKind::config, f + ": must be positive");
    require(s.ladder[j] <= s.r_max + 1e-12, ErrorKind::config, f + ": beyond r_max");
    require(dom.is_grid_radius(s.ladder[j]), ErrorKind::config, f + ": not a grid node");
    require(dom.node_at(s.ladder[j]) >= 4, ErrorKind::config, f + ": spans fewer than 4 cells");
    require(j == 0 || s.ladder[j] > s.ladder[j - 1], ErrorKind::config, f + ": radii must increase");
  }
  for (std::size_t j = 0; j < s.extra_times.size(); ++j) {
    require(s.extra_times[j] >= 0.0, ErrorKind::config,
            "$.checkpoints.extra[" + std::to_string(j) + "]: must be nonnegative");
  }
  require(s.dt.max_rejections > 0, ErrorKind::config, "$.dt_policy.max_rejections: must be positive");
  require(s.diagnostics.compact_radius >= 0.0 && s.diagnostics.compact_radius <= s.ladder.front() + 1e-12,
          ErrorKind::config, "$.diagnostics.compact_radius: must lie in [0, ladder[0]]");
  require(s.diagnostics.core <= 1.0, ErrorKind::config, "$.diagnostics.core: must lie in (0, 1]");
  for (std::size_t j = 0; j < s.diagnostics.compare_at.size(); ++j) {
    require(s.diagnostics.compare_at[j] > 1.0, ErrorKind::config,
            "$.diagnostics.compare_at[" + std::to_string(j) + "]: must exceed 1");
  }
  for (std::size_t j = 0; j < s.diagnostics.decay_times.size(); ++j) {
    require(s.diagnostics.decay_times[j] >= std::exp(1.0) * (1.0 - 1e-12), ErrorKind::config,
            "$.diagnostics.decay_times[" + std::to_string(j) + "]: must be at least e");
  }
  const bool three_only = s.profile != "flat" && s.profile != "csv";
  require(!three_only || s.n == 3, ErrorKind::config, "$.n: preset '" + s.profile + "' is defined for n = 3");
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& file) {
  return parse_scenario(io::read_json(file), file.parent_path());
}

inline Json to_json(const Scenario& s) {
  Json j;
  j["name"] = s.name;
  if (s.profile == "csv") {
    j["profile"] = Json{{"csv", s.profile_path}};
  } else {
    j["profile"] = s.profile;
  }
  j["n"] = s.n;
  j["mode"] = s.mode;
  j["r_max"] = s.r_max;
  j["h"] = s.h;
  j["ladder"] = s.ladder;
  j["t_end"] = s.t_end;
  j["checkpoints"] = Json{{"spacing", s.spacing}, {"extra", s.extra_times}};
  j["dt_policy"] = Json{{"scheme", s.dt.scheme == Scheme::explicit_euler ? "explicit" : "semi-implicit"},
                        {"safety", s.dt.safety},
                        {"max_dt", s.dt.max_dt},
                        {"max_rejections", s.dt.max_rejections}};
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  const auto& t = s.tolerances;
  j["tolerances"] = Json{{"harnack", opt(t.harnack)},
                         {"monotone", opt(t.monotone)},
                         {"decay", opt(t.decay)},
                         {"residual", opt(t.residual)},
                         {"log_identity", opt(t.log_identity)},
                         {"schrodinger_residual", opt(t.schrodinger_residual)},
                         {"ricci", opt(t.ricci)}};
  const auto& d = s.diagnostics;
  j["diagnostics"] = Json{{"barrier", d.barrier},
                          {"harnack", d.harnack},
                          {"monotone", d.monotone},
                          {"decay", d.decay},
                          {"residual", d.residual},
                          {"schrodinger", d.schrodinger},
                          {"pinching", d.pinching},
                          {"exhaustion", d.exhaustion},
                          {"liyau", d.liyau},
                          {"core", d.core},
                          {"margin", d.margin},
                          {"residual_t_min", d.residual_t_min},
                          {"compact_radius", d.compact_radius},
                          {"compare_at", d.compare_at},
                          {"decay_times", d.decay_times},
                          {"liyau_samples", d.liyau_samples}};
  j["seed"] = s.seed;
  return j;
}

// ---------------------------------------------------------------- profiles

/// Base metric, potential, initial factor and (optionally) a Schrodinger solution v.
struct Profile {
  ConformalMetric base;
  ScalarField R0;
  ScalarField initial;
  std::optional<ScalarField> v;
};

namespace detail {

inline ScalarField resample(const Domain& d, const std::vector<double>& r, const std::vector<double>& y,
                            const std::string& what) {
  require(r.size() >= 4, ErrorKind::config, what + ": needs at least 4 rows");
  const double step = r[1] - r[0];
  require(std::abs(r[0]) < 1e-12 && step > 0.0, ErrorKind::config, what + ": r must start at 0 and increase");
  for (std::size_t i = 1; i < r.size(); ++i) {
    require(std::abs(r[i] - r[i - 1] - step) < 1e-9 * std::max(1.0, r[i]), ErrorKind::config,
            what + ": r must be uniformly spaced");
  }
  require(r.back() >= d.r_max() - 1e-9, ErrorKind::config, what + ": profile ends before r_max");
  return ScalarField::radial_profile(d, [&](double x) { return quadrature::interpolate(y, 0.0, step, x); });
}

}  // namespace detail

inline Profile build_profile(const Scenario& s) {
  const auto d = Domain::radial(s.n, s.r_max, s.h);
  auto radial = [&d](auto&& f) { return ScalarField::radial_profile(d, f); };
  const auto one = ScalarField::constant(d, 1.0);
  const auto& p = s.profile;
  if (p == "flat") return {ConformalMetric::flat(d), ScalarField::constant(d, 0.0), one, std::nullopt};
  if (p == "sphere_factor" || p == "positive_cone" || p == "cylinder_like") {
    const double e = p == "sphere_factor" ? 0.0 : (p == "positive_cone" ? -0.125 : -0.25);
    const ConformalMetric base(radial([&](double r) {
      return p == "sphere_factor" ? std::sqrt(2.0 / (1.0 + r * r)) : std::pow(1.0 + r * r, e);
    }));
    return {base, scalar_curvature(base), one, std::nullopt};
  }
  const auto flat = ConformalMetric::flat(d);
  if (p == "manufactured_w") {
    return {flat, radial([](double r) { return 24.0 * std::pow(1.0 + r * r, -2.5); }), one, std::nullopt};
  }
  if (p == "schrodinger_pair") {
    auto v = [](double r) { return 1.0 - 0.5 / std::sqrt(1.0 + r * r); };
    return {flat, radial([&](double r) { return 12.0 * std::pow(1.0 + r * r, -2.5) / v(r); }), one, radial(v)};
  }
  if (p == "divergent_average") {
    return {flat, radial([](double r) { return 8.0 / ((1.0 + r) * (1.0 + r)); }), one, std::nullopt};
  }
  if (p == "mis_signed") {
    return {flat, radial([](double r) { return 24.0 * (1.0 - r * r / 4.0) * std::pow(1.0 + r * r, -2.5); }), one,
            std::nullopt};
  }
  require(p == "csv", ErrorKind::config, "$.profile: unknown profile '" + p + "'");
  const auto table = io::read_csv(s.profile_path);
  const auto col = [&](const char* name) { return table.column(name); };
  require(col("r") >= 0 && col("U0") >= 0, ErrorKind::config, "$.profile.csv: columns r and U0 are required");
  auto column = [&](std::ptrdiff_t c) {
    std::vector<double> out;
    for (const auto& row : table.rows) out.push_back(row[static_cast<std::size_t>(c)]);
    return out;
  };
  const auto r = column(col("r"));
  const std::string what = "$.profile.csv (" + s.profile_path + ")";
  const auto U0 = detail::resample(d, r, column(col("U0")), what);
  require(U0.min() > 0.0, ErrorKind::config, what + ": U0 must be positive");
  const ConformalMetric base(U0);
  auto R0 = col("R0") >= 0 ? detail::resample(d, r, column(col("R0")), what) : scalar_curvature(base);
  auto initial = col("u0") >= 0 ? detail::resample(d, r, column(col("u0")), what) : one;
  require(initial.min() > 0.0, ErrorKind::config, what + ": u0 must be positive");
  std::optional<ScalarField> v;
  if (col("v") >= 0) v = detail::resample(d, r, column(col("v")), what);
  return {base, std::move(R0), std::move(initial), std::move(v)};
}

// ---------------------------------------------------------------- hypotheses

struct HypothesisResult {
  std::string name;
  bool passed = false;
  std::string detail;
  Json values;
  /// Part of the theorem's assumptions; the others only classify the model.
  bool theorem = true;
};

struct HypothesisReport {
  std::vector<HypothesisResult> results;

  bool passed(const std::string& name) const {
    for (const auto& r : results) {
      if (r.name == name) return r.passed;
    }
    return false;
  }
  bool all_passed() const {
    for (const auto& r : results) {
      if (r.theorem && !r.passed) return false;
    }
    return true;
  }
  std::vector<std::string> failed() const {
    std::vector<std::string> out;
    for (const auto& r : results) {
      if (r.theorem && !r.passed) out.push_back(r.name);
    }
    return out;
  }
};

/// Tail settled to tolerance, or a power-law tail decaying clearly faster than 1/s.
inline bool integrable(const AverageConditionReport& a) {
  return a.converged || (a.tail_exponent >= 1.25 && std::isfinite(a.total()));
}

/// Nonnegative Ricci, bounded curvature, the average and volume-growth
/// integrals, a nonnegative potential, and whether the potential is the
/// scalar curvature of the base.
inline HypothesisReport validate_hypotheses(const Scenario& s, const Profile& p) {
  HypothesisReport rep;
  const auto& base = p.base;
  const auto R_base = scalar_curvature(base);
  const auto pin = pinching_report(base);
  const double ricci_tol = s.tolerances.ricci.value_or(1e-9 * std::max(1.0, R_base.max_abs()));
  const double s_max = radial_measure(base).s_max();

  {
    HypothesisResult r{"ricci_nonnegative", pin.min_ricci_eigenvalue >= -ricci_tol, "", {}};
    r.values = Json{{"min_eigenvalue", pin.min_ricci_eigenvalue}, {"tolerance", ricci_tol}};
    r.detail = r.passed ? "smallest Ricci eigenvalue above -tolerance" : "Ricci curvature negative somewhere";
    rep.results.push_back(std::move(r));
  }
  {
    const auto ric = ricci_conformal(base);
    double sup_ric = 0.0;
    for (std::size_t i = 0; i + 1 < R_base.size(); ++i) {
      sup_ric = std::max({sup_ric, std::abs(ric.min_eigenvalue()[i]), std::abs(ric.max_eigenvalue()[i])});
    }
    const bool finite = std::isfinite(sup_ric) && std::isfinite(R_base.max_abs()) && std::isfinite(p.R0.max_abs());
    HypothesisResult r{"bounded_curvature", finite, finite ? "curvature bounded on the chart" : "curvature not finite",
                       Json{{"sup_abs_R", R_base.max_abs()}, {"sup_abs_ricci", sup_ric}, {"sup_abs_R0", p.R0.max_abs()}}};
    rep.results.push_back(std::move(r));
  }
  {
    HypothesisResult r{"potential_nonnegative", p.R0.min() >= 0.0, "", Json{{"min_R0", p.R0.min()}}};
    r.detail = r.passed ? "R0 >= 0" : "R0 negative somewhere";
    rep.results.push_back(std::move(r));
  }
  {
    double gap = 0.0;
    for (std::size_t i = 0; i + 1 < R_base.size(); ++i) gap = std::max(gap, std::abs(p.R0[i] - R_base[i]));
    const double tol = 5.0 * s.h * s.h * (1.0 + R_base.max_abs());
    HypothesisResult r{"curvature_consistent", gap <= tol, "", Json{{"max_gap", gap}, {"tolerance", tol}}, false};
    r.detail = r.passed ? "R0 is the scalar curvature of the base" : "R0 acts as an external potential";
    rep.results.push_back(std::move(r));
  }
  {
    HypothesisResult r{"average_condition", false, "", {}};
    try {
      const auto f = p.R0.map([c = base.coupling()](double x) { return c * x; });
      const auto a = average_integral(base, f, s_max);
      r.passed = integrable(a);
      r.values = Json{{"value_at_rmax", a.value_at_rmax},
                      {"tail_estimate", a.tail_estimate},
                      {"total", a.total()},
                      {"tail_exponent", a.tail_exponent},
                      {"tail_uncertainty", a.tail_uncertainty}};
      r.detail = r.passed ? "average integral converges" : "average integral does not converge";
    } catch (const Error& e) {
      r.detail = e.what();
    }
    rep.results.push_back(std::move(r));
  }
  {
    HypothesisResult r{"volume_growth", false, "", {}};
    try {
      const auto v = volume_growth_integral(base, s_max);
      r.passed = integrable(v);
      r.values = Json{{"value_at_rmax", v.value_at_rmax},
                      {"tail_estimate", v.tail_estimate},
                      {"total", v.total()},
                      {"tail_exponent", v.tail_exponent},
                      {"tail_uncertainty", v.tail_uncertainty}};
      r.detail = r.passed ? "volume growth integral converges (non-parabolic)" : "volume growth integral diverges";
    } catch (const Error& e) {
      r.detail = e.what();
    }
    rep.results.push_back(std::move(r));
  }
  return rep;
}

inline Json to_json(const HypothesisReport& rep) {
  Json out = Json::object();
  out["all_passed"] = rep.all_passed();
  Json list = Json::array();
  for (const auto& r : rep.results) {
    list.push_back(Json{{"name", r.name},
                        {"passed", r.passed},
                        {"theorem_hypothesis", r.theorem},
                        {"detail", r.detail},
                        {"values", r.values}});
  }
  out["hypotheses"] = std::move(list);
  return out;
}

}  // namespace confflow
