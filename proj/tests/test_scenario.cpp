#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "confflow/run.hpp"

using namespace confflow;
namespace fs = std::filesystem;

namespace {

std::string config_error(const char* text) {
  try {
    parse_scenario(Json::parse(text));
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
    return e.what();
  }
  ADD_FAILURE() << "accepted: " << text;
  return {};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("confflow_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

const HypothesisResult& hypothesis(const HypothesisReport& rep, const std::string& name) {
  for (const auto& r : rep.results) {
    if (r.name == name) return r;
  }
  throw std::runtime_error("missing " + name);
}

HypothesisReport hypotheses_of(const std::string& preset) {
  const auto s = preset_scenario(preset);
  return validate_hypotheses(s, build_profile(s));
}

}  // namespace

TEST(Schema, UnknownKeysNameTheirPath) {
  EXPECT_NE(config_error(R"({"preset": "flat", "bogus": 1})").find("$.bogus: unknown key"), std::string::npos);
  EXPECT_NE(config_error(R"({"preset": "flat", "diagnostics": {"harnak": true}})").find("$.diagnostics.harnak"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"preset": "flat", "dt_policy": {"scheme": "rk4"}})").find("$.dt_policy.scheme"),
            std::string::npos);
}

TEST(Schema, SemanticErrorsNameTheirPath) {
  EXPECT_NE(config_error(R"({"preset": "flat", "ladder": [5, 10.01, 20]})").find("$.ladder[1]: not a grid node"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"preset": "flat", "ladder": [10, 5, 20]})").find("$.ladder[1]"), std::string::npos);
  EXPECT_NE(config_error(R"({"preset": "flat", "h": -0.1})").find("$.h"), std::string::npos);
  EXPECT_NE(config_error(R"({"preset": "manufactured_w", "n": 4})").find("$.n"), std::string::npos);
  EXPECT_NE(config_error(R"({"preset": "flat", "diagnostics": {"decay_times": [2]}})")
                .find("$.diagnostics.decay_times[0]"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"preset": "nope"})").find("unknown preset"), std::string::npos);
  EXPECT_NE(config_error(R"({"h": 0.1})").find("$.profile"), std::string::npos);
}

TEST(Schema, PresetSeedsAndKeysOverride) {
  const auto s = parse_scenario(Json::parse(R"({"preset": "manufactured_w", "name": "m2", "t_end": 2,
                                                 "tolerances": {"harnack": 0.5}})"));
  EXPECT_EQ(s.name, "m2");
  EXPECT_EQ(s.profile, "manufactured_w");
  EXPECT_EQ(s.t_end, 2.0);
  EXPECT_EQ(s.r_max, 40.0);
  EXPECT_EQ(s.diagnostics.compact_radius, 5.0);
  EXPECT_EQ(s.tolerances.harnack, 0.5);
  EXPECT_FALSE(s.tolerances.decay.has_value());
}

TEST(Schema, SerializedScenarioParsesBackUnchanged) {
  for (const auto& p : preset_catalog()) {
    const auto s = preset_scenario(p.name);
    const auto j = to_json(s);
    EXPECT_EQ(to_json(parse_scenario(j)).dump(), j.dump()) << p.name;
  }
}

TEST(Presets, CatalogBuildsEveryProfile) {
  EXPECT_EQ(preset_catalog().size(), 8u);
  for (const auto& p : preset_catalog()) {
    const auto s = preset_scenario(p.name);
    const auto prof = build_profile(s);
    EXPECT_EQ(prof.R0.size(), prof.base.factor().size()) << p.name;
    EXPECT_EQ(prof.v.has_value(), p.name == "schrodinger_pair") << p.name;
  }
}

TEST(Hypotheses, PresetsAreClassified) {
  EXPECT_TRUE(hypotheses_of("flat").all_passed());
  EXPECT_TRUE(hypotheses_of("manufactured_w").all_passed());
  // a potential that is not the base curvature is still within the theorem
  EXPECT_FALSE(hypothesis(hypotheses_of("manufactured_w"), "curvature_consistent").passed);
  EXPECT_FALSE(hypothesis(hypotheses_of("divergent_average"), "average_condition").passed);
  EXPECT_FALSE(hypothesis(hypotheses_of("mis_signed"), "potential_nonnegative").passed);
  EXPECT_FALSE(hypothesis(hypotheses_of("cylinder_like"), "volume_growth").passed);
  EXPECT_FALSE(hypothesis(hypotheses_of("sphere_factor"), "volume_growth").passed);

  const auto cone = hypotheses_of("positive_cone");
  EXPECT_TRUE(hypothesis(cone, "ricci_nonnegative").passed);
  EXPECT_TRUE(hypothesis(cone, "curvature_consistent").passed);
  // V ~ s^3, so the tail decays like s^{-2}
  EXPECT_TRUE(hypothesis(cone, "volume_growth").passed);
  EXPECT_FALSE(hypothesis(cone, "average_condition").passed);
  EXPECT_EQ(cone.failed(), std::vector<std::string>{"average_condition"});
}

TEST(Profiles, CsvFlatProfileMatchesThePreset) {
  const auto dir = scratch("csv");
  std::string text = "r,U0,R0\n";
  for (int i = 0; i <= 200; ++i) text += io::format_double(0.1 * i) + ",1,0\n";
  io::write_atomic(dir / "flat.csv", text);
  io::write_atomic(dir / "s.json", R"({"profile": {"csv": "flat.csv"}, "r_max": 20, "h": 0.05, "ladder": [5, 10, 20]})");
  const auto s = load_scenario(dir / "s.json");
  EXPECT_EQ(s.profile, "csv");
  const auto p = build_profile(s);
  for (std::size_t i = 0; i < p.R0.size(); ++i) {
    EXPECT_NEAR(p.base.factor()[i], 1.0, 1e-14);
    EXPECT_EQ(p.R0[i], 0.0);
  }
  EXPECT_TRUE(std::isinf(pinching_epsilon(p.base)));
}

TEST(Profiles, CsvErrorsCarryLineNumbers) {
  const auto dir = scratch("csv_bad");
  io::write_atomic(dir / "bad.csv", "r,U0\n0,1\n0.1,x\n");
  io::write_atomic(dir / "s.json", R"({"profile": {"csv": "bad.csv"}, "r_max": 20, "h": 0.05, "ladder": [20]})");
  try {
    build_profile(load_scenario(dir / "s.json"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(Io, DoublesRoundTripAndWritesLeaveNoTemporaries) {
  for (double x : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300}) EXPECT_EQ(std::stod(io::format_double(x)), x);
  const auto dir = scratch("io");
  io::write_atomic(dir / "a" / "t.csv", io::csv_text({"x", "y"}, {{1.0, 0.5}}));
  EXPECT_EQ(slurp(dir / "a" / "t.csv"), "x,y\n1,0.5\n");
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) files += e.is_regular_file();
  EXPECT_EQ(files, 1u);
  EXPECT_THROW(io::csv_text({"x"}, {{1.0, 2.0}}), Error);
}

TEST(Run, FlatScenarioPassesAndRerunsByteIdentical) {
  auto s = preset_scenario("flat");
  s.t_end = 0.2;
  const auto dir = scratch("run");
  const auto a = run_scenario(s, dir / "a");
  const auto b = run_scenario(s, dir / "b", {2, true});
  EXPECT_EQ(a.verdict, "pass");
  EXPECT_EQ(a.exit_status, 0);
  const auto summary = io::read_json(dir / "a" / "summary.json");
  EXPECT_EQ(summary["verdict"], "pass");
  ASSERT_FALSE(summary["artifacts"].empty());
  for (const auto& rel : summary["artifacts"]) {
    const auto name = rel.get<std::string>();
    ASSERT_TRUE(fs::exists(dir / "a" / name)) << name;
    if (name != "run_metadata.json") {
      EXPECT_EQ(slurp(dir / "a" / name), slurp(dir / "b" / name)) << name;
    }
  }
  EXPECT_TRUE(io::read_json(dir / "a" / "run_metadata.json").contains("started_at"));
}

TEST(Run, MisSignedPotentialGatesItsChecks) {
  const auto s = preset_scenario("mis_signed");
  const auto r = run_scenario(s, {}, {1, false});
  EXPECT_EQ(r.verdict, "hypotheses-unmet");
  EXPECT_EQ(r.exit_status, 0);
  for (const auto& c : r.checks) {
    if (c.name == "upper_bound" || c.name == "harnack_traced") {
      EXPECT_EQ(c.status, "report-only") << c.name;
      EXPECT_NE(c.reason.find("potential_nonnegative"), std::string::npos);
    }
    // no potential for a negative source
    if (c.name == "barrier") EXPECT_EQ(c.status, "skipped");
  }
}

TEST(Run, ErrorDocumentShape) {
  const auto j = error_json("config", "$.h: must be positive");
  EXPECT_EQ(j["error"]["kind"], "config");
  EXPECT_EQ(j["error"]["message"], "$.h: must be positive");
}
