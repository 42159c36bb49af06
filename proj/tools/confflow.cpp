// confflow: run, validate and inspect flow scenarios.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "confflow/run.hpp"

namespace fs = std::filesystem;
using confflow::Json;

namespace {

constexpr int kExitError = 2;

fs::path output_root() {
  const char* env = std::getenv("CONFFLOW_OUTPUT_ROOT");
  return env && *env ? fs::path(env) : fs::path("runs");
}

// --out wins; then the scenario's output_dir (relative to the root); then root/name.
fs::path resolve_out(const std::string& flag, const confflow::Scenario& s) {
  if (!flag.empty()) return flag;
  if (!s.output_dir.empty()) {
    const fs::path p(s.output_dir);
    return p.is_absolute() ? p : output_root() / p;
  }
  return output_root() / s.name;
}

int report_error(const std::string& kind, const std::string& message, const fs::path& out_dir) {
  const auto doc = confflow::error_json(kind, message);
  std::cerr << doc.dump(2) << "\n";
  if (!out_dir.empty()) {
    try {
      confflow::io::write_atomic(out_dir / "error.json", confflow::io::json_text(doc));
    } catch (...) {
      // stderr already carries the document
    }
  }
  return kExitError;
}

std::string cell(const Json& j) {
  if (j.is_null()) return "-";
  if (j.is_number()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", j.get<double>());
    return buf;
  }
  return j.is_string() ? j.get<std::string>() : j.dump();
}

void print_checks(const Json& checks) {
  std::printf("  %-22s %-12s %s\n", "check", "status", "worst");
  for (const auto& c : checks) {
    std::printf("  %-22s %-12s %s\n", c.value("name", "").c_str(), c.value("status", "").c_str(),
                cell(c.contains("worst") ? c["worst"] : Json()).c_str());
  }
}

int cmd_run(const std::string& config, const std::string& out_flag, unsigned jobs) {
  fs::path out_dir = out_flag;
  try {
    const auto s = confflow::load_scenario(config);
    out_dir = resolve_out(out_flag, s);
    const auto res = confflow::run_scenario(s, out_dir, {jobs, true});
    std::printf("%s: %s -> %s\n", s.name.c_str(), res.verdict.c_str(), out_dir.string().c_str());
    print_checks(res.summary["checks"]);
    return res.exit_status;
  } catch (const confflow::Error& e) {
    return report_error(std::string(confflow::to_string(e.kind())), e.message(), out_dir);
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), out_dir);
  }
}

int cmd_validate(const std::string& config) {
  try {
    const auto s = confflow::load_scenario(config);
    const auto profile = confflow::build_profile(s);
    const auto hyp = confflow::validate_hypotheses(s, profile);
    Json doc;
    doc["valid"] = true;
    doc["scenario"] = confflow::to_json(s);
    doc["hypotheses"] = confflow::to_json(hyp);
    std::cout << doc.dump(2) << "\n";
    return 0;
  } catch (const confflow::Error& e) {
    return report_error(std::string(confflow::to_string(e.kind())), e.message(), {});
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), {});
  }
}

int cmd_presets() {
  for (const auto& p : confflow::preset_catalog()) std::printf("%-18s %s\n", p.name.c_str(), p.description.c_str());
  return 0;
}

int cmd_report(const std::string& in) {
  try {
    const auto summary = confflow::io::read_json(fs::path(in) / "summary.json");
    std::printf("scenario: %s (%s)\n", summary.value("name", "").c_str(), summary.value("profile", "").c_str());
    std::printf("verdict:  %s (exit %d)\n", summary.value("verdict", "").c_str(), summary.value("exit_status", -1));
    const auto& unmet = summary["hypotheses_unmet"];
    if (!unmet.empty()) {
      std::printf("hypotheses unmet:");
      for (const auto& h : unmet) std::printf(" %s", h.get<std::string>().c_str());
      std::printf("\n");
    }
    print_checks(summary["checks"]);
    std::printf("artifacts: %zu files\n", summary["artifacts"].size());
    return 0;
  } catch (const confflow::Error& e) {
    return report_error(std::string(confflow::to_string(e.kind())), e.message(), {});
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), {});
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Yamabe flow numerical lab"};
  app.require_subcommand(1);

  std::string config, out, in;
  unsigned jobs = 1;

  auto* run = app.add_subcommand("run", "run a scenario and write its artifacts");
  run->add_option("--config", config, "scenario JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "output directory (default: $CONFFLOW_OUTPUT_ROOT/<name>)");
  run->add_option("--jobs", jobs, "exhaustion domains run concurrently")->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "check a scenario and its hypotheses without running");
  validate->add_option("--config", config, "scenario JSON")->required()->check(CLI::ExistingFile);

  auto* presets = app.add_subcommand("presets", "preset scenarios");
  auto* list = presets->add_subcommand("list", "list preset names");
  presets->require_subcommand(1);

  auto* report = app.add_subcommand("report", "pretty-print a run summary");
  report->add_option("--in", in, "run directory")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return cmd_run(config, out, jobs);
  if (validate->parsed()) return cmd_validate(config);
  if (list->parsed()) return cmd_presets();
  if (report->parsed()) return cmd_report(in);
  return kExitError;
}
