#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "covctl/scenario_io.hpp"
#include "covctl/server.hpp"
#include "covctl/verify.hpp"

namespace fs = std::filesystem;
using namespace covctl;

namespace {

constexpr int kExitFailed = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitRuntime = 3;

struct RunArgs {
  std::string scenario;
  std::string law;
  std::string feedforward;
  std::optional<std::uint64_t> seed;
  std::string out;
};

ScenarioFile apply_overrides(ScenarioFile s, const RunArgs& args) {
  if (args.law == "TVD_C") s.config.control.law = ControlLaw::TvdC;
  if (args.law == "TVD_D1") s.config.control.law = ControlLaw::TvdD1;
  if (!args.feedforward.empty()) s.config.control.feedforward = args.feedforward == "on";
  if (args.seed) {
    if (!s.config.initial_positions.empty()) {
      throw Error(ErrorKind::InvalidConfig, "--seed needs a scenario with seeded initial positions");
    }
    s.config.rng_seed = *args.seed;
  }
  s.config.validate();
  return s;
}

int cmd_run(const RunArgs& args) {
  ScenarioFile s;
  try {
    s = apply_overrides(load_scenario(args.scenario), args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  const std::string name = s.name.empty() ? fs::path(args.scenario).stem().string() : s.name;
  const fs::path out = args.out.empty() ? fs::path("runs") / name : fs::path(args.out);
  try {
    const auto log = run(s.config);
    write_run(out, s, log);
    std::printf("wrote %zu records to %s\n", log.records.size(), out.string().c_str());
    std::printf("config_hash: %s\n", config_hash(s).c_str());
    if (s.steady_state_window > 0) {
      std::printf("steady-state mean e_a: %.6g\n", steady_state_mean(log, s.steady_state_window));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}

int cmd_verify(const std::string& suite) {
  const auto report = run_suite(suite);
  if (!report) {
    std::cerr << "error: unknown suite '" << suite
              << "' (expected derivatives, partition, convergence or all)\n";
    return kExitInvalid;
  }
  for (const auto& c : report->checks) {
    std::printf("%s  %-40s observed %.3e  tolerance %.1e", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                c.observed, c.tolerance);
    if (!c.detail.empty()) std::printf("  (%s)", c.detail.c_str());
    std::printf("\n");
  }
  double worst = 0.0;
  for (const auto& c : report->checks) {
    if (c.tolerance > 0) worst = std::max(worst, c.observed / c.tolerance);
  }
  std::printf("%s: %zu checks, %s, max observed/tolerance %.3e\n", suite.c_str(),
              report->checks.size(), report->passed() ? "all passed" : "FAILURES", worst);
  return report->passed() ? 0 : kExitFailed;
}

int cmd_report(const std::string& run_dir, const std::string& other, const std::string& out) {
  try {
    if (other.empty()) {
      std::ifstream in(fs::path(run_dir) / "manifest.json");
      if (!in) throw Error(ErrorKind::InvalidConfig, "no manifest.json in " + run_dir);
      const auto manifest = nlohmann::json::parse(in);
      const auto series = read_metrics_csv(fs::path(run_dir) / "metrics.csv");
      std::printf("config_hash: %s\n", manifest.at("config_hash").get<std::string>().c_str());
      std::printf("records: %zu\n", series.t.size());
      if (!series.t.empty()) std::printf("final e_a: %.6g\n", series.e_a.back());
      if (manifest.contains("steady_state_mean")) {
        std::printf("steady-state mean e_a: %.6g\n", manifest["steady_state_mean"].get<double>());
      }
      return 0;
    }
    const auto cmp = compare_runs(run_dir, other, out.empty() ? fs::path(run_dir) : fs::path(out));
    std::fputs(cmp.summary.c_str(), stdout);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}

int cmd_serve(const std::string& scenario, ServerOptions options) {
  ScenarioFile s;
  try {
    s = load_scenario(scenario);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  try {
    Server server(std::move(s), options);
    server.start();
    std::printf("serving ws://0.0.0.0:%u/session\n", static_cast<unsigned>(server.port()));
    std::fflush(stdout);
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-varying-domain coverage control: batch runs, numerical checks and live sessions"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario and write trajectory, metrics and manifest");
  run_cmd->add_option("scenario", run_args.scenario, "Scenario JSON file")->required();
  run_cmd->add_option("--law", run_args.law, "Override the control law")
      ->check(CLI::IsMember({"TVD_C", "TVD_D1"}));
  run_cmd->add_option("--feedforward", run_args.feedforward, "Override the feedforward term")
      ->check(CLI::IsMember({"on", "off"}));
  run_cmd->add_option("--seed", run_args.seed, "Override the placement seed");
  run_cmd->add_option("--out", run_args.out, "Output directory (default runs/<name>)");

  std::string suite = "all";
  auto* verify_cmd = app.add_subcommand("verify", "Run numerical verification suites");
  verify_cmd->add_option("--suite", suite, "derivatives, partition, convergence or all");

  std::string report_dir, compare_dir, report_out;
  auto* report_cmd = app.add_subcommand("report", "Summarize a run or compare two runs");
  report_cmd->add_option("run_dir", report_dir, "Run directory")->required();
  report_cmd->add_option("--compare", compare_dir, "Run directory to compare against");
  report_cmd->add_option("--out", report_out, "Where comparison.csv and summary.txt go (default run_dir)");

  std::string serve_scenario;
  ServerOptions serve_options;
  auto* serve_cmd = app.add_subcommand("serve", "Serve a live session over WebSocket at /session");
  serve_cmd->add_option("--scenario", serve_scenario, "Scenario JSON file")->required();
  serve_cmd->add_option("--port", serve_options.port, "TCP port")->capture_default_str();
  serve_cmd->add_option("--realtime-factor", serve_options.realtime_factor,
                        "Simulated seconds per wall-clock second")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  serve_cmd->add_option("--decimation", serve_options.session.frame_decimation, "Ticks per frame")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  if (*run_cmd) return cmd_run(run_args);
  if (*verify_cmd) return cmd_verify(suite);
  if (*report_cmd) return cmd_report(report_dir, compare_dir, report_out);
  return cmd_serve(serve_scenario, serve_options);
}
