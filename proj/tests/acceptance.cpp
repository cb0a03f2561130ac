#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "covctl/scenario_io.hpp"
#include "covctl/session.hpp"
#include "covctl/verify.hpp"

using namespace covctl;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("threw ") + e.what()};
  }
  while (o.detail.size() >= 2 && o.detail.ends_with("; ")) o.detail.resize(o.detail.size() - 2);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = budget_s <= 0 || secs <= budget_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("[%s] %s: %s (%.1f s%s)\n", pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs,
              in_time ? "" : ", over time budget");
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome from_checks(const SuiteReport& report, std::string_view prefix) {
  Outcome o{true, ""};
  std::size_t n = 0;
  for (const auto& c : report.checks) {
    if (c.name.rfind(prefix, 0) != 0) continue;
    ++n;
    o.pass = o.pass && c.pass;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += fmt("%s %s observed %.3g tol %.3g", c.name.c_str(), c.pass ? "ok" : "FAILED",
                    c.observed, c.tolerance);
    if (!c.detail.empty()) o.detail += " (" + c.detail + ")";
  }
  if (n == 0) return {false, "no checks named " + std::string(prefix)};
  return o;
}

Outcome whole_suite(const SuiteReport& report) {
  double worst = 0;
  for (const auto& c : report.checks) {
    if (c.tolerance > 0) worst = std::max(worst, c.observed / c.tolerance);
  }
  return {report.passed(), fmt("%zu checks, %s, worst observed/tolerance %.3g", report.checks.size(),
                               report.passed() ? "all pass" : "FAILURES", worst)};
}

ScenarioFile load(const char* name) { return load_scenario(std::string(COVCTL_SCENARIOS) + "/" + name); }

double steady_mean(ScenarioFile s, bool feedforward, std::uint64_t seed) {
  s.config.control.feedforward = feedforward;
  s.config.rng_seed = seed;
  return steady_state_mean(run(s.config), s.steady_state_window);
}

Outcome feedforward_benefit() {
  const auto s = load("circle100.json");
  Outcome o{true, ""};
  for (std::uint64_t seed : {1, 2, 3}) {
    const double on = steady_mean(s, true, seed);
    const double off = steady_mean(s, false, seed);
    const double ratio = on / off;
    o.pass = o.pass && ratio < 0.7;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += fmt("seed %llu: %.4g / %.4g = %.3f (improvement %.1f%%)",
                    static_cast<unsigned long long>(seed), on, off, ratio, 100 * (1 - ratio));
  }
  return o;
}

Outcome neighbor_statistics() {
  Outcome o{true, ""};
  double degree6 = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ScenarioConfig c;
    c.n_agents = 100;
    c.rng_seed = seed;
    c.control.law = ControlLaw::TvdD1;
    c.control.kappa = 2.0;
    c.dt = 0.05;
    c.duration = 20.0;
    c.record_every = static_cast<std::size_t>(std::llround(c.duration / c.dt));
    const auto log = run(c);
    const auto& hist = log.records.back().metrics.neighbor_histogram;
    std::size_t mode = 0, best = 0;
    for (const auto& [deg, count] : hist) {
      if (count > best) best = count, mode = deg;
    }
    const std::size_t six = hist.contains(6) ? hist.at(6) : 0;
    degree6 += static_cast<double>(six);
    o.pass = o.pass && mode == 6;
    o.detail += fmt("seed %llu mode %zu (%zu of degree 6, e_a %.2g); ", static_cast<unsigned long long>(seed),
                    mode, six, log.records.back().metrics.e_a);
  }
  degree6 /= 5;
  o.pass = o.pass && degree6 >= 40;
  o.detail += fmt("mean degree-6 count %.1f (needs >= 40)", degree6);
  return o;
}

/// Unit square translating at `v` for `duration` seconds.
DomainScript straight_translation(Vec2 v, double duration) {
  const auto sq = ConvexPolygon::rectangle(0, 0, 1, 1);
  std::vector<Point2> moved;
  for (const auto& q : sq.vertices()) moved.push_back(q + duration * v);
  return DomainScript::keyframes({{0.0, sq}, {duration, ConvexPolygon(moved)}});
}

/// Max and final distance between the single agent and the domain centroid.
std::pair<double, double> centroid_gap(const ScenarioConfig& c) {
  const auto log = run(c);
  double worst = 0, last = 0;
  for (const auto& r : log.records) {
    const Point2 cen = polygon_mass_centroid(ConvexPolygon(r.domain)).centroid;
    last = norm(r.positions[0] - cen);
    worst = std::max(worst, last);
  }
  return {worst, last};
}

Outcome single_agent_tracking() {
  Outcome o{true, ""};
  const Vec2 v{0.5, 0.0};
  const auto square = ConvexPolygon::rectangle(0, 0, 1, 1);
  auto tracking = [&](DomainScript script, double dt, double duration) {
    ScenarioConfig c;
    c.n_agents = 1;
    c.initial_positions = {{0.5, 0.5}};
    c.domain_script = std::move(script);
    c.control.law = ControlLaw::TvdC;
    c.dt = dt;
    c.duration = duration;
    return centroid_gap(c).first;
  };
  const double straight = tracking(straight_translation(v, 20.0), 0.02, 20.0);
  o.pass = straight <= 1e-6;
  o.detail += fmt("straight with feedforward: max gap %.2e m; ", straight);

  // On a curved path the remaining gap is the integrator's O(dt^2) error.
  const auto circle = DomainScript::circular(square, 1.0, 2 * std::acos(-1.0) / 60.0);
  const double coarse = tracking(circle, 0.02, 60.0);
  const double fine = tracking(circle, 0.01, 60.0);
  const double order = std::log2(coarse / fine);
  o.pass = o.pass && fine <= 1e-6 && order > 1.8 && order < 2.2;
  o.detail += fmt("circular with feedforward: max gap %.2e m at dt 0.01 (%.2e at dt 0.02, order %.2f); ",
                  fine, coarse, order);
  for (double kappa : {1.0, 2.0}) {
    ScenarioConfig c;
    c.n_agents = 1;
    c.initial_positions = {{0.5, 0.5}};
    c.domain_script = straight_translation(v, 20.0);
    c.control.kappa = kappa;
    c.control.feedforward = false;
    c.duration = 20.0;
    const auto [worst, last] = centroid_gap(c);
    const double ratio = last / (norm(v) / kappa);
    o.pass = o.pass && ratio > 0.5 && ratio < 2.0;
    o.detail += fmt("kappa %g without feedforward: lag %.4f m = %.3f v/kappa; ", kappa, last, ratio);
  }
  return o;
}

Outcome command_batch_equivalence() {
  Outcome o{true, ""};
  for (const char* law : {"TVD_C", "TVD_D1"}) {
    const auto scenario = parse_scenario({
        {"n_agents", 20},
        {"initial_positions", {{"seed", 5}}},
        {"domain", {{"kind", "static"}, {"polygon", {{0, 0}, {1, 0}, {1, 1}, {0, 1}}}}},
        {"control", {{"kappa", 1.0}, {"law", law}}},
        {"dt", 0.02},
        {"duration", 2.0},
    });
    Session s(scenario, {1});
    const std::vector<std::pair<int, const char*>> script{
        {5, R"({"type":"set_velocity","vx":0.8,"vy":0.1})"},
        {30, R"({"type":"set_scale_rate","sx":0.5,"sy":0.5})"},
        {45, R"({"type":"set_velocity","vx":-0.3,"vy":0.6})"},
        {60, R"({"type":"set_scale_rate","sx":-0.4,"sy":-0.2})"},
        {80, R"({"type":"set_velocity","vx":0,"vy":0})"},
    };
    std::vector<std::vector<Point2>> live{s.positions()};
    std::size_t next = 0;
    std::size_t commands = 0;
    for (int k = 0; k < 100; ++k) {
      if (next < script.size() && script[next].first == k) {
        if (s.submit(script[next++].second)) return {false, "command rejected"};
      }
      for (const auto& m : s.tick()) {
        if (m["type"] == "error") return {false, "session error: " + m.dump()};
        if (m["type"] == "ack") ++commands;
      }
      live.push_back(s.positions());
    }
    const auto batch = run(batch_equivalent(s));
    std::size_t mismatches = 0;
    for (std::size_t k = 0; k < live.size(); ++k) {
      if (k >= batch.records.size() || batch.records[k].positions != live[k]) ++mismatches;
    }
    const bool same = mismatches == 0 && batch.records.size() == live.size();
    o.pass = o.pass && same && commands == script.size();
    o.detail += fmt("%s: %zu commands, %zu steps, %zu mismatching steps; ", law, commands, live.size() - 1,
                    mismatches);
  }
  return o;
}

}  // namespace

int main() {
  SuiteReport convergence;
  criterion("exponential convergence rate", 10.0, [&] {
    convergence = verify_convergence(0);
    return from_checks(convergence, "exponential rate");
  });
  {
    std::size_t fits = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      for (const auto& c : verify_convergence(seed).checks) {
        if (c.name.rfind("exponential rate", 0) != 0) continue;
        ++total;
        if (c.pass) ++fits;
      }
    }
    std::printf("[INFO] exponential rate over seeds 0-7: %zu of %zu runs within 10%%\n", fits, total);
  }
  criterion("analytic derivatives", 30.0, [] { return whole_suite(verify_derivatives()); });
  criterion("partition and membership", 30.0, [] { return whole_suite(verify_partition()); });
  criterion("hand-derived split-square blocks", 0.0,
            [&] { return from_checks(convergence, "split-square hand-derived blocks"); });
  criterion("feedforward benefit on circle100", 300.0, feedforward_benefit);
  criterion("neighbor statistics", 120.0, neighbor_statistics);
  criterion("single-agent tracking", 0.0, single_agent_tracking);
  criterion("command/batch equivalence", 0.0, command_batch_equivalence);
  std::printf("%s: %d failing criteria\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
