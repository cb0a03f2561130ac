#include "covctl/scenario_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace covctl {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& why) { throw Error(ErrorKind::InvalidConfig, why); }

void check_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) invalid(std::string(where) + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) invalid("unknown key '" + key + "' in " + std::string(where));
  }
}

double number(const json& v, std::string_view what) {
  if (!v.is_number()) invalid(std::string(what) + " must be a number");
  return v.get<double>();
}

std::uint64_t unsigned_int(const json& v, std::string_view what) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    invalid(std::string(what) + " must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

Point2 point(const json& v, std::string_view what) {
  if (!v.is_array() || v.size() != 2) invalid(std::string(what) + " must be [x, y]");
  return {number(v[0], what), number(v[1], what)};
}

ConvexPolygon polygon(const json& v, std::string_view what) {
  if (!v.is_array()) invalid(std::string(what) + " must be a list of [x, y]");
  std::vector<Point2> pts;
  for (const auto& q : v) pts.push_back(point(q, what));
  if (auto why = polygon_violation(pts)) invalid(std::string(what) + ": " + *why);
  return ConvexPolygon(std::move(pts));
}

json polygon_json(std::span<const Point2> v) {
  json out = json::array();
  for (const auto& q : v) out.push_back({q.x, q.y});
  return out;
}

bool on_off(const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v == "on") return true;
  if (v == "off") return false;
  invalid("feedforward must be true/false or \"on\"/\"off\"");
}

DomainScript parse_domain(const json& d) {
  if (!d.is_object() || !d.contains("kind")) invalid("domain needs a 'kind'");
  const auto kind = d["kind"];
  if (kind == "static") {
    check_keys(d, "domain", {"kind", "polygon"});
    return DomainScript::fixed(polygon(d.at("polygon"), "domain.polygon"));
  }
  if (kind == "circular") {
    check_keys(d, "domain", {"kind", "polygon", "radius", "angular_rate", "period"});
    if (d.contains("angular_rate") == d.contains("period")) {
      invalid("circular domain needs exactly one of angular_rate or period");
    }
    double rate;
    if (d.contains("period")) {
      const double period = number(d["period"], "domain.period");
      if (!(period > 0)) invalid("domain.period must be positive");
      rate = 2 * std::numbers::pi / period;
    } else {
      rate = number(d["angular_rate"], "domain.angular_rate");
    }
    return DomainScript::circular(polygon(d.at("polygon"), "domain.polygon"),
                                  number(d.at("radius"), "domain.radius"), rate);
  }
  if (kind == "keyframes") {
    check_keys(d, "domain", {"kind", "keyframes"});
    std::vector<Keyframe> frames;
    for (const auto& f : d.at("keyframes")) {
      if (!f.is_array() || f.size() != 2) invalid("keyframes entries must be [t, polygon]");
      frames.push_back({number(f[0], "keyframe time"), polygon(f[1], "keyframe polygon")});
    }
    return DomainScript::keyframes(std::move(frames));
  }
  invalid("domain.kind must be static, circular or keyframes");
}

json domain_json(const DomainScript& s) {
  switch (s.kind()) {
    case DomainScript::Kind::Static:
      return {{"kind", "static"}, {"polygon", polygon_json(s.base().vertices())}};
    case DomainScript::Kind::CircularTranslation:
      return {{"kind", "circular"},
              {"polygon", polygon_json(s.base().vertices())},
              {"radius", s.radius()},
              {"angular_rate", s.angular_rate()}};
    case DomainScript::Kind::PiecewiseKeyframes: {
      json frames = json::array();
      for (const auto& f : s.frames()) frames.push_back({f.t, polygon_json(f.polygon.vertices())});
      return {{"kind", "keyframes"}, {"keyframes", frames}};
    }
  }
  return {};
}

std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidConfig, "cannot write " + p.string());
  return out;
}

json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) invalid("cannot read " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    invalid(p.string() + ": " + e.what());
  }
}

}  // namespace

ScenarioFile parse_scenario(const json& doc) {
  check_keys(doc, "scenario",
             {"name", "n_agents", "initial_positions", "rng_seed", "domain", "control", "dt",
              "duration", "record_every", "containment", "integrator", "steady_state_window"});
  ScenarioFile s;
  auto& c = s.config;
  try {
    if (doc.contains("name")) s.name = doc["name"].get<std::string>();
    c.n_agents = unsigned_int(doc.at("n_agents"), "n_agents");
    if (doc.contains("rng_seed")) c.rng_seed = unsigned_int(doc["rng_seed"], "rng_seed");
    if (doc.contains("initial_positions")) {
      const auto& ip = doc["initial_positions"];
      if (ip.is_object()) {
        check_keys(ip, "initial_positions", {"seed"});
        c.rng_seed = unsigned_int(ip.at("seed"), "initial_positions.seed");
      } else if (ip.is_array()) {
        for (const auto& q : ip) c.initial_positions.push_back(point(q, "initial_positions"));
      } else {
        invalid("initial_positions must be a list or {\"seed\": n}");
      }
    }
    c.domain_script = parse_domain(doc.at("domain"));
    if (doc.contains("control")) {
      const auto& ctl = doc["control"];
      check_keys(ctl, "control", {"kappa", "law", "feedforward", "neumann_order"});
      if (ctl.contains("kappa")) c.control.kappa = number(ctl["kappa"], "control.kappa");
      if (ctl.contains("law")) {
        if (ctl["law"] == "TVD_C") {
          c.control.law = ControlLaw::TvdC;
        } else if (ctl["law"] == "TVD_D1") {
          c.control.law = ControlLaw::TvdD1;
        } else {
          invalid("control.law must be TVD_C or TVD_D1");
        }
      }
      if (ctl.contains("feedforward")) c.control.feedforward = on_off(ctl["feedforward"]);
      if (ctl.contains("neumann_order")) {
        c.control.neumann_order = static_cast<int>(unsigned_int(ctl["neumann_order"], "neumann_order"));
      }
    }
    if (doc.contains("dt")) c.dt = number(doc["dt"], "dt");
    c.duration = number(doc.at("duration"), "duration");
    if (doc.contains("record_every")) c.record_every = unsigned_int(doc["record_every"], "record_every");
    if (doc.contains("containment")) {
      if (doc["containment"] == "project") {
        c.containment = Containment::Project;
      } else if (doc["containment"] == "error") {
        c.containment = Containment::Error;
      } else {
        invalid("containment must be project or error");
      }
    }
    if (doc.contains("integrator")) {
      if (doc["integrator"] == "heun") {
        c.integrator = Integrator::Heun;
      } else if (doc["integrator"] == "euler") {
        c.integrator = Integrator::Euler;
      } else {
        invalid("integrator must be heun or euler");
      }
    }
    if (doc.contains("steady_state_window")) {
      s.steady_state_window = number(doc["steady_state_window"], "steady_state_window");
      if (!(s.steady_state_window >= 0) || s.steady_state_window > c.duration) {
        invalid("steady_state_window must lie in [0, duration]");
      }
    }
  } catch (const json::exception& e) {
    invalid(e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidConfig) throw;
    invalid(e.what());
  }
  s.config.validate();
  return s;
}

ScenarioFile load_scenario(const std::filesystem::path& path) {
  return parse_scenario(read_json(path));
}

json scenario_to_json(const ScenarioFile& s) {
  const auto& c = s.config;
  json out;
  out["name"] = s.name;
  out["n_agents"] = c.n_agents;
  out["rng_seed"] = c.rng_seed;
  if (!c.initial_positions.empty()) out["initial_positions"] = polygon_json(c.initial_positions);
  out["domain"] = domain_json(c.domain_script);
  out["control"] = {{"kappa", c.control.kappa},
                    {"law", c.control.law == ControlLaw::TvdC ? "TVD_C" : "TVD_D1"},
                    {"feedforward", c.control.feedforward},
                    {"neumann_order", c.control.neumann_order}};
  out["dt"] = c.dt;
  out["duration"] = c.duration;
  out["record_every"] = c.record_every;
  out["containment"] = c.containment == Containment::Project ? "project" : "error";
  out["integrator"] = c.integrator == Integrator::Heun ? "heun" : "euler";
  out["steady_state_window"] = s.steady_state_window;
  return out;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const ScenarioFile& s) { return hex(fnv1a(scenario_to_json(s).dump())); }

std::string scenario_hash(const ScenarioFile& s) {
  json j = scenario_to_json(s);
  j.erase("name");
  j["control"].erase("law");
  j["control"].erase("feedforward");
  j["control"].erase("neumann_order");
  return hex(fnv1a(j.dump()));
}

json record_to_json(const TrajectoryRecord& r) {
  json hist = json::object();
  for (const auto& [deg, count] : r.metrics.neighbor_histogram) hist[std::to_string(deg)] = count;
  return {{"t", r.t},
          {"p", polygon_json(r.positions)},
          {"domain", polygon_json(r.domain)},
          {"e_a", r.metrics.e_a},
          {"H", r.metrics.locational_cost},
          {"hist", hist}};
}

void write_run(const std::filesystem::path& dir, const ScenarioFile& s, const TrajectoryLog& log) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "trajectory.jsonl");
    for (const auto& r : log.records) out << record_to_json(r).dump() << '\n';
  }
  {
    auto out = open_out(dir / "metrics.csv");
    out << "t,e_a,H\n";
    for (const auto& r : log.records) {
      out << fmt(r.t) << ',' << fmt(r.metrics.e_a) << ',' << fmt(r.metrics.locational_cost) << '\n';
    }
  }
  json manifest;
  manifest["version"] = kVersion;
  manifest["config_hash"] = config_hash(s);
  manifest["scenario_hash"] = scenario_hash(s);
  manifest["seed"] = s.config.rng_seed;
  manifest["records"] = log.records.size();
  manifest["config"] = scenario_to_json(s);
  if (s.steady_state_window > 0) {
    manifest["steady_state_mean"] = steady_state_mean(log, s.steady_state_window);
  }
  auto out = open_out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
}

MetricsSeries read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "t,e_a,H") invalid(path.string() + ": unexpected header");
  MetricsSeries m;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double t, e, h;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &e, &h) != 3) {
      invalid(path.string() + ": malformed row '" + line + "'");
    }
    m.t.push_back(t);
    m.e_a.push_back(e);
    m.H.push_back(h);
  }
  if (m.t.empty()) invalid(path.string() + ": no rows");
  return m;
}

Comparison compare_runs(const std::filesystem::path& run_dir,
                        const std::filesystem::path& other_dir,
                        const std::filesystem::path& out_dir) {
  const json ma = read_json(run_dir / "manifest.json");
  const json mb = read_json(other_dir / "manifest.json");
  if (ma.at("scenario_hash") != mb.at("scenario_hash")) {
    invalid("runs come from different scenarios (" + ma["scenario_hash"].get<std::string>() +
            " vs " + mb["scenario_hash"].get<std::string>() + ")");
  }
  const auto a = read_metrics_csv(run_dir / "metrics.csv");
  const auto b = read_metrics_csv(other_dir / "metrics.csv");
  if (a.t != b.t) invalid("runs use different time grids");

  const double window = ma.at("config").at("steady_state_window").get<double>();
  auto mean_of = [&](const MetricsSeries& m) {
    TrajectoryLog log;
    for (std::size_t k = 0; k < m.t.size(); ++k) {
      TrajectoryRecord r;
      r.t = m.t[k];
      r.metrics.e_a = m.e_a[k];
      log.records.push_back(std::move(r));
    }
    return steady_state_mean(log, window);
  };
  Comparison c;
  c.mean_run = mean_of(a);
  c.mean_other = mean_of(b);
  c.improvement_percent = c.mean_other > 0 ? 100.0 * (1.0 - c.mean_run / c.mean_other) : 0.0;

  std::filesystem::create_directories(out_dir);
  {
    auto out = open_out(out_dir / "comparison.csv");
    out << "t,e_a_run,e_a_other\n";
    for (std::size_t k = 0; k < a.t.size(); ++k) {
      out << fmt(a.t[k]) << ',' << fmt(a.e_a[k]) << ',' << fmt(b.e_a[k]) << '\n';
    }
  }
  char line[160];
  std::ostringstream sum;
  sum << "run: " << run_dir.string() << '\n' << "other: " << other_dir.string() << '\n';
  std::snprintf(line, sizeof line, "steady-state window: %.6g s\n", window);
  sum << line;
  std::snprintf(line, sizeof line, "steady-state mean e_a (run): %.6g m\n", c.mean_run);
  sum << line;
  std::snprintf(line, sizeof line, "steady-state mean e_a (other): %.6g m\n", c.mean_other);
  sum << line;
  std::snprintf(line, sizeof line, "improvement: %.1f%%\n", c.improvement_percent);
  sum << line;
  c.summary = sum.str();
  open_out(out_dir / "summary.txt") << c.summary;
  return c;
}

}  // namespace covctl
