#include "covctl/session.hpp"

#include <cmath>

namespace covctl {

using nlohmann::json;

namespace {

constexpr double kMinAreaFraction = 1e-4;

json error_message(std::string detail) { return {{"type", "error"}, {"detail", std::move(detail)}}; }

json points_json(std::span<const Point2> pts) {
  json out = json::array();
  for (const auto& q : pts) out.push_back({q.x, q.y});
  return out;
}

bool axis_aligned(const ConvexPolygon& poly) {
  for (std::size_t l = 0; l < poly.size(); ++l) {
    const Vec2 e = poly.edge_end(l) - poly.edge_start(l);
    if (e.x != 0.0 && e.y != 0.0) return false;
  }
  return true;
}

/// Finite number field or an error text.
std::optional<std::string> finite_field(const json& cmd, const char* key, double& out) {
  if (!cmd.contains(key) || !cmd[key].is_number()) return std::string("missing numeric field '") + key + "'";
  out = cmd[key].get<double>();
  if (!std::isfinite(out)) return std::string("field '") + key + "' must be finite";
  return std::nullopt;
}

void apply_domain_command(LiveDomain& d, const json& cmd, double dt, std::optional<std::string>& err) {
  const auto type = cmd["type"].get<std::string>();
  if (type == "set_velocity") {
    err = d.set_velocity({cmd["vx"].get<double>(), cmd["vy"].get<double>()}, dt);
  } else {
    err = d.set_scale_rate({cmd["sx"].get<double>(), cmd["sy"].get<double>()}, dt);
  }
}

}  // namespace

LiveDomain::LiveDomain(ConvexPolygon initial)
    : polygon_(std::move(initial)),
      min_area_(kMinAreaFraction * polygon_.area()),
      vertex_velocity_(polygon_.size(), Vec2{}) {}

std::vector<Vec2> LiveDomain::vertex_velocities(Vec2 v, Vec2 s) const {
  const Point2 c = polygon_mass_centroid(polygon_).centroid;
  std::vector<Vec2> u;
  for (const auto& q : polygon_.vertices()) u.push_back(v + Vec2{s.x * (q.x - c.x), s.y * (q.y - c.y)});
  return u;
}

std::optional<std::string> LiveDomain::step_problem(const std::vector<Vec2>& u, double dt) const {
  std::vector<Point2> next(polygon_.vertices().begin(), polygon_.vertices().end());
  for (std::size_t k = 0; k < next.size(); ++k) next[k] += dt * u[k];
  if (auto why = polygon_violation(next)) return "domain would degenerate: " + *why;
  const auto poly = ConvexPolygon::trusted(next);
  if (poly.area() < min_area_) return std::string("domain would shrink below its minimum area");
  for (std::size_t l = 0; l < poly.size(); ++l) {
    const Vec2 a = polygon_.edge_end(l) - polygon_.edge_start(l);
    const Vec2 b = poly.edge_end(l) - poly.edge_start(l);
    if (std::abs(cross(a, b)) > 1e-9 * norm(a) * norm(b) || dot(a, b) <= 0.0) {
      return std::string("command would rotate a domain edge");
    }
  }
  return std::nullopt;
}

std::optional<std::string> LiveDomain::retarget(Vec2 v, Vec2 s, double dt) {
  if (!is_finite(v) || !is_finite(s)) return std::string("non-finite command payload");
  if (s.x != s.y && !axis_aligned(polygon_)) {
    return std::string("unequal sx and sy need an axis-aligned domain");
  }
  auto u = vertex_velocities(v, s);
  if (auto why = step_problem(u, dt)) return why;
  velocity_ = v;
  scale_rate_ = s;
  vertex_velocity_ = std::move(u);
  return std::nullopt;
}

std::optional<std::string> LiveDomain::set_velocity(Vec2 v, double dt) {
  return retarget(v, scale_rate_, dt);
}

std::optional<std::string> LiveDomain::set_scale_rate(Vec2 s, double dt) {
  return retarget(velocity_, s, dt);
}

ConvexPolygon LiveDomain::advance(double dt, std::string* halted) {
  if (auto why = step_problem(vertex_velocity_, dt)) {
    scale_rate_ = {};
    vertex_velocity_ = vertex_velocities(velocity_, scale_rate_);
    if (halted) *halted = "scale rate halted: " + *why;
  }
  std::vector<Point2> next(polygon_.vertices().begin(), polygon_.vertices().end());
  for (std::size_t k = 0; k < next.size(); ++k) next[k] += dt * vertex_velocity_[k];
  polygon_ = ConvexPolygon::trusted(std::move(next));
  return polygon_;
}

DomainScript commands_to_script(const ConvexPolygon& initial, double t0, double dt,
                                std::size_t steps, const std::vector<TimedCommand>& log) {
  if (steps == 0) return DomainScript::fixed(initial);
  LiveDomain d(initial);
  std::vector<Keyframe> frames{{t0, initial}};
  std::size_t next_cmd = 0;
  for (std::size_t k = 0; k < steps; ++k) {
    for (; next_cmd < log.size() && log[next_cmd].step == k; ++next_cmd) {
      std::optional<std::string> err;
      apply_domain_command(d, log[next_cmd].command, dt, err);
    }
    frames.push_back({t0 + static_cast<double>(k + 1) * dt, d.advance(dt, nullptr)});
  }
  return DomainScript::keyframes(std::move(frames));
}

Session::Session(ScenarioFile scenario, SessionOptions options)
    : scenario_(std::move(scenario)),
      options_(options),
      control_(scenario_.config.control),
      initial_domain_(domain_at(scenario_.config.domain_script, scenario_.config.start_time()).polygon),
      domain_(initial_domain_) {
  if (options_.frame_decimation == 0) throw Error(ErrorKind::InvalidConfig, "frame decimation must be >= 1");
  t0_ = scenario_.config.start_time();
  initial_ = covctl::initial_positions(scenario_.config);
  positions_ = initial_;
  t_ = t0_;
}

void Session::reset(std::optional<std::uint64_t> seed) {
  ScenarioConfig cfg = scenario_.config;
  if (seed) {
    cfg.rng_seed = *seed;
    cfg.initial_positions.clear();
  }
  initial_ = covctl::initial_positions(cfg);
  positions_ = initial_;
  domain_ = LiveDomain(initial_domain_);
  control_ = scenario_.config.control;
  log_.clear();
  step_ = 0;
  t_ = t0_;
}

std::optional<json> Session::submit(std::string_view text) {
  json cmd;
  try {
    cmd = json::parse(text);
  } catch (const json::exception& e) {
    return error_message(std::string("malformed message: ") + e.what());
  }
  if (!cmd.is_object() || !cmd.contains("type") || !cmd["type"].is_string()) {
    return error_message("message must be an object with a string 'type'");
  }
  const auto type = cmd["type"].get<std::string>();
  double x = 0, y = 0;
  std::optional<std::string> err;
  if (type == "set_velocity") {
    if (!(err = finite_field(cmd, "vx", x))) err = finite_field(cmd, "vy", y);
  } else if (type == "set_scale_rate") {
    if (!(err = finite_field(cmd, "sx", x))) err = finite_field(cmd, "sy", y);
    if (!err && cmd.contains("about") && cmd["about"] != "centroid") {
      err = "set_scale_rate only supports about: \"centroid\"";
    }
  } else if (type == "set_kappa") {
    err = finite_field(cmd, "kappa", x);
    if (!err && !(x > 0.0)) err = "kappa must be positive";
  } else if (type == "reset") {
    if (cmd.contains("seed") && !cmd["seed"].is_number_unsigned()) {
      err = "reset seed must be a non-negative integer";
    }
  } else if (type != "pause" && type != "resume") {
    err = "unknown command type '" + type + "'";
  }
  if (err) return error_message(*err);
  std::lock_guard lock(queue_mutex_);
  queue_.push_back(std::move(cmd));
  return std::nullopt;
}

void Session::apply(const json& cmd, std::vector<json>& out) {
  const auto type = cmd["type"].get<std::string>();
  const double dt = scenario_.config.dt;
  if (type == "set_velocity" || type == "set_scale_rate") {
    std::optional<std::string> err;
    apply_domain_command(domain_, cmd, dt, err);
    if (err) {
      out.push_back(error_message(*err));
      return;
    }
    log_.push_back({step_, cmd});
  } else if (type == "set_kappa") {
    control_.kappa = cmd["kappa"].get<double>();
  } else if (type == "pause") {
    paused_ = true;
  } else if (type == "resume") {
    paused_ = false;
  } else if (type == "reset") {
    reset(cmd.contains("seed") ? std::optional(cmd["seed"].get<std::uint64_t>()) : std::nullopt);
  }
  out.push_back({{"type", "ack"}, {"command", type}, {"applies_at_seq", seq_}});
}

std::vector<json> Session::tick() {
  std::deque<json> pending;
  {
    std::lock_guard lock(queue_mutex_);
    pending.swap(queue_);
  }
  std::vector<json> out;
  for (const auto& cmd : pending) apply(cmd, out);
  if (!paused_) {
    const LiveDomain before = domain_;
    std::string halted;
    const double dt = scenario_.config.dt;
    const Keyframe a{t0_ + static_cast<double>(step_) * dt, domain_.polygon()};
    const Keyframe b{t0_ + static_cast<double>(step_ + 1) * dt, domain_.advance(dt, &halted)};
    if (!halted.empty()) out.push_back(error_message(halted));
    const DomainProvider provider = [&](double t, TimeSide) { return interpolate_keyframes(a, b, t); };
    try {
      const auto ev = evaluate(positions_, provider(a.t, TimeSide::Right), control_);
      positions_ = covctl::advance(ev, provider, control_, dt, b.t, scenario_.config.integrator,
                                   scenario_.config.containment);
      ++step_;
      t_ = b.t;
    } catch (const Error& e) {
      domain_ = before;
      paused_ = true;
      out.push_back(error_message(std::string("simulation paused: ") + e.what()));
    }
  }
  if (++ticks_ % options_.frame_decimation == 0) out.push_back(frame());
  return out;
}

json Session::frame() {
  json f{{"type", "frame"}, {"seq", seq_++},         {"t", t_},
         {"kappa", control_.kappa}, {"paused", paused_}, {"positions", points_json(positions_)},
         {"domain", points_json(domain_.polygon().vertices())}};
  try {
    const auto tess = voronoi_partition(positions_, domain_.polygon());
    const auto m = cell_moments(tess);
    json cells = json::array();
    for (const auto& c : tess.cells()) cells.push_back(points_json(c.polygon.vertices()));
    f["cells"] = std::move(cells);
    f["e_a"] = aggregated_error(positions_, m);
  } catch (const Error&) {
    f["cells"] = json::array();
    f["e_a"] = nullptr;
  }
  return f;
}

ScenarioConfig batch_equivalent(const Session& session) {
  ScenarioConfig cfg = session.scenario().config;
  cfg.domain_script = commands_to_script(session.initial_domain(), cfg.start_time(), cfg.dt,
                                         session.steps(), session.command_log());
  cfg.initial_positions = session.initial_positions();
  cfg.n_agents = cfg.initial_positions.size();
  cfg.duration = static_cast<double>(session.steps()) * cfg.dt;
  cfg.record_every = 1;
  return cfg;
}

}  // namespace covctl
