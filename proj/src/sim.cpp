#include "covctl/sim.hpp"

#include <cmath>
#include <sstream>

namespace covctl {

namespace {

constexpr double kMinSeparation = 10.0 * kEpsGeom;
constexpr double kProjectionGap = 1e-3;
constexpr std::size_t kMaxPlacementAttempts = 10'000'000;

std::vector<Point2> from_stacked(const Eigen::VectorXd& v) {
  std::vector<Point2> out(static_cast<std::size_t>(v.size() / 2));
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = {v(static_cast<Eigen::Index>(2 * i)), v(static_cast<Eigen::Index>(2 * i + 1))};
  }
  return out;
}

bool crowded(const std::vector<Point2>& p, std::size_t i, double gap) {
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (j != i && distance(p[i], p[j]) < gap) return true;
  }
  return false;
}

void contain(std::vector<Point2>& p, const ConvexPolygon& domain, Containment policy, double t) {
  std::vector<std::size_t> moved;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (domain.contains(p[i])) continue;
    if (policy == Containment::Error) {
      std::ostringstream msg;
      msg << "agent " << i << " left the domain at t = " << t;
      throw Error(ErrorKind::AgentOutsideDomain, msg.str());
    }
    p[i] = domain.project(p[i]);
    moved.push_back(i);
  }
  if (moved.empty()) return;
  // Agents projected onto the same boundary point (typically a corner) are
  // pulled apart toward the domain centroid.
  const auto mc = polygon_mass_centroid(domain);
  const double gap = kProjectionGap * std::sqrt(mc.mass);
  for (std::size_t i : moved) {
    const Vec2 inward = (mc.centroid - p[i]) / std::max(distance(mc.centroid, p[i]), kEpsGeom);
    for (int k = 1; crowded(p, i, gap) && k <= 64; ++k) p[i] += gap * inward;
  }
}

}  // namespace

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorKind::InvalidConfig, why); };
  control.validate();
  if (n_agents == 0) fail("n_agents must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt)) fail("dt must be positive");
  if (!(duration >= 0.0) || !std::isfinite(duration)) fail("duration must be >= 0");
  if (record_every == 0) fail("record_every must be >= 1");
  if (!initial_positions.empty() && initial_positions.size() != n_agents) {
    fail("initial_positions has a different length than n_agents");
  }
  const double t_end = start_time() + static_cast<double>(step_count()) * dt;
  if (t_end > domain_script.end_time() + 1e-9 * std::max(1.0, t_end)) {
    fail("duration runs past the end of the domain script");
  }
}

double ScenarioConfig::start_time() const {
  const double t0 = domain_script.start_time();
  return std::isfinite(t0) ? t0 : 0.0;
}

std::size_t ScenarioConfig::step_count() const {
  return static_cast<std::size_t>(std::floor(duration / dt + 1e-9));
}

DomainProvider script_provider(const DomainScript& script) {
  return [script](double t, TimeSide side) { return domain_at(script, t, side); };
}

Evaluation evaluate(std::span<const Point2> positions, DomainState domain,
                    const ControlConfig& control) {
  auto tess = voronoi_partition(positions, domain.polygon);
  auto moments = cell_moments(tess);
  const auto jac = jacobian_blocks(tess, moments);
  const auto ff = feedforward(tess, moments, domain.edge_normal_velocity);
  auto out = evaluate_control(control, jac, ff, moments, positions);
  return {std::move(domain), std::move(tess), std::move(moments), std::move(out)};
}

MetricsRecord metrics_of(const Evaluation& ev, double t) {
  MetricsRecord r;
  r.t = t;
  const auto p = ev.tess.positions();
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double e = distance(p[i], ev.moments[i].centroid);
    r.per_agent_error.push_back(e);
    sum += e * e;
  }
  r.e_a = std::sqrt(sum);
  r.neighbor_histogram = neighbor_histogram(ev.tess);
  r.locational_cost = locational_cost(ev.tess, ev.moments, p);
  r.domain_area = ev.domain.polygon.area();
  return r;
}

std::vector<Point2> advance(const Evaluation& stage1, const DomainProvider& domain,
                            const ControlConfig& control, double dt, double t_next,
                            Integrator integrator, Containment containment) {
  const auto p0 = stage1.tess.positions();
  const auto v1 = from_stacked(stage1.control.velocities);
  std::vector<Point2> next(p0.begin(), p0.end());
  for (std::size_t i = 0; i < next.size(); ++i) next[i] += dt * v1[i];

  const double t1 = t_next;
  if (integrator == Integrator::Heun) {
    DomainState at_end = domain(t1, TimeSide::Left);
    contain(next, at_end.polygon, Containment::Project, t1);
    const auto stage2 = evaluate(next, std::move(at_end), control);
    const auto v2 = from_stacked(stage2.control.velocities);
    for (std::size_t i = 0; i < next.size(); ++i) next[i] = p0[i] + 0.5 * dt * (v1[i] + v2[i]);
  }
  contain(next, domain(t1, TimeSide::Right).polygon, containment, t1);
  return next;
}

std::vector<Point2> step(std::span<const Point2> positions, const ScenarioConfig& config, double t) {
  const auto provider = script_provider(config.domain_script);
  const auto stage1 = evaluate(positions, provider(t, TimeSide::Right), config.control);
  return advance(stage1, provider, config.control, config.dt, t + config.dt, config.integrator,
                 config.containment);
}

std::vector<Point2> initial_positions(const ScenarioConfig& config) {
  if (!config.initial_positions.empty()) return config.initial_positions;
  const auto domain = domain_at(config.domain_script, config.start_time()).polygon;
  Point2 lo = domain[0];
  Point2 hi = domain[0];
  for (const auto& v : domain.vertices()) {
    lo = {std::min(lo.x, v.x), std::min(lo.y, v.y)};
    hi = {std::max(hi.x, v.x), std::max(hi.y, v.y)};
  }
  SeededUniform rng(config.rng_seed);
  std::vector<Point2> out;
  out.reserve(config.n_agents);
  for (std::size_t attempt = 0; out.size() < config.n_agents; ++attempt) {
    if (attempt >= kMaxPlacementAttempts) {
      throw Error(ErrorKind::InvalidConfig, "could not place agents inside the start domain");
    }
    const double u = rng.next();
    const double v = rng.next();
    const Point2 q{lo.x + u * (hi.x - lo.x), lo.y + v * (hi.y - lo.y)};
    if (!(domain.outside_distance(q) < 0.0)) continue;
    bool clear = true;
    for (const auto& o : out) {
      if (distance(o, q) < kMinSeparation) {
        clear = false;
        break;
      }
    }
    if (clear) out.push_back(q);
  }
  return out;
}

TrajectoryLog run(const ScenarioConfig& config) {
  config.validate();
  const auto provider = script_provider(config.domain_script);
  auto p = initial_positions(config);
  const double t0 = config.start_time();
  const std::size_t steps = config.step_count();
  TrajectoryLog log;
  for (std::size_t k = 0;; ++k) {
    const double t = t0 + static_cast<double>(k) * config.dt;
    const auto ev = evaluate(p, provider(t, TimeSide::Right), config.control);
    if (k % config.record_every == 0) {
      const auto verts = ev.domain.polygon.vertices();
      log.records.push_back({t, p, {verts.begin(), verts.end()}, metrics_of(ev, t)});
    }
    if (k == steps) break;
    const double t_next = t0 + static_cast<double>(k + 1) * config.dt;
    p = advance(ev, provider, config.control, config.dt, t_next, config.integrator,
                config.containment);
  }
  return log;
}

double aggregated_error(std::span<const Point2> positions, const CellMoments& moments) {
  double sum = 0.0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    sum += squared_norm(positions[i] - moments[i].centroid);
  }
  return std::sqrt(sum);
}

double steady_state_mean(const TrajectoryLog& log, double window) {
  if (log.records.empty()) throw Error(ErrorKind::WindowTooLong, "empty log");
  const double t_end = log.records.back().t;
  const double span = t_end - log.records.front().t;
  const double slack = 1e-9 * std::max(1.0, std::abs(t_end));
  if (!(window >= 0.0) || window > span + slack) {
    std::ostringstream msg;
    msg << "window " << window << " s exceeds the logged span " << span << " s";
    throw Error(ErrorKind::WindowTooLong, msg.str());
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& r : log.records) {
    if (r.t >= t_end - window - slack) {
      sum += r.metrics.e_a;
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

}  // namespace covctl
