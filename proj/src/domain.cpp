#include "covctl/domain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace covctl {

namespace {

constexpr double kTimeSlack = 1e-9;
constexpr double kParallelTol = 1e-9;
constexpr int kConvexitySamples = 32;

// (1 - s) a + s b reproduces both endpoints exactly.
std::vector<Point2> lerp_vertices(const ConvexPolygon& a, const ConvexPolygon& b, double s) {
  std::vector<Point2> out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = (1.0 - s) * a[k] + s * b[k];
  return out;
}

void check_no_rotation(const ConvexPolygon& a, const ConvexPolygon& b, std::size_t segment) {
  for (std::size_t l = 0; l < a.size(); ++l) {
    const Vec2 ea = a.edge_end(l) - a.edge_start(l);
    const Vec2 eb = b.edge_end(l) - b.edge_start(l);
    const double scale = norm(ea) * norm(eb);
    if (std::abs(cross(ea, eb)) > kParallelTol * scale || dot(ea, eb) <= 0.0) {
      std::ostringstream msg;
      msg << "edge " << l << " rotates between keyframes " << segment << " and " << segment + 1;
      throw Error(ErrorKind::InvalidScript, msg.str());
    }
  }
}

}  // namespace

DomainScript DomainScript::fixed(ConvexPolygon polygon) {
  return DomainScript(Kind::Static, std::move(polygon));
}

DomainScript DomainScript::circular(ConvexPolygon base, double radius, double angular_rate) {
  if (!std::isfinite(radius) || radius < 0.0 || !std::isfinite(angular_rate)) {
    throw Error(ErrorKind::InvalidScript, "circular script needs finite radius >= 0 and rate");
  }
  DomainScript s(Kind::CircularTranslation, std::move(base));
  s.radius_ = radius;
  s.angular_rate_ = angular_rate;
  return s;
}

DomainScript DomainScript::keyframes(std::vector<Keyframe> frames) {
  if (frames.size() < 2) throw Error(ErrorKind::InvalidScript, "need at least two keyframes");
  const std::size_t m = frames.front().polygon.size();
  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (!std::isfinite(frames[k].t)) throw Error(ErrorKind::InvalidScript, "non-finite keyframe time");
    if (frames[k].polygon.size() != m) {
      throw Error(ErrorKind::InvalidScript, "keyframes must share a vertex count");
    }
    if (k > 0 && !(frames[k].t > frames[k - 1].t)) {
      throw Error(ErrorKind::InvalidScript, "keyframe times must be strictly increasing");
    }
  }
  for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
    for (int s = 1; s < kConvexitySamples; ++s) {
      const auto v = lerp_vertices(frames[k].polygon, frames[k + 1].polygon,
                                   static_cast<double>(s) / kConvexitySamples);
      if (auto why = polygon_violation(v)) {
        throw Error(ErrorKind::NonconvexInterpolation, *why);
      }
    }
    check_no_rotation(frames[k].polygon, frames[k + 1].polygon, k);
  }
  DomainScript s(Kind::PiecewiseKeyframes, frames.front().polygon);
  s.frames_ = std::move(frames);
  return s;
}

double DomainScript::start_time() const {
  return kind_ == Kind::PiecewiseKeyframes ? frames_.front().t
                                           : -std::numeric_limits<double>::infinity();
}

double DomainScript::end_time() const {
  return kind_ == Kind::PiecewiseKeyframes ? frames_.back().t
                                           : std::numeric_limits<double>::infinity();
}

std::vector<double> edge_normal_velocities(const ConvexPolygon& polygon,
                                           std::span<const Vec2> vertex_velocity) {
  const std::size_t m = polygon.size();
  std::vector<double> nu(m);
  for (std::size_t l = 0; l < m; ++l) {
    const Vec2 n = outward_normal(polygon.edge_start(l), polygon.edge_end(l));
    nu[l] = 0.5 * dot(vertex_velocity[l] + vertex_velocity[(l + 1) % m], n);
  }
  return nu;
}

DomainState interpolate_keyframes(const Keyframe& a, const Keyframe& b, double t) {
  const double span_t = b.t - a.t;
  const double s = (t - a.t) / span_t;
  auto poly = ConvexPolygon::trusted(lerp_vertices(a.polygon, b.polygon, s));
  std::vector<Vec2> vv(poly.size());
  for (std::size_t q = 0; q < poly.size(); ++q) vv[q] = (b.polygon[q] - a.polygon[q]) / span_t;
  auto nu = edge_normal_velocities(poly, vv);
  return {std::move(poly), std::move(nu), std::move(vv)};
}

DomainState domain_at(const DomainScript& script, double t, TimeSide side) {
  if (!std::isfinite(t)) throw Error(ErrorKind::TimeOutOfRange, "non-finite time");
  switch (script.kind()) {
    case DomainScript::Kind::Static: {
      const auto& poly = script.base();
      return {poly, std::vector<double>(poly.size(), 0.0),
              std::vector<Vec2>(poly.size(), Vec2{})};
    }
    case DomainScript::Kind::CircularTranslation: {
      const double r = script.radius();
      const double w = script.angular_rate();
      const Vec2 offset{r * (std::cos(w * t) - 1.0), r * std::sin(w * t)};
      const Vec2 vel{-r * w * std::sin(w * t), r * w * std::cos(w * t)};
      std::vector<Point2> v(script.base().vertices().begin(), script.base().vertices().end());
      for (auto& q : v) q += offset;
      auto poly = ConvexPolygon::trusted(std::move(v));
      std::vector<Vec2> vv(poly.size(), vel);
      auto nu = edge_normal_velocities(poly, vv);
      return {std::move(poly), std::move(nu), std::move(vv)};
    }
    case DomainScript::Kind::PiecewiseKeyframes: {
      const auto frames = script.frames();
      const double t0 = frames.front().t;
      const double t1 = frames.back().t;
      const double slack = kTimeSlack * std::max(1.0, std::abs(t1 - t0));
      if (t < t0 - slack || t > t1 + slack) {
        std::ostringstream msg;
        msg << "t = " << t << " outside [" << t0 << ", " << t1 << "]";
        throw Error(ErrorKind::TimeOutOfRange, msg.str());
      }
      t = std::clamp(t, t0, t1);
      // Segment k covers [t_k, t_{k+1}); the left side uses (t_k, t_{k+1}].
      std::size_t k;
      if (side == TimeSide::Right) {
        auto it = std::upper_bound(frames.begin(), frames.end(), t,
                                   [](double x, const Keyframe& f) { return x < f.t; });
        k = static_cast<std::size_t>(it - frames.begin());
        k = k == 0 ? 0 : std::min(k - 1, frames.size() - 2);
      } else {
        auto it = std::lower_bound(frames.begin(), frames.end(), t,
                                   [](const Keyframe& f, double x) { return f.t < x; });
        k = static_cast<std::size_t>(it - frames.begin());
        k = k == 0 ? 0 : std::min(k - 1, frames.size() - 2);
      }
      return interpolate_keyframes(frames[k], frames[k + 1], t);
    }
  }
  throw Error(ErrorKind::InvalidScript, "unknown script kind");
}

double face_velocity(const DomainState& state, const Face& face) {
  if (!face.tag.is_boundary() || face.tag.index >= state.polygon.size()) {
    throw Error(ErrorKind::FaceNotOnBoundary, "face is not tagged with a domain edge");
  }
  const std::size_t l = face.tag.index;
  const Point2 a = state.polygon.edge_start(l);
  const Point2 b = state.polygon.edge_end(l);
  const Vec2 n = outward_normal(a, b);
  const Vec2 d = b - a;
  const double len2 = squared_norm(d);
  for (const Point2 q : {face.v1, face.v2}) {
    const double along = dot(q - a, d) / len2;
    if (std::abs(dot(q - a, n)) > kEpsGeom || along < -kEpsGeom || along > 1.0 + kEpsGeom) {
      throw Error(ErrorKind::FaceNotOnBoundary, "face does not lie on its tagged edge");
    }
  }
  return state.edge_normal_velocity[l];
}

}  // namespace covctl
