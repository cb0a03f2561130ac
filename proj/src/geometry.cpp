#include "covctl/geometry.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "covctl/detail/clip.hpp"

namespace covctl {

namespace {

// Vertices this close to a clip line count as lying on it.
constexpr double kOnLine = 1e-12;

}  // namespace

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidPolygon: return "InvalidPolygon";
    case ErrorKind::DegenerateCell: return "DegenerateCell";
    case ErrorKind::DegenerateFace: return "DegenerateFace";
    case ErrorKind::CollinearGenerators: return "CollinearGenerators";
    case ErrorKind::CoincidentGenerators: return "CoincidentGenerators";
    case ErrorKind::AgentOutsideDomain: return "AgentOutsideDomain";
    case ErrorKind::CoincidentAgents: return "CoincidentAgents";
    case ErrorKind::QuadratureNonConvergence: return "QuadratureNonConvergence";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::TimeOutOfRange: return "TimeOutOfRange";
    case ErrorKind::NonconvexInterpolation: return "NonconvexInterpolation";
    case ErrorKind::InvalidScript: return "InvalidScript";
    case ErrorKind::FaceNotOnBoundary: return "FaceNotOnBoundary";
    case ErrorKind::WindowTooLong: return "WindowTooLong";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

HalfPlane HalfPlane::from(Vec2 normal, double offset) {
  const double len = norm(normal);
  if (!(len > 0.0) || !std::isfinite(len) || !std::isfinite(offset)) {
    throw Error(ErrorKind::InvalidPolygon, "half-plane normal must be finite and nonzero");
  }
  return {normal / len, offset / len};
}

HalfPlane HalfPlane::bisector(Point2 keep, Point2 other) {
  // |q-keep|^2 <= |q-other|^2  <=>  (other-keep).q <= (|other|^2-|keep|^2)/2
  const Vec2 d = other - keep;
  const Point2 mid = 0.5 * (keep + other);
  return from(d, dot(d, mid));
}

std::optional<std::string> polygon_violation(std::span<const Point2> v) {
  const std::size_t m = v.size();
  if (m < 3) return "fewer than 3 vertices";
  for (const auto& p : v) {
    if (!is_finite(p)) return "non-finite vertex";
  }
  for (std::size_t k = 0; k < m; ++k) {
    if (distance(v[k], v[(k + 1) % m]) < kEpsGeom) {
      std::ostringstream os;
      os << "vertices " << k << " and " << (k + 1) % m << " coincide";
      return os.str();
    }
  }
  if (!(shoelace_signed_area(v) > 0.0)) return "vertices are not counterclockwise";
  for (std::size_t k = 0; k < m; ++k) {
    const Vec2 e0 = v[(k + 1) % m] - v[k];
    const Vec2 e1 = v[(k + 2) % m] - v[(k + 1) % m];
    if (cross(e0, e1) < -kEpsGeom * norm(e0) * norm(e1)) {
      std::ostringstream os;
      os << "reflex turn at vertex " << (k + 1) % m;
      return os.str();
    }
  }
  return std::nullopt;
}

ConvexPolygon::ConvexPolygon(std::vector<Point2> vertices) : vertices_(std::move(vertices)) {
  if (auto why = polygon_violation(vertices_)) throw Error(ErrorKind::InvalidPolygon, *why);
}

ConvexPolygon ConvexPolygon::trusted(std::vector<Point2> vertices) {
  return ConvexPolygon(std::move(vertices), TrustedTag{});
}

ConvexPolygon ConvexPolygon::rectangle(double xmin, double ymin, double xmax, double ymax) {
  return ConvexPolygon({{xmin, ymin}, {xmax, ymin}, {xmax, ymax}, {xmin, ymax}});
}

double ConvexPolygon::area() const { return shoelace_signed_area(vertices_); }

double ConvexPolygon::outside_distance(Point2 q) const {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < size(); ++k) {
    const Point2 a = edge_start(k);
    const Vec2 n = outward_normal(a, edge_end(k));
    worst = std::max(worst, dot(n, q - a));
  }
  return worst;
}

Point2 ConvexPolygon::project(Point2 q) const {
  if (outside_distance(q) <= 0.0) return q;
  Point2 best = vertices_.front();
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < size(); ++k) {
    const Point2 a = edge_start(k);
    const Vec2 e = edge_end(k) - a;
    const double s = std::clamp(dot(q - a, e) / squared_norm(e), 0.0, 1.0);
    const Point2 c = a + s * e;
    const double d2 = squared_norm(q - c);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = c;
    }
  }
  return best;
}

double shoelace_signed_area(std::span<const Point2> v) {
  if (v.empty()) return 0.0;
  // Translation-invariant; summing relative to v[0] keeps the terms small.
  const Point2 o = v.front();
  double twice = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    const Vec2 a = v[j] - o;
    const Vec2 b = v[(j + 1) % v.size()] - o;
    twice += dot(b, rotate_ccw(a));
  }
  return 0.5 * twice;
}

MassCentroid polygon_mass_centroid(const ConvexPolygon& poly) {
  const auto v = poly.vertices();
  const Point2 o = v.front();
  double twice_mass = 0.0;
  Vec2 moment;
  for (std::size_t j = 0; j < v.size(); ++j) {
    const Vec2 a = v[j] - o;
    const Vec2 b = v[(j + 1) % v.size()] - o;
    // V_{j+1}^T S V_j, which equals the cross product a x b.
    const double w = dot(b, rotate_ccw(a));
    twice_mass += w;
    moment += w * (a + b);
  }
  const double mass = 0.5 * twice_mass;
  if (!(mass >= kEpsArea)) {
    throw Error(ErrorKind::DegenerateCell, "polygon area below tolerance");
  }
  return {mass, o + moment / (6.0 * mass)};
}

namespace detail {

void merge_close_vertices(TaggedRing& ring) {
  auto& v = ring.vertices;
  auto& t = ring.edge_tags;
  if (v.size() < 2) return;
  std::vector<Point2> out_v;
  std::vector<std::int64_t> out_t;
  out_v.reserve(v.size());
  out_t.reserve(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!out_v.empty() && distance(out_v.back(), v[k]) < kEpsGeom) {
      out_t.back() = t[k];
      continue;
    }
    out_v.push_back(v[k]);
    out_t.push_back(t[k]);
  }
  while (out_v.size() > 1 && distance(out_v.back(), out_v.front()) < kEpsGeom) {
    // Closing edge is degenerate: the last vertex folds into the first and
    // the edge into it keeps its tag.
    out_v.pop_back();
    out_t.pop_back();
  }
  v = std::move(out_v);
  t = std::move(out_t);
}

bool clip_tagged(TaggedRing& ring, const HalfPlane& hp, std::int64_t line_tag) {
  const auto& v = ring.vertices;
  const std::size_t m = v.size();
  std::vector<double> d(m);
  bool any_out = false;
  bool any_in = false;
  for (std::size_t k = 0; k < m; ++k) {
    d[k] = hp.signed_distance(v[k]);
    if (d[k] > kOnLine) {
      any_out = true;
    } else {
      any_in = true;
    }
  }
  if (!any_out) return true;
  if (!any_in) {
    ring.vertices.clear();
    ring.edge_tags.clear();
    return false;
  }

  TaggedRing out;
  out.vertices.reserve(m + 1);
  out.edge_tags.reserve(m + 1);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t n = (k + 1) % m;
    const bool cur_in = d[k] <= kOnLine;
    const bool next_in = d[n] <= kOnLine;
    if (cur_in) {
      out.vertices.push_back(v[k]);
      out.edge_tags.push_back(ring.edge_tags[k]);
    }
    if (cur_in != next_in) {
      const double s = d[k] / (d[k] - d[n]);
      const Point2 x = v[k] + s * (v[n] - v[k]);
      out.vertices.push_back(x);
      out.edge_tags.push_back(cur_in ? line_tag : ring.edge_tags[k]);
    }
  }
  merge_close_vertices(out);
  ring = std::move(out);
  if (ring.vertices.size() < 3 || shoelace_signed_area(ring.vertices) < kEpsArea) {
    ring.vertices.clear();
    ring.edge_tags.clear();
    return false;
  }
  return true;
}

}  // namespace detail

std::optional<ConvexPolygon> clip_halfplane(const ConvexPolygon& poly, const HalfPlane& hp) {
  detail::TaggedRing ring{{poly.vertices().begin(), poly.vertices().end()},
                          std::vector<std::int64_t>(poly.size(), 0)};
  if (!detail::clip_tagged(ring, hp, 0)) return std::nullopt;
  return ConvexPolygon::trusted(std::move(ring.vertices));
}

Point2 circumcenter(Point2 pi, Point2 pj, Point2 pk) {
  // Work relative to the triangle's mean so the weights stay well scaled.
  const Point2 o = (pi + pj + pk) / 3.0;
  const Vec2 a = pi - o;
  const Vec2 b = pj - o;
  const Vec2 c = pk - o;
  const Vec2 pij = b - a;
  const Vec2 pik = c - a;
  const Vec2 pjk = c - b;
  const Vec2 pkj = b - c;
  const double scale2 = std::max({squared_norm(pij), squared_norm(pik), squared_norm(pjk)});
  const double area2 = cross(pij, pik);
  if (std::abs(area2) <= kEpsGeom * scale2 || scale2 == 0.0) {
    throw Error(ErrorKind::CollinearGenerators, "circumcenter of collinear points");
  }
  const double alpha_i = squared_norm(pjk) * dot(pij, pik);
  const double alpha_j = squared_norm(pik) * dot(pij, pkj);
  const double alpha_k = squared_norm(pij) * dot(pik, pjk);
  // Gram determinant |pij|^2 |pjk|^2 - (pij.pjk)^2 equals cross(pij, pjk)^2.
  const double gram = cross(pij, pjk) * cross(pij, pjk);
  return o + (alpha_i * a + alpha_j * b + alpha_k * c) / (2.0 * gram);
}

std::optional<EdgeCrossing> bisector_edge_intersection(Point2 pi, Point2 pj, Point2 edge_start,
                                                       Point2 edge_end) {
  const Vec2 d = pj - pi;
  if (norm(d) <= kEpsGeom) {
    throw Error(ErrorKind::CoincidentGenerators, "bisector of coincident generators");
  }
  const Vec2 e = edge_end - edge_start;
  const double den = dot(e, d);
  if (std::abs(den) <= 1e-12 * norm(e) * norm(d)) return std::nullopt;
  const Point2 mid = 0.5 * (pi + pj);
  double tau = dot(mid - edge_start, d) / den;
  constexpr double slack = 1e-12;
  if (tau < -slack || tau > 1.0 + slack) return std::nullopt;
  tau = std::clamp(tau, 0.0, 1.0);
  return EdgeCrossing{tau, edge_start + tau * e};
}

Vec2 outward_normal(Point2 v1, Point2 v2) {
  const Vec2 e = v2 - v1;
  const double len = norm(e);
  if (!(len > 0.0) || !std::isfinite(len)) {
    throw Error(ErrorKind::DegenerateFace, "zero-length face has no normal");
  }
  return rotate_cw(e) / len;
}

}  // namespace covctl
