#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "covctl/errors.hpp"

namespace covctl {

/// Coincidence / collinearity tolerance in meters.
inline constexpr double kEpsGeom = 1e-9;
/// Cells below this area (m^2) are treated as empty.
inline constexpr double kEpsArea = 1e-12;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend constexpr Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
  friend constexpr bool operator==(Vec2 a, Vec2 b) = default;
};

using Point2 = Vec2;

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
/// z-component of a x b.
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
constexpr double squared_norm(Vec2 a) { return dot(a, a); }
inline double distance(Vec2 a, Vec2 b) { return norm(b - a); }
inline bool is_finite(Vec2 a) { return std::isfinite(a.x) && std::isfinite(a.y); }

/// Quarter-turn rotation S = [[0,-1],[1,0]]; S*S = -I.
constexpr Vec2 rotate_ccw(Vec2 a) { return {-a.y, a.x}; }
/// S^T applied to a, i.e. a clockwise quarter turn.
constexpr Vec2 rotate_cw(Vec2 a) { return {a.y, -a.x}; }

inline Eigen::Vector2d to_eigen(Vec2 a) { return {a.x, a.y}; }
inline Eigen::Matrix2d outer(Vec2 a, Vec2 b) {
  Eigen::Matrix2d m;
  m << a.x * b.x, a.x * b.y, a.y * b.x, a.y * b.y;
  return m;
}

/// Points q with dot(normal, q) <= offset.
struct HalfPlane {
  Vec2 normal;
  double offset = 0.0;

  double signed_distance(Point2 q) const { return dot(normal, q) - offset; }

  /// Unit-normalized half-plane; throws InvalidPolygon for a null normal.
  static HalfPlane from(Vec2 normal, double offset);
  /// Set of points at least as close to `keep` as to `other`.
  static HalfPlane bisector(Point2 keep, Point2 other);
};

struct MassCentroid {
  double mass = 0.0;
  Point2 centroid;
};

/// Convex polygon with counterclockwise vertices. The constructor validates;
/// use `trusted` only for output of operations that preserve the invariants.
class ConvexPolygon {
 public:
  explicit ConvexPolygon(std::vector<Point2> vertices);

  static ConvexPolygon trusted(std::vector<Point2> vertices);
  static ConvexPolygon rectangle(double xmin, double ymin, double xmax, double ymax);

  std::span<const Point2> vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  const Point2& operator[](std::size_t k) const { return vertices_[k]; }
  /// Edge k runs from vertex k to vertex k+1 (wrapping).
  Point2 edge_start(std::size_t k) const { return vertices_[k]; }
  Point2 edge_end(std::size_t k) const { return vertices_[(k + 1) % vertices_.size()]; }

  double area() const;
  /// Largest signed distance of q outside any edge line; <= 0 means inside.
  double outside_distance(Point2 q) const;
  bool contains(Point2 q, double tol = kEpsGeom) const { return outside_distance(q) <= tol; }
  /// Closest point of the polygon (boundary included) to q.
  Point2 project(Point2 q) const;

 private:
  struct TrustedTag {};
  ConvexPolygon(std::vector<Point2> vertices, TrustedTag) : vertices_(std::move(vertices)) {}

  std::vector<Point2> vertices_;
};

/// Reason a vertex list fails ConvexPolygon validation, or nullopt if valid.
std::optional<std::string> polygon_violation(std::span<const Point2> vertices);

/// Raw shoelace sum 1/2 sum_j V_{j+1}^T S V_j with wraparound (signed area).
double shoelace_signed_area(std::span<const Point2> vertices);

MassCentroid polygon_mass_centroid(const ConvexPolygon& poly);

std::optional<ConvexPolygon> clip_halfplane(const ConvexPolygon& poly, const HalfPlane& hp);

Point2 circumcenter(Point2 pi, Point2 pj, Point2 pk);

struct EdgeCrossing {
  double tau = 0.0;
  Point2 point;
};

/// Where the perpendicular bisector of (pi, pj) meets the segment
/// edge_start -> edge_end, if it does.
std::optional<EdgeCrossing> bisector_edge_intersection(Point2 pi, Point2 pj, Point2 edge_start,
                                                       Point2 edge_end);

/// Outward unit normal of the counterclockwise face v1 -> v2.
Vec2 outward_normal(Point2 v1, Point2 v2);

}  // namespace covctl
