#pragma once

#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "covctl/geometry.hpp"
#include "covctl/tessellation.hpp"

namespace covctl {

struct DomainState {
  ConvexPolygon polygon;
  /// Outward-positive normal speed of edge l (vertex l to vertex l+1).
  std::vector<double> edge_normal_velocity;
  std::vector<Vec2> vertex_velocity;
};

struct Keyframe {
  double t = 0.0;
  ConvexPolygon polygon;
};

/// Which one-sided velocity to report at a keyframe time, where the
/// piecewise-constant vertex velocity jumps.
enum class TimeSide { Right, Left };

class DomainScript {
 public:
  enum class Kind { Static, CircularTranslation, PiecewiseKeyframes };

  static DomainScript fixed(ConvexPolygon polygon);
  /// Rigid translation of `base` so that a reference point travels a circle of
  /// `radius` at `angular_rate`, starting at t = 0 with zero offset.
  static DomainScript circular(ConvexPolygon base, double radius, double angular_rate);
  /// Linear vertex interpolation between keyframes. Throws InvalidScript when
  /// times are not increasing, vertex counts differ or an edge rotates, and
  /// NonconvexInterpolation when a sampled intermediate polygon is invalid.
  static DomainScript keyframes(std::vector<Keyframe> frames);

  Kind kind() const { return kind_; }
  double start_time() const;
  double end_time() const;
  const ConvexPolygon& base() const { return base_; }
  double radius() const { return radius_; }
  double angular_rate() const { return angular_rate_; }
  std::span<const Keyframe> frames() const { return frames_; }

 private:
  DomainScript(Kind kind, ConvexPolygon base) : kind_(kind), base_(std::move(base)) {}

  Kind kind_;
  ConvexPolygon base_;
  double radius_ = 0.0;
  double angular_rate_ = 0.0;
  std::vector<Keyframe> frames_;
};

/// Throws TimeOutOfRange outside the script horizon.
DomainState domain_at(const DomainScript& script, double t, TimeSide side = TimeSide::Right);

/// State at time t on the segment between two keyframes (t need not lie
/// inside it). Both keyframe polygons are reproduced exactly at their times.
DomainState interpolate_keyframes(const Keyframe& a, const Keyframe& b, double t);

/// Normal speed of a cell face lying on a domain edge. Throws
/// FaceNotOnBoundary when the face is interior or off its tagged edge.
double face_velocity(const DomainState& state, const Face& face);

/// Edge normal speeds induced by vertex velocities (average of the two
/// endpoint projections onto the outward normal).
std::vector<double> edge_normal_velocities(const ConvexPolygon& polygon,
                                           std::span<const Vec2> vertex_velocity);

}  // namespace covctl
