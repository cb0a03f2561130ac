#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "covctl/geometry.hpp"

namespace covctl {

/// A face is either shared with neighbor `index` (Interior) or lies on
/// domain edge `index` (Boundary).
struct FaceTag {
  enum class Kind { Interior, Boundary };
  Kind kind = Kind::Boundary;
  std::size_t index = 0;

  static FaceTag interior(std::size_t neighbor) { return {Kind::Interior, neighbor}; }
  static FaceTag boundary(std::size_t edge) { return {Kind::Boundary, edge}; }
  bool is_interior() const { return kind == Kind::Interior; }
  bool is_boundary() const { return kind == Kind::Boundary; }
  friend bool operator==(const FaceTag&, const FaceTag&) = default;
};

struct Face {
  Point2 v1;
  Point2 v2;
  FaceTag tag;

  double length() const { return distance(v1, v2); }
};

struct VoronoiCell {
  std::size_t owner = 0;
  ConvexPolygon polygon;
  /// Counterclockwise; face k runs from polygon vertex k to vertex k+1.
  std::vector<Face> faces;
};

class Tessellation {
 public:
  Tessellation(ConvexPolygon domain, std::vector<Point2> positions, std::vector<VoronoiCell> cells);

  std::size_t size() const { return cells_.size(); }
  const ConvexPolygon& domain() const { return domain_; }
  std::span<const Point2> positions() const { return positions_; }
  std::span<const VoronoiCell> cells() const { return cells_; }
  const VoronoiCell& cell(std::size_t i) const { return cells_.at(i); }
  /// Sorted Delaunay neighbors of agent i.
  std::span<const std::size_t> neighbors(std::size_t i) const { return neighbors_.at(i); }
  /// True when no face of cell i lies on the domain boundary.
  bool is_interior(std::size_t i) const;

 private:
  ConvexPolygon domain_;
  std::vector<Point2> positions_;
  std::vector<VoronoiCell> cells_;
  std::vector<std::vector<std::size_t>> neighbors_;
};

/// Bounded Voronoi partition of `domain` generated by `positions`.
/// Throws AgentOutsideDomain or CoincidentAgents.
Tessellation voronoi_partition(std::span<const Point2> positions, const ConvexPolygon& domain);

/// Cell of agent `owner` using only the generators listed in `candidates`
/// (which may or may not include `owner`). With candidates = everyone this is
/// the cell voronoi_partition builds.
VoronoiCell build_cell(std::size_t owner, std::span<const Point2> positions,
                       const ConvexPolygon& domain, std::span<const std::size_t> candidates);

struct VertexProvenance {
  enum class Kind { Circumcenter, BoundaryIntersection, DomainCorner };
  Kind kind = Kind::DomainCorner;
  /// Circumcenter: the two neighbors (j, k). BoundaryIntersection: neighbor j
  /// and domain edge l. DomainCorner: corner index l in `first`.
  std::size_t first = 0;
  std::size_t second = 0;
};

struct CellVertex {
  Point2 point;
  VertexProvenance provenance;
};

std::vector<CellVertex> cell_vertices(const Tessellation& tess, std::size_t i);

std::optional<std::pair<Point2, Point2>> shared_face(const Tessellation& tess, std::size_t i,
                                                     std::size_t j);

std::map<std::size_t, std::size_t> neighbor_histogram(const Tessellation& tess);

}  // namespace covctl
