#pragma once

#include <cstdint>
#include <vector>

#include "covctl/geometry.hpp"

namespace covctl::detail {

/// Polygon boundary with one tag per edge; edge k runs from vertex k to k+1.
struct TaggedRing {
  std::vector<Point2> vertices;
  std::vector<std::int64_t> edge_tags;
};

/// Sequential convex clip of `ring` by `hp`. Edges created along the clip
/// line receive `line_tag`. Near-coincident vertices (< kEpsGeom) are merged.
/// Returns false when nothing of positive area survives.
bool clip_tagged(TaggedRing& ring, const HalfPlane& hp, std::int64_t line_tag);

/// Drops vertices closer than kEpsGeom to their predecessor, keeping the tag
/// of the surviving outgoing edge.
void merge_close_vertices(TaggedRing& ring);

}  // namespace covctl::detail
