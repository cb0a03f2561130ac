#include "covctl/tessellation.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "covctl/detail/clip.hpp"

namespace covctl {

namespace {

// Interior(j) is stored as j, Boundary(l) as -(l+1).
std::int64_t encode(FaceTag tag) {
  return tag.is_interior() ? static_cast<std::int64_t>(tag.index)
                           : -static_cast<std::int64_t>(tag.index) - 1;
}

FaceTag decode(std::int64_t raw) {
  return raw >= 0 ? FaceTag::interior(static_cast<std::size_t>(raw))
                  : FaceTag::boundary(static_cast<std::size_t>(-raw - 1));
}

double max_vertex_distance(const std::vector<Point2>& vertices, Point2 p) {
  double r = 0.0;
  for (const auto& v : vertices) r = std::max(r, distance(v, p));
  return r;
}

}  // namespace

Tessellation::Tessellation(ConvexPolygon domain, std::vector<Point2> positions,
                           std::vector<VoronoiCell> cells)
    : domain_(std::move(domain)),
      positions_(std::move(positions)),
      cells_(std::move(cells)),
      neighbors_(cells_.size()) {
  // Union of both sides: a face that survives merging on one side only is
  // still a shared face of positive length.
  for (const auto& cell : cells_) {
    for (const auto& face : cell.faces) {
      if (!face.tag.is_interior()) continue;
      neighbors_[cell.owner].push_back(face.tag.index);
      neighbors_[face.tag.index].push_back(cell.owner);
    }
  }
  for (auto& n : neighbors_) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
}

bool Tessellation::is_interior(std::size_t i) const {
  const auto& faces = cell(i).faces;
  return std::none_of(faces.begin(), faces.end(),
                      [](const Face& f) { return f.tag.is_boundary(); });
}

VoronoiCell build_cell(std::size_t owner, std::span<const Point2> positions,
                       const ConvexPolygon& domain, std::span<const std::size_t> candidates) {
  const Point2 p = positions[owner];

  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(candidates.size());
  for (std::size_t j : candidates) {
    if (j == owner) continue;
    order.emplace_back(distance(p, positions[j]), j);
  }
  std::sort(order.begin(), order.end());

  detail::TaggedRing ring;
  ring.vertices.assign(domain.vertices().begin(), domain.vertices().end());
  ring.edge_tags.resize(domain.size());
  for (std::size_t l = 0; l < domain.size(); ++l) ring.edge_tags[l] = encode(FaceTag::boundary(l));

  double reach = max_vertex_distance(ring.vertices, p);
  for (const auto& [d, j] : order) {
    if (d <= kEpsGeom) {
      std::ostringstream os;
      os << "agents " << std::min(owner, j) << " and " << std::max(owner, j) << " coincide";
      throw Error(ErrorKind::CoincidentAgents, os.str());
    }
    // The bisector sits d/2 from p; nothing beyond the cell's reach is cut.
    if (0.5 * d > reach + kEpsGeom) break;
    if (!detail::clip_tagged(ring, HalfPlane::bisector(p, positions[j]),
                             encode(FaceTag::interior(j)))) {
      throw Error(ErrorKind::DegenerateCell, "Voronoi cell of agent " + std::to_string(owner) +
                                                 " vanished during clipping");
    }
    reach = max_vertex_distance(ring.vertices, p);
  }

  VoronoiCell cell{owner, ConvexPolygon::trusted(ring.vertices), {}};
  const std::size_t m = ring.vertices.size();
  cell.faces.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    cell.faces.push_back({ring.vertices[k], ring.vertices[(k + 1) % m], decode(ring.edge_tags[k])});
  }
  return cell;
}

Tessellation voronoi_partition(std::span<const Point2> positions, const ConvexPolygon& domain) {
  const std::size_t n = positions.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_finite(positions[i]) || !domain.contains(positions[i])) {
      std::ostringstream os;
      os << "agent " << i << " at (" << positions[i].x << ", " << positions[i].y
         << ") is outside the domain";
      throw Error(ErrorKind::AgentOutsideDomain, os.str());
    }
  }
  std::vector<std::size_t> everyone(n);
  std::iota(everyone.begin(), everyone.end(), std::size_t{0});

  std::vector<VoronoiCell> cells;
  cells.reserve(n);
  for (std::size_t i = 0; i < n; ++i) cells.push_back(build_cell(i, positions, domain, everyone));
  return Tessellation(domain, {positions.begin(), positions.end()}, std::move(cells));
}

std::vector<CellVertex> cell_vertices(const Tessellation& tess, std::size_t i) {
  const auto& faces = tess.cell(i).faces;
  const std::size_t m = faces.size();
  std::vector<CellVertex> out;
  out.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    const FaceTag in = faces[(k + m - 1) % m].tag;
    const FaceTag outgoing = faces[k].tag;
    VertexProvenance prov;
    if (in.is_interior() && outgoing.is_interior()) {
      prov = {VertexProvenance::Kind::Circumcenter, in.index, outgoing.index};
    } else if (in.is_interior()) {
      prov = {VertexProvenance::Kind::BoundaryIntersection, in.index, outgoing.index};
    } else if (outgoing.is_interior()) {
      prov = {VertexProvenance::Kind::BoundaryIntersection, outgoing.index, in.index};
    } else {
      prov = {VertexProvenance::Kind::DomainCorner, outgoing.index, outgoing.index};
    }
    out.push_back({faces[k].v1, prov});
  }
  return out;
}

std::optional<std::pair<Point2, Point2>> shared_face(const Tessellation& tess, std::size_t i,
                                                     std::size_t j) {
  for (const auto& f : tess.cell(i).faces) {
    if (f.tag == FaceTag::interior(j)) return std::make_pair(f.v1, f.v2);
  }
  // Present only on j's side (merged away on i's): report it in i's orientation.
  for (const auto& f : tess.cell(j).faces) {
    if (f.tag == FaceTag::interior(i)) return std::make_pair(f.v2, f.v1);
  }
  return std::nullopt;
}

std::map<std::size_t, std::size_t> neighbor_histogram(const Tessellation& tess) {
  std::map<std::size_t, std::size_t> hist;
  for (std::size_t i = 0; i < tess.size(); ++i) ++hist[tess.neighbors(i).size()];
  return hist;
}

}  // namespace covctl
