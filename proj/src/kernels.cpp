#include "covctl/kernels.hpp"

#include <algorithm>

namespace covctl {

const Eigen::Matrix2d* JacobianBlocks::block(std::size_t i, std::size_t j) const {
  const auto& r = row(i);
  auto it = std::lower_bound(r.begin(), r.end(), j,
                             [](const auto& entry, std::size_t col) { return entry.first < col; });
  if (it == r.end() || it->first != j) return nullptr;
  return &it->second;
}

Eigen::MatrixXd JacobianBlocks::dense() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (std::size_t i = 0; i < size(); ++i) {
    for (const auto& [j, b] : rows_[i]) {
      m.block<2, 2>(2 * static_cast<Eigen::Index>(i), 2 * static_cast<Eigen::Index>(j)) = b;
    }
  }
  return m;
}

Eigen::VectorXd JacobianBlocks::apply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(x.size());
  for (std::size_t i = 0; i < size(); ++i) {
    const auto ii = 2 * static_cast<Eigen::Index>(i);
    for (const auto& [j, b] : rows_[i]) {
      y.segment<2>(ii) += b * x.segment<2>(2 * static_cast<Eigen::Index>(j));
    }
  }
  return y;
}

CellMoments cell_moments(const Tessellation& tess) {
  CellMoments out;
  out.reserve(tess.size());
  for (const auto& cell : tess.cells()) out.push_back(polygon_mass_centroid(cell.polygon));
  return out;
}

double locational_cost(const Tessellation& tess, const CellMoments& moments,
                       std::span<const Point2> positions) {
  double total = 0.0;
  for (std::size_t i = 0; i < tess.size(); ++i) {
    const auto v = tess.cell(i).polygon.vertices();
    const Point2 c = moments[i].centroid;
    // Polar moment about the centroid from a fan of triangles (c, v_k, v_k+1);
    // for a triangle (0, a, b): integral of |q|^2 = area/6 (|a|^2 + a.b + |b|^2).
    double polar = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      const Vec2 a = v[k] - c;
      const Vec2 b = v[(k + 1) % v.size()] - c;
      polar += 0.5 * cross(a, b) / 6.0 * (squared_norm(a) + dot(a, b) + squared_norm(b));
    }
    total += polar + moments[i].mass * squared_norm(c - positions[i]);
  }
  return total;
}

Eigen::Matrix2d face_second_moment(Point2 v1, Point2 v2, Point2 c, Point2 r) {
  const Vec2 d = v2 - v1;
  const Vec2 a = v1 - c;
  const Vec2 b = v1 - r;
  return norm(d) * (outer(a, b) + 0.5 * (outer(a, d) + outer(d, b)) + outer(d, d) / 3.0);
}

namespace {

double generator_gap(Point2 pi, Point2 pj) {
  const double gap = distance(pi, pj);
  if (!(gap > kEpsGeom) || !std::isfinite(gap)) {
    throw Error(ErrorKind::DegenerateFace, "face between coincident generators");
  }
  return gap;
}

}  // namespace

Eigen::Matrix2d dci_dpj(const Face& face, const MassCentroid& cell_i, Point2 pi, Point2 pj) {
  const double gap = generator_gap(pi, pj);
  if (face.length() < kEpsGeom) return Eigen::Matrix2d::Zero();
  return -face_second_moment(face.v1, face.v2, cell_i.centroid, pj) / (cell_i.mass * gap);
}

Eigen::Matrix2d dci_dpi(const VoronoiCell& cell, const MassCentroid& moments,
                        std::span<const Point2> positions) {
  const Point2 pi = positions[cell.owner];
  Eigen::Matrix2d sum = Eigen::Matrix2d::Zero();
  for (const auto& face : cell.faces) {
    if (!face.tag.is_interior()) continue;
    const double gap = generator_gap(pi, positions[face.tag.index]);
    if (face.length() < kEpsGeom) continue;
    sum += face_second_moment(face.v1, face.v2, moments.centroid, pi) / gap;
  }
  return sum / moments.mass;
}

JacobianBlocks jacobian_blocks(const Tessellation& tess, const CellMoments& moments) {
  const auto positions = tess.positions();
  std::vector<JacobianBlocks::Row> rows(tess.size());
  for (std::size_t i = 0; i < tess.size(); ++i) {
    const auto& cell = tess.cell(i);
    auto& row = rows[i];
    row.emplace_back(i, dci_dpi(cell, moments[i], positions));
    for (const auto& face : cell.faces) {
      if (!face.tag.is_interior()) continue;
      row.emplace_back(face.tag.index,
                       dci_dpj(face, moments[i], positions[i], positions[face.tag.index]));
    }
    std::sort(row.begin(), row.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
  }
  return JacobianBlocks(std::move(rows));
}

Vec2 dci_dt_static_density(const MassCentroid& cell, std::span<const MovingFace> faces) {
  Vec2 rate;
  for (const auto& f : faces) {
    if (!is_finite(f.v1) || !is_finite(f.v2) || !std::isfinite(f.nu)) {
      throw Error(ErrorKind::DegenerateFace, "non-finite boundary face");
    }
    if (f.nu == 0.0) continue;
    rate += (f.nu * distance(f.v1, f.v2)) * ((f.v2 - cell.centroid) + (f.v1 - cell.centroid));
  }
  return rate / (2.0 * cell.mass);
}

std::vector<MovingFace> moving_faces(const VoronoiCell& cell,
                                     std::span<const double> edge_normal_velocity) {
  std::vector<MovingFace> out;
  for (const auto& face : cell.faces) {
    if (!face.tag.is_boundary()) continue;
    out.push_back({face.v1, face.v2, edge_normal_velocity[face.tag.index]});
  }
  return out;
}

FeedforwardVector feedforward(const Tessellation& tess, const CellMoments& moments,
                              std::span<const double> edge_normal_velocity) {
  FeedforwardVector out(tess.size());
  for (std::size_t i = 0; i < tess.size(); ++i) {
    const auto faces = moving_faces(tess.cell(i), edge_normal_velocity);
    out[i] = dci_dt_static_density(moments[i], faces);
  }
  return out;
}

}  // namespace covctl
