#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "covctl/geometry.hpp"
#include "covctl/tessellation.hpp"

namespace covctl {

/// Mass and centroid per cell under uniform density, indexed by agent.
using CellMoments = std::vector<MassCentroid>;

/// Per-agent rate of change of the centroid from domain motion, m/s.
using FeedforwardVector = std::vector<Vec2>;

/// Block-sparse dc/dp. Row i holds (j, dc_i/dp_j) for j in N_i and j = i,
/// sorted by j.
class JacobianBlocks {
 public:
  using Row = std::vector<std::pair<std::size_t, Eigen::Matrix2d>>;

  explicit JacobianBlocks(std::vector<Row> rows) : rows_(std::move(rows)) {}

  std::size_t size() const { return rows_.size(); }
  const Row& row(std::size_t i) const { return rows_.at(i); }
  /// Block (i, j), or nullptr outside the sparsity pattern.
  const Eigen::Matrix2d* block(std::size_t i, std::size_t j) const;
  Eigen::MatrixXd dense() const;
  /// y = (dc/dp) x for stacked 2n-vectors.
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

 private:
  std::vector<Row> rows_;
};

CellMoments cell_moments(const Tessellation& tess);

/// H = sum_i integral over V_i of |p_i - q|^2 (uniform density), exact.
double locational_cost(const Tessellation& tess, const CellMoments& moments,
                       std::span<const Point2> positions);

/// Closed form of the line integral of (q - c)(q - r)^T over the segment v1-v2.
Eigen::Matrix2d face_second_moment(Point2 v1, Point2 v2, Point2 c, Point2 r);

/// dc_i/dp_j for the face shared by cells i and j.
Eigen::Matrix2d dci_dpj(const Face& face, const MassCentroid& cell_i, Point2 pi, Point2 pj);

/// dc_i/dp_i, summed over the interior faces of the cell.
Eigen::Matrix2d dci_dpi(const VoronoiCell& cell, const MassCentroid& moments,
                        std::span<const Point2> positions);

JacobianBlocks jacobian_blocks(const Tessellation& tess, const CellMoments& moments);

/// A boundary face with the outward-normal speed of the domain edge hosting it.
struct MovingFace {
  Point2 v1;
  Point2 v2;
  double nu = 0.0;
};

/// Boundary contribution to dc_i/dt under uniform density.
Vec2 dci_dt_static_density(const MassCentroid& cell, std::span<const MovingFace> faces);

/// Faces of cell i lying on the domain boundary, each with the normal speed
/// of its hosting edge (`edge_normal_velocity` is indexed by domain edge).
std::vector<MovingFace> moving_faces(const VoronoiCell& cell,
                                     std::span<const double> edge_normal_velocity);

FeedforwardVector feedforward(const Tessellation& tess, const CellMoments& moments,
                              std::span<const double> edge_normal_velocity);

}  // namespace covctl
