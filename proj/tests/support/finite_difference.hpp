#pragma once

// Central-difference references for centroid derivatives. Each evaluation
// rebuilds the partition from scratch and reads centroids off the shoelace
// formula, so no derivative kernel is involved.

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "covctl/geometry.hpp"
#include "covctl/tessellation.hpp"

namespace covctl::testing {

inline std::vector<std::size_t> vertex_counts(const Tessellation& tess) {
  std::vector<std::size_t> out;
  for (const auto& c : tess.cells()) out.push_back(c.polygon.size());
  return out;
}

inline std::vector<Point2> centroids_of(const std::vector<Point2>& p, const ConvexPolygon& domain,
                                        std::vector<std::size_t>* counts = nullptr) {
  const auto tess = voronoi_partition(p, domain);
  if (counts) *counts = vertex_counts(tess);
  std::vector<Point2> c;
  for (const auto& cell : tess.cells()) c.push_back(polygon_mass_centroid(cell.polygon).centroid);
  return c;
}

/// dc_i/dp_j by central differences, or nullopt when a perturbation changes
/// the vertex count of any cell (derivative discontinuous there).
inline std::optional<Eigen::Matrix2d> fd_dci_dpj(const std::vector<Point2>& p,
                                                 const ConvexPolygon& domain, std::size_t i,
                                                 std::size_t j, double h = 1e-6) {
  std::vector<std::size_t> base_counts;
  centroids_of(p, domain, &base_counts);
  Eigen::Matrix2d out;
  for (int axis = 0; axis < 2; ++axis) {
    auto plus = p;
    auto minus = p;
    (axis == 0 ? plus[j].x : plus[j].y) += h;
    (axis == 0 ? minus[j].x : minus[j].y) -= h;
    std::vector<std::size_t> cp, cm;
    const auto c_plus = centroids_of(plus, domain, &cp);
    const auto c_minus = centroids_of(minus, domain, &cm);
    if (cp != base_counts || cm != base_counts) return std::nullopt;
    const Vec2 d = (c_plus[i] - c_minus[i]) / (2 * h);
    out(0, axis) = d.x;
    out(1, axis) = d.y;
  }
  return out;
}

/// dc/dt for every cell by central differences of a time-dependent domain
/// with agents frozen.
inline std::optional<std::vector<Vec2>> fd_dc_dt(
    const std::vector<Point2>& p, const std::function<ConvexPolygon(double)>& domain_at, double t,
    double dt = 1e-6) {
  std::vector<std::size_t> c0, cp, cm;
  centroids_of(p, domain_at(t), &c0);
  const auto plus = centroids_of(p, domain_at(t + dt), &cp);
  const auto minus = centroids_of(p, domain_at(t - dt), &cm);
  if (cp != c0 || cm != c0) return std::nullopt;
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < p.size(); ++i) out.push_back((plus[i] - minus[i]) / (2 * dt));
  return out;
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace covctl::testing
