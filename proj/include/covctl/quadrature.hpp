#pragma once

#include <functional>
#include <span>

#include <Eigen/Core>

#include "covctl/geometry.hpp"
#include "covctl/kernels.hpp"

namespace covctl {

/// phi(q, t) > 0 and its time derivative. An empty dphi_dt means the density
/// is constant in time.
struct DensityField {
  std::function<double(Point2, double)> phi;
  std::function<double(Point2, double)> dphi_dt;

  static DensityField uniform();
};

/// Adaptive Gauss-Kronrod (7/15) quadrature of a vector-valued integrand over
/// [a, b]. Intervals are bisected until the Gauss/Kronrod estimates differ by
/// less than the local share of `tol` (absolute, max-norm).
/// Throws QuadratureNonConvergence past the refinement limit.
Eigen::VectorXd integrate_interval(const std::function<Eigen::VectorXd(double)>& f, double a,
                                   double b, double tol);

/// Line integral over the segment v1-v2 with q(tau) = v1 (1 - tau) + v2 tau.
Eigen::VectorXd integrate_segment(const std::function<Eigen::VectorXd(Point2)>& f, Point2 v1,
                                  Point2 v2, double tol);

/// Area integral over a convex polygon (fan triangles, Duffy map, nested
/// adaptive rule).
Eigen::VectorXd integrate_polygon(const std::function<Eigen::VectorXd(Point2)>& f,
                                  const ConvexPolygon& poly, double tol);

MassCentroid oracle_moments(const ConvexPolygon& cell, const DensityField& density, double t,
                            double tol);

Eigen::Matrix2d oracle_dci_dpj(const Face& face, Point2 pi, Point2 pj, const MassCentroid& cell_i,
                               const DensityField& density, double t, double tol);

/// Diagonal block as a sum of line integrals over the interior faces.
Eigen::Matrix2d oracle_dci_dpi(const VoronoiCell& cell, std::span<const Point2> positions,
                               const MassCentroid& moments, const DensityField& density, double t,
                               double tol);

/// Full dc_i/dt: density-rate area term plus the moving-boundary flux term.
/// Mass and centroid are themselves computed by quadrature.
Vec2 oracle_dci_dt(const ConvexPolygon& cell, std::span<const MovingFace> faces,
                   const DensityField& density, double t, double tol);

/// Density-rate term of dc_i/dt, by quadrature; exactly zero for a density
/// that is constant in time.
Vec2 dci_dt_density_term(const ConvexPolygon& cell, const MassCentroid& moments,
                         const DensityField& density, double t, double tol = 1e-12);

}  // namespace covctl
