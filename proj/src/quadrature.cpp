#include "covctl/quadrature.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <vector>

namespace covctl {

namespace {

// Kronrod 15-point abscissae (positive half) and weights; Gauss 7-point
// weights sit on the odd-indexed abscissae.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

constexpr int kMaxDepth = 40;

struct Estimate {
  Eigen::VectorXd kronrod;
  double error = 0.0;
};

Estimate gauss_kronrod(const std::function<Eigen::VectorXd(double)>& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  Eigen::VectorXd fc = f(mid);
  Eigen::VectorXd k = kWgk[7] * fc;
  Eigen::VectorXd g = kWg[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kXgk[static_cast<std::size_t>(i)];
    Eigen::VectorXd s = f(mid - dx) + f(mid + dx);
    k += kWgk[static_cast<std::size_t>(i)] * s;
    if (i % 2 == 1) g += kWg[static_cast<std::size_t>(i / 2)] * s;
  }
  k *= half;
  g *= half;
  return {k, (k - g).cwiseAbs().maxCoeff()};
}

Eigen::VectorXd adapt(const std::function<Eigen::VectorXd(double)>& f, double a, double b,
                      double tol, int depth) {
  Estimate e = gauss_kronrod(f, a, b);
  // Differences at the roundoff floor cannot shrink further.
  const double floor = 50.0 * std::numeric_limits<double>::epsilon() * e.kronrod.cwiseAbs().maxCoeff();
  if (e.error <= std::max(tol, floor)) return e.kronrod;
  if (depth >= kMaxDepth) {
    throw Error(ErrorKind::QuadratureNonConvergence,
                "adaptive quadrature exceeded the refinement limit");
  }
  const double m = 0.5 * (a + b);
  return adapt(f, a, m, 0.5 * tol, depth + 1) + adapt(f, m, b, 0.5 * tol, depth + 1);
}

double diameter(std::span<const Point2> pts) {
  double d = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) d = std::max(d, distance(pts[i], pts[j]));
  }
  return d;
}

Eigen::VectorXd pack(Vec2 v) { return Eigen::Vector2d(v.x, v.y); }

Eigen::Matrix2d unpack2x2(const Eigen::VectorXd& v) {
  Eigen::Matrix2d m;
  m << v(0), v(1), v(2), v(3);
  return m;
}

}  // namespace

DensityField DensityField::uniform() {
  return {[](Point2, double) { return 1.0; }, {}};
}

Eigen::VectorXd integrate_interval(const std::function<Eigen::VectorXd(double)>& f, double a,
                                   double b, double tol) {
  if (!(tol > 0.0)) throw Error(ErrorKind::QuadratureNonConvergence, "tolerance must be positive");
  return adapt(f, a, b, tol, 0);
}

Eigen::VectorXd integrate_segment(const std::function<Eigen::VectorXd(Point2)>& f, Point2 v1,
                                  Point2 v2, double tol) {
  const double len = distance(v1, v2);
  auto g = [&](double tau) -> Eigen::VectorXd {
    return len * f((1.0 - tau) * v1 + tau * v2);
  };
  return integrate_interval(g, 0.0, 1.0, tol);
}

Eigen::VectorXd integrate_polygon(const std::function<Eigen::VectorXd(Point2)>& f,
                                  const ConvexPolygon& poly, double tol) {
  const auto v = poly.vertices();
  const std::size_t triangles = v.size() - 2;
  Eigen::VectorXd total;
  for (std::size_t k = 1; k + 1 < v.size(); ++k) {
    // Duffy map of triangle (a, b, c): q = a + u (b - a) + u w (c - b), dq = 2A u du dw.
    const Point2 a = v[0];
    const Point2 b = v[k];
    const Point2 c = v[k + 1];
    const double twice_area = cross(b - a, c - a);
    const double inner_tol = 0.1 * tol / (twice_area * static_cast<double>(triangles));
    auto outer = [&](double u) -> Eigen::VectorXd {
      auto inner = [&](double w) -> Eigen::VectorXd {
        return f(a + u * (b - a) + (u * w) * (c - b));
      };
      return (twice_area * u) * integrate_interval(inner, 0.0, 1.0, inner_tol);
    };
    Eigen::VectorXd part =
        integrate_interval(outer, 0.0, 1.0, 0.5 * tol / static_cast<double>(triangles));
    if (total.size() == 0) {
      total = part;
    } else {
      total += part;
    }
  }
  return total;
}

MassCentroid oracle_moments(const ConvexPolygon& cell, const DensityField& density, double t,
                            double tol) {
  const double scale = cell.area() * (1.0 + diameter(cell.vertices()));
  auto f = [&](Point2 q) -> Eigen::VectorXd {
    const double w = density.phi(q, t);
    return Eigen::Vector3d(w, w * q.x, w * q.y);
  };
  const Eigen::VectorXd r = integrate_polygon(f, cell, tol * scale);
  return {r(0), Point2{r(1) / r(0), r(2) / r(0)}};
}

Eigen::Matrix2d oracle_dci_dpj(const Face& face, Point2 pi, Point2 pj, const MassCentroid& cell_i,
                               const DensityField& density, double t, double tol) {
  const Point2 c = cell_i.centroid;
  const double reach = std::max({distance(face.v1, c), distance(face.v2, c), distance(face.v1, pj),
                                 distance(face.v2, pj)});
  auto f = [&](Point2 q) -> Eigen::VectorXd {
    const Eigen::Matrix2d m = outer(q - c, q - pj) * density.phi(q, t);
    return Eigen::Vector4d(m(0, 0), m(0, 1), m(1, 0), m(1, 1));
  };
  const Eigen::VectorXd r =
      integrate_segment(f, face.v1, face.v2, tol * face.length() * (1.0 + reach * reach));
  return -unpack2x2(r) / (cell_i.mass * distance(pi, pj));
}

Eigen::Matrix2d oracle_dci_dpi(const VoronoiCell& cell, std::span<const Point2> positions,
                               const MassCentroid& moments, const DensityField& density, double t,
                               double tol) {
  const Point2 pi = positions[cell.owner];
  const Point2 c = moments.centroid;
  Eigen::Matrix2d sum = Eigen::Matrix2d::Zero();
  for (const auto& face : cell.faces) {
    if (!face.tag.is_interior()) continue;
    const double reach = std::max({distance(face.v1, c), distance(face.v2, c),
                                   distance(face.v1, pi), distance(face.v2, pi)});
    auto f = [&](Point2 q) -> Eigen::VectorXd {
      const Eigen::Matrix2d m = outer(q - c, q - pi) * density.phi(q, t);
      return Eigen::Vector4d(m(0, 0), m(0, 1), m(1, 0), m(1, 1));
    };
    const Eigen::VectorXd r =
        integrate_segment(f, face.v1, face.v2, tol * face.length() * (1.0 + reach * reach));
    sum += unpack2x2(r) / distance(pi, positions[face.tag.index]);
  }
  return sum / moments.mass;
}

Vec2 oracle_dci_dt(const ConvexPolygon& cell, std::span<const MovingFace> faces,
                   const DensityField& density, double t, double tol) {
  const MassCentroid mc = oracle_moments(cell, density, t, tol);
  Vec2 rate = dci_dt_density_term(cell, mc, density, t, tol) * mc.mass;
  for (const auto& face : faces) {
    if (face.nu == 0.0) continue;
    auto f = [&](Point2 q) -> Eigen::VectorXd { return pack((q - mc.centroid) * density.phi(q, t)); };
    const double len = distance(face.v1, face.v2);
    const Eigen::VectorXd r = integrate_segment(
        f, face.v1, face.v2, tol * len * (1.0 + distance(face.v1, mc.centroid)));
    rate += face.nu * Vec2{r(0), r(1)};
  }
  return rate / mc.mass;
}

Vec2 dci_dt_density_term(const ConvexPolygon& cell, const MassCentroid& moments,
                         const DensityField& density, double t, double tol) {
  if (!density.dphi_dt) return {};
  const Point2 c = moments.centroid;
  auto f = [&](Point2 q) -> Eigen::VectorXd { return pack((q - c) * density.dphi_dt(q, t)); };
  const double scale = cell.area() * (1.0 + diameter(cell.vertices()));
  const Eigen::VectorXd r = integrate_polygon(f, cell, tol * scale);
  return Vec2{r(0), r(1)} / moments.mass;
}

}  // namespace covctl
