#include "covctl/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "covctl/quadrature.hpp"

namespace covctl {

namespace {

constexpr double kFdStep = 1e-6;
constexpr double kFdTol = 1e-5;
constexpr double kQuadTol = 1e-8;

double max_abs(const Eigen::Matrix2d& m) { return m.cwiseAbs().maxCoeff(); }

struct Instance {
  ConvexPolygon domain;
  std::vector<Point2> positions;
};

ConvexPolygon random_domain(SeededUniform& rng) {
  const std::size_t m = 4 + static_cast<std::size_t>(rng.next() * 4.0);
  const double a = 0.8 + 0.7 * rng.next();
  const double b = 0.8 + 0.7 * rng.next();
  const double spin = 2 * std::numbers::pi * rng.next();
  std::vector<Point2> v;
  // Jittered equal sectors keep vertices well separated.
  for (std::size_t k = 0; k < m; ++k) {
    const double th = spin + 2 * std::numbers::pi * (static_cast<double>(k) + 0.6 * rng.next()) /
                                 static_cast<double>(m);
    v.push_back({a * std::cos(th), b * std::sin(th)});
  }
  return ConvexPolygon(std::move(v));
}

std::vector<Point2> random_agents(SeededUniform& rng, const ConvexPolygon& domain, std::size_t n,
                                  double margin, double separation) {
  Point2 lo = domain[0], hi = domain[0];
  for (const auto& v : domain.vertices()) {
    lo = {std::min(lo.x, v.x), std::min(lo.y, v.y)};
    hi = {std::max(hi.x, v.x), std::max(hi.y, v.y)};
  }
  std::vector<Point2> p;
  while (p.size() < n) {
    const Point2 q{lo.x + rng.next() * (hi.x - lo.x), lo.y + rng.next() * (hi.y - lo.y)};
    if (domain.outside_distance(q) > -margin) continue;
    if (separation > 0.0 &&
        std::any_of(p.begin(), p.end(), [&](Point2 o) { return distance(o, q) < separation; })) {
      continue;
    }
    p.push_back(q);
  }
  return p;
}

std::vector<std::size_t> vertex_counts(const Tessellation& t) {
  std::vector<std::size_t> out;
  for (const auto& c : t.cells()) out.push_back(c.polygon.size());
  return out;
}

std::vector<Point2> centroids(const Tessellation& t) {
  std::vector<Point2> out;
  for (const auto& c : t.cells()) out.push_back(polygon_mass_centroid(c.polygon).centroid);
  return out;
}

ConvexPolygon moved(const ConvexPolygon& d, std::span<const Vec2> u, double h) {
  std::vector<Point2> v(d.vertices().begin(), d.vertices().end());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] += h * u[k];
  return ConvexPolygon::trusted(std::move(v));
}

CheckResult bound_check(std::string name, double worst, double tol, std::size_t count,
                        std::string_view unit) {
  std::ostringstream d;
  d << count << ' ' << unit;
  return {std::move(name), count > 0 && worst <= tol, worst, tol, d.str()};
}

}  // namespace

bool SuiteReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

SuiteReport verify_derivatives(int instances, std::uint64_t seed) {
  SeededUniform rng(seed);
  const auto density = DensityField::uniform();
  double fd_pj = 0, fd_pi = 0, fd_t = 0, q_pj = 0, q_pi = 0, q_t = 0;
  std::size_t n_fd_pj = 0, n_fd_pi = 0, n_fd_t = 0, n_q = 0;

  for (int inst = 0; inst < instances; ++inst) {
    const auto domain = random_domain(rng);
    const std::size_t n = 3 + static_cast<std::size_t>(rng.next() * 10.0);
    const auto p = random_agents(rng, domain, n, 1e-3, 1e-2);
    const auto tess = voronoi_partition(p, domain);
    const auto m = cell_moments(tess);
    const auto jac = jacobian_blocks(tess, m);
    const auto base_counts = vertex_counts(tess);

    // Position derivatives by central differences.
    for (std::size_t j = 0; j < n; ++j) {
      Eigen::MatrixXd cols(2 * n, 2);
      bool same_topology = true;
      for (int axis = 0; axis < 2 && same_topology; ++axis) {
        auto plus = p, minus = p;
        (axis == 0 ? plus[j].x : plus[j].y) += kFdStep;
        (axis == 0 ? minus[j].x : minus[j].y) -= kFdStep;
        const auto tp = voronoi_partition(plus, domain);
        const auto tm = voronoi_partition(minus, domain);
        if (vertex_counts(tp) != base_counts || vertex_counts(tm) != base_counts) {
          same_topology = false;
          break;
        }
        const auto cp = centroids(tp), cm = centroids(tm);
        for (std::size_t i = 0; i < n; ++i) {
          const Vec2 d = (cp[i] - cm[i]) / (2 * kFdStep);
          cols(static_cast<Eigen::Index>(2 * i), axis) = d.x;
          cols(static_cast<Eigen::Index>(2 * i + 1), axis) = d.y;
        }
      }
      if (!same_topology) continue;
      for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Matrix2d fd = cols.block<2, 2>(static_cast<Eigen::Index>(2 * i), 0);
        const Eigen::Matrix2d* b = jac.block(i, j);
        const double err = max_abs((b ? *b : Eigen::Matrix2d::Zero()) - fd);
        if (i == j) {
          fd_pi = std::max(fd_pi, err);
          ++n_fd_pi;
        } else {
          fd_pj = std::max(fd_pj, err);
          ++n_fd_pj;
        }
      }
    }

    // Domain motion: translation plus isotropic scaling keeps edges parallel.
    const Vec2 v{2 * rng.next() - 1, 2 * rng.next() - 1};
    const double s = 2 * rng.next() - 1;
    const Point2 o = polygon_mass_centroid(domain).centroid;
    std::vector<Vec2> u;
    for (const auto& q : domain.vertices()) u.push_back(v + s * (q - o));
    const auto nu = edge_normal_velocities(domain, u);
    const auto ff = feedforward(tess, m, nu);
    const auto tp = voronoi_partition(p, moved(domain, u, kFdStep));
    const auto tm = voronoi_partition(p, moved(domain, u, -kFdStep));
    if (vertex_counts(tp) == base_counts && vertex_counts(tm) == base_counts) {
      const auto cp = centroids(tp), cm = centroids(tm);
      for (std::size_t i = 0; i < n; ++i) {
        fd_t = std::max(fd_t, norm((cp[i] - cm[i]) / (2 * kFdStep) - ff[i]));
        ++n_fd_t;
      }
    }

    // Quadrature oracles.
    for (std::size_t i = 0; i < n; ++i) {
      const auto& cell = tess.cell(i);
      const Eigen::Matrix2d d = *jac.block(i, i);
      const Eigen::Matrix2d dq = oracle_dci_dpi(cell, p, m[i], density, 0.0, 1e-13);
      q_pi = std::max(q_pi, max_abs(d - dq) / std::max(1.0, max_abs(dq)));
      for (const auto& f : cell.faces) {
        if (!f.tag.is_interior()) continue;
        const std::size_t j = f.tag.index;
        const Eigen::Matrix2d a = dci_dpj(f, m[i], p[i], p[j]);
        const Eigen::Matrix2d q = oracle_dci_dpj(f, p[i], p[j], m[i], density, 0.0, 1e-13);
        q_pj = std::max(q_pj, max_abs(a - q) / std::max(1.0, max_abs(q)));
      }
      const Vec2 tq = oracle_dci_dt(cell.polygon, moving_faces(cell, nu), density, 0.0, 1e-13);
      q_t = std::max(q_t, norm(tq - ff[i]) / std::max(1.0, norm(tq)));
      ++n_q;
    }
  }

  SuiteReport r;
  r.checks.push_back(bound_check("dc_i/dp_j vs finite differences", fd_pj, kFdTol, n_fd_pj, "blocks"));
  r.checks.push_back(bound_check("dc_i/dp_i vs finite differences", fd_pi, kFdTol, n_fd_pi, "blocks"));
  r.checks.push_back(bound_check("dc_i/dt vs finite differences", fd_t, kFdTol, n_fd_t, "cells"));
  r.checks.push_back(bound_check("dc_i/dp_j vs quadrature (relative)", q_pj, kQuadTol, n_q, "cells"));
  r.checks.push_back(bound_check("dc_i/dp_i vs quadrature (relative)", q_pi, kQuadTol, n_q, "cells"));
  r.checks.push_back(bound_check("dc_i/dt vs quadrature (relative)", q_t, kQuadTol, n_q, "cells"));
  return r;
}

SuiteReport verify_partition(std::vector<std::size_t> sizes, std::size_t probes,
                             std::uint64_t seed) {
  SeededUniform rng(seed);
  SuiteReport r;
  for (std::size_t n : sizes) {
    const auto domain = random_domain(rng);
    const auto p = random_agents(rng, domain, n, 0.0, 10 * kEpsGeom);
    const auto tess = voronoi_partition(p, domain);
    double mass = 0.0;
    for (const auto& c : tess.cells()) mass += polygon_mass_centroid(c.polygon).mass;
    const double area = domain.area();
    std::ostringstream nm;
    nm << "mass partition n=" << n;
    r.checks.push_back(bound_check(nm.str(), std::abs(mass - area) / area, 1e-9, n, "cells"));

    const auto probe_pts = random_agents(rng, domain, probes, 0.0, 0.0);
    std::size_t wrong = 0;
    for (const auto& q : probe_pts) {
      std::size_t best = 0;
      double best_d = distance(q, p[0]);
      for (std::size_t j = 1; j < n; ++j) {
        const double d = distance(q, p[j]);
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      if (!tess.cell(best).polygon.contains(q, 1e-9)) ++wrong;
    }
    std::ostringstream pm;
    pm << "nearest-generator ownership n=" << n;
    r.checks.push_back({pm.str(), wrong == 0, static_cast<double>(wrong), 0.0,
                        std::to_string(probes) + " probes"});
  }
  return r;
}

double fitted_log_slope(const TrajectoryLog& log, double floor) {
  if (log.records.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double ceiling = 0.5 * log.records.front().metrics.e_a;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double count = 0;
  for (const auto& rec : log.records) {
    const double e = rec.metrics.e_a;
    if (e < floor || e > ceiling) continue;
    const double y = std::log(e);
    sx += rec.t;
    sy += y;
    sxx += rec.t * rec.t;
    sxy += rec.t * y;
    count += 1;
  }
  if (count < 2) return std::numeric_limits<double>::quiet_NaN();
  return (count * sxy - sx * sy) / (count * sxx - sx * sx);
}

SuiteReport verify_convergence(std::uint64_t seed) {
  SuiteReport r;
  for (double kappa : {1.0, 2.0}) {
    ScenarioConfig c;
    c.n_agents = 10;
    c.rng_seed = seed;
    c.dt = 0.005;
    c.duration = 14.0 / kappa;
    c.control.kappa = kappa;
    c.control.law = ControlLaw::TvdC;
    const double slope = fitted_log_slope(run(c));
    const double rel = std::abs(-slope / kappa - 1.0);
    std::ostringstream nm, d;
    nm << "exponential rate kappa=" << kappa;
    d << "fitted slope " << slope;
    r.checks.push_back({nm.str(), std::isfinite(slope) && rel <= 0.1, rel, 0.1, d.str()});
  }

  const ConvexPolygon square = ConvexPolygon::rectangle(0, 0, 1, 1);
  const std::vector<Point2> split{{0.25, 0.5}, {0.75, 0.5}};
  const auto tess = voronoi_partition(split, square);
  const auto jac = jacobian_blocks(tess, cell_moments(tess));
  Eigen::Matrix2d off, diag;
  off << 0.25, 0, 0, -1.0 / 3.0;
  diag << 0.25, 0, 0, 1.0 / 3.0;
  const double err = std::max(max_abs(*jac.block(0, 1) - off), max_abs(*jac.block(0, 0) - diag));
  r.checks.push_back({"split-square hand-derived blocks", err <= 1e-9, err, 1e-9, ""});
  return r;
}

std::optional<SuiteReport> run_suite(std::string_view name) {
  if (name == "derivatives") return verify_derivatives();
  if (name == "partition") return verify_partition();
  if (name == "convergence") return verify_convergence();
  if (name == "all") {
    SuiteReport all;
    for (auto* s : {"derivatives", "partition", "convergence"}) {
      auto part = run_suite(s);
      all.checks.insert(all.checks.end(), part->checks.begin(), part->checks.end());
    }
    return all;
  }
  return std::nullopt;
}

}  // namespace covctl
