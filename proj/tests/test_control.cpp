#include <doctest.h>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "covctl/control.hpp"
#include "support/finite_difference.hpp"
#include "support/oracles.hpp"

using namespace covctl;
using covctl::testing::Rng;

namespace {

const ConvexPolygon kUnitSquare = ConvexPolygon::rectangle(0, 0, 1, 1);

struct Instance {
  std::vector<Point2> p;
  Tessellation tess;
  CellMoments moments;
  JacobianBlocks jac;
  FeedforwardVector ff;
};

Instance make_instance(std::vector<Point2> p, const ConvexPolygon& domain,
                       std::vector<double> nu = {}) {
  auto tess = voronoi_partition(p, domain);
  auto m = cell_moments(tess);
  auto jac = jacobian_blocks(tess, m);
  if (nu.empty()) nu.assign(domain.size(), 0.0);
  auto ff = feedforward(tess, m, nu);
  return {std::move(p), std::move(tess), std::move(m), std::move(jac), std::move(ff)};
}

std::vector<Point2> lloyd_relaxed(std::vector<Point2> p, const ConvexPolygon& domain, int iters) {
  for (int k = 0; k < iters; ++k) {
    const auto m = cell_moments(voronoi_partition(p, domain));
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = m[i].centroid;
  }
  return p;
}

double spectral_norm(const Eigen::MatrixXd& m) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

}  // namespace

TEST_CASE("ControlConfig validation") {
  ControlConfig c;
  CHECK_NOTHROW(c.validate());
  c.kappa = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c.kappa = -1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c.kappa = 1.0;
  c.neumann_order = -1;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("assemble_system") {
  SUBCASE("single agent") {
    const auto in = make_instance({{0.2, 0.2}}, kUnitSquare);
    const auto sys = assemble_system(in.jac, in.ff, in.moments, in.p, 2.0);
    CHECK(sys.A.isApprox(Eigen::Matrix2d::Identity()));
    CHECK(sys.b(0) == doctest::Approx(0.6));
    CHECK(sys.b(1) == doctest::Approx(0.6));
  }
  SUBCASE("exact CVT gives a zero right-hand side") {
    const auto in = make_instance({{0.25, 0.5}, {0.75, 0.5}}, kUnitSquare);
    const auto sys = assemble_system(in.jac, in.ff, in.moments, in.p, 1.0);
    CHECK(sys.b.norm() < 1e-15);
  }
  SUBCASE("split square against a finite-difference Jacobian") {
    const std::vector<Point2> p{{0.25, 0.5}, {0.75, 0.5}};
    const auto in = make_instance(p, kUnitSquare);
    const auto sys = assemble_system(in.jac, in.ff, in.moments, in.p, 1.0);
    Eigen::Matrix4d expected = Eigen::Matrix4d::Identity();
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t j = 0; j < 2; ++j) {
        const auto fd = testing::fd_dci_dpj(p, kUnitSquare, i, j);
        REQUIRE(fd.has_value());
        expected.block<2, 2>(2 * i, 2 * j) -= *fd;
      }
    }
    CHECK(testing::max_abs(sys.A - expected) < 1e-6);
  }
  SUBCASE("feedforward off drops only the time derivative") {
    const auto in = make_instance({{0.5, 0.5}}, kUnitSquare, {0, 1, 0, 0});
    const auto on = assemble_system(in.jac, in.ff, in.moments, in.p, 1.0, true);
    const auto off = assemble_system(in.jac, in.ff, in.moments, in.p, 1.0, false);
    CHECK(on.b(0) == doctest::Approx(0.5));
    CHECK(off.b.norm() < 1e-15);
    CHECK(on.A == off.A);
  }
}

TEST_CASE("tvd_c") {
  SUBCASE("single agent pulled to the centroid") {
    const auto in = make_instance({{0.2, 0.2}}, kUnitSquare);
    const auto sys = assemble_system(in.jac, in.ff, in.moments, in.p, 1.0);
    const auto out = tvd_c(sys.A, sys.b);
    CHECK(out.velocities(0) == doctest::Approx(0.3));
    CHECK(out.velocities(1) == doctest::Approx(0.3));
  }
  SUBCASE("single agent at the centroid with the right wall moving") {
    const auto in = make_instance({{0.5, 0.5}}, kUnitSquare, {0, 1, 0, 0});
    const auto sys = assemble_system(in.jac, in.ff, in.moments, in.p, 1.0);
    const auto out = tvd_c(sys.A, sys.b);
    CHECK(out.velocities(0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(std::abs(out.velocities(1)) < 1e-15);
  }
  SUBCASE("random instances agree with the explicit inverse") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(700 + seed);
      const auto p = testing::random_points_in(rng, kUnitSquare, 10, 1e-3);
      std::vector<double> nu(4);
      for (auto& v : nu) v = rng.uniform(-1, 1);
      const auto in = make_instance(p, kUnitSquare, nu);
      const auto sys = assemble_system(in.jac, in.ff, in.moments, in.p, 1.5);
      const auto out = tvd_c(sys.A, sys.b);
      const Eigen::VectorXd oracle = sys.A.inverse() * sys.b;
      CHECK((out.velocities - oracle).cwiseAbs().maxCoeff() < 1e-9);
      CHECK(out.residual <= 1e-10 * sys.b.norm());
      CHECK(std::isfinite(out.condition_estimate));
    }
  }
  SUBCASE("singular matrix") {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2);
    A(0, 0) = 1.0;
    CHECK_THROWS_AS(tvd_c(A, Eigen::VectorXd::Ones(2)), Error);
  }
}

TEST_CASE("tvd_d1") {
  SUBCASE("single agent matches tvd_c") {
    const auto in = make_instance({{0.2, 0.7}}, kUnitSquare, {0.3, 0, -0.2, 0});
    const auto sys = assemble_system(in.jac, in.ff, in.moments, in.p, 1.0);
    const auto c = tvd_c(sys.A, sys.b);
    const auto d = tvd_d1(in.jac, sys.b, 1);
    CHECK((c.velocities - d.velocities).norm() < 1e-15);
  }
  SUBCASE("split square at CVT is stationary") {
    const auto in = make_instance({{0.25, 0.5}, {0.75, 0.5}}, kUnitSquare);
    const auto b = control_rhs(in.ff, in.moments, in.p, 1.0, true);
    CHECK(tvd_d1(in.jac, b, 1).velocities.norm() < 1e-15);
  }
  SUBCASE("order 0 is the right-hand side and order 1 is (I + J) b") {
    Rng rng(17);
    const auto in = make_instance(testing::random_points_in(rng, kUnitSquare, 7), kUnitSquare);
    const auto b = control_rhs(in.ff, in.moments, in.p, 1.0, true);
    CHECK(tvd_d1(in.jac, b, 0).velocities == b);
    const Eigen::VectorXd expected = b + in.jac.dense() * b;
    CHECK((tvd_d1(in.jac, b, 1).velocities - expected).norm() < 1e-14);
  }
}

TEST_CASE("Neumann truncation error") {
  // Uniform random placements have ||dc/dp|| well above one; near-CVT
  // configurations are where the series converges.
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(900 + seed);
    auto p = lloyd_relaxed(testing::random_points_in(rng, kUnitSquare, 10, 1e-3), kUnitSquare, 100);
    for (auto& q : p) q += Vec2{rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01)};
    const auto in = make_instance(p, kUnitSquare, {0.2, -0.4, 0.1, 0.3});
    const Eigen::MatrixXd J = in.jac.dense();
    const double norm_j = spectral_norm(J);
    if (!(norm_j < 1.0)) continue;
    ++checked;
    const auto sys = assemble_system(in.jac, in.ff, in.moments, in.p, 1.0);
    const auto exact = tvd_c(sys.A, sys.b);
    const double bound =
        norm_j * norm_j * exact.velocities.norm() / (1.0 - norm_j);
    const double err1 = (tvd_d1(in.jac, sys.b, 1).velocities - exact.velocities).norm();
    CHECK(err1 <= bound * (1 + 1e-12) + 1e-14);

    double prev = (sys.b - exact.velocities).norm();
    for (int k = 1; k <= 8; ++k) {
      const double err = (tvd_d1(in.jac, sys.b, k).velocities - exact.velocities).norm();
      CHECK(err <= prev * (1 + 1e-9) + 1e-14);
      prev = err;
    }
  }
  MESSAGE("instances with spectral norm below one: " << checked);
  CHECK(checked >= 10);
}

TEST_CASE("evaluate_control dispatch") {
  Rng rng(5);
  const auto in = make_instance(testing::random_points_in(rng, kUnitSquare, 6), kUnitSquare);
  ControlConfig cfg;
  cfg.kappa = 2.0;
  const auto c = evaluate_control(cfg, in.jac, in.ff, in.moments, in.p);
  const auto sys = assemble_system(in.jac, in.ff, in.moments, in.p, 2.0);
  CHECK((c.velocities - tvd_c(sys.A, sys.b).velocities).norm() < 1e-14);
  CHECK_FALSE(c.fell_back);
  cfg.law = ControlLaw::TvdD1;
  cfg.neumann_order = 2;
  const auto d = evaluate_control(cfg, in.jac, in.ff, in.moments, in.p);
  CHECK((d.velocities - tvd_d1(in.jac, sys.b, 2).velocities).norm() < 1e-15);
}
