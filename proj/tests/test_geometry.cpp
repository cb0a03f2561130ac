#include <doctest.h>

#include <numbers>

#include "covctl/geometry.hpp"
#include "support/oracles.hpp"

using namespace covctl;
using covctl::testing::Rng;

namespace {

const ConvexPolygon kUnitSquare = ConvexPolygon::rectangle(0, 0, 1, 1);

bool same_vertex_set(std::span<const Point2> a, std::span<const Point2> b, double tol) {
  if (a.size() != b.size()) return false;
  for (auto p : a) {
    bool found = false;
    for (auto q : b) found = found || distance(p, q) <= tol;
    if (!found) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("rotation S squares to minus identity") {
  const Vec2 v{0.3, -1.7};
  CHECK(rotate_ccw(rotate_ccw(v)) == -v);
  CHECK(rotate_cw(rotate_ccw(v)) == v);
}

TEST_CASE("ConvexPolygon validation") {
  CHECK_NOTHROW(ConvexPolygon({{0, 0}, {1, 0}, {0, 1}}));
  SUBCASE("clockwise rejected") {
    CHECK_THROWS_AS(ConvexPolygon({{0, 0}, {0, 1}, {1, 0}}), Error);
  }
  SUBCASE("reflex vertex rejected") {
    CHECK_THROWS_AS(ConvexPolygon({{0, 0}, {2, 0}, {1, 0.5}, {2, 2}, {0, 2}}), Error);
  }
  SUBCASE("duplicate vertex rejected") {
    CHECK_THROWS_AS(ConvexPolygon({{0, 0}, {1, 0}, {1, 0}, {0, 1}}), Error);
  }
  SUBCASE("non-finite rejected") {
    CHECK_THROWS_AS(ConvexPolygon({{0, 0}, {1, 0}, {NAN, 1}}), Error);
  }
  SUBCASE("two vertices rejected") { CHECK_THROWS_AS(ConvexPolygon({{0, 0}, {1, 0}}), Error); }
}

TEST_CASE("polygon_mass_centroid") {
  SUBCASE("unit square") {
    const auto mc = polygon_mass_centroid(kUnitSquare);
    CHECK(mc.mass == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(mc.centroid.x == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(mc.centroid.y == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("right triangle") {
    const auto mc = polygon_mass_centroid(ConvexPolygon({{0, 0}, {1, 0}, {0, 1}}));
    CHECK(mc.mass == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(mc.centroid.x == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(mc.centroid.y == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("random pentagon vs Monte Carlo, 3 sigma") {
    Rng rng(11);
    const auto poly = testing::random_convex_polygon(rng, 5, {0.4, -0.2}, 1.3);
    const std::vector<Point2> v(poly.vertices().begin(), poly.vertices().end());
    const auto mc = testing::monte_carlo_moments(rng, v, 1'000'000);
    const auto exact = polygon_mass_centroid(poly);
    CHECK(std::abs(exact.mass - mc.area) < 3 * mc.area_sigma);
    CHECK(std::abs(exact.centroid.x - mc.centroid.x) < 3 * mc.centroid_sigma.x);
    CHECK(std::abs(exact.centroid.y - mc.centroid.y) < 3 * mc.centroid_sigma.y);
  }
  SUBCASE("degenerate sliver") {
    const auto sliver = ConvexPolygon::trusted({{0, 0}, {1, 0}, {0.5, 1e-13}});
    CHECK_THROWS_AS(polygon_mass_centroid(sliver), Error);
  }
}

TEST_CASE("shoelace orientation and centroid containment") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto poly = testing::random_convex_polygon(rng, 3 + trial % 8, {rng.uniform(-3, 3), rng.uniform(-3, 3)},
                                                     rng.uniform(0.01, 4));
    std::vector<Point2> rev(poly.vertices().rbegin(), poly.vertices().rend());
    const double fwd = shoelace_signed_area(poly.vertices());
    CHECK(fwd > 0);
    CHECK(shoelace_signed_area(rev) == doctest::Approx(-fwd).epsilon(1e-12));
    const auto mc = polygon_mass_centroid(poly);
    CHECK(mc.mass > 0);
    CHECK(poly.outside_distance(mc.centroid) < 0);
  }
}

TEST_CASE("clip_halfplane") {
  SUBCASE("cut at x = 0.5") {
    const auto r = clip_halfplane(kUnitSquare, HalfPlane::from({1, 0}, 0.5));
    REQUIRE(r);
    const std::vector<Point2> want{{0, 0}, {0.5, 0}, {0.5, 1}, {0, 1}};
    CHECK(same_vertex_set(r->vertices(), want, 1e-15));
    CHECK(shoelace_signed_area(r->vertices()) == doctest::Approx(0.5));
  }
  SUBCASE("non-cutting plane leaves the square") {
    const auto r = clip_halfplane(kUnitSquare, HalfPlane::from({1, 0}, 2.0));
    REQUIRE(r);
    CHECK(same_vertex_set(r->vertices(), kUnitSquare.vertices(), 0.0));
  }
  SUBCASE("plane excluding everything") {
    CHECK_FALSE(clip_halfplane(kUnitSquare, HalfPlane::from({1, 0}, -1.0)));
  }
  SUBCASE("tangent plane through an edge keeps zero area out") {
    CHECK_FALSE(clip_halfplane(kUnitSquare, HalfPlane::from({1, 0}, 0.0)));
  }
}

TEST_CASE("clip idempotence on random cuts") {
  Rng rng(17);
  int checked = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto poly = testing::random_convex_polygon(rng, 3 + trial % 9, {0, 0}, 1.0);
    const double ang = rng.uniform(0, 2 * std::numbers::pi);
    const auto hp = HalfPlane::from({std::cos(ang), std::sin(ang)}, rng.uniform(-0.8, 0.8));
    const auto once = clip_halfplane(poly, hp);
    if (!once) continue;
    const auto twice = clip_halfplane(*once, hp);
    REQUIRE(twice);
    CHECK(same_vertex_set(once->vertices(), twice->vertices(), kEpsGeom));
    CHECK_FALSE(polygon_violation(once->vertices()));
    ++checked;
  }
  CHECK(checked > 300);
}

TEST_CASE("circumcenter") {
  SUBCASE("right triangle") {
    const Point2 c = circumcenter({0, 0}, {2, 0}, {0, 2});
    CHECK(c.x == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(c.y == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("equilateral about the origin") {
    const double s = std::sqrt(3.0) / 2.0;
    const Point2 c = circumcenter({1, 0}, {-0.5, s}, {-0.5, -s});
    CHECK(std::abs(c.x) < 1e-15);
    CHECK(std::abs(c.y) < 1e-15);
  }
  SUBCASE("collinear") {
    CHECK_THROWS_AS(circumcenter({0, 0}, {1, 0}, {2, 0}), Error);
    try {
      circumcenter({0, 0}, {1, 0}, {2, 0});
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::CollinearGenerators);
    }
  }
  SUBCASE("equidistance and cyclic invariance on random triangles") {
    Rng rng(23);
    for (int trial = 0; trial < 1000; ++trial) {
      const Point2 a = rng.point_in_box(-2, -2, 2, 2);
      const Point2 b = rng.point_in_box(-2, -2, 2, 2);
      const Point2 c = rng.point_in_box(-2, -2, 2, 2);
      if (std::abs(cross(b - a, c - a)) < 1e-2) continue;
      const Point2 v = circumcenter(a, b, c);
      const double ra = distance(v, a);
      CHECK(std::abs(distance(v, b) - ra) <= 1e-10 * ra);
      CHECK(std::abs(distance(v, c) - ra) <= 1e-10 * ra);
      const Point2 v2 = circumcenter(b, c, a);
      const Point2 v3 = circumcenter(c, a, b);
      CHECK(distance(v, v2) <= 1e-12 * (1 + ra));
      CHECK(distance(v, v3) <= 1e-12 * (1 + ra));
      CHECK(distance(v, testing::circumcenter_by_solve(a, b, c)) <= 1e-9 * (1 + ra));
    }
  }
}

TEST_CASE("bisector_edge_intersection") {
  SUBCASE("bottom edge of [0,2]^2") {
    const auto x = bisector_edge_intersection({0, 0}, {2, 0}, {0, 0}, {2, 0});
    REQUIRE(x);
    CHECK(x->tau == doctest::Approx(0.5));
    CHECK(x->point.x == doctest::Approx(1.0));
    CHECK(x->point.y == doctest::Approx(0.0));
  }
  SUBCASE("left wall is missed") {
    CHECK_FALSE(bisector_edge_intersection({0, 0}, {2, 0}, {0, 2}, {0, 0}));
  }
  SUBCASE("edge parallel to the bisector") {
    CHECK_FALSE(bisector_edge_intersection({0, 0}, {2, 0}, {1, 0}, {1, 2}));
  }
  SUBCASE("coincident generators") {
    CHECK_THROWS_AS(bisector_edge_intersection({1, 1}, {1, 1}, {0, 0}, {1, 0}), Error);
  }
  SUBCASE("matches sign-change bisection of nearest generator along the edge") {
    Rng rng(31);
    const std::vector<std::pair<Point2, Point2>> edges{
        {{0, 0}, {1, 0}}, {{1, 0}, {1, 1}}, {{1, 1}, {0, 1}}, {{0, 1}, {0, 0}}};
    int found = 0;
    for (int trial = 0; trial < 300; ++trial) {
      const Point2 pi = rng.point_in_box(0, 0, 1, 1);
      const Point2 pj = rng.point_in_box(0, 0, 1, 1);
      for (auto [a, b] : edges) {
        auto g = [&](double s) {
          const Point2 q = a + s * (b - a);
          return distance(q, pi) - distance(q, pj);
        };
        const auto x = bisector_edge_intersection(pi, pj, a, b);
        const double g0 = g(0), g1 = g(1);
        if ((g0 > 0) == (g1 > 0)) {
          // no sign change: the bisector misses the edge interior
          if (x) CHECK((x->tau < 1e-6 || x->tau > 1 - 1e-6));
          continue;
        }
        REQUIRE(x);
        double lo = 0, hi = 1;
        for (int it = 0; it < 200; ++it) {
          const double mid = 0.5 * (lo + hi);
          ((g(mid) > 0) == (g0 > 0) ? lo : hi) = mid;
        }
        const Point2 ref = a + 0.5 * (lo + hi) * (b - a);
        CHECK(distance(ref, x->point) < 1e-9);
        CHECK(std::abs(distance(x->point, pi) - distance(x->point, pj)) < 1e-12);
        ++found;
      }
    }
    CHECK(found > 100);
  }
}

TEST_CASE("outward_normal") {
  const Vec2 right = outward_normal({1, 0}, {1, 1});
  CHECK(right.x == doctest::Approx(1.0));
  CHECK(right.y == doctest::Approx(0.0));
  const Vec2 left = outward_normal({0, 1}, {0, 0});
  CHECK(left.x == doctest::Approx(-1.0));
  CHECK(left.y == doctest::Approx(0.0));
  CHECK_THROWS_AS(outward_normal({2, 2}, {2, 2}), Error);

  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Point2 a = rng.point_in_box(-1, -1, 1, 1);
    const Point2 b = rng.point_in_box(-1, -1, 1, 1);
    const Vec2 n = outward_normal(a, b);
    CHECK(std::abs(dot(n, b - a)) < 1e-14);
    CHECK(norm(n) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("projection onto a convex polygon") {
  CHECK(kUnitSquare.project({0.3, 0.4}) == Point2{0.3, 0.4});
  const Point2 p = kUnitSquare.project({1.5, 0.5});
  CHECK(p.x == doctest::Approx(1.0));
  CHECK(p.y == doctest::Approx(0.5));
  const Point2 corner = kUnitSquare.project({2, 2});
  CHECK(corner.x == doctest::Approx(1.0));
  CHECK(corner.y == doctest::Approx(1.0));
}
