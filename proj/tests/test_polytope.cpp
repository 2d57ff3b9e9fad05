#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "wardrop/feasible_set.hpp"
#include "wardrop/polytope.hpp"

using namespace wardrop;

namespace {

Polytope simplex_2d(double total) {
  Mat A(4, 2);
  A << 1, 1, -1, -1, -1, 0, 0, -1;
  Vec b(4);
  b << total, -total, 0, 0;
  return Polytope(A, b);
}

Polytope box_2d(double side) {
  Mat A(4, 2);
  A << 1, 0, 0, 1, -1, 0, 0, -1;
  Vec b(4);
  b << side, side, 0, 0;
  return Polytope(A, b);
}

bool has_vertex(const std::vector<Vec>& vs, std::initializer_list<double> coords) {
  Vec v(static_cast<Eigen::Index>(coords.size()));
  Eigen::Index t = 0;
  for (double c : coords) v[t++] = c;
  for (const Vec& w : vs)
    if ((w - v).lpNorm<Eigen::Infinity>() <= 1e-9) return true;
  return false;
}

}  // namespace

TEST_CASE("vertex enumeration on the canonical small sets") {
  const Polytope simplex = simplex_2d(1.0);
  const auto& simplex_verts = simplex.vertices();
  REQUIRE(simplex_verts.size() == 2);
  CHECK(has_vertex(simplex_verts, {1.0, 0.0}));
  CHECK(has_vertex(simplex_verts, {0.0, 1.0}));

  const Polytope box = box_2d(1.0);
  const auto& box_verts = box.vertices();
  REQUIRE(box_verts.size() == 4);
  CHECK(has_vertex(box_verts, {0.0, 0.0}));
  CHECK(has_vertex(box_verts, {1.0, 0.0}));
  CHECK(has_vertex(box_verts, {0.0, 1.0}));
  CHECK(has_vertex(box_verts, {1.0, 1.0}));

  // simplex with a binding cap on the first coordinate
  Mat A(5, 2);
  A << 1, 1, -1, -1, -1, 0, 0, -1, 1, 0;
  Vec b(5);
  b << 1, -1, 0, 0, 0.6;
  const Polytope capped_poly(A, b);
  const auto& capped = capped_poly.vertices();
  REQUIRE(capped.size() == 2);
  CHECK(has_vertex(capped, {0.6, 0.4}));
  CHECK(has_vertex(capped, {0.0, 1.0}));
}

TEST_CASE("degenerate polytope reduces to a single point") {
  Mat A(4, 2);
  A << 1, 0, 0, 1, -1, 0, 0, -1;
  Vec b(4);
  b << 0.3, 0.4, -0.3, -0.4;
  const Polytope point(A, b);
  const auto& vs = point.vertices();
  REQUIRE(vs.size() == 1);
  CHECK(has_vertex(vs, {0.3, 0.4}));
}

TEST_CASE("unbounded and empty polytopes are rejected") {
  Mat A(2, 2);
  A << -1, 0, 0, -1;  // the nonnegative quadrant
  CHECK_THROWS_AS(Polytope(A, Vec::Zero(2)).vertices(), DomainError);
  CHECK_FALSE(Polytope(A, Vec::Zero(2)).is_bounded());

  Mat Ae(2, 1);
  Ae << 1, -1;
  Vec be(2);
  be << -1.0, -1.0;  // x <= -1 and x >= 1
  CHECK_THROWS_AS(Polytope(Ae, be).vertices(), DomainError);
}

TEST_CASE("polytope projection handles the canonical cases") {
  const Polytope simplex = simplex_2d(1.0);
  Vec inside(2);
  inside << 0.4, 0.6;
  CHECK((simplex.project(inside) - inside).norm() <= 1e-14);

  Vec far(2);
  far << 2.0, 2.0;
  const Vec z = simplex.project(far);
  CHECK(z[0] == Catch::Approx(0.5).margin(1e-9));
  CHECK(z[1] == Catch::Approx(0.5).margin(1e-9));

  const Polytope box = box_2d(1.0);
  Vec p(2);
  p << -1.0, 0.5;
  const Vec q = box.project(p);
  CHECK(q[0] == Catch::Approx(0.0).margin(1e-12));
  CHECK(q[1] == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("polytope projection is optimal against dense interior sampling") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  std::uniform_real_distribution<double> mix(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    // random bounded polytope: simplex slice plus a half-space that keeps the
    // slice centroid feasible
    Mat A(5, 2);
    A << 1, 1, -1, -1, -1, 0, 0, -1, unif(rng), unif(rng);
    Vec b(5);
    const double total = 0.5 + mix(rng);
    Vec centroid(2);
    centroid << 0.5 * total, 0.5 * total;
    b << total, -total, 0, 0, A.row(4).dot(centroid) + 0.1 + mix(rng);
    const Polytope poly(A, b);
    const auto& vs = poly.vertices();

    Vec p(2);
    p << unif(rng), unif(rng);
    const Vec z = poly.project(p);
    REQUIRE(poly.contains(z, 1e-9));
    const double dz = (z - p).norm();
    for (int s = 0; s < 500; ++s) {
      // random convex combination of vertices stays inside
      Vec y = Vec::Zero(2);
      double wsum = 0.0;
      for (const Vec& v : vs) {
        const double w = mix(rng);
        y += w * v;
        wsum += w;
      }
      y /= wsum;
      CHECK(dz <= (y - p).norm() + 1e-9);
    }
  }
}

TEST_CASE("feasible-set vertices and radius agree with the polytope form") {
  Vec lower(2), upper(2);
  lower << 0.0, 0.0;
  upper << 0.6, 1.0;
  const FeasibleSet box = FeasibleSet::box_simplex(1.0, lower, upper);
  const auto& vs = box.vertices();
  REQUIRE(vs.size() == 2);
  CHECK(has_vertex(vs, {0.6, 0.4}));
  CHECK(has_vertex(vs, {0.0, 1.0}));
  CHECK(box.radius() == Catch::Approx(1.0));

  const FeasibleSet scaled = box.scaled(0.5);
  CHECK(scaled.total() == Catch::Approx(0.5));
  CHECK(scaled.radius() == Catch::Approx(0.5));
}
