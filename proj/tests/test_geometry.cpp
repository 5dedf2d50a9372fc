// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <vector>

#include "artbox/geometry.hpp"

using namespace artbox;

namespace {

PoseSize random_pose(Rng& rng, double center_span = 1.0) {
  PoseSize p;
  p.rotation = rng.random_rotation();
  p.center = Vec3(rng.uniform(-center_span, center_span), rng.uniform(-center_span, center_span),
                  rng.uniform(-center_span, center_span));
  p.size = Vec3(rng.uniform(0.1, 1.5), rng.uniform(0.1, 1.5), rng.uniform(0.1, 1.5));
  return p;
}

PoseSize unit_cube_at(const Vec3& c) {
  PoseSize p;
  p.center = c;
  return p;  // identity rotation, unit size
}

struct McEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
};

// Independent Monte-Carlo estimate of the intersection volume: sample the
// overlap of the two axis-aligned bounding boxes and count joint membership.
McEstimate mc_intersection(const ConvexPolytope& a, const ConvexPolytope& b, Rng& rng,
                           int samples) {
  const Aabb ba = a.aabb(), bb = b.aabb();
  const Vec3 lo = ba.lo.cwiseMax(bb.lo), hi = ba.hi.cwiseMin(bb.hi);
  if ((lo.array() >= hi.array()).any()) return {};
  const Vec3 ext = hi - lo;
  int hits = 0;
  for (int i = 0; i < samples; ++i) {
    const Vec3 p = lo + Vec3(rng.uniform() * ext.x(), rng.uniform() * ext.y(),
                             rng.uniform() * ext.z());
    if (a.contains(p) && b.contains(p)) ++hits;
  }
  const double f = static_cast<double>(hits) / samples;
  return {ext.prod() * f, ext.prod() * std::sqrt(std::max(f * (1.0 - f), 1e-12) / samples)};
}

}  // namespace

TEST_CASE("cuboid corners follow the binary-count ordering") {
  PoseSize p;  // identity pose, unit cube at the origin
  const auto c = cuboid_corners(p);
  CHECK((c[0] - Vec3(-0.5, -0.5, -0.5)).norm() < 1e-15);
  CHECK((c[1] - Vec3(0.5, -0.5, -0.5)).norm() < 1e-15);
  CHECK((c[2] - Vec3(-0.5, 0.5, -0.5)).norm() < 1e-15);
  CHECK((c[4] - Vec3(-0.5, -0.5, 0.5)).norm() < 1e-15);
  CHECK((c[7] - Vec3(0.5, 0.5, 0.5)).norm() < 1e-15);
}

TEST_CASE("cuboid corners match an independent affine evaluation") {
  Rng rng(5);
  for (int it = 0; it < 50; ++it) {
    const PoseSize p = random_pose(rng);
    Eigen::Affine3d t = Eigen::Translation3d(p.center) * Eigen::AngleAxisd(p.rotation) *
                        Eigen::Scaling(0.5 * p.size);
    const auto corners = cuboid_corners(p);
    for (int k = 0; k < 8; ++k) {
      const Vec3 sign(((k >> 0) & 1) ? 1.0 : -1.0, ((k >> 1) & 1) ? 1.0 : -1.0,
                      ((k >> 2) & 1) ? 1.0 : -1.0);
      CHECK((corners[k] - t * sign).norm() < 1e-12);
    }
  }
}

TEST_CASE("box polytope has six faces, eight vertices, exact volume") {
  Rng rng(17);
  for (int it = 0; it < 50; ++it) {
    const PoseSize p = random_pose(rng);
    const auto poly = polytope_from_box(p);
    REQUIRE(poly.faces.size() == 6);
    REQUIRE(poly.vertices.size() == 8);
    CHECK(poly.volume() == Catch::Approx(p.size.prod()).epsilon(1e-12));
    CHECK(poly.contains(p.center, 1e-12));
    // Every vertex satisfies every supporting half-space.
    for (const auto& v : poly.vertices)
      for (const auto& h : poly.facets) CHECK(h.signed_distance(v) <= 1e-7);
    // A point just beyond a face is rejected.
    const Vec3 outside = p.center + p.rotation.col(0) * (0.5 * p.size.x() + 1e-3);
    CHECK_FALSE(poly.contains(outside, 1e-9));
  }
}

TEST_CASE("hull of a cube keeps eight vertices and six faces") {
  const auto corners = cuboid_corners(unit_cube_at(Vec3::Zero()));
  std::vector<Vec3> pts(corners.begin(), corners.end());
  const auto hull = convex_hull(pts);
  CHECK(hull.vertices.size() == 8);
  CHECK(hull.faces.size() == 6);
  CHECK(hull.volume() == Catch::Approx(1.0).epsilon(1e-12));

  SECTION("an interior point never becomes a vertex") {
    pts.push_back(Vec3(0.1, -0.2, 0.03));
    const auto hull2 = convex_hull(pts);
    CHECK(hull2.vertices.size() == 8);
    CHECK(hull2.faces.size() == 6);
    CHECK(hull2.volume() == Catch::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("hull rejects degenerate point sets") {
  std::vector<Vec3> two = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
  CHECK_THROWS_AS(convex_hull(two), DegenerateInput);

  std::vector<Vec3> same(6, Vec3(0.3, 0.4, 0.5));
  CHECK_THROWS_AS(convex_hull(same), DegenerateInput);

  std::vector<Vec3> line;
  for (int i = 0; i < 8; ++i) line.push_back(Vec3(0.1 * i, 0.2 * i, -0.1 * i));
  CHECK_THROWS_AS(convex_hull(line), DegenerateInput);

  std::vector<Vec3> plane;
  Rng rng(2);
  for (int i = 0; i < 12; ++i) plane.push_back(Vec3(rng.uniform(), rng.uniform(), 0.25));
  CHECK_THROWS_AS(convex_hull(plane), DegenerateInput);
}

TEST_CASE("hull of random clouds contains every input and reuses input coordinates") {
  Rng rng(23);
  for (int it = 0; it < 40; ++it) {
    const int n = rng.uniform_int(4, 60);
    std::vector<Vec3> pts;
    double scale = rng.uniform(0.2, 5.0);
    for (int i = 0; i < n; ++i) pts.push_back(rng.normal3(scale));
    ConvexPolytope hull;
    try {
      hull = convex_hull(pts);
    } catch (const DegenerateInput&) {
      continue;  // tiny clouds can be affinely deficient
    }
    const double tol = 1e-7 * std::max(1.0, scale * 5.0);
    for (const auto& p : pts) CHECK(hull.contains(p, tol));
    for (const auto& v : hull.vertices) {
      const bool is_input = std::any_of(pts.begin(), pts.end(),
                                        [&](const Vec3& p) { return (p - v).norm() == 0.0; });
      CHECK(is_input);
    }
    for (const auto& v : hull.vertices)
      for (const auto& h : hull.facets) CHECK(h.signed_distance(v) <= tol);
    CHECK(hull.volume() > 0.0);

    // Hulling the hull's own vertices changes nothing measurable.
    const auto hull2 = convex_hull(hull.vertices);
    CHECK(hull2.volume() == Catch::Approx(hull.volume()).epsilon(1e-9));
  }
}

TEST_CASE("intersection volume on axis-aligned cubes is exact") {
  const auto a = polytope_from_box(unit_cube_at(Vec3::Zero()));
  CHECK(intersection_volume(a, a) == Catch::Approx(1.0).epsilon(1e-12));

  const auto half = polytope_from_box(unit_cube_at(Vec3(0.5, 0.0, 0.0)));
  CHECK(intersection_volume(a, half) == Catch::Approx(0.5).epsilon(1e-12));

  const auto corner = polytope_from_box(unit_cube_at(Vec3(0.5, 0.5, 0.5)));
  CHECK(intersection_volume(a, corner) == Catch::Approx(0.125).epsilon(1e-12));

  const auto apart = polytope_from_box(unit_cube_at(Vec3(3.0, 0.0, 0.0)));
  CHECK(intersection_volume(a, apart) == 0.0);

  PoseSize small;
  small.size = Vec3(0.2, 0.3, 0.4);
  small.center = Vec3(0.1, 0.05, -0.1);
  const auto inner = polytope_from_box(small);
  CHECK(intersection_volume(a, inner) == Catch::Approx(small.size.prod()).epsilon(1e-12));
  CHECK(intersection_volume(inner, a) == Catch::Approx(small.size.prod()).epsilon(1e-12));
}

TEST_CASE("intersection volume matches Monte-Carlo on random hull pairs") {
  Rng rng(31);
  for (int it = 0; it < 25; ++it) {
    std::vector<Vec3> pa, pb;
    for (int i = 0; i < 14; ++i) pa.push_back(rng.normal3(0.8));
    const Vec3 offset = rng.normal3(0.4);
    for (int i = 0; i < 14; ++i) pb.push_back(offset + rng.normal3(0.8));
    const auto a = convex_hull(pa);
    const auto b = convex_hull(pb);
    const double exact = intersection_volume(a, b);
    const auto mc = mc_intersection(a, b, rng, 300000);
    CHECK(exact == Catch::Approx(mc.value).margin(4.0 * mc.stderr_ + 1e-3));
    // Symmetry and containment bounds.
    CHECK(intersection_volume(b, a) == Catch::Approx(exact).margin(1e-9));
    CHECK(exact <= std::min(a.volume(), b.volume()) + 1e-9);
  }
}

TEST_CASE("iou basics and rigid invariance") {
  const auto a = polytope_from_box(unit_cube_at(Vec3::Zero()));
  CHECK(iou(a, a) == Catch::Approx(1.0).epsilon(1e-12));

  const auto shifted = polytope_from_box(unit_cube_at(Vec3(0.5, 0.0, 0.0)));
  CHECK(iou(a, shifted) == Catch::Approx(1.0 / 3.0).epsilon(1e-12));

  const auto apart = polytope_from_box(unit_cube_at(Vec3(10.0, 0.0, 0.0)));
  CHECK(iou(a, apart) == 0.0);

  Rng rng(41);
  for (int it = 0; it < 20; ++it) {
    PoseSize pa = random_pose(rng, 0.3);
    PoseSize pb = random_pose(rng, 0.3);
    const double base = iou(polytope_from_box(pa), polytope_from_box(pb));

    const Mat3 r = rng.random_rotation();
    const Vec3 t = rng.normal3(2.0);
    auto moved = [&](PoseSize p) {
      p.rotation = r * p.rotation;
      p.center = r * p.center + t;
      return p;
    };
    const double after = iou(polytope_from_box(moved(pa)), polytope_from_box(moved(pb)));
    CHECK(after == Catch::Approx(base).margin(1e-9));
  }
}

TEST_CASE("projection to SO(3) fixes rotations and strips positive scaling") {
  Rng rng(51);
  for (int it = 0; it < 30; ++it) {
    const Mat3 r = rng.random_rotation();
    CHECK((project_to_so3(r) - r).norm() < 1e-12);
    // A rotation times a positive-definite diagonal projects back to it.
    const Mat3 m = r * Eigen::DiagonalMatrix<double, 3>(2.0, 1.0, 0.5);
    CHECK((project_to_so3(m) - r).norm() < 1e-9);
  }
  CHECK((project_to_so3(2.0 * Mat3::Identity()) - Mat3::Identity()).norm() < 1e-12);
}

TEST_CASE("projection to SO(3) is Frobenius-nearest among sampled rotations") {
  Rng rng(61);
  for (int it = 0; it < 10; ++it) {
    Mat3 m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = rng.normal();
    Mat3 r;
    try {
      r = project_to_so3(m);
    } catch (const SingularInput&) {
      continue;
    }
    const double ours = (m - r).norm();
    for (int s = 0; s < 2000; ++s) {
      const Mat3 cand = rng.random_rotation();
      CHECK(ours <= (m - cand).norm() + 1e-9);
    }
    CHECK((r.transpose() * r - Mat3::Identity()).norm() < 1e-10);
    CHECK(r.determinant() == Catch::Approx(1.0).margin(1e-10));
  }
}

TEST_CASE("projection to SO(3) rejects rank-deficient input") {
  const Vec3 u(1.0, 2.0, 3.0);
  const Mat3 rank1 = u * u.transpose();
  CHECK_THROWS_AS(project_to_so3(rank1), SingularInput);
  CHECK_THROWS_AS(project_to_so3(Mat3::Zero()), SingularInput);
  // Rank 2 keeps a unique nearest rotation and must not throw.
  const Mat3 rank2 = Eigen::DiagonalMatrix<double, 3>(1.0, 1.0, 0.0);
  CHECK((project_to_so3(rank2) - Mat3::Identity()).norm() < 1e-12);
}
