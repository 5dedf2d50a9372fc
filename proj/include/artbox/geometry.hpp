// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "artbox/types.hpp"

namespace artbox {

// n . x <= offset
struct HalfSpace {
  Vec3 normal;
  double offset;

  double signed_distance(const Vec3& p) const { return normal.dot(p) - offset; }
};

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
  Vec3 hi = Vec3::Constant(std::numeric_limits<double>::lowest());

  void expand(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }

  bool overlaps(const Aabb& o) const {
    return (lo.array() <= o.hi.array()).all() && (o.lo.array() <= hi.array()).all();
  }

  Vec3 diagonal() const { return hi - lo; }
};

// ---------------------------------------------------------------------------
// Convex polytope as a closed surface: deduplicated vertices, faces as CCW
// (viewed from outside) vertex-index rings, and one supporting half-space per
// face. Every vertex satisfies every half-space within a small tolerance.
// ---------------------------------------------------------------------------

struct ConvexPolytope {
  std::vector<Vec3> vertices;
  std::vector<std::vector<int>> faces;
  std::vector<HalfSpace> facets;

  // Divergence-theorem volume over the closed outward-oriented surface.
  double volume() const {
    double v6 = 0.0;
    for (const auto& face : faces) {
      const Vec3& v0 = vertices[face[0]];
      for (std::size_t i = 1; i + 1 < face.size(); ++i)
        v6 += v0.dot(vertices[face[i]].cross(vertices[face[i + 1]]));
    }
    return std::max(v6 / 6.0, 0.0);
  }

  bool contains(const Vec3& p, double tol = 1e-9) const {
    for (const auto& h : facets)
      if (h.signed_distance(p) > tol) return false;
    return true;
  }

  Aabb aabb() const {
    Aabb box;
    for (const auto& v : vertices) box.expand(v);
    return box;
  }
};

// Corners of an oriented box in binary-count order: corner k has local
// coordinate +size[j]/2 along axis j when bit j of k is set, else -size[j]/2.
inline std::array<Vec3, 8> cuboid_corners(const PoseSize& pose) {
  std::array<Vec3, 8> out;
  for (int k = 0; k < 8; ++k) {
    Vec3 local;
    for (int j = 0; j < 3; ++j)
      local[j] = ((k >> j) & 1) ? 0.5 * pose.size[j] : -0.5 * pose.size[j];
    out[k] = pose.center + pose.rotation * local;
  }
  return out;
}

namespace detail {

// Face rings of the canonical box in cuboid_corners index order, oriented CCW
// from outside. Combinatorial, so computed once and shared by every box.
inline const std::array<std::array<int, 4>, 6>& box_face_rings() {
  static const std::array<std::array<int, 4>, 6> rings = [] {
    std::array<std::array<int, 4>, 6> out{};
    auto corner = [](int k) {
      return Vec3(((k >> 0) & 1) ? 1.0 : -1.0, ((k >> 1) & 1) ? 1.0 : -1.0,
                  ((k >> 2) & 1) ? 1.0 : -1.0);
    };
    int f = 0;
    for (int axis = 0; axis < 3; ++axis) {
      for (int sgn : {1, -1}) {
        std::array<int, 4> ring{};
        int m = 0;
        for (int k = 0; k < 8; ++k)
          if ((((k >> axis) & 1) == 1) == (sgn == 1)) ring[m++] = k;
        const int u = (axis + 1) % 3, w = (axis + 2) % 3;
        auto angle = [&](int k) {
          return std::atan2(((k >> w) & 1) ? 1.0 : -1.0, ((k >> u) & 1) ? 1.0 : -1.0);
        };
        std::sort(ring.begin(), ring.end(), [&](int a, int b) { return angle(a) < angle(b); });
        Vec3 newell = Vec3::Zero();
        for (int i = 0; i < 4; ++i) newell += corner(ring[i]).cross(corner(ring[(i + 1) % 4]));
        if (newell[axis] * sgn < 0.0) std::reverse(ring.begin(), ring.end());
        out[f++] = ring;
      }
    }
    return out;
  }();
  return rings;
}

}  // namespace detail

// Exact polytope of an oriented box (no hull computation).
inline ConvexPolytope polytope_from_box(const PoseSize& pose) {
  ConvexPolytope poly;
  const auto corners = cuboid_corners(pose);
  poly.vertices.assign(corners.begin(), corners.end());
  const auto& rings = detail::box_face_rings();
  int f = 0;
  for (int axis = 0; axis < 3; ++axis) {
    for (int sgn : {1, -1}) {
      const auto& ring = rings[f++];
      poly.faces.emplace_back(ring.begin(), ring.end());
      const Vec3 n = static_cast<double>(sgn) * pose.rotation.col(axis);
      poly.facets.push_back({n, n.dot(poly.vertices[ring[0]])});
    }
  }
  return poly;
}

namespace detail {

struct HullTri {
  int a, b, c;
  Vec3 n;  // outward unit normal
  double d;
  bool alive = true;
};

inline HullTri make_tri(std::span<const Vec3> pts, int a, int b, int c, const Vec3& inner) {
  HullTri t{a, b, c, Vec3::Zero(), 0.0, true};
  Vec3 n = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
  const double len = n.norm();
  if (len > 0.0) n /= len;
  double d = n.dot(pts[a]);
  if (n.dot(inner) > d) {  // orient outward, keeping the inner point below
    n = -n;
    d = -d;
    std::swap(t.b, t.c);
  }
  t.n = n;
  t.d = d;
  return t;
}

}  // namespace detail

// Convex hull of >= 4 points. Incremental insertion with an epsilon scaled to
// the data; coplanar triangles are merged into polygonal faces, so a cube
// yields exactly 6 faces and points on or inside the hull never appear as
// vertices. Throws DegenerateInput when the points are affinely deficient
// (all coincident, collinear, or coplanar).
inline ConvexPolytope convex_hull(std::span<const Vec3> points) {
  if (points.size() < 4)
    throw DegenerateInput("convex_hull: need at least 4 points");

  Aabb box;
  double max_abs = 0.0;
  for (const auto& p : points) {
    box.expand(p);
    max_abs = std::max(max_abs, p.cwiseAbs().maxCoeff());
  }
  const double span = box.diagonal().maxCoeff();
  const double eps_deg = 1e-9 * std::max(span, 1e-30);  // rank checks
  const double eps_vis = 1e-10 * std::max({max_abs, span, 1e-30});

  const int n = static_cast<int>(points.size());

  // Initial simplex: a farthest pair, then the point farthest from their line,
  // then the point farthest from their plane.
  int i0 = 0;
  for (int i = 1; i < n; ++i)
    if (points[i].x() < points[i0].x()) i0 = i;
  int i1 = -1;
  double best = eps_deg;
  for (int i = 0; i < n; ++i) {
    const double d = (points[i] - points[i0]).norm();
    if (d > best) {
      best = d;
      i1 = i;
    }
  }
  if (i1 < 0) throw DegenerateInput("convex_hull: all points coincident");
  const Vec3 dir = (points[i1] - points[i0]).normalized();
  int i2 = -1;
  best = eps_deg;
  for (int i = 0; i < n; ++i) {
    const Vec3 off = points[i] - points[i0];
    const double d = (off - off.dot(dir) * dir).norm();
    if (d > best) {
      best = d;
      i2 = i;
    }
  }
  if (i2 < 0) throw DegenerateInput("convex_hull: points are collinear");
  Vec3 pn = (points[i1] - points[i0]).cross(points[i2] - points[i0]).normalized();
  int i3 = -1;
  best = eps_deg;
  for (int i = 0; i < n; ++i) {
    const double d = std::abs(pn.dot(points[i] - points[i0]));
    if (d > best) {
      best = d;
      i3 = i;
    }
  }
  if (i3 < 0) throw DegenerateInput("convex_hull: points are coplanar");

  const Vec3 inner = 0.25 * (points[i0] + points[i1] + points[i2] + points[i3]);
  std::vector<detail::HullTri> tris;
  tris.push_back(detail::make_tri(points, i0, i1, i2, inner));
  tris.push_back(detail::make_tri(points, i0, i1, i3, inner));
  tris.push_back(detail::make_tri(points, i0, i2, i3, inner));
  tris.push_back(detail::make_tri(points, i1, i2, i3, inner));

  for (int pi = 0; pi < n; ++pi) {
    if (pi == i0 || pi == i1 || pi == i2 || pi == i3) continue;
    const Vec3& p = points[pi];

    std::vector<int> visible;
    for (std::size_t t = 0; t < tris.size(); ++t)
      if (tris[t].alive && tris[t].n.dot(p) - tris[t].d > eps_vis) visible.push_back(static_cast<int>(t));
    if (visible.empty()) continue;  // inside or on the current hull

    // Horizon: directed edges of visible triangles whose twin belongs to a
    // non-visible triangle.
    std::map<std::pair<int, int>, int> edge_count;  // directed edge -> #occurrences in visible set
    auto add_edges = [&](const detail::HullTri& t) {
      edge_count[{t.a, t.b}]++;
      edge_count[{t.b, t.c}]++;
      edge_count[{t.c, t.a}]++;
    };
    for (int t : visible) add_edges(tris[t]);
    std::vector<std::pair<int, int>> horizon;
    for (const auto& [edge, cnt] : edge_count) {
      (void)cnt;
      if (edge_count.find({edge.second, edge.first}) == edge_count.end()) horizon.push_back(edge);
    }
    for (int t : visible) tris[t].alive = false;
    for (const auto& [u, v] : horizon) tris.push_back(detail::make_tri(points, u, v, pi, inner));
  }

  // Merge coplanar triangles into polygonal faces.
  std::vector<std::vector<int>> groups;
  std::vector<Vec3> group_n;
  std::vector<double> group_d;
  const double merge_dot = 1.0 - 1e-9;
  const double merge_off = 1e-9 * std::max(1.0, max_abs);
  for (std::size_t t = 0; t < tris.size(); ++t) {
    if (!tris[t].alive) continue;
    bool placed = false;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (tris[t].n.dot(group_n[g]) >= merge_dot && std::abs(tris[t].d - group_d[g]) <= merge_off) {
        groups[g].push_back(static_cast<int>(t));
        placed = true;
        break;
      }
    }
    if (!placed) {
      groups.push_back({static_cast<int>(t)});
      group_n.push_back(tris[t].n);
      group_d.push_back(tris[t].d);
    }
  }

  ConvexPolytope poly;
  std::map<int, int> remap;  // input index -> output vertex index
  auto out_index = [&](int i) {
    auto it = remap.find(i);
    if (it != remap.end()) return it->second;
    const int id = static_cast<int>(poly.vertices.size());
    poly.vertices.push_back(points[i]);
    remap.emplace(i, id);
    return id;
  };

  for (std::size_t g = 0; g < groups.size(); ++g) {
    // Boundary of the merged region: directed edges without a reverse twin
    // inside the group. Interior vertices (from transiently-extreme points)
    // drop out here because all their edges cancel.
    std::map<std::pair<int, int>, int> dir_edges;
    for (int t : groups[g]) {
      dir_edges[{tris[t].a, tris[t].b}]++;
      dir_edges[{tris[t].b, tris[t].c}]++;
      dir_edges[{tris[t].c, tris[t].a}]++;
    }
    std::map<int, int> next;
    for (const auto& [edge, cnt] : dir_edges) {
      (void)cnt;
      if (dir_edges.find({edge.second, edge.first}) == dir_edges.end())
        next[edge.first] = edge.second;
    }
    if (next.size() < 3) continue;  // fully cancelled sliver
    std::vector<int> ring;
    const int start = next.begin()->first;
    int cur = start;
    do {
      ring.push_back(cur);
      auto it = next.find(cur);
      if (it == next.end()) break;  // cracked ring; skip the face
      cur = it->second;
    } while (cur != start && ring.size() <= next.size());
    if (ring.size() < 3 || cur != start) continue;

    std::vector<int> face;
    face.reserve(ring.size());
    for (int i : ring) face.push_back(out_index(i));

    // Supporting plane from the merged ring (Newell), offset at the farthest
    // ring vertex so all hull vertices satisfy it from below.
    Vec3 normal = Vec3::Zero();
    for (std::size_t i = 0; i < ring.size(); ++i)
      normal += points[ring[i]].cross(points[ring[(i + 1) % ring.size()]]);
    const double len = normal.norm();
    if (len < 1e-300) continue;
    normal /= len;
    double d = std::numeric_limits<double>::lowest();
    for (int i : ring) d = std::max(d, normal.dot(points[i]));
    poly.faces.push_back(std::move(face));
    poly.facets.push_back({normal, d});
  }

  if (poly.faces.size() < 4)
    throw DegenerateInput("convex_hull: degenerate hull surface");
  return poly;
}

namespace detail {

// Sutherland-Hodgman clip of a polygon soup against one half-space. Crossing
// points are collected so the planar cap can be rebuilt as a new face.
inline void clip_soup(std::vector<std::vector<Vec3>>& polys, const HalfSpace& hs, double eps) {
  std::vector<std::vector<Vec3>> out;
  out.reserve(polys.size() + 1);
  std::vector<Vec3> cap;
  for (const auto& poly : polys) {
    std::vector<Vec3> res;
    res.reserve(poly.size() + 2);
    const std::size_t m = poly.size();
    for (std::size_t i = 0; i < m; ++i) {
      const Vec3& p = poly[i];
      const Vec3& q = poly[(i + 1) % m];
      const double sp = hs.signed_distance(p);
      const double sq = hs.signed_distance(q);
      const bool in_p = sp <= eps, in_q = sq <= eps;
      if (in_p) res.push_back(p);
      if (in_p != in_q) {
        const double t = std::clamp(sp / (sp - sq), 0.0, 1.0);
        const Vec3 x = p + t * (q - p);
        res.push_back(x);
        cap.push_back(x);
      }
    }
    if (res.size() >= 3) out.push_back(std::move(res));
  }

  if (cap.size() >= 3) {
    // Deduplicate crossing points, then order them around the cap centroid so
    // the new face is CCW viewed from outside (the half-space normal side).
    std::vector<Vec3> uniq;
    for (const auto& p : cap) {
      bool dup = false;
      for (const auto& q : uniq)
        if ((p - q).cwiseAbs().maxCoeff() <= 4.0 * eps) {
          dup = true;
          break;
        }
      if (!dup) uniq.push_back(p);
    }
    if (uniq.size() >= 3) {
      Vec3 ctr = Vec3::Zero();
      for (const auto& p : uniq) ctr += p;
      ctr /= static_cast<double>(uniq.size());
      const Vec3 n = hs.normal;
      Vec3 u = n.cross(std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY()).normalized();
      const Vec3 v = n.cross(u);
      std::sort(uniq.begin(), uniq.end(), [&](const Vec3& a, const Vec3& b) {
        const Vec3 da = a - ctr, db = b - ctr;
        return std::atan2(da.dot(v), da.dot(u)) < std::atan2(db.dot(v), db.dot(u));
      });
      out.push_back(std::move(uniq));
    }
  }
  polys = std::move(out);
}

inline double soup_volume(const std::vector<std::vector<Vec3>>& polys) {
  double v6 = 0.0;
  for (const auto& poly : polys) {
    for (std::size_t i = 1; i + 1 < poly.size(); ++i)
      v6 += poly[0].dot(poly[i].cross(poly[i + 1]));
  }
  return std::max(v6 / 6.0, 0.0);
}

}  // namespace detail

// Exact intersection volume of two convex polytopes: A's boundary is clipped
// against each supporting half-space of B.
inline double intersection_volume(const ConvexPolytope& a, const ConvexPolytope& b) {
  if (!a.aabb().overlaps(b.aabb())) return 0.0;

  double max_abs = 0.0;
  for (const auto& v : a.vertices) max_abs = std::max(max_abs, v.cwiseAbs().maxCoeff());
  for (const auto& v : b.vertices) max_abs = std::max(max_abs, v.cwiseAbs().maxCoeff());
  const double eps = 1e-10 * std::max(1.0, max_abs);

  std::vector<std::vector<Vec3>> polys;
  polys.reserve(a.faces.size());
  for (const auto& face : a.faces) {
    std::vector<Vec3> poly;
    poly.reserve(face.size());
    for (int i : face) poly.push_back(a.vertices[i]);
    polys.push_back(std::move(poly));
  }
  for (const auto& hs : b.facets) {
    detail::clip_soup(polys, hs, eps);
    if (polys.empty()) return 0.0;
  }
  return detail::soup_volume(polys);
}

// Volumetric intersection-over-union of two convex polytopes with volume > 0.
inline double iou(const ConvexPolytope& a, const ConvexPolytope& b) {
  const double va = a.volume(), vb = b.volume();
  const double vi = std::min(intersection_volume(a, b), std::min(va, vb));
  const double vu = va + vb - vi;
  if (vu <= 0.0) return 0.0;
  return std::clamp(vi / vu, 0.0, 1.0);
}

// Nearest rotation matrix in the Frobenius sense: SVD with a determinant sign
// fix. Throws SingularInput when two or more singular values are near zero
// (the nearest rotation is then not unique).
inline Mat3 project_to_so3(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();  // descending
  if (sv[1] < 1e-9)
    throw SingularInput("project_to_so3: rotation is not unique for rank-deficient input");
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0)
    r = svd.matrixU() * Eigen::DiagonalMatrix<double, 3>(1.0, 1.0, -1.0) * svd.matrixV().transpose();
  return r;
}

}  // namespace artbox
