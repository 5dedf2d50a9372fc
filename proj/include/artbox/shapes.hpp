// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "artbox/common.hpp"

namespace artbox {

// Occupancy query in the part's normalized frame: point -> value in [0, 1].
using OccupancyFn = std::function<double(const Vec3&)>;

struct SurfaceSample {
  Vec3 point;   // on the shape surface, normalized frame
  Vec3 normal;  // outward unit normal at that point
};

// ---------------------------------------------------------------------------
// Analytic part shapes, expressed in the part's normalized frame where the
// part's bounding box is exactly [-0.5, 0.5]^3.
//   Box    : the full unit cube.
//   LShape : the unit cube minus the corner prism {x > 0.5-cut.x, z > 0.5-cut.z}
//            (full y extent), i.e. an L-profile extruded along y.
// ---------------------------------------------------------------------------

struct AnalyticShape {
  enum class Kind { Box, LShape };

  Kind kind = Kind::Box;
  double cut_x = 0.0;  // LShape only: fractional side lengths of the removed prism
  double cut_z = 0.0;

  static AnalyticShape box() { return AnalyticShape{}; }

  static AnalyticShape lshape(double cx, double cz) {
    AnalyticShape s;
    s.kind = Kind::LShape;
    s.cut_x = cx;
    s.cut_z = cz;
    return s;
  }

  bool inside(const Vec3& p) const {
    const double m = std::max({std::abs(p.x()), std::abs(p.y()), std::abs(p.z())});
    if (m > 0.5) return false;
    if (kind == Kind::Box) return true;
    return !(p.x() > 0.5 - cut_x && p.z() > 0.5 - cut_z);
  }

  // Fraction of the unit cube the shape occupies.
  double volume() const {
    return kind == Kind::Box ? 1.0 : 1.0 - cut_x * cut_z;
  }

  // Uniform point on the shape surface plus its outward normal.
  SurfaceSample sample_surface(Rng& rng) const {
    if (kind == Kind::Box) return sample_box_surface(rng);
    return sample_lshape_surface(rng);
  }

  // Hard occupancy: 1 inside, 0 outside.
  OccupancyFn occupancy() const {
    AnalyticShape copy = *this;
    return [copy](const Vec3& p) { return copy.inside(p) ? 1.0 : 0.0; };
  }

  // Smooth occupancy: logistic of the signed distance with temperature T,
  // 0.5 exactly on the surface, ->1 inside, ->0 outside.
  OccupancyFn soft_occupancy(double temperature = 0.01) const {
    AnalyticShape copy = *this;
    return [copy, temperature](const Vec3& p) {
      return 1.0 / (1.0 + std::exp(copy.signed_distance(p) / temperature));
    };
  }

  // Signed distance (negative inside). Exact for the box; for the L-shape the
  // union rule min(d1, d2) is exact outside and a usable bound inside.
  double signed_distance(const Vec3& p) const {
    if (kind == Kind::Box) return box_sdf(p, Vec3(0.5, 0.5, 0.5), Vec3::Zero());
    const double wx = 0.5 - cut_x, wz = 0.5 - cut_z;
    // Slab x <= wx (full y/z) and slab z <= wz (full x/y).
    const double d1 = box_sdf(p, Vec3(0.25 + 0.5 * wx, 0.5, 0.5), Vec3(0.5 * (wx - 0.5), 0.0, 0.0));
    const double d2 = box_sdf(p, Vec3(0.5, 0.5, 0.25 + 0.5 * wz), Vec3(0.0, 0.0, 0.5 * (wz - 0.5)));
    return std::min(d1, d2);
  }

 private:
  static double box_sdf(const Vec3& p, const Vec3& half, const Vec3& center) {
    const Vec3 q = (p - center).cwiseAbs() - half;
    const Vec3 qpos = q.cwiseMax(0.0);
    return qpos.norm() + std::min(q.maxCoeff(), 0.0);
  }

  static SurfaceSample sample_box_surface(Rng& rng) {
    // Six unit-area faces; pick one uniformly, then a point on it.
    const int face = rng.uniform_int(0, 5);
    const int axis = face / 2;
    const double sign = (face % 2 == 0) ? 1.0 : -1.0;
    Vec3 p(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
    p[axis] = 0.5 * sign;
    Vec3 n = Vec3::Zero();
    n[axis] = sign;
    return {p, n};
  }

  SurfaceSample sample_lshape_surface(Rng& rng) const {
    // The profile in the (x, z) plane is an L-polygon extruded along y.
    // Its boundary: six side rectangles (one per polygon edge, unit height)
    // plus the two L-shaped caps at y = +-0.5. Pick by exact area.
    const double wx = 0.5 - cut_x, wz = 0.5 - cut_z;
    struct Edge {
      Vec3 from, to, normal;
    };
    const Edge edges[6] = {
        {{-0.5, 0.0, -0.5}, {0.5, 0.0, -0.5}, {0.0, 0.0, -1.0}},
        {{0.5, 0.0, -0.5}, {0.5, 0.0, wz}, {1.0, 0.0, 0.0}},
        {{0.5, 0.0, wz}, {wx, 0.0, wz}, {0.0, 0.0, 1.0}},
        {{wx, 0.0, wz}, {wx, 0.0, 0.5}, {1.0, 0.0, 0.0}},
        {{wx, 0.0, 0.5}, {-0.5, 0.0, 0.5}, {0.0, 0.0, 1.0}},
        {{-0.5, 0.0, 0.5}, {-0.5, 0.0, -0.5}, {-1.0, 0.0, 0.0}},
    };
    const double cap_area = 1.0 - cut_x * cut_z;
    double total = 2.0 * cap_area;
    double side_len[6];
    for (int i = 0; i < 6; ++i) {
      side_len[i] = (edges[i].to - edges[i].from).norm();
      total += side_len[i];  // unit extrusion height
    }
    double pick = rng.uniform() * total;
    for (int i = 0; i < 6; ++i) {
      if (pick < side_len[i]) {
        const double t = pick / side_len[i];
        Vec3 p = edges[i].from + t * (edges[i].to - edges[i].from);
        p.y() = rng.uniform(-0.5, 0.5);
        return {p, edges[i].normal};
      }
      pick -= side_len[i];
    }
    // One of the caps: uniform over the L-profile by rejection from the square.
    const double sign = pick < cap_area ? 1.0 : -1.0;
    Vec3 p(0.0, 0.5 * sign, 0.0);
    do {
      p.x() = rng.uniform(-0.5, 0.5);
      p.z() = rng.uniform(-0.5, 0.5);
    } while (p.x() > wx && p.z() > wz);
    return {p, Vec3(0.0, sign, 0.0)};
  }
};

}  // namespace artbox
