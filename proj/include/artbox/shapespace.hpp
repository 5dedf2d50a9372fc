// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "artbox/matching.hpp"
#include "artbox/shapes.hpp"
#include "artbox/types.hpp"

namespace artbox {

// Result of mapping world points into a part's normalized frame: the retained
// points (those inside the unit box) and the per-input retention mask.
struct NormalizedPoints {
  std::vector<Vec3> points;
  std::vector<bool> mask;
};

// World -> normalized: p ↦ (R S)^-1 (p - c) with S = diag(size). A point is
// retained when max(|coords|) <= 0.5, boundary included (a small slack absorbs
// round-off so a part's own corners always survive).
// Throws SingularScale when any size component is below 1e-9.
inline NormalizedPoints normalize_points(std::span<const Vec3> points, const PoseSize& pose) {
  for (int d = 0; d < 3; ++d)
    if (!(pose.size[d] >= 1e-9)) throw SingularScale("normalize_points: size component < 1e-9");
  const Vec3 inv_scale = pose.size.cwiseInverse();
  NormalizedPoints out;
  out.mask.reserve(points.size());
  for (const Vec3& p : points) {
    const Vec3 local = inv_scale.asDiagonal() * (pose.rotation.transpose() * (p - pose.center));
    const bool keep = local.cwiseAbs().maxCoeff() <= 0.5 + 1e-12;
    out.mask.push_back(keep);
    if (keep) out.points.push_back(local);
  }
  return out;
}

// Normalized -> world: x ↦ R S x + c, the exact inverse of normalize_points.
inline Vec3 denormalize_point(const Vec3& x, const PoseSize& pose) {
  return pose.rotation * (pose.size.asDiagonal() * x) + pose.center;
}

// Occupancy level set separating inside from outside: logistic(-0.5).
inline double isosurface_threshold() { return 1.0 / (1.0 + std::exp(0.5)); }

inline constexpr int kOccupancySampleCount = 128;
inline constexpr double kSurfaceSigmaCoarse = 0.1;
inline constexpr double kSurfaceSigmaFine = 0.01;

// Draw occupancy supervision points in the normalized frame: the first half
// uniform over [-0.5, 0.5]^3, then a quarter near the surface (normal offset,
// sigma 0.1), then a quarter tighter to it (sigma 0.01). Truth labels come
// from `inside`; the predicted field is filled from `predicted` (clamped away
// from 0 and 1) or left uninformative at 0.5.
template <typename InsideFn, typename SurfaceFn>
std::vector<OccupancySample> sample_occupancy_points(InsideFn&& inside, SurfaceFn&& surface,
                                                     int count, Rng& rng,
                                                     const OccupancyFn& predicted = {}) {
  const int n_uniform = count / 2;
  const int n_coarse = count / 4;
  const int n_fine = count - n_uniform - n_coarse;
  std::vector<OccupancySample> samples;
  samples.reserve(count);
  auto emit = [&](const Vec3& p) {
    OccupancySample s;
    s.point = p;
    s.truth = inside(p) ? 1.0 : 0.0;
    s.predicted = predicted ? std::clamp(predicted(p), 1e-7, 1.0 - 1e-7) : 0.5;
    samples.push_back(s);
  };
  for (int i = 0; i < n_uniform; ++i)
    emit(Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)));
  for (int i = 0; i < n_coarse; ++i) {
    const SurfaceSample s = surface(rng);
    emit(s.point + s.normal * rng.normal(0.0, kSurfaceSigmaCoarse));
  }
  for (int i = 0; i < n_fine; ++i) {
    const SurfaceSample s = surface(rng);
    emit(s.point + s.normal * rng.normal(0.0, kSurfaceSigmaFine));
  }
  return samples;
}

inline std::vector<OccupancySample> sample_occupancy_points(
    const AnalyticShape& shape, int count, Rng& rng, const OccupancyFn& predicted = {}) {
  return sample_occupancy_points(
      [&shape](const Vec3& p) { return shape.inside(p); },
      [&shape](Rng& r) { return shape.sample_surface(r); }, count, rng, predicted);
}

}  // namespace artbox
