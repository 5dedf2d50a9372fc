// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "artbox/geometry.hpp"
#include "artbox/shapespace.hpp"
#include "artbox/types.hpp"

namespace artbox {

// ---------------------------------------------------------------------------
// Shape metrics over sampled point sets.
// ---------------------------------------------------------------------------

namespace detail {

inline double nearest_distance(const Vec3& p, std::span<const Vec3> set) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& q : set) best = std::min(best, (p - q).norm());
  return best;
}

}  // namespace detail

// Harmonic mean of completeness both ways, scaled to [0, 100]: precision is
// the fraction of predicted points within dist_tol of the truth set, recall
// the converse. Throws EmptyInput when either set is empty.
inline double fscore(std::span<const Vec3> pred_points, std::span<const Vec3> gt_points,
                     double dist_tol) {
  if (pred_points.empty() || gt_points.empty())
    throw EmptyInput("fscore: empty point set");
  int pred_hit = 0, gt_hit = 0;
  for (const Vec3& p : pred_points)
    if (detail::nearest_distance(p, gt_points) <= dist_tol) ++pred_hit;
  for (const Vec3& g : gt_points)
    if (detail::nearest_distance(g, pred_points) <= dist_tol) ++gt_hit;
  const double precision = static_cast<double>(pred_hit) / pred_points.size();
  const double recall = static_cast<double>(gt_hit) / gt_points.size();
  if (precision + recall <= 0.0) return 0.0;
  return 100.0 * 2.0 * precision * recall / (precision + recall);
}

// Symmetric mean nearest-neighbor L2 distance (average of both directions).
// Throws EmptyInput when either set is empty.
inline double chamfer(std::span<const Vec3> pred_points, std::span<const Vec3> gt_points) {
  if (pred_points.empty() || gt_points.empty())
    throw EmptyInput("chamfer: empty point set");
  double forward = 0.0, backward = 0.0;
  for (const Vec3& p : pred_points) forward += detail::nearest_distance(p, gt_points);
  for (const Vec3& g : gt_points) backward += detail::nearest_distance(g, pred_points);
  return 0.5 * (forward / pred_points.size() + backward / gt_points.size());
}

// Occupancy-grid IoU over `bounds`: a cell counts as predicted-inside when the
// predicted occupancy at its center exceeds the isosurface threshold, and as
// truth-inside above 0.5. An empty union yields 0.
inline double volumetric_iou(const OccupancyFn& pred_occ, const OccupancyFn& gt_occ,
                             const Aabb& bounds, int grid = 64) {
  const Vec3 span = bounds.hi - bounds.lo;
  const double pred_level = isosurface_threshold();
  long long inter = 0, uni = 0;
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j)
      for (int k = 0; k < grid; ++k) {
        const Vec3 p = bounds.lo + Vec3((i + 0.5) / grid * span.x(),
                                        (j + 0.5) / grid * span.y(),
                                        (k + 0.5) / grid * span.z());
        const bool a = pred_occ(p) > pred_level;
        const bool b = gt_occ(p) > 0.5;
        inter += a && b;
        uni += a || b;
      }
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

// Mean L2 distance over the 8 corresponding cuboid corners, normalized by the
// ground-truth diameter (the L2 norm of its size).
inline double corner_distance(const PoseSize& pred, const PoseSize& gt) {
  const auto cp = cuboid_corners(pred);
  const auto cg = cuboid_corners(gt);
  double sum = 0.0;
  for (int k = 0; k < 8; ++k) sum += (cp[k] - cg[k]).norm();
  return sum / 8.0 / gt.diameter();
}

// Sample `n` world-frame surface points of a shape posed by `pose`.
inline std::vector<Vec3> surface_points(const AnalyticShape& shape, const PoseSize& pose,
                                        int n, Rng& rng) {
  std::vector<Vec3> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i)
    pts.push_back(denormalize_point(shape.sample_surface(rng).point, pose));
  return pts;
}

// ---------------------------------------------------------------------------
// Detection average precision.
// ---------------------------------------------------------------------------

// Scores one prediction/truth pairing: nullopt when the pair fails the
// true-positive criterion, otherwise a goodness value (higher is better) used
// to pick among multiple candidate truths.
using MatchScoreFn =
    std::function<std::optional<double>(const PartProposal&, const TruthPart&)>;

// True positive iff the corner distance is at most tau; closer is better.
inline MatchScoreFn corner_distance_matcher(double tau) {
  return [tau](const PartProposal& pred, const TruthPart& truth) -> std::optional<double> {
    const double d = corner_distance(pred.pose, truth.pose);
    if (d <= tau) return -d;
    return std::nullopt;
  };
}

struct DetectionReport {
  double ap = 0.0;
  double precision = 0.0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
  bool no_predictions = false;
};

// Greedy confidence-descending detection matching across scenes: each truth
// may be claimed once, by the highest-confidence prediction whose score
// function accepts the pair (best score among unclaimed truths of the same
// scene). AP integrates the precision envelope over recall (all-point
// interpolation); precision is TP / (TP + FP) over every prediction.
// Throws ShapeError when the scene lists differ in length.
inline DetectionReport detection_map(std::span<const std::vector<PartProposal>> preds_per_scene,
                                     std::span<const std::vector<TruthPart>> truths_per_scene,
                                     const MatchScoreFn& scorer) {
  if (preds_per_scene.size() != truths_per_scene.size())
    throw ShapeError("detection_map: prediction and truth scene counts differ");
  const int n_scenes = static_cast<int>(preds_per_scene.size());

  struct Ranked {
    double confidence;
    int scene;
    int index;
  };
  std::vector<Ranked> ranked;
  int n_gt = 0;
  for (int s = 0; s < n_scenes; ++s) {
    for (int i = 0; i < static_cast<int>(preds_per_scene[s].size()); ++i)
      ranked.push_back({preds_per_scene[s][i].objectness(), s, i});
    n_gt += static_cast<int>(truths_per_scene[s].size());
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.scene != b.scene) return a.scene < b.scene;
    return a.index < b.index;
  });

  DetectionReport report;
  report.no_predictions = ranked.empty();
  std::vector<std::vector<char>> claimed(n_scenes);
  for (int s = 0; s < n_scenes; ++s) claimed[s].assign(truths_per_scene[s].size(), 0);

  std::vector<char> is_tp(ranked.size(), 0);
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    const auto& entry = ranked[r];
    const auto& pred = preds_per_scene[entry.scene][entry.index];
    int best_truth = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    const auto& truths = truths_per_scene[entry.scene];
    for (int t = 0; t < static_cast<int>(truths.size()); ++t) {
      if (claimed[entry.scene][t]) continue;
      const auto score = scorer(pred, truths[t]);
      if (score && *score > best_score) {
        best_score = *score;
        best_truth = t;
      }
    }
    if (best_truth >= 0) {
      claimed[entry.scene][best_truth] = 1;
      is_tp[r] = 1;
      ++report.tp;
    } else {
      ++report.fp;
    }
  }
  report.fn = n_gt - report.tp;
  report.precision =
      ranked.empty() ? 0.0 : static_cast<double>(report.tp) / (report.tp + report.fp);

  if (n_gt == 0 || ranked.empty()) {
    report.ap = 0.0;
    return report;
  }
  // Precision envelope over recall, integrated across recall steps.
  std::vector<double> precis, recall;
  int tp_run = 0, fp_run = 0;
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    is_tp[r] ? ++tp_run : ++fp_run;
    precis.push_back(static_cast<double>(tp_run) / (tp_run + fp_run));
    recall.push_back(static_cast<double>(tp_run) / n_gt);
  }
  for (int r = static_cast<int>(precis.size()) - 2; r >= 0; --r)
    precis[r] = std::max(precis[r], precis[r + 1]);
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t r = 0; r < precis.size(); ++r) {
    ap += (recall[r] - prev_recall) * precis[r];
    prev_recall = recall[r];
  }
  report.ap = ap;
  return report;
}

// ---------------------------------------------------------------------------
// Joint-parameter errors.
// ---------------------------------------------------------------------------

struct JointErrors {
  double state = 0.0;   // degrees (revolute) or centimeters (prismatic)
  double oe_deg = 0.0;  // axis angle error, degrees
  double md_cm = 0.0;   // revolute axis-line separation, centimeters
};

// Minimum distance between two infinite 3D lines.
inline double line_line_distance(const Vec3& p0, const Vec3& d0, const Vec3& p1,
                                 const Vec3& d1) {
  const Vec3 a = d0.normalized();
  const Vec3 b = d1.normalized();
  const Vec3 n = a.cross(b);
  const Vec3 off = p1 - p0;
  if (n.norm() < 1e-12) return (off - off.dot(a) * a).norm();  // parallel lines
  return std::abs(n.normalized().dot(off));
}

// Error triple for a matched pair sharing the truth's joint type. State is an
// absolute joint-state difference (degrees for revolute, centimeters for
// prismatic, zero for fixed); OE the unfolded arccos of the axis dot product
// (fold_antipodal maps it to [0, 90]); MD the distance between the revolute
// axis lines in centimeters.
inline JointErrors joint_errors(const JointParams& pred, const JointParams& gt,
                                bool fold_antipodal = false) {
  JointErrors e;
  if (gt.type == JointType::Fixed) return e;
  const double state_diff = std::abs(pred.state_current - gt.state_current);
  e.state = gt.type == JointType::Revolute ? rad_to_deg(state_diff) : 100.0 * state_diff;
  const double cosine = std::clamp(pred.axis.dot(gt.axis), -1.0, 1.0);
  e.oe_deg = rad_to_deg(std::acos(cosine));
  if (fold_antipodal) e.oe_deg = std::min(e.oe_deg, 180.0 - e.oe_deg);
  if (gt.type == JointType::Revolute)
    e.md_cm = 100.0 * line_line_distance(pred.origin, pred.axis, gt.origin, gt.axis);
  return e;
}

}  // namespace artbox
