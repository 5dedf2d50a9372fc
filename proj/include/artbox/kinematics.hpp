// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "artbox/geometry.hpp"

namespace artbox {

// Pose of the part at articulation state d, derived from its current pose.
//   Fixed     : the pose itself, for any d.
//   Prismatic : center translated by (d - state_current) along the axis.
//   Revolute  : center and orientation rotated by (d - state_current) about
//               the line through joint.origin with direction joint.axis.
// Throws InvalidState when d falls outside [0, state_max] (tiny signed slack
// for round-off) for a non-fixed joint.
inline PoseSize pose_at_state(const PoseSize& pose, const JointParams& joint, double d) {
  if (joint.type == JointType::Fixed) return pose;
  constexpr double kSlack = 1e-9;
  if (d < -kSlack || d > joint.state_max + kSlack)
    throw InvalidState("pose_at_state: state " + std::to_string(d) + " outside [0, " +
                       std::to_string(joint.state_max) + "]");
  d = std::clamp(d, 0.0, joint.state_max);
  const double delta = d - joint.state_current;
  PoseSize out = pose;
  if (joint.type == JointType::Prismatic) {
    out.center += delta * joint.axis;
    return out;
  }
  const Mat3 rot = Eigen::AngleAxisd(delta, joint.axis).toRotationMatrix();
  out.center = joint.origin + rot * (pose.center - joint.origin);
  out.rotation = rot * pose.rotation;
  return out;
}

// Convex hull over the part's corners at the closed (0), current, and fully
// opened (state_max) articulation states: 24 points in that block order.
struct SweptHull {
  std::array<Vec3, 24> points;
  ConvexPolytope hull;
};

inline SweptHull swept_hull(const PoseSize& pose, const JointParams& joint) {
  SweptHull out;
  const PoseSize closed = pose_at_state(pose, joint, 0.0);
  const PoseSize opened = pose_at_state(pose, joint, joint.state_max);
  const auto c0 = cuboid_corners(closed);
  const auto c1 = cuboid_corners(pose);
  const auto c2 = cuboid_corners(opened);
  std::copy(c0.begin(), c0.end(), out.points.begin());
  std::copy(c1.begin(), c1.end(), out.points.begin() + 8);
  std::copy(c2.begin(), c2.end(), out.points.begin() + 16);
  try {
    out.hull = convex_hull(out.points);
  } catch (const DegenerateInput&) {
    // Flat or lower-dimensional corner set (e.g. a zero-thickness panel):
    // inflate every point by +-1e-6 m along each axis and hull that instead.
    std::vector<Vec3> inflated;
    inflated.reserve(out.points.size() * 7);
    constexpr double kInflate = 1e-6;
    for (const auto& p : out.points) {
      inflated.push_back(p);
      for (int j = 0; j < 3; ++j) {
        Vec3 e = Vec3::Zero();
        e[j] = kInflate;
        inflated.push_back(p + e);
        inflated.push_back(p - e);
      }
    }
    out.hull = convex_hull(inflated);
  }
  return out;
}

// IoU of the two parts' plain oriented boxes (no articulation).
inline double box_iou(const PoseSize& a, const PoseSize& b) {
  return iou(polytope_from_box(a), polytope_from_box(b));
}

// Kinematics-aware IoU: volumetric IoU of the swept hulls, so two detections
// of the same part at different articulation states still overlap strongly.
inline double kiou(const SweptHull& a, const SweptHull& b) {
  if (!a.hull.aabb().overlaps(b.hull.aabb())) return 0.0;
  return iou(a.hull, b.hull);
}

inline double kiou(const PoseSize& pose_a, const JointParams& joint_a, const PoseSize& pose_b,
                   const JointParams& joint_b) {
  return kiou(swept_hull(pose_a, joint_a), swept_hull(pose_b, joint_b));
}

}  // namespace artbox
