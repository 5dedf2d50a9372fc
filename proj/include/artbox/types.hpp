// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "artbox/common.hpp"
#include "artbox/shapes.hpp"

namespace artbox {

// ---------------------------------------------------------------------------
// Oriented part box: rotation (world_from_part), center, and full side lengths.
// ---------------------------------------------------------------------------

struct PoseSize {
  Mat3 rotation = Mat3::Identity();
  Vec3 center = Vec3::Zero();
  Vec3 size = Vec3::Ones();  // full edge lengths, > 0

  double diameter() const { return size.norm(); }
};

enum class JointType { Fixed = 0, Revolute = 1, Prismatic = 2 };

inline const char* joint_type_name(JointType t) {
  switch (t) {
    case JointType::Fixed: return "fixed";
    case JointType::Revolute: return "revolute";
    default: return "prismatic";
  }
}

// Kinematic joint. Angles are radians and lengths meters everywhere in-memory;
// file formats convert revolute states to degrees with an explicit unit field.
// Fixed joints carry placeholder axis (0,0,1) and zero states.
struct JointParams {
  JointType type = JointType::Fixed;
  Vec3 axis = Vec3(0.0, 0.0, 1.0);  // unit direction
  Vec3 origin = Vec3::Zero();       // point on the revolute axis line
  double state_current = 0.0;       // in [0, state_max]
  double state_max = 0.0;           // fully-opened articulation state
};

// One detected articulated part with its per-class scores and embedding.
struct PartProposal {
  PoseSize pose;
  JointParams joint;
  Vec4 joint_type_probs = Vec4(0.0, 0.0, 0.0, 1.0);  // fixed, revolute, prismatic, background
  VecX category_probs;
  VecX embedding;                     // association embedding, default dimension 32
  OccupancyFn shape_handle;           // optional normalized-frame occupancy query

  double objectness() const { return 1.0 - joint_type_probs[3]; }
};

inline constexpr int kEmbeddingDim = 32;

// ---------------------------------------------------------------------------
// Ground truth for synthetic scenes.
// ---------------------------------------------------------------------------

struct TruthInstance {
  int instance_id = 0;
  int category_id = 0;
};

struct TruthPart {
  PoseSize pose;
  JointParams joint;
  int category_id = 0;
  int instance_id = 0;
  AnalyticShape shape;
  VecX embedding;  // target association embedding assigned by the generator
};

struct SceneTruth {
  std::vector<TruthInstance> instances;
  std::vector<TruthPart> parts;
};

// ---------------------------------------------------------------------------
// Validation. Total for any finite-float input: returns human-readable
// violations instead of throwing; empty result means the value is well formed.
// ---------------------------------------------------------------------------

namespace detail {

inline bool all_finite(const Mat3& m) { return m.allFinite(); }

inline void validate_pose(const PoseSize& p, std::vector<std::string>& out) {
  if (!p.rotation.allFinite() || !p.center.allFinite() || !p.size.allFinite()) {
    out.push_back("pose has non-finite entries");
    return;
  }
  const double ortho = (p.rotation.transpose() * p.rotation - Mat3::Identity()).norm();
  if (ortho > 1e-6) out.push_back("rotation not orthonormal");
  else if (p.rotation.determinant() < 0.0) out.push_back("rotation determinant not +1");
  for (int i = 0; i < 3; ++i) {
    if (!(p.size[i] > 0.0)) {
      out.push_back("size component <= 0");
      break;
    }
  }
}

inline void validate_joint(const JointParams& j, std::vector<std::string>& out) {
  if (!j.axis.allFinite() || !j.origin.allFinite() || !std::isfinite(j.state_current) ||
      !std::isfinite(j.state_max)) {
    out.push_back("joint has non-finite entries");
    return;
  }
  if (std::abs(j.axis.norm() - 1.0) > 1e-9) out.push_back("axis not unit");
  if (j.type != JointType::Fixed) {
    if (j.state_max < 0.0) out.push_back("state_max < 0");
    if (j.state_current < 0.0 || j.state_current > j.state_max)
      out.push_back("state_current outside [0, state_max]");
  }
}

inline void validate_probs(const VecX& probs, const char* name, std::vector<std::string>& out) {
  if (probs.size() == 0) {
    out.push_back(std::string(name) + " empty");
    return;
  }
  if (!probs.allFinite()) {
    out.push_back(std::string(name) + " has non-finite entries");
    return;
  }
  if (probs.minCoeff() < -1e-12) out.push_back(std::string(name) + " entry < 0");
  if (std::abs(probs.sum() - 1.0) > 1e-6) out.push_back(std::string(name) + " do not sum to 1");
}

}  // namespace detail

inline std::vector<std::string> validate(const PartProposal& p) {
  std::vector<std::string> out;
  detail::validate_pose(p.pose, out);
  detail::validate_joint(p.joint, out);
  detail::validate_probs(VecX(p.joint_type_probs), "joint_type_probs", out);
  detail::validate_probs(p.category_probs, "category_probs", out);
  if (p.embedding.size() > 0 && !p.embedding.allFinite())
    out.push_back("embedding has non-finite entries");
  return out;
}

inline std::vector<std::string> validate(const TruthPart& p) {
  std::vector<std::string> out;
  detail::validate_pose(p.pose, out);
  detail::validate_joint(p.joint, out);
  if (p.category_id < 0) out.push_back("category_id < 0");
  if (p.instance_id < 0) out.push_back("instance_id < 0");
  return out;
}

// ---------------------------------------------------------------------------
// Helpers shared across modules.
// ---------------------------------------------------------------------------

// Continuous 6D rotation parameterization: the first two columns of the matrix,
// made orthonormal by Gram-Schmidt; the third column is their cross product.
// Throws DegenerateInput when the two vectors do not span a plane.
inline Mat3 rotation_from_6d(const Eigen::Matrix<double, 6, 1>& v) {
  const Vec3 a1 = v.head<3>(), a2 = v.tail<3>();
  const double n1 = a1.norm();
  if (n1 < 1e-12) throw DegenerateInput("rotation_from_6d: first vector near zero");
  const Vec3 b1 = a1 / n1;
  Vec3 b2 = a2 - b1.dot(a2) * b1;
  const double n2 = b2.norm();
  if (n2 < 1e-12) throw DegenerateInput("rotation_from_6d: vectors are collinear");
  b2 /= n2;
  Mat3 r;
  r.col(0) = b1;
  r.col(1) = b2;
  r.col(2) = b1.cross(b2);
  return r;
}

// Field-wise comparison used for fixed-point convergence checks.
inline bool approx_equal(const PartProposal& a, const PartProposal& b, double tol) {
  if (a.joint.type != b.joint.type) return false;
  if (a.category_probs.size() != b.category_probs.size()) return false;
  if (a.embedding.size() != b.embedding.size()) return false;
  auto near = [tol](double x, double y) { return std::abs(x - y) <= tol; };
  return (a.pose.rotation - b.pose.rotation).cwiseAbs().maxCoeff() <= tol &&
         (a.pose.center - b.pose.center).cwiseAbs().maxCoeff() <= tol &&
         (a.pose.size - b.pose.size).cwiseAbs().maxCoeff() <= tol &&
         (a.joint.axis - b.joint.axis).cwiseAbs().maxCoeff() <= tol &&
         (a.joint.origin - b.joint.origin).cwiseAbs().maxCoeff() <= tol &&
         near(a.joint.state_current, b.joint.state_current) &&
         near(a.joint.state_max, b.joint.state_max) &&
         (a.joint_type_probs - b.joint_type_probs).cwiseAbs().maxCoeff() <= tol &&
         (a.category_probs.size() == 0 ||
          (a.category_probs - b.category_probs).cwiseAbs().maxCoeff() <= tol) &&
         (a.embedding.size() == 0 ||
          (a.embedding - b.embedding).cwiseAbs().maxCoeff() <= tol);
}

}  // namespace artbox
