// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "artbox/fusion.hpp"
#include "artbox/kinematics.hpp"
#include "artbox/shapes.hpp"
#include "artbox/types.hpp"

namespace artbox {

// Per-proposal perturbation magnitudes used when simulating detector runs.
// All zero means runs reproduce the truth exactly.
struct NoiseModel {
  double center_sigma = 0.01;       // meters, center and joint-origin jitter
  double rotation_sigma = 0.02;     // radians, pose and axis jitter
  double size_sigma = 0.02;         // relative size jitter
  double state_sigma = 0.02;        // radians / meters, joint-state jitter
  double embed_sigma = 0.02;        // embedding jitter
  double objectness_spread = 0.2;   // objectness drawn from [1 - spread, 1]
  double prob_smear = 0.1;          // probability mass leaked off the true class
};

struct GenConfig {
  std::uint64_t seed = 0;
  int n_instances = 2;              // 1..4 furniture instances
  int parts_per_instance = 3;       // 1..6 articulated parts (a fixed base is added)
  double revolute_fraction = 0.5;   // door vs drawer mix
  double lshape_rate = 0.25;        // fraction of parts with an L profile
  double tau_z_prime = 0.5;         // embedding margin the scene is built around
  NoiseModel noise;
  int n_runs = 10;                  // simulated detector passes
  double fp_rate = 0.1;             // spurious-proposal rate per part per run
  double fn_rate = 0.05;            // dropped-part rate per part per run
  double thin_dup_rate = 0.0;       // same-run state-offset duplicates of thin parts
};

// Violation messages, empty when the config is well formed.
inline std::vector<std::string> validate(const GenConfig& cfg) {
  std::vector<std::string> out;
  auto rate = [&out](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) out.push_back(std::string(name) + " outside [0, 1]");
  };
  auto sigma = [&out](double v, const char* name) {
    if (!(v >= 0.0)) out.push_back(std::string(name) + " negative");
  };
  if (cfg.n_instances < 1 || cfg.n_instances > 4) out.push_back("n_instances outside 1..4");
  if (cfg.parts_per_instance < 1 || cfg.parts_per_instance > 6)
    out.push_back("parts_per_instance outside 1..6");
  if (cfg.n_runs < 1) out.push_back("n_runs < 1");
  if (!(cfg.tau_z_prime > 0.0)) out.push_back("tau_z_prime not positive");
  rate(cfg.revolute_fraction, "revolute_fraction");
  rate(cfg.lshape_rate, "lshape_rate");
  rate(cfg.fp_rate, "fp_rate");
  rate(cfg.fn_rate, "fn_rate");
  rate(cfg.thin_dup_rate, "thin_dup_rate");
  sigma(cfg.noise.center_sigma, "center_sigma");
  sigma(cfg.noise.rotation_sigma, "rotation_sigma");
  sigma(cfg.noise.size_sigma, "size_sigma");
  sigma(cfg.noise.state_sigma, "state_sigma");
  sigma(cfg.noise.embed_sigma, "embed_sigma");
  rate(cfg.noise.objectness_spread, "objectness_spread");
  rate(cfg.noise.prob_smear, "prob_smear");
  return out;
}

inline constexpr int kCategoryBase = 0;
inline constexpr int kCategoryDoor = 1;
inline constexpr int kCategoryDrawer = 2;
inline constexpr int kNumCategories = 3;

namespace detail {

inline Mat3 yaw_rotation(double angle) {
  Mat3 r;
  const double c = std::cos(angle), s = std::sin(angle);
  r << c, 0, s,
       0, 1, 0,
       -s, 0, c;
  return r;
}

inline Mat3 small_rotation(Rng& rng, double sigma) {
  if (sigma <= 0.0) return Mat3::Identity();
  const Vec3 axis = rng.unit_vector();
  const double angle = rng.normal(0.0, sigma);
  return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

inline AnalyticShape pick_shape(Rng& rng, double lshape_rate) {
  if (rng.uniform() < lshape_rate)
    return AnalyticShape::lshape(rng.uniform(0.2, 0.45), rng.uniform(0.2, 0.45));
  return AnalyticShape::box();
}

}  // namespace detail

// Build one synthetic scene: each instance is a cabinet-like body — a fixed
// base cuboid with doors hinged on vertical front edges (revolute, opens to
// 135 degrees) and drawers sliding out of the front (prismatic). Embeddings
// place instances far apart (well beyond 3 tau') with tight intra-instance
// jitter (well under tau'), so the training margin holds by construction.
// Deterministic in cfg.seed.
inline SceneTruth generate_scene(const GenConfig& cfg) {
  Rng rng(cfg.seed);
  SceneTruth scene;
  const double tau = cfg.tau_z_prime;
  const double spacing = 12.0 * tau;       // inter-instance embedding distance scale
  const double jitter_radius = 0.3 * tau;  // intra-instance embedding radius

  for (int inst = 0; inst < cfg.n_instances; ++inst) {
    const double width = rng.uniform(0.6, 1.4);
    const double height = rng.uniform(0.5, 1.5);
    const double depth = rng.uniform(0.25, 0.6);
    const Mat3 yaw = detail::yaw_rotation(rng.uniform(0.0, 2.0 * kPi));
    const Vec3 base_center(inst * 3.0 + rng.uniform(-0.3, 0.3), height / 2.0,
                           rng.uniform(-0.3, 0.3));

    VecX inst_embedding = VecX::Zero(kEmbeddingDim);
    inst_embedding[inst] = spacing;
    auto draw_embedding = [&]() {
      const Vec3 dir3 = rng.unit_vector();  // jitter confined to 3 coordinates
      VecX z = inst_embedding;
      const double r = rng.uniform(0.0, jitter_radius);
      z[kEmbeddingDim - 1] += r * dir3.x();
      z[kEmbeddingDim - 2] += r * dir3.y();
      z[kEmbeddingDim - 3] += r * dir3.z();
      return z;
    };

    TruthPart base;
    base.pose = PoseSize{yaw, base_center, Vec3(width, height, depth)};
    base.joint = JointParams{};  // fixed
    base.category_id = kCategoryBase;
    base.instance_id = inst;
    base.shape = detail::pick_shape(rng, cfg.lshape_rate);
    base.embedding = draw_embedding();
    scene.parts.push_back(base);

    int doors = 0, drawers = 0;
    const int slots = cfg.parts_per_instance;
    const double slot_width = width / slots;
    for (int slot = 0; slot < slots; ++slot) {
      const double x0 = -width / 2.0 + slot * slot_width;
      const double x_mid = x0 + slot_width / 2.0;
      TruthPart part;
      part.instance_id = inst;
      part.shape = detail::pick_shape(rng, cfg.lshape_rate);
      part.embedding = draw_embedding();
      if (rng.uniform() < cfg.revolute_fraction) {
        // Door: thin panel covering the slot, hinged on its left vertical edge.
        const double thickness = 0.03;
        PoseSize closed;
        closed.rotation = yaw;
        closed.center =
            base_center + yaw * Vec3(x_mid, 0.0, depth / 2.0 + thickness / 2.0);
        closed.size = Vec3(slot_width * 0.95, height * 0.95, thickness);
        JointParams joint;
        joint.type = JointType::Revolute;
        joint.axis = yaw * Vec3(0, 1, 0);
        joint.origin = base_center + yaw * Vec3(x0, 0.0, depth / 2.0 + thickness / 2.0);
        joint.state_max = deg_to_rad(135.0);
        joint.state_current = 0.0;
        const double state = rng.uniform(0.0, joint.state_max);
        part.pose = pose_at_state(closed, joint, state);
        joint.state_current = state;
        part.joint = joint;
        part.category_id = kCategoryDoor;
        ++doors;
      } else {
        // Drawer: box sliding out of the front face along the depth axis.
        PoseSize closed;
        closed.rotation = yaw;
        const double dheight = std::max(0.1, height * rng.uniform(0.15, 0.3));
        const double y_off = rng.uniform(-height / 3.0, height / 3.0);
        closed.center = base_center + yaw * Vec3(x_mid, y_off, 0.0);
        closed.size = Vec3(slot_width * 0.9, dheight, depth * 0.9);
        JointParams joint;
        joint.type = JointType::Prismatic;
        joint.axis = yaw * Vec3(0, 0, 1);
        joint.origin = closed.center;
        joint.state_max = depth * 0.8;
        joint.state_current = 0.0;
        const double state = rng.uniform(0.0, joint.state_max);
        part.pose = pose_at_state(closed, joint, state);
        joint.state_current = state;
        part.joint = joint;
        part.category_id = kCategoryDrawer;
        ++drawers;
      }
      scene.parts.push_back(part);
    }

    TruthInstance info;
    info.instance_id = inst;
    info.category_id = doors >= drawers ? (doors > 0 ? kCategoryDoor : kCategoryBase)
                                        : kCategoryDrawer;
    scene.instances.push_back(info);
  }
  return scene;
}

namespace detail {

inline Vec4 smeared_type_probs(JointType true_type, double objectness, double smear) {
  Vec4 probs = Vec4::Zero();
  probs[3] = 1.0 - objectness;
  for (int t = 0; t < 3; ++t)
    probs[t] = objectness * (t == static_cast<int>(true_type) ? 1.0 - smear : smear / 2.0);
  return probs;
}

inline VecX smeared_category_probs(int true_cat, double smear) {
  VecX probs = VecX::Constant(kNumCategories, smear / (kNumCategories - 1));
  probs[true_cat] = 1.0 - smear;
  return probs;
}

}  // namespace detail

// Simulate n_runs independent detector passes over the scene truth. Every true
// part appears per run with probability 1 - fn_rate, perturbed per the noise
// model; spurious proposals appear at fp_rate with objectness in (0.25, 0.6];
// thin revolute parts optionally emit a same-run duplicate at a shifted joint
// state (the classic duplicate failure a plain box overlap cannot suppress).
// Deterministic in cfg.seed (offset so runs differ from the scene stream).
inline std::vector<std::vector<PartProposal>> perturb_to_runs(const SceneTruth& truth,
                                                              const GenConfig& cfg) {
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  const NoiseModel& noise = cfg.noise;
  std::vector<std::vector<PartProposal>> runs(cfg.n_runs);
  int spurious_counter = 0;

  auto perturb = [&](const TruthPart& part) {
    PartProposal p;
    p.pose.rotation = detail::small_rotation(rng, noise.rotation_sigma) * part.pose.rotation;
    p.pose.center = part.pose.center + rng.normal3(noise.center_sigma);
    p.pose.size = part.pose.size;
    for (int d = 0; d < 3; ++d)
      p.pose.size[d] = std::max(0.01, p.pose.size[d] * (1.0 + rng.normal(0.0, noise.size_sigma)));
    p.joint = part.joint;
    if (part.joint.type != JointType::Fixed) {
      p.joint.axis =
          (detail::small_rotation(rng, noise.rotation_sigma) * part.joint.axis).normalized();
      p.joint.origin = part.joint.origin + rng.normal3(noise.center_sigma);
      p.joint.state_max =
          std::max(0.05, part.joint.state_max + rng.normal(0.0, noise.state_sigma));
      p.joint.state_current =
          std::clamp(part.joint.state_current + rng.normal(0.0, noise.state_sigma), 0.0,
                     p.joint.state_max);
    }
    const double objectness = 1.0 - rng.uniform(0.0, noise.objectness_spread);
    p.joint_type_probs = detail::smeared_type_probs(part.joint.type, objectness, noise.prob_smear);
    p.category_probs = detail::smeared_category_probs(part.category_id, noise.prob_smear);
    p.embedding = part.embedding;
    for (int d = 0; d < p.embedding.size() && noise.embed_sigma > 0.0; ++d)
      p.embedding[d] += rng.normal(0.0, noise.embed_sigma);
    return p;
  };

  for (int run = 0; run < cfg.n_runs; ++run) {
    for (const TruthPart& part : truth.parts) {
      if (rng.uniform() < cfg.fn_rate) continue;
      runs[run].push_back(perturb(part));

      const bool thin = part.pose.size.minCoeff() <= 0.05;
      if (thin && part.joint.type == JointType::Revolute &&
          rng.uniform() < cfg.thin_dup_rate) {
        PartProposal dup = perturb(part);
        // Shift away from whichever travel limit is nearby so the duplicate
        // always sits at a genuinely different state.
        double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        const double margin = deg_to_rad(15.0);
        if (part.joint.state_current < margin) sign = 1.0;
        if (part.joint.state_current > dup.joint.state_max - margin) sign = -1.0;
        const double shifted = std::clamp(
            part.joint.state_current + sign * deg_to_rad(rng.uniform(8.0, 15.0)), 0.0,
            dup.joint.state_max);
        dup.pose = pose_at_state(dup.pose, dup.joint, shifted);
        dup.joint.state_current = shifted;
        const double obj = 0.6 * dup.objectness();
        dup.joint_type_probs =
            detail::smeared_type_probs(part.joint.type, obj, noise.prob_smear);
        runs[run].push_back(dup);
      }
    }
    for (const TruthPart& part : truth.parts) {
      (void)part;
      if (rng.uniform() >= cfg.fp_rate) continue;
      PartProposal fp;
      fp.pose.rotation = rng.random_rotation();
      fp.pose.center = Vec3(rng.uniform(-1.0, cfg.n_instances * 3.0), rng.uniform(0.0, 1.5),
                            rng.uniform(-1.0, 1.0));
      fp.pose.size =
          Vec3(rng.uniform(0.1, 0.4), rng.uniform(0.1, 0.4), rng.uniform(0.1, 0.4));
      fp.joint.type = static_cast<JointType>(rng.uniform_int(0, 2));
      if (fp.joint.type != JointType::Fixed) {
        fp.joint.axis = rng.unit_vector();
        fp.joint.origin = fp.pose.center;
        fp.joint.state_max = rng.uniform(0.2, 1.0);
        fp.joint.state_current = rng.uniform(0.0, fp.joint.state_max);
      }
      const double objectness = rng.uniform(0.26, 0.6);
      fp.joint_type_probs = detail::smeared_type_probs(fp.joint.type, objectness, 0.2);
      fp.category_probs =
          detail::smeared_category_probs(rng.uniform_int(0, kNumCategories - 1), 0.2);
      fp.embedding = VecX::Zero(kEmbeddingDim);
      // Park spurious embeddings on unused axes, far from every instance.
      fp.embedding[kEmbeddingDim - 4 - (spurious_counter++ % 8)] = -12.0 * cfg.tau_z_prime;
      runs[run].push_back(fp);
    }
  }
  return runs;
}

}  // namespace artbox
