// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <numeric>
#include <span>
#include <vector>

#include "artbox/kinematics.hpp"

namespace artbox {

// Thresholds and counts for proposal fusion across detector runs.
struct KpfConfig {
  double tau_iou = 0.25;        // NMS overlap threshold (both plain and kinematics-aware)
  double tau_obj = 0.25;        // per-run objectness filter (keep strictly greater)
  double tau_obj_final = 0.25;  // final objectness filter (keep strictly greater)
  double tau_kiou = 0.5;        // clustering threshold inside the fusion pass
  double tau_scaled = 0.1;      // drop representatives with rescaled objectness <= this
  int tau_count = 3;            // maximum fusion iterations
  int n_q = 10;                 // number of detector runs pooled together
};

inline std::vector<std::string> validate(const KpfConfig& cfg) {
  std::vector<std::string> out;
  auto unit = [&](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) out.push_back(std::string(name) + " outside [0, 1]");
  };
  unit(cfg.tau_iou, "tau_iou");
  unit(cfg.tau_obj, "tau_obj");
  unit(cfg.tau_obj_final, "tau_obj_final");
  unit(cfg.tau_kiou, "tau_kiou");
  unit(cfg.tau_scaled, "tau_scaled");
  if (cfg.tau_count < 1) out.push_back("tau_count < 1");
  if (cfg.n_q < 1) out.push_back("n_q < 1");
  return out;
}

// Which volumetric overlap drives suppression / clustering.
enum class OverlapMetric { BoxIoU, KIoU };

namespace detail {

inline ConvexPolytope overlap_geometry(const PartProposal& p, OverlapMetric metric) {
  if (metric == OverlapMetric::BoxIoU) return polytope_from_box(p.pose);
  return swept_hull(p.pose, p.joint).hull;
}

inline double overlap_value(const ConvexPolytope& a, const ConvexPolytope& b) {
  if (!a.aabb().overlaps(b.aabb())) return 0.0;
  return iou(a, b);
}

inline std::vector<int> objectness_order(std::span<const PartProposal> proposals) {
  std::vector<int> order(proposals.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return proposals[a].objectness() > proposals[b].objectness();
  });
  return order;
}

}  // namespace detail

// Greedy non-maximum suppression: proposals are visited by descending
// objectness (ties keep input order) and dropped when their overlap with an
// already-kept proposal exceeds `threshold`. Output stays sorted descending.
inline std::vector<PartProposal> nms(std::span<const PartProposal> proposals, double threshold,
                                     OverlapMetric metric) {
  const auto order = detail::objectness_order(proposals);
  std::vector<ConvexPolytope> geo(proposals.size());
  std::vector<PartProposal> kept;
  std::vector<int> kept_idx;
  for (int i : order) {
    geo[i] = detail::overlap_geometry(proposals[i], metric);
    bool suppressed = false;
    for (int k : kept_idx) {
      if (detail::overlap_value(geo[k], geo[i]) > threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) {
      kept.push_back(proposals[i]);
      kept_idx.push_back(i);
    }
  }
  return kept;
}

// Objectness-weighted fusion of a set of proposals into one.
//   - center, size, joint states, axis origin, probability vectors, and the
//     embedding are weighted arithmetic means (axis renormalized, probability
//     vectors renormalized against round-off);
//   - the rotation is the Frobenius projection of the weighted mean matrix
//     back onto SO(3), i.e. the chordal L2 rotation average;
//   - the fused joint type is the argmax of the fused foreground type
//     probabilities; the shape handle is taken from the heaviest member.
// Throws EmptyInput for no members, ShapeError on mismatched vector sizes or
// a negative weight, AllZeroWeights when the weights sum to zero.
inline PartProposal weighted_average(std::span<const PartProposal> members,
                                     std::span<const double> weights) {
  if (members.empty()) throw EmptyInput("weighted_average: no members");
  if (members.size() != weights.size())
    throw ShapeError("weighted_average: weight count mismatch");
  const auto dim_cat = members.front().category_probs.size();
  const auto dim_emb = members.front().embedding.size();
  for (const auto& m : members)
    if (m.category_probs.size() != dim_cat || m.embedding.size() != dim_emb)
      throw ShapeError("weighted_average: mismatched probability/embedding sizes");
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ShapeError("weighted_average: negative weight");
    total += w;
  }
  if (total <= 0.0) throw AllZeroWeights("weighted_average: weights sum to zero");

  PartProposal out;
  out.pose.center.setZero();
  out.pose.size.setZero();
  out.joint.axis.setZero();
  out.joint.origin.setZero();
  out.joint.state_current = 0.0;
  out.joint.state_max = 0.0;
  out.joint_type_probs.setZero();
  out.category_probs = VecX::Zero(dim_cat);
  out.embedding = VecX::Zero(dim_emb);
  Mat3 rot_sum = Mat3::Zero();

  std::size_t heaviest = 0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    const double w = weights[i] / total;
    const auto& m = members[i];
    out.pose.center += w * m.pose.center;
    out.pose.size += w * m.pose.size;
    out.joint.axis += w * m.joint.axis;
    out.joint.origin += w * m.joint.origin;
    out.joint.state_current += w * m.joint.state_current;
    out.joint.state_max += w * m.joint.state_max;
    out.joint_type_probs += w * m.joint_type_probs;
    if (dim_cat > 0) out.category_probs += w * m.category_probs;
    if (dim_emb > 0) out.embedding += w * m.embedding;
    rot_sum += w * m.pose.rotation;
    if (weights[i] > weights[heaviest]) heaviest = i;
  }

  out.pose.rotation = project_to_so3(rot_sum);
  const double axis_norm = out.joint.axis.norm();
  out.joint.axis = axis_norm > 1e-12 ? Vec3(out.joint.axis / axis_norm)
                                     : members[heaviest].joint.axis;
  if (out.joint_type_probs.sum() > 0.0) out.joint_type_probs /= out.joint_type_probs.sum();
  if (dim_cat > 0 && out.category_probs.sum() > 0.0) out.category_probs /= out.category_probs.sum();

  int best_type = 0;
  for (int k = 1; k < 3; ++k)
    if (out.joint_type_probs[k] > out.joint_type_probs[best_type]) best_type = k;
  out.joint.type = static_cast<JointType>(best_type);
  out.shape_handle = members[heaviest].shape_handle;
  return out;
}

inline PartProposal weighted_average(std::span<const PartProposal> members) {
  std::vector<double> weights;
  weights.reserve(members.size());
  for (const auto& m : members) weights.push_back(m.objectness());
  return weighted_average(members, weights);
}

// One fused cluster: its members and their weighted average.
struct FusionCluster {
  std::vector<PartProposal> members;
  PartProposal representative;
};

// Greedy overlap clustering: proposals are visited by descending objectness;
// each joins the first existing cluster whose *representative* overlaps it by
// more than cfg.tau_kiou, and that representative is re-averaged immediately;
// otherwise it seeds a new cluster. Clusters come back in creation order.
inline std::vector<FusionCluster> pf_clusters(std::span<const PartProposal> proposals,
                                              const KpfConfig& cfg,
                                              OverlapMetric metric = OverlapMetric::KIoU) {
  const auto order = detail::objectness_order(proposals);
  std::vector<FusionCluster> clusters;
  std::vector<ConvexPolytope> rep_geo;
  for (int i : order) {
    const auto& p = proposals[i];
    const ConvexPolytope geo = detail::overlap_geometry(p, metric);
    bool joined = false;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      if (detail::overlap_value(rep_geo[c], geo) > cfg.tau_kiou) {
        clusters[c].members.push_back(p);
        clusters[c].representative = weighted_average(clusters[c].members);
        rep_geo[c] = detail::overlap_geometry(clusters[c].representative, metric);
        joined = true;
        break;
      }
    }
    if (!joined) {
      clusters.push_back({{p}, p});
      rep_geo.push_back(geo);
    }
  }
  return clusters;
}

// One fusion pass: cluster, then rescale each representative's objectness by
// |cluster| / t (clamped to 1) and drop representatives whose rescaled
// objectness is <= cfg.tau_scaled. `t` is the expected duplication count.
inline std::vector<PartProposal> pf_kiou(std::span<const PartProposal> proposals, int t,
                                         const KpfConfig& cfg,
                                         OverlapMetric metric = OverlapMetric::KIoU) {
  const auto clusters = pf_clusters(proposals, cfg, metric);
  std::vector<PartProposal> out;
  out.reserve(clusters.size());
  for (const auto& cluster : clusters) {
    PartProposal rep = cluster.representative;
    const double before = rep.objectness();
    const double scaled =
        std::min(1.0, before * static_cast<double>(cluster.members.size()) / std::max(t, 1));
    if (scaled <= cfg.tau_scaled) continue;
    if (before > 0.0) {
      const double factor = scaled / before;
      for (int k = 0; k < 3; ++k) rep.joint_type_probs[k] *= factor;
    }
    rep.joint_type_probs[3] = 1.0 - scaled;
    out.push_back(std::move(rep));
  }
  return out;
}

namespace detail {

// Canonical order + field-wise comparison for the fusion fixed-point test.
inline bool proposal_lists_equal(std::vector<PartProposal> a, std::vector<PartProposal> b,
                                 double tol) {
  if (a.size() != b.size()) return false;
  auto canon = [](const PartProposal& x, const PartProposal& y) {
    if (x.objectness() != y.objectness()) return x.objectness() > y.objectness();
    for (int i = 0; i < 3; ++i)
      if (x.pose.center[i] != y.pose.center[i]) return x.pose.center[i] < y.pose.center[i];
    return false;
  };
  std::stable_sort(a.begin(), a.end(), canon);
  std::stable_sort(b.begin(), b.end(), canon);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!approx_equal(a[i], b[i], tol)) return false;
  return true;
}

}  // namespace detail

// Variant switches used by the ablation pipelines.
struct KpfVariant {
  bool kiou_nms = true;                                  // run the second, kinematics-aware NMS per run
  OverlapMetric fusion_metric = OverlapMetric::KIoU;     // overlap used inside the fusion pass
};

// Full multi-run fusion pipeline. Per run: plain-overlap NMS, objectness
// filter (> tau_obj), kinematics-aware NMS. The pooled survivors are fused
// repeatedly (first pass t = n_q, then t = 1) until the proposal list becomes
// a fixed point (per-field 1e-9 after sorting) or tau_count passes ran, then
// filtered at tau_obj_final.
inline std::vector<PartProposal> kpf_pipeline(const std::vector<std::vector<PartProposal>>& runs,
                                              const KpfConfig& cfg, const KpfVariant& variant) {
  std::vector<PartProposal> pooled;
  for (const auto& run : runs) {
    auto kept = nms(run, cfg.tau_iou, OverlapMetric::BoxIoU);
    std::erase_if(kept, [&](const PartProposal& p) { return !(p.objectness() > cfg.tau_obj); });
    if (variant.kiou_nms) kept = nms(kept, cfg.tau_iou, OverlapMetric::KIoU);
    pooled.insert(pooled.end(), kept.begin(), kept.end());
  }

  std::vector<PartProposal> x = std::move(pooled);
  int count = 0;
  do {
    auto next = pf_kiou(x, count == 0 ? cfg.n_q : 1, cfg, variant.fusion_metric);
    ++count;
    const bool fixed_point = detail::proposal_lists_equal(next, x, 1e-9);
    x = std::move(next);
    if (fixed_point) break;
  } while (count < cfg.tau_count);

  std::erase_if(x, [&](const PartProposal& p) { return !(p.objectness() > cfg.tau_obj_final); });
  return x;
}

inline std::vector<PartProposal> kpf(const std::vector<std::vector<PartProposal>>& runs,
                                     const KpfConfig& cfg) {
  return kpf_pipeline(runs, cfg, KpfVariant{});
}

}  // namespace artbox
