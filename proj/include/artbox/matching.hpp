// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "artbox/geometry.hpp"

namespace artbox {

// ---------------------------------------------------------------------------
// Bipartite matching cost.
// ---------------------------------------------------------------------------

struct MatchCostWeights {
  double lambda1 = 8.0;   // corner L1
  double lambda2 = 10.0;  // center L1
  double lambda3 = 1.0;   // reward for the truth joint type's probability
  double lambda4 = 5.0;   // foreground-probability term
};

namespace detail {

inline double corner_l1(const PoseSize& a, const PoseSize& b) {
  const auto ca = cuboid_corners(a);
  const auto cb = cuboid_corners(b);
  double sum = 0.0;
  for (int k = 0; k < 8; ++k) sum += (ca[k] - cb[k]).cwiseAbs().sum();
  return sum;
}

inline double clamp_prob(double p) { return std::clamp(p, 1e-7, 1.0 - 1e-7); }

}  // namespace detail

// lambda1 * corner L1 (summed over the 8 ordered corners) + lambda2 * center
// L1 - lambda3 * P(truth joint type) + lambda4 * (1 - P(background)).
inline double match_cost(const PartProposal& pred, const TruthPart& truth,
                         const MatchCostWeights& w = {}) {
  const double corners = detail::corner_l1(pred.pose, truth.pose);
  const double center = (pred.pose.center - truth.pose.center).cwiseAbs().sum();
  const double type_prob = pred.joint_type_probs[static_cast<int>(truth.joint.type)];
  const double foreground = 1.0 - pred.joint_type_probs[3];
  return w.lambda1 * corners + w.lambda2 * center - w.lambda3 * type_prob +
         w.lambda4 * foreground;
}

// Optimal assignment of every ground-truth column to a distinct prediction
// row, minimizing the summed cost. `costs` is N_pred x N_gt; the result maps
// each gt index to its pred index. Shortest-augmenting-path algorithm, O(n^3);
// ties inside the search resolve toward the lowest pred index.
// Throws ShapeError when there are fewer predictions than ground-truth parts.
inline std::vector<int> hungarian_match(const Eigen::MatrixXd& costs) {
  const int n_pred = static_cast<int>(costs.rows());
  const int n_gt = static_cast<int>(costs.cols());
  if (n_pred < n_gt)
    throw ShapeError("hungarian_match: fewer predictions than ground-truth parts");
  if (n_gt == 0) return {};

  constexpr double kInf = std::numeric_limits<double>::infinity();
  const int n = n_gt, m = n_pred;
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> match(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = costs(j - 1, i0 - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> result(n_gt, -1);
  for (int j = 1; j <= m; ++j)
    if (match[j] != 0) result[match[j] - 1] = j - 1;
  return result;
}

// ---------------------------------------------------------------------------
// Reference loss numerics.
// ---------------------------------------------------------------------------

// One occupancy supervision point in the part's normalized frame.
struct OccupancySample {
  Vec3 point = Vec3::Zero();
  double predicted = 0.5;  // strictly inside (0, 1); clamped for finite BCE
  double truth = 0.0;      // 0 or 1
};

// Per-term breakdown of the part loss for one matched pair.
struct PartLossTerms {
  double corner = 0.0;         // disentangled corner L1, summed over 3 substitutions
  double rotation = 0.0;       // ||I - R^T R_gt||_F^2
  double occupancy = 0.0;      // mean BCE over the occupancy samples
  double state_max = 0.0;      // L1 on the fully-opened state (non-fixed truth)
  double state_current = 0.0;  // L1 on the current state (non-fixed truth)
  double axis = 0.0;           // -a . a_gt (non-fixed truth)
  double origin_line = 0.0;    // point-line distance to the truth axis (revolute truth)
  double joint_type = 0.0;     // cross-entropy on the joint type
  double category = 0.0;       // cross-entropy on the category

  // All nine terms, equally weighted.
  double total() const {
    return corner + rotation + occupancy + state_max + state_current + axis + origin_line +
           joint_type + category;
  }

  // The variant used for unrefined predictions: no occupancy or classification.
  double refinement_total() const { return total() - occupancy - joint_type - category; }
};

inline double point_line_distance(const Vec3& point, const Vec3& line_point,
                                  const Vec3& line_dir) {
  const Vec3 d = line_dir.normalized();
  const Vec3 off = point - line_point;
  return (off - off.dot(d) * d).norm();
}

// Reference part loss for a matched pair. The corner term substitutes the
// prediction's rotation, center, and size one at a time into an otherwise
// ground-truth box; joint-state, axis, and origin terms apply only when the
// ground-truth joint has them (origin only for revolute). With no occupancy
// samples the BCE term is zero.
inline PartLossTerms part_loss(const PartProposal& pred, const TruthPart& truth,
                               std::span<const OccupancySample> occ = {}) {
  PartLossTerms t;

  PoseSize sub = truth.pose;
  sub.rotation = pred.pose.rotation;
  t.corner = detail::corner_l1(sub, truth.pose);
  sub = truth.pose;
  sub.center = pred.pose.center;
  t.corner += detail::corner_l1(sub, truth.pose);
  sub = truth.pose;
  sub.size = pred.pose.size;
  t.corner += detail::corner_l1(sub, truth.pose);

  t.rotation = (Mat3::Identity() - pred.pose.rotation.transpose() * truth.pose.rotation)
                   .squaredNorm();

  if (!occ.empty()) {
    double bce = 0.0;
    for (const auto& s : occ) {
      const double p = detail::clamp_prob(s.predicted);
      bce -= s.truth * std::log(p) + (1.0 - s.truth) * std::log(1.0 - p);
    }
    t.occupancy = bce / static_cast<double>(occ.size());
  }

  if (truth.joint.type != JointType::Fixed) {
    t.state_max = std::abs(pred.joint.state_max - truth.joint.state_max);
    t.state_current = std::abs(pred.joint.state_current - truth.joint.state_current);
    t.axis = -pred.joint.axis.dot(truth.joint.axis);
    if (truth.joint.type == JointType::Revolute)
      t.origin_line = point_line_distance(pred.joint.origin, truth.joint.origin,
                                          truth.joint.axis);
  }

  t.joint_type =
      -std::log(detail::clamp_prob(pred.joint_type_probs[static_cast<int>(truth.joint.type)]));
  if (truth.category_id >= 0 && truth.category_id < pred.category_probs.size())
    t.category = -std::log(detail::clamp_prob(pred.category_probs[truth.category_id]));
  else
    t.category = -std::log(detail::clamp_prob(0.0));
  return t;
}

// Instance-association loss over all parts of one scene (embedding triplet
// margin with soft max/min):
//   intra: lambda_intra * sum_i (1/|inst(i)|) * sum_{j in inst(i), j != i} [eta_ij - tau']+
//   inter: (1/N) * sum_i [ soft-max_{j in inst(i), j!=i} eta_ij
//                          - soft-min_{j' outside inst(i)} eta_ij' + 3 tau' ]+
// where the soft max is LogSumExp(eta) and the soft min is -LogSumExp(-eta).
// A part whose instance has no other member contributes 0 intra terms and uses
// 0 (its distance to itself) in place of the empty soft max. When every part
// shares one instance there are no inter-instance pairs at all, so the second
// term is skipped and only the intra term is returned.
// Throws ShapeError on mismatched input lengths, DegenerateInput for fewer
// than two parts.
inline double instance_loss(std::span<const VecX> embeddings, std::span<const int> instance_ids,
                            double tau_z_prime, double lambda_intra = 0.1) {
  const int n = static_cast<int>(embeddings.size());
  if (n != static_cast<int>(instance_ids.size()))
    throw ShapeError("instance_loss: embeddings and instance ids differ in length");
  if (n < 2) throw DegenerateInput("instance_loss: need at least two parts");
  for (int i = 1; i < n; ++i)
    if (embeddings[i].size() != embeddings[0].size())
      throw ShapeError("instance_loss: embeddings differ in dimension");

  Eigen::MatrixXd eta(n, n);
  for (int i = 0; i < n; ++i) {
    eta(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      const double d = (embeddings[i] - embeddings[j]).norm();
      eta(i, j) = d;
      eta(j, i) = d;
    }
  }

  auto log_sum_exp = [](const std::vector<double>& xs) {
    double m = xs[0];
    for (double x : xs) m = std::max(m, x);
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
  };

  double intra = 0.0;
  double inter = 0.0;
  bool any_inter = false;
  for (int i = 0; i < n; ++i) {
    std::vector<double> same, other_neg;
    int inst_size = 0;
    for (int j = 0; j < n; ++j) {
      if (instance_ids[j] == instance_ids[i]) {
        ++inst_size;  // includes i itself
        if (j != i) same.push_back(eta(i, j));
      } else {
        other_neg.push_back(-eta(i, j));
      }
    }
    for (double d : same) intra += std::max(d - tau_z_prime, 0.0) / inst_size;
    if (!other_neg.empty()) {
      any_inter = true;
      const double soft_max = same.empty() ? 0.0 : log_sum_exp(same);
      const double soft_min = -log_sum_exp(other_neg);
      inter += std::max(soft_max - soft_min + 3.0 * tau_z_prime, 0.0);
    }
  }
  double loss = lambda_intra * intra;
  if (any_inter) loss += inter / n;
  return loss;
}

// Grouping threshold derived from the training margin: (3 tau' + tau') / 2.
inline double tau_z(double tau_z_prime) { return 0.5 * (3.0 * tau_z_prime + tau_z_prime); }

// Total training loss: per-decoder-layer part, unrefined-part, and instance
// losses, summed over layers. Throws ShapeError when the lists disagree.
inline double total_loss(std::span<const double> part_losses,
                         std::span<const double> unrefined_part_losses,
                         std::span<const double> instance_losses) {
  if (part_losses.size() != unrefined_part_losses.size() ||
      part_losses.size() != instance_losses.size())
    throw ShapeError("total_loss: per-layer lists differ in length");
  double total = 0.0;
  for (std::size_t k = 0; k < part_losses.size(); ++k)
    total += part_losses[k] + unrefined_part_losses[k] + instance_losses[k];
  return total;
}

}  // namespace artbox
