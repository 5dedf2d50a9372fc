// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <numeric>
#include <span>
#include <vector>

#include "artbox/types.hpp"

namespace artbox {

// One recovered instance: member part indices (ascending) plus a diagnostic
// flag that is true when every member pair is within the grouping threshold
// (single-linkage components can chain beyond it).
struct InstanceGroup {
  std::vector<int> members;
  bool is_clique = true;
};

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<int> parent_;
};

}  // namespace detail

// Partition parts into instances: two parts land in the same group when they
// are connected under the relation ||z_i - z_j|| < tau_z (single linkage).
// Groups are ordered by their smallest member index; members are ascending.
inline std::vector<InstanceGroup> group_parts(std::span<const PartProposal> parts,
                                              double tau_z) {
  const int n = static_cast<int>(parts.size());
  detail::UnionFind uf(n);
  Eigen::MatrixXd dist(n, n);
  for (int i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      const double d = (parts[i].embedding - parts[j].embedding).norm();
      dist(i, j) = d;
      dist(j, i) = d;
      if (d < tau_z) uf.unite(i, j);
    }
  }

  std::vector<int> root_to_group(n, -1);
  std::vector<InstanceGroup> groups;
  for (int i = 0; i < n; ++i) {
    const int r = uf.find(i);
    if (root_to_group[r] < 0) {
      root_to_group[r] = static_cast<int>(groups.size());
      groups.push_back({});
    }
    groups[root_to_group[r]].members.push_back(i);
  }
  for (auto& g : groups) {
    for (std::size_t a = 0; a + 1 < g.members.size() && g.is_clique; ++a)
      for (std::size_t b = a + 1; b < g.members.size(); ++b)
        if (dist(g.members[a], g.members[b]) >= tau_z) {
          g.is_clique = false;
          break;
        }
  }
  return groups;
}

// The instance's category: the part whose strongest category probability is
// highest wins; its argmax category and that probability are returned. Ties
// resolve to the lowest part index, then the lowest category index.
struct CategoryVote {
  int category = -1;
  double confidence = 0.0;
};

inline CategoryVote instance_category(std::span<const PartProposal> members) {
  if (members.empty()) throw EmptyInput("instance_category: no members");
  CategoryVote best;
  for (const auto& part : members) {
    for (int c = 0; c < part.category_probs.size(); ++c) {
      if (part.category_probs[c] > best.confidence) {
        best.confidence = part.category_probs[c];
        best.category = c;
      }
    }
  }
  return best;
}

}  // namespace artbox
