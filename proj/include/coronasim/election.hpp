#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "coronasim/topology.hpp"

namespace coronasim {

/// Per-round cluster-head assignment. The innermost region never elects;
/// regions with no living node are simply absent (id -1).
struct ElectionResult {
  int round = 0;
  std::vector<int> ch_by_region;  ///< region -> node id, -1 when none

  /// Lower-corona CHs the criterion actually looked at, for auditing the
  /// corona processing order.
  struct LowerObservation {
    int first = -1;
    int second = -1;
  };
  std::vector<LowerObservation> observed_lower;

  bool has_ch(int region) const { return ch_by_region[region] >= 0; }
};

/// Top 5% of living nodes by residual energy, floored at one so a thinly
/// populated region still elects. Ties go to the lower node id.
inline std::vector<int> shortlist(const std::vector<NodeState>& nodes,
                                  std::span<const int> region_members) {
  std::vector<int> alive;
  for (int id : region_members) {
    if (nodes[id].alive()) alive.push_back(id);
  }
  if (alive.empty()) return {};
  std::sort(alive.begin(), alive.end(), [&](int a, int b) {
    const double ea = nodes[a].residual();
    const double eb = nodes[b].residual();
    if (ea != eb) return ea > eb;
    return a < b;
  });
  // ceil(alive/20) without float round-off (5% == 1/20 exactly)
  const std::size_t take = std::max<std::size_t>(1, (alive.size() + 19) / 20);
  alive.resize(std::min(take, alive.size()));
  return alive;
}

/// Runs the layer-controlled election, lower coronas first. Corona-2
/// regions pick the shortlisted node nearest the region centroid; higher
/// coronas pick the shortlisted node with the smallest summed distance
/// to the CHs of their two bordered lower regions, falling back to the
/// centroid when neither lower region elected. Winners become cluster
/// heads, every other living node reverts to normal.
inline ElectionResult elect_round(const Topology& topo, std::vector<NodeState>& nodes, int round) {
  ElectionResult result;
  result.round = round;
  result.ch_by_region.assign(topo.regions.size(), -1);
  result.observed_lower.assign(topo.regions.size(), {});

  for (NodeState& n : nodes) n.set_role(Role::normal);

  std::vector<std::vector<int>> members(topo.regions.size());
  for (const NodeState& n : nodes) {
    if (n.alive()) members[n.region()].push_back(n.id());
  }

  const int coronas = static_cast<int>(topo.coronas.size());
  for (int c = 1; c < coronas; ++c) {
    const int first = topo.corona_first_region[c];
    for (int j = 0; j < topo.corona_region_count[c]; ++j) {
      const int region = first + j;
      const auto candidates = shortlist(nodes, members[region]);
      if (candidates.empty()) continue;

      std::vector<Point> anchors;
      if (c >= 2) {
        const auto& lowers = topo.lower_adjacent[region];
        auto& obs = result.observed_lower[region];
        if (!lowers.empty() && result.ch_by_region[lowers[0]] >= 0) {
          obs.first = result.ch_by_region[lowers[0]];
          anchors.push_back(nodes[obs.first].position());
        }
        if (lowers.size() > 1 && result.ch_by_region[lowers[1]] >= 0) {
          obs.second = result.ch_by_region[lowers[1]];
          anchors.push_back(nodes[obs.second].position());
        }
      }

      int best = -1;
      double best_score = 0.0;
      for (int id : candidates) {
        double score = 0.0;
        if (anchors.empty()) {
          score = distance(nodes[id].position(), topo.regions[region].centroid);
        } else {
          for (const Point& a : anchors) score += distance(nodes[id].position(), a);
        }
        if (best < 0 || score < best_score || (score == best_score && id < best)) {
          best = id;
          best_score = score;
        }
      }
      result.ch_by_region[region] = best;
      nodes[best].set_role(Role::cluster_head);
    }
  }
  return result;
}

}  // namespace coronasim
