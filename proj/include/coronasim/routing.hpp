#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <vector>

#include "coronasim/election.hpp"
#include "coronasim/radio.hpp"
#include "coronasim/topology.hpp"

namespace coronasim {

inline constexpr int kBaseStation = -1;

/// A packet that actually arrived at its destination.
struct HopRecord {
  int round = 0;
  int src = 0;
  int dst = kBaseStation;
  std::int64_t bits = 0;
  double distance_m = 0.0;
  double energy_j = 0.0;  ///< transmit-side cost of this hop
};

enum class EnergyKind { tx, rx, agg, drained };

/// Every joule drawn from a node, in the order it was drawn. `drained`
/// marks a partial payment that emptied the node mid-action.
struct EnergyEvent {
  int node = 0;
  EnergyKind kind = EnergyKind::tx;
  std::int64_t bits = 0;
  double distance_m = 0.0;
  int signals = 0;
  double energy_j = 0.0;
};

struct RoundLedger {
  int round = 0;
  std::vector<HopRecord> hops;
  std::vector<EnergyEvent> events;
  std::vector<std::pair<int, int>> aggregations;  ///< (CH id, fused signal count)
  int packets_delivered_to_bs = 0;
  int packets_lost = 0;

  double total_energy() const {
    NeumaierSum s;
    for (const auto& e : events) s.add(e.energy_j);
    return s.value();
  }

  std::vector<double> energy_by_node(int node_count) const {
    std::vector<NeumaierSum> sums(node_count);
    for (const auto& e : events) sums[e.node].add(e.energy_j);
    std::vector<double> out(node_count);
    for (int i = 0; i < node_count; ++i) out[i] = sums[i].value();
    return out;
  }
};

inline void write_hops_csv_header(std::ostream& out) {
  out << "round,src,dst,bits,distance_m,energy_j\n";
}

inline void write_hops_csv(std::ostream& out, const RoundLedger& ledger) {
  char buf[160];
  for (const auto& h : ledger.hops) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%d,%lld,%.17g,%.17g\n", h.round, h.src,
                  h.dst, static_cast<long long>(h.bits), h.distance_m, h.energy_j);
    out << buf;
  }
}

namespace detail {

/// Charges a node and logs exactly what was drawn, so the ledger can be
/// replayed against the radio formulas.
struct Courier {
  std::vector<NodeState>& nodes;
  const RadioParams& radio;
  std::int64_t bits;
  RoundLedger& ledger;

  bool pay(int node, EnergyKind kind, double cost, double dist, int signals) {
    NodeState& n = nodes[node];
    if (!n.alive()) return false;
    if (n.residual() >= cost) {
      n.charge(cost);
      ledger.events.push_back({node, kind, bits, dist, signals, cost});
      return true;
    }
    const double actual = n.charge(cost);
    ledger.events.push_back({node, EnergyKind::drained, bits, dist, signals, actual});
    return false;
  }

  /// Transmits src -> dst (kBaseStation for the sink). Returns true when
  /// the packet arrives and its receive cost (if any) was paid.
  bool send(int src, int dst, const Point& dst_pos, std::vector<int>* inbox) {
    const double dist = distance(nodes[src].position(), dst_pos);
    const double cost = tx_energy(radio, bits, dist);
    if (!pay(src, EnergyKind::tx, cost, dist, 0)) {
      ++ledger.packets_lost;
      return false;
    }
    if (dst == kBaseStation) {
      ledger.hops.push_back({ledger.round, src, kBaseStation, bits, dist, cost});
      ++ledger.packets_delivered_to_bs;
      return true;
    }
    if (!nodes[dst].alive() || !pay(dst, EnergyKind::rx, rx_energy(radio, bits), 0.0, 0)) {
      ++ledger.packets_lost;
      return false;
    }
    ledger.hops.push_back({ledger.round, src, dst, bits, dist, cost});
    if (inbox) ++(*inbox)[dst];
    return true;
  }

  bool aggregate(int ch, int signals) {
    const double cost = agg_energy(radio, bits, signals);
    if (!pay(ch, EnergyKind::agg, cost, 0.0, signals)) return false;
    ledger.aggregations.emplace_back(ch, signals);
    return true;
  }
};

/// Nearest living CH taken from `regions`, or -1.
inline int nearest_ch(const std::vector<NodeState>& nodes, const ElectionResult& election,
                      std::span<const int> regions, const Point& from) {
  int best = -1;
  double best_d2 = 0.0;
  for (int region : regions) {
    const int ch = election.ch_by_region[region];
    if (ch < 0 || !nodes[ch].alive()) continue;
    const double d2 = squared_distance(from, nodes[ch].position());
    if (best < 0 || d2 < best_d2 || (d2 == best_d2 && ch < best)) {
      best = ch;
      best_d2 = d2;
    }
  }
  return best;
}

inline std::vector<int> corona_regions(const Topology& topo, int corona) {
  std::vector<int> out(topo.corona_region_count[corona]);
  for (int j = 0; j < topo.corona_region_count[corona]; ++j) {
    out[j] = topo.corona_first_region[corona] + j;
  }
  return out;
}

}  // namespace detail

/// Tier-1 destination for a normal node outside the innermost region:
/// the nearest CH among its own region and the bordered regions one
/// corona in. Same-corona neighbours are never legal. With no candidate
/// the node escalates to any CH of the next-lower corona, then the BS.
inline int tier1_assign(const NodeState& node, const ElectionResult& election,
                        const Topology& topo, const std::vector<NodeState>& nodes) {
  const int region = node.region();
  const int corona = topo.regions[region].corona;

  std::vector<int> legal{region};
  for (int lower : topo.lower_adjacent[region]) legal.push_back(lower);
  int dst = detail::nearest_ch(nodes, election, legal, node.position());
  if (dst >= 0) return dst;

  if (corona >= 2) {
    const auto all_lower = detail::corona_regions(topo, corona - 1);
    dst = detail::nearest_ch(nodes, election, all_lower, node.position());
    if (dst >= 0) return dst;
  }
  return kBaseStation;
}

/// Executes one round of the 3-tier flow over the current node states
/// and returns the full energy/packet ledger. Tier 1 completes before
/// tier 2, tier 2 before tier 3; within a tier nodes act in ascending id
/// order so runs are reproducible.
inline RoundLedger execute_round(std::vector<NodeState>& nodes, const ElectionResult& election,
                                 const Topology& topo, const RadioParams& radio,
                                 std::int64_t packet_bits) {
  RoundLedger ledger;
  ledger.round = election.round;
  detail::Courier courier{nodes, radio, packet_bits, ledger};
  std::vector<int> inbox(nodes.size(), 0);

  // Tier 1: every living normal node reports once. Innermost-region
  // nodes have no CH and talk straight to the BS beside them.
  for (const NodeState& n : nodes) {
    if (!n.alive() || n.role() != Role::normal) continue;
    const int src = n.id();
    if (topo.regions[n.region()].corona == 0) {
      courier.send(src, kBaseStation, topo.bs, nullptr);
      continue;
    }
    const int dst = tier1_assign(n, election, topo, nodes);
    courier.send(src, dst, dst == kBaseStation ? topo.bs : nodes[dst].position(), &inbox);
  }

  // Tier 2: outer-corona CHs fuse what they heard plus their own reading
  // and push one packet inward, outermost corona first so relays see the
  // traffic before fusing their own.
  const int coronas = static_cast<int>(topo.coronas.size());
  for (int c = coronas - 1; c >= 2; --c) {
    for (int region : detail::corona_regions(topo, c)) {
      const int ch = election.ch_by_region[region];
      if (ch < 0) continue;
      if (!nodes[ch].alive()) {
        ledger.packets_lost += inbox[ch];
        continue;
      }
      if (!courier.aggregate(ch, inbox[ch] + 1)) continue;
      int dst = detail::nearest_ch(nodes, election, topo.lower_adjacent[region],
                                   nodes[ch].position());
      if (dst < 0) {
        const auto all_lower = detail::corona_regions(topo, c - 1);
        dst = detail::nearest_ch(nodes, election, all_lower, nodes[ch].position());
      }
      courier.send(ch, dst, dst == kBaseStation ? topo.bs : nodes[dst].position(), &inbox);
    }
  }

  // Tier 3: corona-2 CHs fuse and deliver to the BS.
  if (coronas > 1) {
    for (int region : detail::corona_regions(topo, 1)) {
      const int ch = election.ch_by_region[region];
      if (ch < 0) continue;
      if (!nodes[ch].alive()) {
        ledger.packets_lost += inbox[ch];
        continue;
      }
      if (!courier.aggregate(ch, inbox[ch] + 1)) continue;
      courier.send(ch, kBaseStation, topo.bs, nullptr);
    }
  }
  return ledger;
}

}  // namespace coronasim
