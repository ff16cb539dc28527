#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "coronasim/coverage.hpp"
#include "coronasim/election.hpp"
#include "coronasim/routing.hpp"

namespace coronasim {

enum class Protocol { proposed, leach };

inline const char* protocol_name(Protocol p) {
  return p == Protocol::proposed ? "proposed" : "leach";
}

inline Protocol protocol_from_name(const std::string& name) {
  if (name == "proposed") return Protocol::proposed;
  if (name == "leach") return Protocol::leach;
  throw std::invalid_argument("unknown protocol: " + name);
}

struct RoundMetrics {
  int round = 0;
  Protocol protocol = Protocol::proposed;
  int alive = 0;
  double residual_total = 0.0;
  int packets_to_bs = 0;
  double coverage = 0.0;
};

/// Round indices are 1-based; 0 means the event never happened within
/// the simulated horizon.
struct LifetimeSummary {
  int first_death_round = 0;
  int half_death_round = 0;
  int all_death_round = 0;
  int rounds_simulated = 0;
};

struct RunOptions {
  double coverage_resolution = 0.5;  ///< meters, engine metric lattice
  std::function<void(const RoundLedger&)> ledger_sink;  ///< optional per-round tap
};

struct RunResult {
  Protocol protocol = Protocol::proposed;
  std::uint64_t seed = 0;
  std::vector<RoundMetrics> metrics;
  LifetimeSummary summary;
  double initial_total_energy = 0.0;
  double final_total_energy = 0.0;
  double ledger_total_energy = 0.0;
  std::vector<int> empty_regions;
  std::vector<NodeState> final_nodes;
};

/// One LEACH round: stochastic self-election with the rotation
/// threshold T = p / (1 - p * (r mod 1/p)), members join the nearest CH,
/// CHs fuse and transmit straight to the BS. Rounds with no CH fall back
/// to everyone reporting directly.
inline RoundLedger leach_round(std::vector<NodeState>& nodes, const NetworkConfig& cfg,
                               const Topology& topo, RandomEngine& rng, int round,
                               std::vector<int>& last_ch_round) {
  RoundLedger ledger;
  ledger.round = round;
  detail::Courier courier{nodes, cfg.radio, cfg.packet_bits, ledger};

  const double p = cfg.leach_p;
  std::vector<int> heads;
  for (NodeState& n : nodes) {
    if (!n.alive()) continue;
    n.set_role(Role::normal);
    if (p <= 0.0) continue;
    const int epoch = static_cast<int>(std::lround(1.0 / p));
    const bool eligible =
        last_ch_round[n.id()] < 0 || round - last_ch_round[n.id()] >= epoch;
    const double u = rng.uniform();
    if (!eligible) continue;
    const double threshold = p / (1.0 - p * static_cast<double>((round - 1) % epoch));
    if (u < threshold) {
      n.set_role(Role::cluster_head);
      last_ch_round[n.id()] = round;
      heads.push_back(n.id());
    }
  }

  std::vector<int> inbox(nodes.size(), 0);
  for (const NodeState& n : nodes) {
    if (!n.alive() || n.role() != Role::normal) continue;
    if (heads.empty()) {
      courier.send(n.id(), kBaseStation, topo.bs, nullptr);
      continue;
    }
    int best = heads.front();
    double best_d2 = squared_distance(n.position(), nodes[best].position());
    for (int ch : heads) {
      const double d2 = squared_distance(n.position(), nodes[ch].position());
      if (d2 < best_d2 || (d2 == best_d2 && ch < best)) {
        best = ch;
        best_d2 = d2;
      }
    }
    courier.send(n.id(), best, nodes[best].position(), &inbox);
  }

  for (int ch : heads) {
    if (!nodes[ch].alive()) {
      ledger.packets_lost += inbox[ch];
      continue;
    }
    if (!courier.aggregate(ch, inbox[ch] + 1)) continue;
    courier.send(ch, kBaseStation, topo.bs, nullptr);
  }
  return ledger;
}

/// Runs one protocol for up to max_rounds (stopping early once every
/// node is dead) and accumulates per-round metrics plus the lifetime
/// summary. Deterministic for a fixed config seed.
inline RunResult run(const NetworkConfig& cfg, Protocol protocol, int max_rounds,
                     const RunOptions& options = {}) {
  cfg.validate();
  if (max_rounds < 1) throw std::invalid_argument("max_rounds must be at least 1");

  RunResult result;
  result.protocol = protocol;
  result.seed = cfg.rng_seed;

  const Topology topo = build_topology(cfg);
  RandomEngine rng(cfg.rng_seed);
  Deployment deployment = deploy_nodes(cfg, topo, rng);
  std::vector<NodeState>& nodes = deployment.nodes;
  result.empty_regions = deployment.empty_regions;

  CoverageTracker tracker(Point{0.0, 0.0}, topo.field_radius, options.coverage_resolution);
  for (const NodeState& n : nodes) {
    tracker.add({n.position(), cfg.sensing_radius});
  }

  {
    NeumaierSum initial;
    for (const NodeState& n : nodes) initial.add(n.residual());
    result.initial_total_energy = initial.value();
  }

  const int total = static_cast<int>(nodes.size());
  std::vector<int> last_ch_round(nodes.size(), -1);
  std::vector<std::uint8_t> was_alive(nodes.size(), 1);
  NeumaierSum ledger_total;

  for (int round = 1; round <= max_rounds; ++round) {
    RoundLedger ledger;
    if (protocol == Protocol::proposed) {
      const ElectionResult election = elect_round(topo, nodes, round);
      ledger = execute_round(nodes, election, topo, cfg.radio, cfg.packet_bits);
    } else {
      ledger = leach_round(nodes, cfg, topo, rng, round, last_ch_round);
    }
    ledger_total.add(ledger.total_energy());

    int alive = 0;
    NeumaierSum residual;
    for (const NodeState& n : nodes) {
      if (n.alive()) {
        ++alive;
        residual.add(n.residual());
      } else if (was_alive[n.id()]) {
        was_alive[n.id()] = 0;
        tracker.remove({n.position(), cfg.sensing_radius});
      }
    }

    RoundMetrics row;
    row.round = round;
    row.protocol = protocol;
    row.alive = alive;
    row.residual_total = residual.value();
    row.packets_to_bs = ledger.packets_delivered_to_bs;
    row.coverage = tracker.rate();
    result.metrics.push_back(row);

    if (result.summary.first_death_round == 0 && alive < total) {
      result.summary.first_death_round = round;
    }
    if (result.summary.half_death_round == 0 && alive <= total / 2) {
      result.summary.half_death_round = round;
    }
    if (options.ledger_sink) options.ledger_sink(ledger);
    result.summary.rounds_simulated = round;
    if (alive == 0) {
      result.summary.all_death_round = round;
      break;
    }
  }

  {
    NeumaierSum final_sum;
    for (const NodeState& n : nodes) final_sum.add(n.residual());
    result.final_total_energy = final_sum.value();
  }
  result.ledger_total_energy = ledger_total.value();
  result.final_nodes = std::move(nodes);
  return result;
}

inline void write_metrics_csv_header(std::ostream& out) {
  out << "round,protocol,alive,residual_j,packets_bs,coverage_rate\n";
}

inline void write_metrics_csv(std::ostream& out, std::span<const RoundMetrics> rows) {
  char buf[160];
  for (const auto& m : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%s,%d,%.17g,%d,%.17g\n", m.round,
                  protocol_name(m.protocol), m.alive, m.residual_total, m.packets_to_bs,
                  m.coverage);
    out << buf;
  }
}

}  // namespace coronasim
