#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "coronasim/common.hpp"
#include "coronasim/config.hpp"

namespace coronasim {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double normalize_angle(double a) noexcept {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a;
}

/// One sensing region: an angular sector of a corona. The innermost
/// corona is a single undivided region spanning the full circle.
struct Region {
  int id = 0;
  int corona = 0;          ///< 0-based corona index, 0 = innermost
  double r_inner = 0.0;
  double r_outer = 0.0;
  double angle_start = 0.0;  ///< radians in [0, 2pi)
  double angle_span = kTwoPi;
  Point centroid{};

  bool full_circle() const noexcept { return angle_span >= kTwoPi; }

  double area() const noexcept {
    return 0.5 * angle_span * (r_outer * r_outer - r_inner * r_inner);
  }

  bool contains(const Point& p, double field_radius) const noexcept {
    const double r = std::sqrt(p.x * p.x + p.y * p.y);
    const bool outermost = r_outer >= field_radius;
    if (r < r_inner || (outermost ? r > r_outer : r >= r_outer)) return false;
    if (full_circle()) return true;
    const double rel = normalize_angle(std::atan2(p.y, p.x) - angle_start);
    return rel < angle_span;
  }
};

struct Topology {
  double field_radius = 0.0;
  Point bs{};
  std::vector<std::pair<double, double>> coronas;  ///< [inner, outer) radii
  std::vector<Region> regions;
  std::vector<std::vector<int>> lower_adjacent;  ///< per region: bordered regions one corona in
  std::vector<std::vector<int>> upper_adjacent;  ///< reverse map
  std::vector<int> corona_first_region;          ///< regions are contiguous per corona
  std::vector<int> corona_region_count;

  int corona_of_region(int region) const { return regions[region].corona; }

  /// Region containing a point, or -1 outside the field.
  int region_of(const Point& p) const {
    const double r = std::sqrt(p.x * p.x + p.y * p.y);
    if (r > field_radius) return -1;
    const double width = field_radius / static_cast<double>(coronas.size());
    int c = std::min(static_cast<int>(coronas.size()) - 1,
                     static_cast<int>(r / width));
    if (c == 0) return 0;
    const Region& first = regions[corona_first_region[c]];
    const double rel = normalize_angle(std::atan2(p.y, p.x) - first.angle_start);
    int j = std::min(corona_region_count[c] - 1,
                     static_cast<int>(rel / first.angle_span));
    return corona_first_region[c] + j;
  }
};

namespace detail {

inline Point sector_centroid(double r_in, double r_out, double start, double span) {
  if (span >= kTwoPi) return Point{0.0, 0.0};
  const double mid = start + 0.5 * span;
  const double ring = (r_out * r_out * r_out - r_in * r_in * r_in) /
                      (r_out * r_out - r_in * r_in);
  const double radius = (2.0 / 3.0) * ring * (std::sin(0.5 * span) / (0.5 * span));
  return Point{radius * std::cos(mid), radius * std::sin(mid)};
}

/// Arc overlap of two angular intervals on the circle.
inline double angular_overlap(double a_start, double a_span, double b_start, double b_span) {
  double total = 0.0;
  for (int k = -1; k <= 1; ++k) {
    const double b0 = b_start + k * kTwoPi;
    const double lo = std::max(a_start, b0);
    const double hi = std::min(a_start + a_span, b0 + b_span);
    if (hi > lo) total += hi - lo;
  }
  return total;
}

}  // namespace detail

/// Builds equal-width coronas around the base station; every corona but
/// the innermost is split into equal sectors, with consecutive coronas
/// offset by half a sector so that each upper sector borders exactly two
/// lower sectors.
inline Topology build_topology(const NetworkConfig& cfg) {
  cfg.validate();
  Topology topo;
  const int eta = cfg.resolved_corona_count();
  const int sectors = cfg.sectors_per_corona;
  topo.field_radius = 0.5 * cfg.diameter;
  topo.bs = cfg.bs_position;

  const double width = topo.field_radius / static_cast<double>(eta);
  for (int c = 0; c < eta; ++c) {
    topo.coronas.emplace_back(c * width, (c + 1) * width);
  }

  topo.corona_first_region.assign(eta, 0);
  topo.corona_region_count.assign(eta, 0);

  Region inner;
  inner.id = 0;
  inner.corona = 0;
  inner.r_inner = 0.0;
  inner.r_outer = width;
  inner.angle_start = 0.0;
  inner.angle_span = kTwoPi;
  inner.centroid = Point{0.0, 0.0};
  topo.regions.push_back(inner);
  topo.corona_first_region[0] = 0;
  topo.corona_region_count[0] = 1;

  const double span = kTwoPi / static_cast<double>(sectors);
  for (int c = 1; c < eta; ++c) {
    topo.corona_first_region[c] = static_cast<int>(topo.regions.size());
    topo.corona_region_count[c] = sectors;
    const double start0 = normalize_angle(-0.5 * span * static_cast<double>(c - 1));
    for (int j = 0; j < sectors; ++j) {
      Region reg;
      reg.id = static_cast<int>(topo.regions.size());
      reg.corona = c;
      reg.r_inner = c * width;
      reg.r_outer = (c + 1) * width;
      reg.angle_start = normalize_angle(start0 + j * span);
      reg.angle_span = span;
      reg.centroid = detail::sector_centroid(reg.r_inner, reg.r_outer,
                                             reg.angle_start, reg.angle_span);
      topo.regions.push_back(reg);
    }
  }

  topo.lower_adjacent.assign(topo.regions.size(), {});
  topo.upper_adjacent.assign(topo.regions.size(), {});
  for (const Region& upper : topo.regions) {
    if (upper.corona == 0) continue;
    if (upper.corona == 1) {
      topo.lower_adjacent[upper.id] = {0};
      topo.upper_adjacent[0].push_back(upper.id);
      continue;
    }
    const int first = topo.corona_first_region[upper.corona - 1];
    const int count = topo.corona_region_count[upper.corona - 1];
    for (int j = 0; j < count; ++j) {
      const Region& lower = topo.regions[first + j];
      if (detail::angular_overlap(upper.angle_start, upper.angle_span,
                                  lower.angle_start, lower.angle_span) > 1e-12) {
        topo.lower_adjacent[upper.id].push_back(lower.id);
        topo.upper_adjacent[lower.id].push_back(upper.id);
      }
    }
    std::sort(topo.lower_adjacent[upper.id].begin(), topo.lower_adjacent[upper.id].end());
  }
  for (auto& ups : topo.upper_adjacent) std::sort(ups.begin(), ups.end());
  return topo;
}

enum class Role { normal, cluster_head, dead };

/// Mutable per-node simulation state. Energy is tracked as a compensated
/// total of everything spent, so whole-run conservation audits stay
/// within 1e-12 relative.
class NodeState {
 public:
  NodeState(int id, Point position, int region_id, double initial_energy)
      : id_(id), pos_(position), region_(region_id), e0_(initial_energy) {}

  int id() const noexcept { return id_; }
  const Point& position() const noexcept { return pos_; }
  int region() const noexcept { return region_; }
  double initial_energy() const noexcept { return e0_; }
  Role role() const noexcept { return role_; }
  bool alive() const noexcept { return role_ != Role::dead; }

  double residual() const noexcept {
    if (role_ == Role::dead) return 0.0;
    return std::max(0.0, e0_ - spent_.value());
  }

  double spent_total() const noexcept { return spent_.value(); }

  /// Elections may flip normal <-> cluster_head on living nodes only.
  void set_role(Role r) {
    if (role_ == Role::dead || r == Role::dead) return;
    role_ = r;
  }

  /// Deducts up to `cost`; a node that cannot pay in full is drained to
  /// zero and dies. Returns the energy actually drawn.
  double charge(double cost) {
    if (role_ == Role::dead || cost <= 0.0) return 0.0;
    const double avail = residual();
    const double actual = std::min(cost, avail);
    spent_.add(actual);
    if (actual >= avail) role_ = Role::dead;
    return actual;
  }

 private:
  int id_;
  Point pos_;
  int region_;
  double e0_;
  NeumaierSum spent_;
  Role role_ = Role::normal;
};

struct Deployment {
  std::vector<NodeState> nodes;
  std::vector<int> empty_regions;  ///< regions left without nodes (warning state)
};

/// Largest-remainder apportionment of `total` nodes: the inner region
/// holds `inner_fraction` of the quota, the rest is spread evenly.
inline std::vector<int> apportion_nodes(int total, int region_count, double inner_fraction) {
  if (region_count < 1 || total < 0) throw std::invalid_argument("bad apportion arguments");
  if (region_count == 1) return {total};
  std::vector<double> quota(region_count);
  quota[0] = inner_fraction * total;
  const double rest = (1.0 - inner_fraction) * total / static_cast<double>(region_count - 1);
  for (int i = 1; i < region_count; ++i) quota[i] = rest;

  std::vector<int> count(region_count);
  int assigned = 0;
  for (int i = 0; i < region_count; ++i) {
    count[i] = static_cast<int>(std::floor(quota[i]));
    assigned += count[i];
  }
  std::vector<int> order(region_count);
  for (int i = 0; i < region_count; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double fa = quota[a] - std::floor(quota[a]);
    const double fb = quota[b] - std::floor(quota[b]);
    if (fa != fb) return fa > fb;
    return a < b;
  });
  for (int i = 0; assigned < total; ++i) {
    ++count[order[i % region_count]];
    ++assigned;
  }
  return count;
}

/// Uniform-in-area sample inside a region via inverse transform.
inline Point sample_point_in_region(const Region& reg, RandomEngine& rng) {
  const double u = rng.uniform();
  const double v = rng.uniform();
  const double r = std::sqrt(reg.r_inner * reg.r_inner +
                             u * (reg.r_outer * reg.r_outer - reg.r_inner * reg.r_inner));
  const double a = reg.angle_start + v * reg.angle_span;
  return Point{r * std::cos(a), r * std::sin(a)};
}

/// Random deployment per the configured split: inner fraction of the
/// nodes in R1, the rest spread as evenly as the apportionment allows.
inline Deployment deploy_nodes(const NetworkConfig& cfg, const Topology& topo, RandomEngine& rng) {
  Deployment out;
  const int regions = static_cast<int>(topo.regions.size());
  const auto counts = apportion_nodes(cfg.node_count, regions, cfg.deployment_fraction_inner);
  out.nodes.reserve(cfg.node_count);
  int next_id = 0;
  for (int r = 0; r < regions; ++r) {
    if (counts[r] == 0) out.empty_regions.push_back(r);
    for (int n = 0; n < counts[r]; ++n) {
      const Point p = sample_point_in_region(topo.regions[r], rng);
      out.nodes.emplace_back(next_id++, p, r, cfg.initial_energy);
    }
  }
  return out;
}

}  // namespace coronasim
