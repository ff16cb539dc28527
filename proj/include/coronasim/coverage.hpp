#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "coronasim/common.hpp"
#include "coronasim/image.hpp"

namespace coronasim {

struct SensingDisk {
  Point center{};
  double radius = 0.0;
};

/// 1 iff the point lies within the node's sensing disk, boundary
/// inclusive.
inline int point_covered(const Point& p, const SensingDisk& node) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(node.radius) ||
      node.radius <= 0.0) {
    throw std::invalid_argument("coverage query needs finite points and positive radius");
  }
  return squared_distance(p, node.center) <= node.radius * node.radius ? 1 : 0;
}

/// Probability that at least one node of the set covers the point,
/// 1 - prod(1 - p_i). With binary per-node coverage this is exactly the
/// disk-union indicator.
inline double p_union(const Point& p, std::span<const SensingDisk> nodes) {
  if (nodes.empty()) throw std::invalid_argument("p_union needs a non-empty node set");
  double miss = 1.0;
  for (const SensingDisk& n : nodes) {
    miss *= 1.0 - static_cast<double>(point_covered(p, n));
  }
  return 1.0 - miss;
}

struct CoverageReport {
  double coverage_rate = 0.0;
  double resolution_m = 0.0;
  std::int64_t covered = 0;
  std::int64_t total = 0;
};

namespace detail {

/// Shared lattice: cell centers on a square grid over the field's
/// bounding box; only centers inside the field disk count.
struct CoverageLattice {
  Point center{};
  double field_radius = 0.0;
  double resolution = 0.0;
  int n = 0;

  CoverageLattice(const Point& c, double radius, double res)
      : center(c), field_radius(radius), resolution(res) {
    if (!(res > 0.0)) throw std::invalid_argument("resolution must be positive");
    if (res > radius) throw std::invalid_argument("resolution exceeds field radius");
    n = static_cast<int>(std::ceil(2.0 * radius / res));
  }

  double coord_x(int i) const { return center.x - field_radius + (i + 0.5) * resolution; }
  double coord_y(int j) const { return center.y - field_radius + (j + 0.5) * resolution; }

  bool inside_field(int i, int j) const {
    const double dx = coord_x(i) - center.x;
    const double dy = coord_y(j) - center.y;
    return dx * dx + dy * dy <= field_radius * field_radius;
  }

  /// Index window covering [lo, hi] on one axis.
  std::pair<int, int> window(double lo, double hi, double origin) const {
    int a = static_cast<int>(std::floor((lo - origin) / resolution - 0.5));
    int b = static_cast<int>(std::ceil((hi - origin) / resolution - 0.5));
    a = std::max(a, 0);
    b = std::min(b, n - 1);
    return {a, b};
  }
};

}  // namespace detail

/// Fraction of the field disk covered by the union of sensing disks,
/// estimated on a square sample grid at the given resolution. Grid
/// points outside the field are excluded. Deterministic for a fixed
/// resolution.
inline CoverageReport coverage_rate(std::span<const SensingDisk> nodes, const Point& field_center,
                                    double field_radius, double resolution) {
  detail::CoverageLattice grid(field_center, field_radius, resolution);
  CoverageReport report;
  report.resolution_m = resolution;
  for (int j = 0; j < grid.n; ++j) {
    for (int i = 0; i < grid.n; ++i) {
      if (!grid.inside_field(i, j)) continue;
      ++report.total;
      const Point p{grid.coord_x(i), grid.coord_y(j)};
      bool covered = false;
      for (const SensingDisk& n : nodes) {
        if (squared_distance(p, n.center) <= n.radius * n.radius) {
          covered = true;
          break;
        }
      }
      if (covered) ++report.covered;
    }
  }
  report.coverage_rate = report.total > 0
                             ? static_cast<double>(report.covered) / static_cast<double>(report.total)
                             : 0.0;
  return report;
}

/// Incremental coverage bookkeeping for round-by-round simulation: node
/// positions never move, so coverage changes only when a node dies.
/// Rates agree exactly with coverage_rate() on the same lattice.
class CoverageTracker {
 public:
  CoverageTracker(const Point& field_center, double field_radius, double resolution)
      : grid_(field_center, field_radius, resolution),
        counts_(static_cast<std::size_t>(grid_.n) * grid_.n, 0),
        inside_(counts_.size(), 0) {
    for (int j = 0; j < grid_.n; ++j) {
      for (int i = 0; i < grid_.n; ++i) {
        if (grid_.inside_field(i, j)) {
          inside_[index(i, j)] = 1;
          ++total_;
        }
      }
    }
  }

  void add(const SensingDisk& disk) { update(disk, +1); }
  void remove(const SensingDisk& disk) { update(disk, -1); }

  double rate() const {
    return total_ > 0 ? static_cast<double>(covered_) / static_cast<double>(total_) : 0.0;
  }

  CoverageReport report() const {
    return {rate(), grid_.resolution, covered_, total_};
  }

 private:
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * grid_.n + i; }

  void update(const SensingDisk& disk, int delta) {
    const auto [i0, i1] = grid_.window(disk.center.x - disk.radius, disk.center.x + disk.radius,
                                       grid_.center.x - grid_.field_radius);
    const auto [j0, j1] = grid_.window(disk.center.y - disk.radius, disk.center.y + disk.radius,
                                       grid_.center.y - grid_.field_radius);
    const double r2 = disk.radius * disk.radius;
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) {
        const std::size_t idx = index(i, j);
        if (!inside_[idx]) continue;
        const double dx = grid_.coord_x(i) - disk.center.x;
        const double dy = grid_.coord_y(j) - disk.center.y;
        if (dx * dx + dy * dy > r2) continue;
        if (delta > 0) {
          if (counts_[idx]++ == 0) ++covered_;
        } else {
          if (--counts_[idx] == 0) --covered_;
        }
      }
    }
  }

  detail::CoverageLattice grid_;
  std::vector<std::uint32_t> counts_;
  std::vector<std::uint8_t> inside_;
  std::int64_t covered_ = 0;
  std::int64_t total_ = 0;
};

/// Renders the covered lattice cells as a PGM mask (255 = covered).
/// Cells outside the field disk are 0.
inline void write_coverage_mask_pgm(const std::filesystem::path& path,
                                    std::span<const SensingDisk> nodes,
                                    const Point& field_center, double field_radius,
                                    double resolution) {
  detail::CoverageLattice grid(field_center, field_radius, resolution);
  ImageBuffer mask(grid.n, grid.n, 0.0);
  for (int j = 0; j < grid.n; ++j) {
    for (int i = 0; i < grid.n; ++i) {
      if (!grid.inside_field(i, j)) continue;
      const Point p{grid.coord_x(i), grid.coord_y(j)};
      for (const SensingDisk& n : nodes) {
        if (squared_distance(p, n.center) <= n.radius * n.radius) {
          mask.at(i, grid.n - 1 - j) = 255.0;
          break;
        }
      }
    }
  }
  write_pgm(path, mask);
}

}  // namespace coronasim
