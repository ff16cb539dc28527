#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <set>

#include "coronasim/topology.hpp"

using namespace coronasim;

namespace {
NetworkConfig default_cfg() {
  NetworkConfig cfg;
  cfg.diameter = 300.0;
  cfg.node_count = 100;
  return cfg;
}
}  // namespace

TEST_CASE("default field splits into 3 coronas and 9 regions") {
  const Topology topo = build_topology(default_cfg());
  REQUIRE(topo.coronas.size() == 3);
  REQUIRE(topo.regions.size() == 9);
  for (const auto& [inner, outer] : topo.coronas) {
    REQUIRE(outer - inner == Catch::Approx(50.0));
  }
  REQUIRE(topo.regions[0].full_circle());

  // annulus quarter: pi * (100^2 - 50^2) / 4
  REQUIRE(topo.regions[1].area() == Catch::Approx(5890.486225480862).epsilon(1e-12));
}

TEST_CASE("corona intervals partition the field radius without gaps") {
  NetworkConfig cfg = default_cfg();
  cfg.corona_count = 7;
  const Topology topo = build_topology(cfg);
  REQUIRE(topo.coronas.front().first == 0.0);
  REQUIRE(topo.coronas.back().second == Catch::Approx(topo.field_radius).margin(1e-12));
  for (std::size_t c = 1; c < topo.coronas.size(); ++c) {
    REQUIRE(topo.coronas[c].first == topo.coronas[c - 1].second);
  }
}

TEST_CASE("region areas partition the field disk") {
  RandomEngine rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    NetworkConfig cfg;
    cfg.diameter = rng.uniform(50.0, 2000.0);
    cfg.node_count = 50 + static_cast<int>(rng.uniform(0.0, 400.0));
    cfg.corona_count = 1 + static_cast<int>(rng.uniform(0.0, 6.0));
    cfg.sectors_per_corona = 2 + static_cast<int>(rng.uniform(0.0, 7.0));
    const Topology topo = build_topology(cfg);

    double sum = 0.0;
    for (const Region& r : topo.regions) sum += r.area();
    const double field = std::numbers::pi * topo.field_radius * topo.field_radius;
    REQUIRE(std::abs(sum - field) / field < 1e-9);
  }
}

TEST_CASE("every upper region borders exactly two regions one corona in") {
  NetworkConfig cfg = default_cfg();
  cfg.corona_count = 5;
  const Topology topo = build_topology(cfg);
  for (const Region& r : topo.regions) {
    if (r.corona >= 2) {
      REQUIRE(topo.lower_adjacent[r.id].size() == 2);
    } else if (r.corona == 1) {
      REQUIRE(topo.lower_adjacent[r.id] == std::vector<int>{0});
    }
  }

  SECTION("adjacency is symmetric") {
    for (const Region& upper : topo.regions) {
      for (int lower : topo.lower_adjacent[upper.id]) {
        const auto& ups = topo.upper_adjacent[lower];
        REQUIRE(std::find(ups.begin(), ups.end(), upper.id) != ups.end());
      }
    }
  }
}

TEST_CASE("single-corona topology has one region and no adjacency") {
  NetworkConfig cfg;
  cfg.diameter = 300.0;
  cfg.node_count = 300;
  const Topology topo = build_topology(cfg);
  REQUIRE(topo.regions.size() == 1);
  REQUIRE(topo.lower_adjacent[0].empty());
}

TEST_CASE("region membership agrees with region_of") {
  const Topology topo = build_topology(default_cfg());
  RandomEngine rng(7);
  for (int i = 0; i < 2000; ++i) {
    const double a = rng.uniform(0.0, kTwoPi);
    const double r = topo.field_radius * std::sqrt(rng.uniform());
    const Point p{r * std::cos(a), r * std::sin(a)};
    const int region = topo.region_of(p);
    REQUIRE(region >= 0);
    REQUIRE(topo.regions[region].contains(p, topo.field_radius));
    int hits = 0;
    for (const Region& reg : topo.regions) {
      if (reg.contains(p, topo.field_radius)) ++hits;
    }
    REQUIRE(hits == 1);
  }
  REQUIRE(topo.region_of(Point{topo.field_radius + 1.0, 0.0}) == -1);
}

TEST_CASE("apportionment: 20% inner, the rest spread evenly") {
  SECTION("textbook case 100 nodes over 9 regions") {
    const auto counts = apportion_nodes(100, 9, 0.20);
    REQUIRE(counts[0] == 20);
    for (int i = 1; i < 9; ++i) REQUIRE(counts[i] == 10);
  }
  SECTION("9 nodes over 9 regions leaves nobody empty") {
    const auto counts = apportion_nodes(9, 9, 0.20);
    int total = 0;
    for (int c : counts) {
      REQUIRE(c >= 1);
      total += c;
    }
    REQUIRE(total == 9);
  }
  SECTION("totals always match (largest remainder property)") {
    RandomEngine rng(5);
    for (int t = 0; t < 200; ++t) {
      const int total = 1 + static_cast<int>(rng.uniform(0.0, 500.0));
      const int regions = 1 + static_cast<int>(rng.uniform(0.0, 16.0));
      const auto counts = apportion_nodes(total, regions, 0.20);
      int sum = 0;
      for (int c : counts) sum += c;
      REQUIRE(sum == total);
    }
  }
}

TEST_CASE("deployment places nodes inside their regions") {
  const NetworkConfig cfg = default_cfg();
  const Topology topo = build_topology(cfg);
  RandomEngine rng(cfg.rng_seed);
  const Deployment dep = deploy_nodes(cfg, topo, rng);
  REQUIRE(dep.nodes.size() == 100);
  REQUIRE(dep.empty_regions.empty());
  for (const NodeState& n : dep.nodes) {
    REQUIRE(topo.regions[n.region()].contains(n.position(), topo.field_radius));
    REQUIRE(n.residual() == cfg.initial_energy);
    REQUIRE(n.role() == Role::normal);
  }
}

TEST_CASE("deployment is bit-reproducible for a fixed seed") {
  const NetworkConfig cfg = default_cfg();
  const Topology topo = build_topology(cfg);
  RandomEngine a(99), b(99);
  const Deployment da = deploy_nodes(cfg, topo, a);
  const Deployment db = deploy_nodes(cfg, topo, b);
  for (std::size_t i = 0; i < da.nodes.size(); ++i) {
    REQUIRE(da.nodes[i].position().x == db.nodes[i].position().x);
    REQUIRE(da.nodes[i].position().y == db.nodes[i].position().y);
  }
}

TEST_CASE("in-region sampling is uniform (chi-square over equal-area cells)") {
  const Topology topo = build_topology(default_cfg());
  const Region& reg = topo.regions[1];
  RandomEngine rng(31337);

  constexpr int kRadial = 4;
  constexpr int kAngular = 4;
  constexpr int kSamples = 10000;
  int counts[kRadial][kAngular] = {};
  for (int i = 0; i < kSamples; ++i) {
    const Point p = sample_point_in_region(reg, rng);
    const double r2 = p.x * p.x + p.y * p.y;
    const double lo = reg.r_inner * reg.r_inner;
    const double hi = reg.r_outer * reg.r_outer;
    int rbin = static_cast<int>(kRadial * (r2 - lo) / (hi - lo));
    rbin = std::min(rbin, kRadial - 1);
    const double rel = normalize_angle(std::atan2(p.y, p.x) - reg.angle_start);
    int abin = static_cast<int>(kAngular * rel / reg.angle_span);
    abin = std::min(abin, kAngular - 1);
    ++counts[rbin][abin];
  }

  const double expected = static_cast<double>(kSamples) / (kRadial * kAngular);
  double chi2 = 0.0;
  for (auto& row : counts) {
    for (int c : row) {
      const double d = c - expected;
      chi2 += d * d / expected;
    }
  }
  // 15 degrees of freedom, significance 0.01
  REQUIRE(chi2 < 30.5779);
}

TEST_CASE("node charge clamps at zero and kills the node") {
  NodeState n(0, Point{1.0, 2.0}, 3, 0.5);
  REQUIRE(n.charge(0.2) == 0.2);
  REQUIRE(n.alive());
  REQUIRE(n.residual() == Catch::Approx(0.3));
  const double drained = n.charge(1.0);
  REQUIRE(drained == Catch::Approx(0.3));
  REQUIRE_FALSE(n.alive());
  REQUIRE(n.residual() == 0.0);
  REQUIRE(n.role() == Role::dead);
  REQUIRE(n.charge(0.1) == 0.0);
}
