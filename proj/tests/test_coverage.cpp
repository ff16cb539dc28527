#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <numbers>
#include <vector>

#include "coronasim/coverage.hpp"

using namespace coronasim;

TEST_CASE("point coverage is boundary inclusive") {
  const SensingDisk n{{0.0, 0.0}, 10.0};
  REQUIRE(point_covered(Point{6.0, 8.0}, n) == 1);  // distance exactly 10
  REQUIRE(point_covered(Point{10.001, 0.0}, n) == 0);
  REQUIRE(point_covered(Point{0.0, 0.0}, n) == 1);

  SECTION("random instances match the direct distance comparison") {
    RandomEngine rng(12);
    for (int i = 0; i < 2000; ++i) {
      const SensingDisk d{{rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0)},
                          rng.uniform(0.5, 30.0)};
      const Point p{rng.uniform(-80.0, 80.0), rng.uniform(-80.0, 80.0)};
      const int expected = distance(p, d.center) <= d.radius ? 1 : 0;
      REQUIRE(point_covered(p, d) == expected);
    }
  }

  SECTION("invalid queries are rejected") {
    REQUIRE_THROWS_AS(point_covered(Point{0.0, 0.0}, SensingDisk{{0.0, 0.0}, 0.0}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(
        point_covered(Point{std::numeric_limits<double>::quiet_NaN(), 0.0}, n),
        std::invalid_argument);
  }
}

TEST_CASE("union probability collapses to the disk-union indicator") {
  const std::vector<SensingDisk> both{{{0.0, 0.0}, 5.0}, {{1.0, 0.0}, 5.0}};
  REQUIRE(p_union(Point{0.5, 0.0}, both) == 1.0);

  const std::vector<SensingDisk> none{{{20.0, 0.0}, 5.0}, {{-20.0, 0.0}, 5.0}};
  REQUIRE(p_union(Point{0.0, 0.0}, none) == 0.0);

  REQUIRE_THROWS_AS(p_union(Point{0.0, 0.0}, std::span<const SensingDisk>{}),
                    std::invalid_argument);

  SECTION("union equals the max over per-node coverage") {
    RandomEngine rng(77);
    std::vector<SensingDisk> set;
    for (int i = 0; i < 5; ++i) {
      set.push_back({{rng.uniform(-40.0, 40.0), rng.uniform(-40.0, 40.0)},
                     rng.uniform(2.0, 25.0)});
    }
    for (int i = 0; i < 100; ++i) {
      const Point p{rng.uniform(-60.0, 60.0), rng.uniform(-60.0, 60.0)};
      int any = 0;
      for (const auto& d : set) any = std::max(any, point_covered(p, d));
      REQUIRE(p_union(p, set) == static_cast<double>(any));
    }
  }

  SECTION("complement identity") {
    RandomEngine rng(78);
    for (int i = 0; i < 500; ++i) {
      const SensingDisk d{{rng.uniform(-40.0, 40.0), rng.uniform(-40.0, 40.0)},
                          rng.uniform(2.0, 25.0)};
      const Point p{rng.uniform(-60.0, 60.0), rng.uniform(-60.0, 60.0)};
      const double cov = point_covered(p, d);
      const std::vector<SensingDisk> one{d};
      REQUIRE(1.0 - p_union(p, one) == 1.0 - cov);
    }
  }
}

TEST_CASE("coverage rate on the sampled field disk") {
  SECTION("one disk spanning the whole field") {
    const std::vector<SensingDisk> set{{{0.0, 0.0}, 150.0}};
    const CoverageReport rep = coverage_rate(set, Point{0.0, 0.0}, 150.0, 0.5);
    REQUIRE(rep.coverage_rate == 1.0);
    REQUIRE(rep.covered == rep.total);
  }
  SECTION("no nodes -> zero coverage") {
    const CoverageReport rep =
        coverage_rate(std::span<const SensingDisk>{}, Point{0.0, 0.0}, 150.0, 1.0);
    REQUIRE(rep.coverage_rate == 0.0);
  }
  SECTION("single mid-field disk matches the analytic area ratio") {
    const std::vector<SensingDisk> set{{{0.0, 0.0}, 15.0}};
    const CoverageReport rep = coverage_rate(set, Point{0.0, 0.0}, 150.0, 0.25);
    REQUIRE(std::abs(rep.coverage_rate - 0.01) < 5e-4);
  }
  SECTION("oversized resolution is rejected") {
    const std::vector<SensingDisk> set{{{0.0, 0.0}, 15.0}};
    REQUIRE_THROWS_AS(coverage_rate(set, Point{0.0, 0.0}, 150.0, 151.0),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(coverage_rate(set, Point{0.0, 0.0}, 150.0, 0.0),
                      std::invalid_argument);
  }
}

TEST_CASE("adding a node never decreases coverage") {
  RandomEngine rng(3);
  std::vector<SensingDisk> set;
  double last = 0.0;
  for (int i = 0; i < 12; ++i) {
    set.push_back({{rng.uniform(-120.0, 120.0), rng.uniform(-120.0, 120.0)},
                   rng.uniform(5.0, 40.0)});
    const double rate = coverage_rate(set, Point{0.0, 0.0}, 150.0, 2.0).coverage_rate;
    REQUIRE(rate >= last);
    last = rate;

    const Point probe{rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0)};
    if (set.size() >= 2) {
      const double with = p_union(probe, set);
      const double without =
          p_union(probe, std::span<const SensingDisk>(set.data(), set.size() - 1));
      REQUIRE(with >= without);
    }
  }
}

TEST_CASE("grid refinement shifts the rate less than the perimeter bound") {
  RandomEngine rng(9);
  std::vector<SensingDisk> set;
  for (int i = 0; i < 6; ++i) {
    set.push_back({{rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0)},
                   rng.uniform(10.0, 30.0)});
  }
  const double coarse = coverage_rate(set, Point{0.0, 0.0}, 150.0, 1.0).coverage_rate;
  const double fine = coverage_rate(set, Point{0.0, 0.0}, 150.0, 0.5).coverage_rate;
  double perimeter = 2.0 * std::numbers::pi * 150.0;  // field boundary cells move too
  for (const auto& d : set) perimeter += 2.0 * std::numbers::pi * d.radius;
  const double bound = perimeter * 1.0 / (std::numbers::pi * 150.0 * 150.0);
  REQUIRE(std::abs(coarse - fine) < bound);
}

TEST_CASE("union formula equals brute-force membership on a 64x64 lattice") {
  RandomEngine rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform(0.0, 8.0));
    std::vector<SensingDisk> set;
    for (int i = 0; i < n; ++i) {
      set.push_back({{rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0)},
                     rng.uniform(5.0, 60.0)});
    }
    for (int j = 0; j < 64; ++j) {
      for (int i = 0; i < 64; ++i) {
        const Point p{-100.0 + i * (200.0 / 63.0), -100.0 + j * (200.0 / 63.0)};
        int member = 0;
        for (const auto& d : set) {
          if (squared_distance(p, d.center) <= d.radius * d.radius) member = 1;
        }
        REQUIRE(p_union(p, set) == static_cast<double>(member));
      }
    }
  }
}

TEST_CASE("incremental tracker matches batch recomputation through deaths") {
  RandomEngine rng(55);
  std::vector<SensingDisk> disks;
  for (int i = 0; i < 30; ++i) {
    disks.push_back({{rng.uniform(-130.0, 130.0), rng.uniform(-130.0, 130.0)},
                     15.0});
  }
  CoverageTracker tracker(Point{0.0, 0.0}, 150.0, 1.0);
  for (const auto& d : disks) tracker.add(d);

  std::vector<SensingDisk> alive = disks;
  while (!alive.empty()) {
    const CoverageReport batch = coverage_rate(alive, Point{0.0, 0.0}, 150.0, 1.0);
    REQUIRE(tracker.rate() == batch.coverage_rate);
    REQUIRE(tracker.report().covered == batch.covered);
    tracker.remove(alive.back());
    alive.pop_back();
  }
  REQUIRE(tracker.rate() == 0.0);
}

TEST_CASE("coverage mask exports as a PGM") {
  const auto path = std::filesystem::temp_directory_path() / "coronasim_mask_test.pgm";
  const std::vector<SensingDisk> set{{{0.0, 0.0}, 75.0}};
  write_coverage_mask_pgm(path, set, Point{0.0, 0.0}, 150.0, 2.0);
  const ImageBuffer mask = read_pgm(path);
  REQUIRE(mask.width == 150);
  REQUIRE(mask.height == 150);
  // center covered, corner (outside the field disk) not
  REQUIRE(mask.at(75, 75) == 255.0);
  REQUIRE(mask.at(0, 0) == 0.0);
  std::filesystem::remove(path);
}
