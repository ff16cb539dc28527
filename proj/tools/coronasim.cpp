// Batch front end for the corona lifetime simulator and the denoising
// benchmark. Modes: lifetime, denoise, coverage, lemma1, timing.
// Exit codes: 0 success, 1 usage/config error, 2 runtime failure.

#include <sys/utsname.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "coronasim/channel.hpp"
#include "coronasim/coverage.hpp"
#include "coronasim/denoise.hpp"
#include "coronasim/engine.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace coronasim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

/// Tracks artifacts created by this invocation so a failure can remove
/// every partial output. Files are staged to a .tmp sibling and renamed,
/// so an artifact is either fully written or absent.
class ArtifactSet {
 public:
  void write_text(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write " + path.string());
      out << content;
      if (!out) throw std::runtime_error("short write to " + path.string());
    }
    fs::rename(tmp, path);
    record(path);
  }

  void write_pgm_file(const fs::path& path, const ImageBuffer& img) {
    const fs::path tmp = path.string() + ".tmp";
    write_pgm(tmp, img);
    fs::rename(tmp, path);
    record(path);
  }

  void record(const fs::path& path) {
    std::lock_guard<std::mutex> lock(mu_);
    created_.push_back(path);
  }

  void remove_all() {
    std::lock_guard<std::mutex> lock(mu_);
    for (const fs::path& p : created_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
    created_.clear();
  }

 private:
  std::mutex mu_;
  std::vector<fs::path> created_;
};

int thread_budget(std::size_t cells) {
  unsigned n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("CORONA_SIM_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = static_cast<unsigned>(v);
  }
  return static_cast<int>(std::min<std::size_t>(n, std::max<std::size_t>(cells, 1)));
}

/// Runs job(i) for i in [0, count) over the thread budget. Cell outputs
/// only depend on the cell index, so scheduling cannot change results.
template <typename Fn>
void parallel_cells(std::size_t count, Fn&& job) {
  const int threads = thread_budget(count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::mutex err_mu;
  std::exception_ptr first_error;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string sigma_tag(double sigma) {
  if (sigma == std::floor(sigma) && sigma >= 0.0 && sigma < 1e9) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.0f", sigma);
    return buf;
  }
  std::string s = format_double(sigma);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  for (char& c : s) {
    if (c == '.') c = 'p';
  }
  return s;
}

json stat_block(const std::vector<int>& values) {
  json per_seed = json::array();
  double sum = 0.0;
  int lo = values.empty() ? 0 : values.front();
  int hi = lo;
  for (int v : values) {
    per_seed.push_back(v);
    sum += v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return json{{"per_seed", per_seed},
              {"mean", values.empty() ? 0.0 : sum / values.size()},
              {"min", lo},
              {"max", hi}};
}

struct LifetimeCell {
  NetworkConfig cfg;
  Protocol protocol;
  std::uint64_t seed;
  LifetimeSummary summary;
};

void run_lifetime_cell(LifetimeCell& cell, int max_rounds, double grid_res,
                       const fs::path& out_dir, ArtifactSet& artifacts) {
  NetworkConfig cfg = cell.cfg;
  cfg.rng_seed = cell.seed;

  std::ostringstream hops;
  RunOptions options;
  options.coverage_resolution = grid_res;
  if (cfg.dump_hops) {
    write_hops_csv_header(hops);
    options.ledger_sink = [&hops](const RoundLedger& ledger) { write_hops_csv(hops, ledger); };
  }

  const RunResult result = run(cfg, cell.protocol, max_rounds, options);
  cell.summary = result.summary;

  char stem[128];
  std::snprintf(stem, sizeof(stem), "%s_L%d_seed%llu", protocol_name(cell.protocol),
                cfg.node_count, static_cast<unsigned long long>(cell.seed));

  {
    std::ostringstream csv;
    write_metrics_csv_header(csv);
    write_metrics_csv(csv, result.metrics);
    artifacts.write_text(out_dir / (std::string("metrics_") + stem + ".csv"), csv.str());
  }
  {
    std::ostringstream alive, energy;
    char line[96];
    for (const RoundMetrics& m : result.metrics) {
      std::snprintf(line, sizeof(line), "%d %d\n", m.round, m.alive);
      alive << line;
      std::snprintf(line, sizeof(line), "%d %.17g\n", m.round, m.residual_total);
      energy << line;
    }
    artifacts.write_text(out_dir / (std::string("alive_") + stem + ".dat"), alive.str());
    artifacts.write_text(out_dir / (std::string("energy_") + stem + ".dat"), energy.str());
  }
  if (cfg.dump_hops) {
    artifacts.write_text(out_dir / (std::string("hops_") + stem + ".csv"), hops.str());
  }
}

int mode_lifetime(const std::vector<NetworkConfig>& configs, const std::vector<Protocol>& protocols,
                  const std::vector<std::uint64_t>& seeds, int max_rounds, double grid_res,
                  const fs::path& out_dir, ArtifactSet& artifacts) {
  std::vector<LifetimeCell> cells;
  for (const NetworkConfig& cfg : configs) {
    for (Protocol proto : protocols) {
      for (std::uint64_t seed : seeds) {
        cells.push_back({cfg, proto, seed, {}});
      }
    }
  }
  parallel_cells(cells.size(), [&](std::size_t i) {
    run_lifetime_cell(cells[i], max_rounds, grid_res, out_dir, artifacts);
  });

  // one summary per (config, protocol), aggregated over seeds
  std::size_t idx = 0;
  for (const NetworkConfig& cfg : configs) {
    for (Protocol proto : protocols) {
      std::vector<int> fnd, half, adt, rounds;
      for (std::size_t s = 0; s < seeds.size(); ++s) {
        const LifetimeSummary& sum = cells[idx + s].summary;
        fnd.push_back(sum.first_death_round);
        half.push_back(sum.half_death_round);
        adt.push_back(sum.all_death_round);
        rounds.push_back(sum.rounds_simulated);
      }
      idx += seeds.size();

      json j{{"protocol", protocol_name(proto)},
             {"node_count", cfg.node_count},
             {"max_rounds", max_rounds},
             {"seeds", seeds},
             {"first_node_death", stat_block(fnd)},
             {"half_node_death", stat_block(half)},
             {"all_node_death", stat_block(adt)},
             {"rounds_simulated", stat_block(rounds)}};
      char name[96];
      std::snprintf(name, sizeof(name), "summary_%s_L%d.json", protocol_name(proto),
                    cfg.node_count);
      artifacts.write_text(out_dir / name, j.dump(2) + "\n");
    }
  }
  return kExitOk;
}

struct DenoiseRow {
  std::string image;
  double sigma = 0.0;
  double psnr_noisy = 0.0;
  double ssim_noisy = 0.0;
  double psnr_denoised = 0.0;
  double ssim_denoised = 0.0;
  bool valid = false;
};

int mode_denoise(const std::vector<std::string>& images, const std::vector<double>& sigmas,
                 std::uint64_t base_seed, int copies, const fs::path& out_dir,
                 ArtifactSet& artifacts) {
  std::vector<std::string> missing;
  std::vector<fs::path> present;
  for (const std::string& img : images) {
    if (fs::exists(img)) {
      present.push_back(img);
    } else {
      missing.push_back(img);
    }
  }
  for (const std::string& m : missing) {
    std::cerr << "missing image, skipped: " << m << "\n";
  }

  struct Cell {
    fs::path image;
    double sigma;
  };
  std::vector<Cell> cells;
  for (const fs::path& img : present) {
    for (double sigma : sigmas) cells.push_back({img, sigma});
  }
  std::vector<DenoiseRow> rows(cells.size());

  parallel_cells(cells.size(), [&](std::size_t i) {
    const Cell& cell = cells[i];
    const std::string name = cell.image.stem().string();
    const ImageBuffer clean = read_pgm(cell.image);

    std::vector<ImageBuffer> noisy;
    noisy.reserve(copies);
    for (int c = 0; c < copies; ++c) {
      noisy.push_back(add_awgn(
          clean, {cell.sigma, derive_seed(base_seed, i, static_cast<std::uint64_t>(c))}));
    }

    PipelineParams params;
    params.sigma = cell.sigma;
    const PipelineResult res = denoise_pipeline(noisy, params);

    DenoiseRow& row = rows[i];
    row.image = name;
    row.sigma = cell.sigma;
    row.psnr_noisy = psnr(clean, noisy.front());
    row.ssim_noisy = ssim(clean, noisy.front());
    row.psnr_denoised = psnr(clean, res.final_image);
    row.ssim_denoised = ssim(clean, res.final_image);
    row.valid = true;

    const std::string stem = name + "_sigma" + sigma_tag(cell.sigma);
    artifacts.write_pgm_file(out_dir / (stem + "_noisy.pgm"), noisy.front());
    artifacts.write_pgm_file(out_dir / (stem + "_partial.pgm"), res.fused);
    artifacts.write_pgm_file(out_dir / (stem + "_denoised.pgm"), res.final_image);
  });

  {
    std::ostringstream csv;
    csv << "image,sigma,psnr_noisy,ssim_noisy,psnr_denoised,ssim_denoised\n";
    for (const DenoiseRow& row : rows) {
      if (!row.valid) continue;
      csv << row.image << ',' << sigma_tag(row.sigma) << ',' << format_double(row.psnr_noisy)
          << ',' << format_double(row.ssim_noisy) << ',' << format_double(row.psnr_denoised)
          << ',' << format_double(row.ssim_denoised) << '\n';
    }
    artifacts.write_text(out_dir / "denoise_results.csv", csv.str());
  }

  {
    // Table-2-like rendering: denoised over noisy per sigma block
    std::ostringstream tab;
    tab << "PSNR [dB] / SSIM per image and noise level\n\n";
    tab << "sigma  row       ";
    for (const fs::path& img : present) {
      char cell[32];
      std::snprintf(cell, sizeof(cell), " %-14s", img.stem().string().substr(0, 14).c_str());
      tab << cell;
    }
    tab << '\n';
    for (double sigma : sigmas) {
      for (const bool denoised : {true, false}) {
        char head[32];
        if (denoised) {
          std::snprintf(head, sizeof(head), "%-6s %-9s", sigma_tag(sigma).c_str(), "denoised");
        } else {
          std::snprintf(head, sizeof(head), "%-6s %-9s", "", "noisy");
        }
        tab << head;
        for (std::size_t i = 0; i < present.size(); ++i) {
          const DenoiseRow* row = nullptr;
          for (const DenoiseRow& r : rows) {
            if (r.valid && r.sigma == sigma && r.image == present[i].stem().string()) row = &r;
          }
          char cell[32];
          if (row == nullptr) {
            std::snprintf(cell, sizeof(cell), " %-14s", "-");
          } else {
            std::snprintf(cell, sizeof(cell), " %5.2f/%-8.4f",
                          denoised ? row->psnr_denoised : row->psnr_noisy,
                          denoised ? row->ssim_denoised : row->ssim_noisy);
          }
          tab << cell;
        }
        tab << '\n';
      }
    }
    artifacts.write_text(out_dir / "table_summary.txt", tab.str());
  }

  return missing.empty() ? kExitOk : kExitRuntime;
}

int mode_coverage(const NetworkConfig& cfg, std::uint64_t seed, double grid_res,
                  const fs::path& out_dir, ArtifactSet& artifacts) {
  NetworkConfig scenario = cfg;
  scenario.rng_seed = seed;
  const Topology topo = build_topology(scenario);
  RandomEngine rng(scenario.rng_seed);
  const Deployment dep = deploy_nodes(scenario, topo, rng);

  std::vector<SensingDisk> disks;
  for (const NodeState& n : dep.nodes) disks.push_back({n.position(), scenario.sensing_radius});

  const CoverageReport report =
      coverage_rate(disks, Point{0.0, 0.0}, topo.field_radius, grid_res);

  const fs::path mask = out_dir / "coverage_mask.pgm";
  const fs::path tmp = mask.string() + ".tmp";
  write_coverage_mask_pgm(tmp, disks, Point{0.0, 0.0}, topo.field_radius, grid_res);
  fs::rename(tmp, mask);
  artifacts.record(mask);

  json j{{"node_count", scenario.node_count},
         {"seed", seed},
         {"sensing_radius_m", scenario.sensing_radius},
         {"resolution_m", report.resolution_m},
         {"covered_cells", report.covered},
         {"total_cells", report.total},
         {"coverage_rate", report.coverage_rate},
         {"empty_regions", dep.empty_regions}};
  artifacts.write_text(out_dir / "coverage_report.json", j.dump(2) + "\n");
  std::cout << "coverage_rate " << format_double(report.coverage_rate) << "\n";
  return kExitOk;
}

int mode_lemma1(std::uint64_t seed, const fs::path& out_dir, ArtifactSet& artifacts) {
  const std::vector<std::pair<double, double>> pairs{{3.0, 4.0}, {1.0, 1.0}, {0.5, 2.0}};
  json results = json::array();
  bool all_pass = true;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [rho, delta] = pairs[i];
    const Lemma1Report rep = verify_lemma1({rho, delta, 1000000}, derive_seed(seed, i));
    all_pass = all_pass && rep.pass;
    results.push_back(json{{"rho", rho},
                           {"delta", delta},
                           {"samples", rep.samples},
                           {"expected_variance", rep.expected_variance},
                           {"empirical_variance", rep.empirical_variance},
                           {"ci_low", rep.ci_low},
                           {"ci_high", rep.ci_high},
                           {"variance_ok", rep.variance_ok},
                           {"ks_statistic", rep.ks_statistic},
                           {"ks_critical", rep.ks_critical},
                           {"normality_ok", rep.normality_ok},
                           {"pass", rep.pass}});
    std::printf("rho=%.2f delta=%.2f: variance %.4f (expected %.4f) ks %.5f -> %s\n", rho,
                delta, rep.empirical_variance, rep.expected_variance, rep.ks_statistic,
                rep.pass ? "pass" : "FAIL");
  }
  artifacts.write_text(out_dir / "lemma1_report.json",
                       json{{"seed", seed}, {"results", results}}.dump(2) + "\n");
  return all_pass ? kExitOk : kExitRuntime;
}

int mode_timing(const std::vector<NetworkConfig>& configs, const std::vector<Protocol>& protocols,
                int max_rounds, int trials, const fs::path& out_dir, ArtifactSet& artifacts) {
  utsname uts{};
  uname(&uts);
  std::string machine = std::string(uts.sysname) + " " + uts.release + " " + uts.machine +
                        ", hw_concurrency=" + std::to_string(std::thread::hardware_concurrency());

  json cells = json::array();
  for (const NetworkConfig& cfg : configs) {
    for (Protocol proto : protocols) {
      std::vector<double> secs;
      for (int t = 0; t < trials; ++t) {
        NetworkConfig c = cfg;
        c.rng_seed = cfg.rng_seed + static_cast<std::uint64_t>(t);
        const auto t0 = std::chrono::steady_clock::now();
        run(c, proto, max_rounds);
        const auto t1 = std::chrono::steady_clock::now();
        secs.push_back(std::chrono::duration<double>(t1 - t0).count());
      }
      std::vector<double> sorted = secs;
      std::sort(sorted.begin(), sorted.end());
      const double median = sorted[sorted.size() / 2];
      cells.push_back(json{{"protocol", protocol_name(proto)},
                           {"node_count", cfg.node_count},
                           {"max_rounds", max_rounds},
                           {"trials", trials},
                           {"seconds", secs},
                           {"median_seconds", median}});
      std::printf("%s L=%d: median %.3f s over %d trials\n", protocol_name(proto),
                  cfg.node_count, median, trials);
    }
  }
  artifacts.write_text(out_dir / "timing_report.json",
                       json{{"machine", machine}, {"cells", cells}}.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"corona-based WSN lifetime simulator and transform-domain denoising benchmark"};

  std::string mode;
  std::vector<std::string> config_paths;
  std::string out_dir_arg;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> protocol_names;
  std::vector<double> sigmas{5, 10, 15, 20, 25, 50, 100};
  std::vector<std::string> images;
  int max_rounds = 8000;
  double grid_res = 0.5;
  int copies = 3;
  int trials = 3;

  app.add_option("--mode", mode, "lifetime | denoise | coverage | lemma1 | timing")
      ->required()
      ->check(CLI::IsMember({"lifetime", "denoise", "coverage", "lemma1", "timing"}));
  app.add_option("--config", config_paths, "scenario config file(s), key=value format");
  app.add_option("--out", out_dir_arg, "output directory")->required();
  app.add_option("--seeds", seeds, "comma-separated RNG seeds")->delimiter(',');
  app.add_option("--protocols", protocol_names, "protocols to run (proposed, leach)")
      ->delimiter(',');
  app.add_option("--sigmas", sigmas, "noise levels for denoise mode")->delimiter(',');
  app.add_option("--images", images, "input PGM images for denoise mode")->delimiter(',');
  app.add_option("--max-rounds", max_rounds, "simulation horizon in rounds");
  app.add_option("--grid-res", grid_res, "coverage lattice resolution in meters");
  app.add_option("--copies", copies, "collaborating noisy copies per denoise cell");
  app.add_option("--trials", trials, "repetitions per timing cell (median reported)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);  // prints help or the parse diagnostic
    return rc == 0 ? kExitOk : kExitUsage;
  }

  ArtifactSet artifacts;
  try {
    std::vector<NetworkConfig> configs;
    for (const std::string& path : config_paths) configs.push_back(load_config(path));

    std::vector<Protocol> protocols;
    for (const std::string& name : protocol_names) protocols.push_back(protocol_from_name(name));
    if (protocols.empty()) protocols = {Protocol::proposed, Protocol::leach};

    const fs::path out_dir = out_dir_arg;
    fs::create_directories(out_dir);

    if (mode == "lifetime") {
      if (configs.empty()) configs.push_back(NetworkConfig{});
      if (seeds.empty()) {
        std::cerr << "lifetime mode needs a non-empty --seeds list\n";
        return kExitUsage;
      }
      if (max_rounds < 1) {
        std::cerr << "--max-rounds must be at least 1\n";
        return kExitUsage;
      }
      return mode_lifetime(configs, protocols, seeds, max_rounds, grid_res, out_dir, artifacts);
    }
    if (mode == "denoise") {
      if (images.empty()) {
        std::cerr << "denoise mode needs a non-empty --images list\n";
        return kExitUsage;
      }
      if (copies < 1) {
        std::cerr << "--copies must be at least 1\n";
        return kExitUsage;
      }
      for (double s : sigmas) {
        if (!(s >= 0.0)) {
          std::cerr << "sigmas must be non-negative\n";
          return kExitUsage;
        }
      }
      return mode_denoise(images, sigmas, seeds.empty() ? 1 : seeds.front(), copies, out_dir,
                          artifacts);
    }
    if (mode == "coverage") {
      if (configs.empty()) configs.push_back(NetworkConfig{});
      const std::uint64_t seed = seeds.empty() ? configs.front().rng_seed : seeds.front();
      return mode_coverage(configs.front(), seed, grid_res, out_dir, artifacts);
    }
    if (mode == "lemma1") {
      return mode_lemma1(seeds.empty() ? 1 : seeds.front(), out_dir, artifacts);
    }
    // timing
    if (configs.empty()) configs.push_back(NetworkConfig{});
    if (trials < 3) {
      std::cerr << "--trials must be at least 3 for a stable median\n";
      return kExitUsage;
    }
    return mode_timing(configs, protocols, max_rounds, trials, out_dir, artifacts);
  } catch (const ConfigError& e) {
    artifacts.remove_all();
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    artifacts.remove_all();
    std::cerr << "runtime failure: " << e.what() << "\n";
    return kExitRuntime;
  }
}
