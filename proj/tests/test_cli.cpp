#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const char* env_or_null(const char* name) {
  const char* v = std::getenv(name);
  return (v != nullptr && v[0] != '\0') ? v : nullptr;
}

const char* cli_path() { return env_or_null("CORONASIM_CLI"); }
const char* images_dir() { return env_or_null("CORONASIM_IMAGES"); }

int run_cli(const std::string& args) {
  const std::string cmd = std::string(cli_path()) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return -1;
}

std::map<std::string, std::string> slurp_dir(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    files[fs::relative(entry.path(), dir).string()] =
        std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  }
  return files;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("cli exit code contract") {
  if (cli_path() == nullptr) SKIP("CORONASIM_CLI not set");

  SECTION("help exits zero") { REQUIRE(run_cli("--help") == 0); }
  SECTION("unknown mode is a usage error") {
    REQUIRE(run_cli("--mode bogus --out /tmp/coronasim_cli_x") == 1);
  }
  SECTION("lifetime without seeds is a usage error") {
    REQUIRE(run_cli("--mode lifetime --out /tmp/coronasim_cli_x") == 1);
  }
  SECTION("missing config file is a usage error") {
    REQUIRE(run_cli("--mode lifetime --seeds 1 --config /does/not/exist "
                    "--out /tmp/coronasim_cli_x") == 1);
  }
  SECTION("bad config key is a usage error") {
    const fs::path dir = fresh_dir("coronasim_cli_badcfg");
    std::ofstream(dir / "bad.cfg") << "nodecount = 5\n";
    REQUIRE(run_cli("--mode lifetime --seeds 1 --config " + (dir / "bad.cfg").string() +
                    " --out " + (dir / "out").string()) == 1);
  }
}

TEST_CASE("lifetime artifacts and determinism") {
  if (cli_path() == nullptr) SKIP("CORONASIM_CLI not set");
  const fs::path a = fresh_dir("coronasim_cli_lt_a");
  const fs::path b = fresh_dir("coronasim_cli_lt_b");
  const std::string args = "--mode lifetime --seeds 3,4 --max-rounds 120 --grid-res 2 --out ";
  REQUIRE(run_cli(args + a.string()) == 0);
  REQUIRE(run_cli(args + b.string()) == 0);

  const auto fa = slurp_dir(a);
  const auto fb = slurp_dir(b);
  REQUIRE(fa.size() == 14);  // (3 files x 2 protocols x 2 seeds) + 2 summaries
  REQUIRE(fa == fb);         // byte-identical artifacts

  REQUIRE(fa.count("metrics_proposed_L100_seed3.csv") == 1);
  REQUIRE(fa.count("summary_leach_L100.json") == 1);
  REQUIRE(fa.count("alive_leach_L100_seed4.dat") == 1);
  REQUIRE(fa.count("energy_proposed_L100_seed4.dat") == 1);

  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("lifetime sweeps over several configs emit one summary per protocol and size") {
  if (cli_path() == nullptr) SKIP("CORONASIM_CLI not set");
  const fs::path dir = fresh_dir("coronasim_cli_sweep");
  std::ofstream(dir / "a.cfg") << "node_count = 100\ndiameter = 300\n";
  std::ofstream(dir / "b.cfg") << "node_count = 250\ndiameter = 300\ncorona_count = 3\n";
  REQUIRE(run_cli("--mode lifetime --seeds 1,2 --max-rounds 40 --grid-res 2 --config " +
                  (dir / "a.cfg").string() + " --config " + (dir / "b.cfg").string() +
                  " --out " + (dir / "out").string()) == 0);
  for (const char* proto : {"proposed", "leach"}) {
    for (const char* size : {"L100", "L250"}) {
      const fs::path summary = dir / "out" / (std::string("summary_") + proto + "_" + size + ".json");
      REQUIRE(fs::exists(summary));
      std::ifstream in(summary);
      const nlohmann::json j = nlohmann::json::parse(in);
      REQUIRE(j["seeds"].size() == 2);
      REQUIRE(j["first_node_death"].contains("mean"));
      REQUIRE(j["all_node_death"].contains("per_seed"));
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("hop dumps appear when the config asks for them") {
  if (cli_path() == nullptr) SKIP("CORONASIM_CLI not set");
  const fs::path dir = fresh_dir("coronasim_cli_hops");
  std::ofstream(dir / "hops.cfg") << "dump_hops = 1\nnode_count = 100\ndiameter = 300\n";
  REQUIRE(run_cli("--mode lifetime --seeds 1 --max-rounds 5 --grid-res 2 --config " +
                  (dir / "hops.cfg").string() + " --out " + (dir / "out").string()) == 0);
  std::ifstream hops(dir / "out" / "hops_proposed_L100_seed1.csv");
  REQUIRE(hops.good());
  std::string header;
  std::getline(hops, header);
  REQUIRE(header == "round,src,dst,bits,distance_m,energy_j");
  fs::remove_all(dir);
}

TEST_CASE("denoise artifacts, determinism, and the missing-image path") {
  if (cli_path() == nullptr || images_dir() == nullptr) SKIP("CLI env not set");
  const std::string image = std::string(images_dir()) + "/house.pgm";
  if (!fs::exists(image)) SKIP("benchmark images not prepared");

  const fs::path a = fresh_dir("coronasim_cli_dn_a");
  const fs::path b = fresh_dir("coronasim_cli_dn_b");
  const std::string args = "--mode denoise --sigmas 10 --images " + image + " --out ";
  REQUIRE(run_cli(args + a.string()) == 0);
  REQUIRE(run_cli(args + b.string()) == 0);
  REQUIRE(slurp_dir(a) == slurp_dir(b));
  REQUIRE(fs::exists(a / "house_sigma10_noisy.pgm"));
  REQUIRE(fs::exists(a / "house_sigma10_partial.pgm"));
  REQUIRE(fs::exists(a / "house_sigma10_denoised.pgm"));
  REQUIRE(fs::exists(a / "table_summary.txt"));

  // analytic hook: the noisy-PSNR column must track 20*log10(255/sigma)
  std::ifstream csv(a / "denoise_results.csv");
  std::string header, row;
  std::getline(csv, header);
  REQUIRE(header == "image,sigma,psnr_noisy,ssim_noisy,psnr_denoised,ssim_denoised");
  std::getline(csv, row);
  REQUIRE(row.rfind("house,10,", 0) == 0);
  const double psnr_noisy = std::strtod(row.c_str() + std::string("house,10,").size(), nullptr);
  REQUIRE(psnr_noisy == Catch::Approx(20.0 * std::log10(255.0 / 10.0)).margin(0.3));

  SECTION("missing images are skipped with a nonzero final status") {
    const fs::path c = fresh_dir("coronasim_cli_dn_c");
    REQUIRE(run_cli("--mode denoise --sigmas 10 --images /no/such.pgm," + image + " --out " +
                    c.string()) == 2);
    REQUIRE(fs::exists(c / "house_sigma10_denoised.pgm"));  // the rest still ran
    fs::remove_all(c);
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("coverage and lemma1 modes emit their reports deterministically") {
  if (cli_path() == nullptr) SKIP("CORONASIM_CLI not set");
  const fs::path a = fresh_dir("coronasim_cli_cv_a");
  const fs::path b = fresh_dir("coronasim_cli_cv_b");
  REQUIRE(run_cli("--mode coverage --seeds 5 --grid-res 1 --out " + a.string()) == 0);
  REQUIRE(run_cli("--mode coverage --seeds 5 --grid-res 1 --out " + b.string()) == 0);
  REQUIRE(slurp_dir(a) == slurp_dir(b));
  REQUIRE(fs::exists(a / "coverage_mask.pgm"));
  REQUIRE(fs::exists(a / "coverage_report.json"));
  fs::remove_all(a);
  fs::remove_all(b);

  const fs::path l = fresh_dir("coronasim_cli_lm");
  REQUIRE(run_cli("--mode lemma1 --seeds 2 --out " + l.string()) == 0);
  REQUIRE(fs::exists(l / "lemma1_report.json"));
  fs::remove_all(l);
}

TEST_CASE("timing mode reports scaling and a machine descriptor") {
  if (cli_path() == nullptr) SKIP("CORONASIM_CLI not set");
  const fs::path dir = fresh_dir("coronasim_cli_tm");
  std::ofstream(dir / "small.cfg") << "node_count = 100\ndiameter = 300\n";
  std::ofstream(dir / "large.cfg") << "node_count = 1000\ndiameter = 300\ncorona_count = 3\n";
  REQUIRE(run_cli("--mode timing --max-rounds 150 --protocols proposed --config " +
                  (dir / "small.cfg").string() + " --config " + (dir / "large.cfg").string() +
                  " --out " + (dir / "out").string()) == 0);
  std::ifstream in(dir / "out" / "timing_report.json");
  const nlohmann::json report = nlohmann::json::parse(in);
  REQUIRE_FALSE(report["machine"].get<std::string>().empty());

  double median_small = -1.0, median_large = -1.0;
  for (const auto& cell : report["cells"]) {
    REQUIRE(cell["trials"].get<int>() >= 3);
    if (cell["node_count"] == 100) median_small = cell["median_seconds"].get<double>();
    if (cell["node_count"] == 1000) median_large = cell["median_seconds"].get<double>();
  }
  REQUIRE(median_small > 0.0);
  // larger networks must take longer per run
  REQUIRE(median_large > median_small);
  fs::remove_all(dir);
}
