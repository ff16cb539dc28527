#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "coronasim/common.hpp"
#include "coronasim/radio.hpp"

namespace coronasim {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// All tunables of one network scenario. Field names double as the keys
/// of the flat key=value config files.
struct NetworkConfig {
  double diameter = 300.0;          ///< field diameter D, meters
  int node_count = 100;             ///< L
  int corona_count = 0;             ///< eta; 0 derives max(1, round(D/L))
  int sectors_per_corona = 4;
  double initial_energy = 0.5;      ///< joules per node
  std::int64_t packet_bits = 4000;  ///< k
  double sensing_radius = 15.0;     ///< h, meters (uniform for all nodes)
  Point bs_position{0.0, 0.0};
  std::uint64_t rng_seed = 1;
  double deployment_fraction_inner = 0.20;
  double leach_p = 0.05;            ///< LEACH self-election probability
  bool dump_hops = false;           ///< emit per-round hop CSVs in lifetime runs
  RadioParams radio{};

  int resolved_corona_count() const;
  void validate() const;
};

/// eta = D/L rounded, clamped to at least one corona. The ratio
/// degenerates for L >> D, hence the clamp; an explicit corona_count in
/// the config always wins.
inline int corona_count_for(double diameter, int node_count) {
  if (!(diameter > 0.0) || node_count <= 0) {
    throw std::invalid_argument("corona count needs positive diameter and node count");
  }
  const long n = std::lround(diameter / static_cast<double>(node_count));
  return static_cast<int>(std::max(1L, n));
}

inline int NetworkConfig::resolved_corona_count() const {
  return corona_count > 0 ? corona_count : corona_count_for(diameter, node_count);
}

inline void NetworkConfig::validate() const {
  if (!std::isfinite(diameter) || diameter <= 0.0) throw ConfigError("diameter must be positive");
  if (node_count < 1) throw ConfigError("node_count must be at least 1");
  const int eta = resolved_corona_count();
  if (eta < 1 || eta > node_count) throw ConfigError("corona count must satisfy 1 <= eta <= node_count");
  if (sectors_per_corona < 2) throw ConfigError("sectors_per_corona must be at least 2");
  if (!std::isfinite(initial_energy) || initial_energy <= 0.0) throw ConfigError("initial_energy must be positive");
  if (packet_bits <= 0) throw ConfigError("packet_bits must be positive");
  if (!std::isfinite(sensing_radius) || sensing_radius <= 0.0) throw ConfigError("sensing_radius must be positive");
  if (!std::isfinite(bs_position.x) || !std::isfinite(bs_position.y)) throw ConfigError("bs_position must be finite");
  if (!(deployment_fraction_inner > 0.0) || !(deployment_fraction_inner < 1.0)) {
    throw ConfigError("deployment_fraction_inner must lie in (0, 1)");
  }
  if (!(leach_p >= 0.0) || !(leach_p <= 1.0)) throw ConfigError("leach_p must lie in [0, 1]");
  try {
    radio.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for '" + key + "': " + value);
  }
  if (used != value.size()) throw ConfigError("trailing junk in value for '" + key + "': " + value);
  return v;
}

inline long long parse_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::exception&) {
    throw ConfigError("bad integer value for '" + key + "': " + value);
  }
  if (used != value.size()) throw ConfigError("trailing junk in value for '" + key + "': " + value);
  return v;
}

inline Point parse_point(const std::string& key, const std::string& value) {
  std::string v = value;
  for (auto& c : v) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(v);
  Point p;
  std::string rest;
  if (!(in >> p.x >> p.y) || (in >> rest)) {
    throw ConfigError("expected two coordinates for '" + key + "': " + value);
  }
  return p;
}

}  // namespace detail

/// Parses the flat `key = value` format. '#' starts a comment, blank
/// lines are skipped, unknown keys are errors.
inline NetworkConfig parse_config(std::istream& in) {
  NetworkConfig cfg;
  bool d_o_overridden = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
    }

    if (key == "diameter") cfg.diameter = detail::parse_double(key, value);
    else if (key == "node_count") cfg.node_count = static_cast<int>(detail::parse_int(key, value));
    else if (key == "corona_count") cfg.corona_count = static_cast<int>(detail::parse_int(key, value));
    else if (key == "sectors_per_corona") cfg.sectors_per_corona = static_cast<int>(detail::parse_int(key, value));
    else if (key == "initial_energy") cfg.initial_energy = detail::parse_double(key, value);
    else if (key == "packet_bits") cfg.packet_bits = detail::parse_int(key, value);
    else if (key == "sensing_radius") cfg.sensing_radius = detail::parse_double(key, value);
    else if (key == "bs_position") cfg.bs_position = detail::parse_point(key, value);
    else if (key == "rng_seed") cfg.rng_seed = static_cast<std::uint64_t>(detail::parse_int(key, value));
    else if (key == "deployment_fraction_inner") cfg.deployment_fraction_inner = detail::parse_double(key, value);
    else if (key == "leach_p") cfg.leach_p = detail::parse_double(key, value);
    else if (key == "dump_hops") cfg.dump_hops = detail::parse_int(key, value) != 0;
    else if (key == "e_elec") cfg.radio.e_elec = detail::parse_double(key, value);
    else if (key == "eps_fs") cfg.radio.eps_fs = detail::parse_double(key, value);
    else if (key == "eps_mp") cfg.radio.eps_mp = detail::parse_double(key, value);
    else if (key == "e_agg") cfg.radio.e_agg = detail::parse_double(key, value);
    else if (key == "d_o") {
      cfg.radio.d_o = detail::parse_double(key, value);
      d_o_overridden = true;
    } else {
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  if (!d_o_overridden) {
    cfg.radio.d_o = RadioParams::crossover_distance(cfg.radio.eps_fs, cfg.radio.eps_mp);
  }
  cfg.validate();
  return cfg;
}

inline NetworkConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  return parse_config(in);
}

}  // namespace coronasim
