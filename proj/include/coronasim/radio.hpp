#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace coronasim {

/// First-order radio energy model. Transmission pays an electronics
/// term plus an amplifier term that switches from d^2 (free space) to
/// d^4 (multipath) at the crossover distance d_o.
struct RadioParams {
  double e_elec = 50e-9;       ///< TX/RX electronics, J/bit
  double eps_fs = 10e-12;      ///< free-space amplifier, J/bit/m^2
  double eps_mp = 0.0013e-12;  ///< multipath amplifier, J/bit/m^4
  double e_agg = 5e-9;         ///< aggregation cost, J/bit/signal
  double d_o = crossover_distance(10e-12, 0.0013e-12);  ///< meters

  /// The unique crossover making the transmit cost curve continuous:
  /// eps_fs * d^2 == eps_mp * d^4 at d = sqrt(eps_fs / eps_mp).
  static double crossover_distance(double eps_fs, double eps_mp) {
    return std::sqrt(eps_fs / eps_mp);
  }

  /// Validation used at configuration boundaries. Amplifier
  /// coefficients may be zeroed to model distance-free electronics-only
  /// costs; everything else must be strictly positive.
  void validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    auto non_negative = [](double v) { return std::isfinite(v) && v >= 0.0; };
    if (!positive(e_elec) || !positive(e_agg) || !positive(d_o) ||
        !non_negative(eps_fs) || !non_negative(eps_mp)) {
      throw std::invalid_argument("radio parameters out of range");
    }
  }
};

namespace detail {
inline void check_bits(std::int64_t bits) {
  if (bits <= 0) throw std::invalid_argument("packet size must be positive");
}
}  // namespace detail

/// Energy to transmit `bits` over `distance_m` meters.
inline double tx_energy(const RadioParams& p, std::int64_t bits, double distance_m) {
  detail::check_bits(bits);
  if (!std::isfinite(distance_m) || distance_m < 0.0) {
    throw std::invalid_argument("transmit distance must be finite and non-negative");
  }
  const double d2 = distance_m * distance_m;
  const double amp = distance_m < p.d_o ? p.eps_fs * d2 : p.eps_mp * d2 * d2;
  return static_cast<double>(bits) * (p.e_elec + amp);
}

/// Energy to receive `bits`.
inline double rx_energy(const RadioParams& p, std::int64_t bits) {
  detail::check_bits(bits);
  return p.e_elec * static_cast<double>(bits);
}

/// Energy to fuse `signals` inputs of `bits` each into one packet.
inline double agg_energy(const RadioParams& p, std::int64_t bits, int signals) {
  detail::check_bits(bits);
  if (signals < 1) throw std::invalid_argument("aggregation needs at least one signal");
  return p.e_agg * static_cast<double>(bits) * static_cast<double>(signals);
}

}  // namespace coronasim
