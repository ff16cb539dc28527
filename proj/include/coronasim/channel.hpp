#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "coronasim/common.hpp"
#include "coronasim/image.hpp"

namespace coronasim {

/// AWGN channel corruption in pixel-intensity units.
struct NoiseSpec {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// y = x + n with n ~ N(0, sigma^2) i.i.d. The output stays real-valued;
/// clamping happens only at display export.
inline ImageBuffer add_awgn(const ImageBuffer& clean, const NoiseSpec& spec) {
  if (!(spec.sigma >= 0.0) || !std::isfinite(spec.sigma)) {
    throw std::invalid_argument("noise sigma must be finite and non-negative");
  }
  ImageBuffer noisy = clean;
  if (spec.sigma == 0.0) return noisy;
  RandomEngine rng(spec.seed);
  for (double& v : noisy.samples) v += spec.sigma * rng.gaussian();
  return noisy;
}

/// Mix Z = rho*P + delta*Q of independent unit Gaussians, used to verify
/// that aggregation preserves Gaussianity with total variance
/// rho^2 + delta^2.
struct GaussianMixInput {
  double rho = 1.0;
  double delta = 1.0;
  std::int64_t samples = 1000000;
};

struct Lemma1Report {
  double rho = 0.0;
  double delta = 0.0;
  std::int64_t samples = 0;
  double expected_variance = 0.0;
  double empirical_variance = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool variance_ok = false;
  double ks_statistic = 0.0;
  double ks_critical = 0.0;
  bool normality_ok = false;
  bool pass = false;
};

inline double standard_normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

/// Draws the mix and checks (a) the empirical variance against the 99%
/// confidence interval of rho^2 + delta^2 and (b) Kolmogorov-Smirnov
/// normality against N(0, rho^2 + delta^2) at significance 0.01.
inline Lemma1Report verify_lemma1(const GaussianMixInput& input, std::uint64_t seed) {
  if (!(input.rho > 0.0) || !(input.delta > 0.0)) {
    throw std::invalid_argument("mixing coefficients must be positive");
  }
  if (input.samples < 10000) {
    throw std::invalid_argument("lemma verification needs at least 1e4 samples");
  }

  Lemma1Report report;
  report.rho = input.rho;
  report.delta = input.delta;
  report.samples = input.samples;
  report.expected_variance = input.rho * input.rho + input.delta * input.delta;

  RandomEngine rng(seed);
  std::vector<double> z(static_cast<std::size_t>(input.samples));
  for (double& v : z) v = input.rho * rng.gaussian() + input.delta * rng.gaussian();

  NeumaierSum sum;
  for (double v : z) sum.add(v);
  const double n = static_cast<double>(input.samples);
  const double mean = sum.value() / n;
  NeumaierSum sq;
  for (double v : z) sq.add((v - mean) * (v - mean));
  report.empirical_variance = sq.value() / (n - 1.0);

  // chi-square CI via the normal approximation, ample at n >= 1e4
  const double z99 = 2.5758293035489004;
  const double rel = z99 * std::sqrt(2.0 / (n - 1.0));
  report.ci_low = report.expected_variance * (1.0 - rel);
  report.ci_high = report.expected_variance * (1.0 + rel);
  report.variance_ok = report.empirical_variance >= report.ci_low &&
                       report.empirical_variance <= report.ci_high;

  std::sort(z.begin(), z.end());
  const double sigma0 = std::sqrt(report.expected_variance);
  double d = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double f = standard_normal_cdf(z[i] / sigma0);
    d = std::max(d, f - static_cast<double>(i) / n);
    d = std::max(d, static_cast<double>(i + 1) / n - f);
  }
  report.ks_statistic = d;
  report.ks_critical = 1.6276 / std::sqrt(n);  // asymptotic alpha = 0.01
  report.normality_ok = d <= report.ks_critical;

  report.pass = report.variance_ok && report.normality_ok;
  return report;
}

}  // namespace coronasim
