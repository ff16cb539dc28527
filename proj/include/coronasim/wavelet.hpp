#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "coronasim/image.hpp"

namespace coronasim {

/// Multi-level 2-D wavelet decomposition in the usual in-place quadrant
/// layout, plus per-coefficient activity probabilities filled in by the
/// shrinkage stage.
struct CoeffSet {
  int width = 0;   ///< coefficient grid (padded when needed)
  int height = 0;
  int source_width = 0;   ///< original image size, restored on inverse
  int source_height = 0;
  int depth = 0;
  std::vector<double> coeffs;
  std::vector<double> activity;
  double sigma_estimate = 0.0;

  double& at(int x, int y) { return coeffs[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return coeffs[static_cast<std::size_t>(y) * width + x]; }

  bool same_shape(const CoeffSet& o) const {
    return width == o.width && height == o.height && depth == o.depth &&
           source_width == o.source_width && source_height == o.source_height;
  }

  /// Approximation block is the top-left (width>>depth) x (height>>depth).
  bool is_detail(int x, int y) const {
    return x >= (width >> depth) || y >= (height >> depth);
  }
};

namespace detail {

// Daubechies-4 filter bank; orthonormal, two vanishing moments.
inline const double kD4[4] = {
    (1.0 + std::sqrt(3.0)) / (4.0 * std::sqrt(2.0)),
    (3.0 + std::sqrt(3.0)) / (4.0 * std::sqrt(2.0)),
    (3.0 - std::sqrt(3.0)) / (4.0 * std::sqrt(2.0)),
    (1.0 - std::sqrt(3.0)) / (4.0 * std::sqrt(2.0)),
};

/// One periodic analysis pass: x (length n, even) -> [approx | detail].
inline void dwt_step(const double* x, int n, double* out) {
  const double h0 = kD4[0], h1 = kD4[1], h2 = kD4[2], h3 = kD4[3];
  const int half = n / 2;
  for (int i = 0; i < half; ++i) {
    const int i0 = 2 * i;
    const int i1 = (2 * i + 1) % n;
    const int i2 = (2 * i + 2) % n;
    const int i3 = (2 * i + 3) % n;
    out[i] = h0 * x[i0] + h1 * x[i1] + h2 * x[i2] + h3 * x[i3];
    out[half + i] = h3 * x[i0] - h2 * x[i1] + h1 * x[i2] - h0 * x[i3];
  }
}

/// Inverse of dwt_step (transpose of the orthogonal analysis matrix).
inline void idwt_step(const double* in, int n, double* x) {
  const double h0 = kD4[0], h1 = kD4[1], h2 = kD4[2], h3 = kD4[3];
  const int half = n / 2;
  for (int i = 0; i < n; ++i) x[i] = 0.0;
  for (int i = 0; i < half; ++i) {
    const double s = in[i];
    const double d = in[half + i];
    const int i0 = 2 * i;
    const int i1 = (2 * i + 1) % n;
    const int i2 = (2 * i + 2) % n;
    const int i3 = (2 * i + 3) % n;
    x[i0] += h0 * s + h3 * d;
    x[i1] += h1 * s - h2 * d;
    x[i2] += h2 * s + h1 * d;
    x[i3] += h3 * s - h0 * d;
  }
}

inline int padded_extent(int n, int depth) {
  const int mult = 1 << depth;
  const int min_extent = 4 * (1 << (depth - 1));  // deepest block must fit the filter
  int m = std::max(n, min_extent);
  if (m % mult != 0) m += mult - m % mult;
  return m;
}

}  // namespace detail

/// Orthonormal separable D4 decomposition of `depth` levels. Inputs not
/// divisible by 2^depth are edge-padded first; energy identities are
/// exact on unpadded inputs.
inline CoeffSet forward_transform(const ImageBuffer& image, int depth) {
  if (image.width <= 0 || image.height <= 0) throw std::invalid_argument("empty image");
  if (depth < 1) throw std::invalid_argument("transform depth must be at least 1");

  CoeffSet cs;
  cs.source_width = image.width;
  cs.source_height = image.height;
  cs.depth = depth;
  cs.width = detail::padded_extent(image.width, depth);
  cs.height = detail::padded_extent(image.height, depth);
  cs.coeffs.assign(static_cast<std::size_t>(cs.width) * cs.height, 0.0);
  cs.activity.assign(cs.coeffs.size(), 1.0);

  for (int y = 0; y < cs.height; ++y) {
    const int sy = std::min(y, image.height - 1);
    for (int x = 0; x < cs.width; ++x) {
      const int sx = std::min(x, image.width - 1);
      cs.at(x, y) = image.at(sx, sy);
    }
  }

  std::vector<double> line(std::max(cs.width, cs.height));
  std::vector<double> out(line.size());
  int bw = cs.width;
  int bh = cs.height;
  for (int level = 0; level < depth; ++level) {
    for (int y = 0; y < bh; ++y) {
      for (int x = 0; x < bw; ++x) line[x] = cs.at(x, y);
      detail::dwt_step(line.data(), bw, out.data());
      for (int x = 0; x < bw; ++x) cs.at(x, y) = out[x];
    }
    for (int x = 0; x < bw; ++x) {
      for (int y = 0; y < bh; ++y) line[y] = cs.at(x, y);
      detail::dwt_step(line.data(), bh, out.data());
      for (int y = 0; y < bh; ++y) cs.at(x, y) = out[y];
    }
    bw /= 2;
    bh /= 2;
  }
  return cs;
}

/// Inverse transform; crops any analysis padding back off.
inline ImageBuffer inverse_transform(const CoeffSet& cs) {
  if (cs.width <= 0 || cs.height <= 0) throw std::invalid_argument("empty coefficient set");
  std::vector<double> work = cs.coeffs;
  auto at = [&](int x, int y) -> double& {
    return work[static_cast<std::size_t>(y) * cs.width + x];
  };

  std::vector<double> line(std::max(cs.width, cs.height));
  std::vector<double> out(line.size());
  for (int level = cs.depth - 1; level >= 0; --level) {
    const int bw = cs.width >> level;
    const int bh = cs.height >> level;
    for (int x = 0; x < bw; ++x) {
      for (int y = 0; y < bh; ++y) line[y] = at(x, y);
      detail::idwt_step(line.data(), bh, out.data());
      for (int y = 0; y < bh; ++y) at(x, y) = out[y];
    }
    for (int y = 0; y < bh; ++y) {
      for (int x = 0; x < bw; ++x) line[x] = at(x, y);
      detail::idwt_step(line.data(), bw, out.data());
      for (int x = 0; x < bw; ++x) at(x, y) = out[x];
    }
  }

  ImageBuffer img(cs.source_width, cs.source_height);
  for (int y = 0; y < cs.source_height; ++y) {
    for (int x = 0; x < cs.source_width; ++x) img.at(x, y) = at(x, y);
  }
  return img;
}

}  // namespace coronasim
