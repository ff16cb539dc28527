#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "coronasim/common.hpp"

namespace coronasim {

/// Real-valued grayscale raster, nominal range 0..255. Values stay
/// unclamped through the processing chain; quantization happens only on
/// PGM export.
struct ImageBuffer {
  int width = 0;
  int height = 0;
  std::vector<double> samples;  ///< row-major, height rows of width

  ImageBuffer() = default;
  ImageBuffer(int w, int h, double fill = 0.0)
      : width(w), height(h), samples(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) { return samples[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return samples[static_cast<std::size_t>(y) * width + x]; }

  bool same_shape(const ImageBuffer& o) const {
    return width == o.width && height == o.height;
  }
};

namespace detail {

inline int pgm_token(std::istream& in) {
  // skips whitespace and '#' comments between header tokens
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  if (c == EOF) throw std::runtime_error("truncated PGM header");
  int value = 0;
  bool any = false;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    any = true;
    c = in.get();
  }
  if (!any) throw std::runtime_error("malformed PGM header");
  if (c != EOF) in.unget();
  return value;
}

}  // namespace detail

/// Reads a binary (P5) 8-bit PGM.
inline ImageBuffer read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image: " + path.string());
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (magic[0] != 'P' || magic[1] != '5') {
    throw std::runtime_error("not a binary PGM (P5): " + path.string());
  }
  const int w = detail::pgm_token(in);
  const int h = detail::pgm_token(in);
  const int maxval = detail::pgm_token(in);
  if (w <= 0 || h <= 0) throw std::runtime_error("bad PGM dimensions: " + path.string());
  if (maxval != 255) throw std::runtime_error("only 8-bit PGM supported: " + path.string());
  in.get();  // single whitespace after maxval
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw std::runtime_error("truncated PGM payload: " + path.string());
  }
  ImageBuffer img(w, h);
  for (std::size_t i = 0; i < raw.size(); ++i) img.samples[i] = raw[i];
  return img;
}

/// Writes a binary (P5) 8-bit PGM, clamping and rounding samples.
inline void write_pgm(const std::filesystem::path& path, const ImageBuffer& img) {
  if (img.width <= 0 || img.height <= 0) throw std::invalid_argument("empty image");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write image: " + path.string());
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  std::vector<unsigned char> raw(img.samples.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double v = std::lround(std::min(255.0, std::max(0.0, img.samples[i])));
    raw[i] = static_cast<unsigned char>(v);
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw std::runtime_error("short write: " + path.string());
}

inline double mse(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("image shape mismatch");
  NeumaierSum s;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const double d = a.samples[i] - b.samples[i];
    s.add(d * d);
  }
  return s.value() / static_cast<double>(a.samples.size());
}

/// Peak signal-to-noise ratio against a 255 peak; +infinity for
/// identical inputs.
inline double psnr(const ImageBuffer& reference, const ImageBuffer& test) {
  const double err = mse(reference, test);
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / err);
}

/// Mean SSIM over sliding 11x11 Gaussian windows (sigma 1.5) with the
/// standard constants C1 = (0.01*255)^2, C2 = (0.03*255)^2.
inline double ssim(const ImageBuffer& reference, const ImageBuffer& test) {
  if (!reference.same_shape(test)) throw std::invalid_argument("image shape mismatch");
  constexpr int kWin = 11;
  constexpr int kHalf = kWin / 2;
  if (reference.width < kWin || reference.height < kWin) {
    throw std::invalid_argument("image smaller than SSIM window");
  }
  constexpr double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  constexpr double c2 = (0.03 * 255.0) * (0.03 * 255.0);

  double weight[kWin][kWin];
  double wsum = 0.0;
  for (int y = 0; y < kWin; ++y) {
    for (int x = 0; x < kWin; ++x) {
      const double dx = x - kHalf;
      const double dy = y - kHalf;
      weight[y][x] = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
      wsum += weight[y][x];
    }
  }
  for (auto& row : weight) {
    for (double& w : row) w /= wsum;
  }

  NeumaierSum total;
  std::int64_t count = 0;
  for (int cy = kHalf; cy < reference.height - kHalf; ++cy) {
    for (int cx = kHalf; cx < reference.width - kHalf; ++cx) {
      double mu_a = 0.0, mu_b = 0.0;
      for (int y = 0; y < kWin; ++y) {
        for (int x = 0; x < kWin; ++x) {
          mu_a += weight[y][x] * reference.at(cx + x - kHalf, cy + y - kHalf);
          mu_b += weight[y][x] * test.at(cx + x - kHalf, cy + y - kHalf);
        }
      }
      double var_a = 0.0, var_b = 0.0, cov = 0.0;
      for (int y = 0; y < kWin; ++y) {
        for (int x = 0; x < kWin; ++x) {
          const double da = reference.at(cx + x - kHalf, cy + y - kHalf) - mu_a;
          const double db = test.at(cx + x - kHalf, cy + y - kHalf) - mu_b;
          var_a += weight[y][x] * da * da;
          var_b += weight[y][x] * db * db;
          cov += weight[y][x] * da * db;
        }
      }
      const double v = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                       ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      total.add(v);
      ++count;
    }
  }
  return total.value() / static_cast<double>(count);
}

}  // namespace coronasim
