#include "poresim/imagecore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "poresim/error.hpp"
#include "poresim/parallel.hpp"

namespace poresim {

Raster::Raster(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width <= 0 || height <= 0)
    throw InvalidInput("raster dimensions must be positive");
  if (channels != 1 && channels != 3)
    throw InvalidInput("raster must have 1 or 3 channels");
  data_.assign(pixel_count() * static_cast<std::size_t>(channels), fill);
}

Raster::Raster(int width, int height, int channels, std::vector<double> data)
    : Raster(width, height, channels) {
  if (data.size() != data_.size())
    throw InvalidInput("raster data length " + std::to_string(data.size()) +
                       " does not match " + std::to_string(data_.size()));
  data_ = std::move(data);
}

Raster to_gray(const Raster& img) {
  if (img.channels() != 3)
    throw InvalidInput("to_gray expects a 3-channel raster, got " +
                       std::to_string(img.channels()));
  Raster out(img.width(), img.height(), 1);
  const auto& src = img.data();
  auto& dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
  }
  return out;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw InvalidParameter("gaussian sigma must be > 0");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

Raster gaussian_blur(const Raster& img, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  if (img.channels() != 1)
    throw InvalidInput("gaussian_blur expects a gray raster");
  const int w = img.width();
  const int h = img.height();
  const int radius = static_cast<int>(kernel.size() / 2);

  Raster tmp(w, h, 1);
  parallel_for(static_cast<std::size_t>(h), [&](std::size_t yi) {
    const int y = static_cast<int>(yi);
    const auto src = img.row(y);
    auto dst = tmp.row(y);
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int xx = std::clamp(x + k, 0, w - 1);
        acc += kernel[k + radius] * src[xx];
      }
      dst[x] = acc;
    }
  });

  Raster out(w, h, 1);
  parallel_for(static_cast<std::size_t>(h), [&](std::size_t yi) {
    const int y = static_cast<int>(yi);
    auto dst = out.row(y);
    for (int k = -radius; k <= radius; ++k) {
      const auto src = tmp.row(std::clamp(y + k, 0, h - 1));
      const double wk = kernel[k + radius];
      for (int x = 0; x < w; ++x) dst[x] += wk * src[x];
    }
  });
  return out;
}

Raster dog_filter(const Raster& img, double sigma1, double sigma2) {
  if (!(sigma1 > 0.0) || !(sigma1 < sigma2))
    throw InvalidParameter("dog_filter requires 0 < sigma1 < sigma2");
  Raster fine = gaussian_blur(img, sigma1);
  const Raster coarse = gaussian_blur(img, sigma2);
  auto& d = fine.data();
  const auto& c = coarse.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] -= c[i];
  return fine;
}

namespace {

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t)
                                   : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

}  // namespace

LabPixel rgb_to_lab(double r, double g, double b) {
  for (double c : {r, g, b}) {
    if (!(c >= 0.0 && c <= 1.0))
      throw InvalidInput("rgb_to_lab channel outside [0,1]: " + std::to_string(c));
  }
  const double lr = srgb_to_linear(r);
  const double lg = srgb_to_linear(g);
  const double lb = srgb_to_linear(b);

  // sRGB primaries, D65 reference white.
  const double x = 0.4124564 * lr + 0.3575761 * lg + 0.1804375 * lb;
  const double y = 0.2126729 * lr + 0.7151522 * lg + 0.0721750 * lb;
  const double z = 0.0193339 * lr + 0.1191920 * lg + 0.9503041 * lb;
  constexpr double xn = 0.95047;
  constexpr double yn = 1.0;
  constexpr double zn = 1.08883;

  const double fx = lab_f(x / xn);
  const double fy = lab_f(y / yn);
  const double fz = lab_f(z / zn);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

double bilinear_sample(const Raster& img, double x, double y, int c) {
  const double max_x = img.width() - 1;
  const double max_y = img.height() - 1;
  x = std::isnan(x) ? 0.0 : std::clamp(x, 0.0, max_x);
  y = std::isnan(y) ? 0.0 : std::clamp(y, 0.0, max_y);

  // x1 == x0 on the last column/row, so integer coordinates never blend
  // with a neighbor and are reproduced exactly.
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = x - x0;
  const double fy = y - y0;

  const double p00 = img.at(x0, y0, c);
  const double p10 = img.at(x1, y0, c);
  const double p01 = img.at(x0, y1, c);
  const double p11 = img.at(x1, y1, c);
  const double top = p00 + fx * (p10 - p00);
  const double bottom = p01 + fx * (p11 - p01);
  return top + fy * (bottom - top);
}

}  // namespace poresim
