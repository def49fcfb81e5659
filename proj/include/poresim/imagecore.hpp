#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace poresim {

// H x W image with 1 (gray) or 3 (RGB) interleaved channels. Intensities are
// real values in [0,1]; quantization to 8 bits happens only at PNG I/O.
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, int channels, double fill = 0.0);
  Raster(int width, int height, int channels, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  double& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  double at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  std::span<double> row(int y) {
    return {data_.data() + static_cast<std::size_t>(y) * width_ * channels_,
            static_cast<std::size_t>(width_) * channels_};
  }
  std::span<const double> row(int y) const {
    return {data_.data() + static_cast<std::size_t>(y) * width_ * channels_,
            static_cast<std::size_t>(width_) * channels_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<double> data_;
};

struct LabPixel {
  double L = 0.0;
  double a = 0.0;
  double b = 0.0;
};

// Rec.601 luma: 0.299 R + 0.587 G + 0.114 B.
Raster to_gray(const Raster& img);

// Separable Gaussian blur of a gray raster. Kernel radius ceil(3 sigma),
// clamp-to-edge borders.
Raster gaussian_blur(const Raster& img, double sigma);

// blur(img, sigma1) - blur(img, sigma2). Signed output; dark blobs respond
// negatively. Requires 0 < sigma1 < sigma2.
Raster dog_filter(const Raster& img, double sigma1, double sigma2);

// sRGB (D65) to CIELAB.
LabPixel rgb_to_lab(double r, double g, double b);

// Bilinear sample of channel c. Coordinates are clamped to
// [0, W-1] x [0, H-1] first, so out-of-bound lookups return border values.
double bilinear_sample(const Raster& img, double x, double y, int c = 0);

// Normalized 1-D Gaussian taps, length 2*ceil(3 sigma)+1.
std::vector<double> gaussian_kernel(double sigma);

}  // namespace poresim
