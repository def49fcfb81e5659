#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "poresim/imagecore.hpp"

namespace poresim {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct PixelCoord {
  int x = 0;
  int y = 0;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

struct Circle {
  Point2 center;
  double radius = 0.0;
};

// Binary mask, one byte per pixel (0 or 1), row-major.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  bool get(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool v = true) { bits_[index(x, y)] = v ? 1 : 0; }
  std::size_t count() const;
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct PoreComponent {
  std::vector<PixelCoord> pixels;
  Point2 centroid;
  std::size_t area_px = 0;
  double eccentricity = 0.0;     // [0,1)
  double orientation_deg = 0.0;  // [0,180), major axis, image axes (y down)
  double aspect_ratio = 1.0;     // major / minor axis of the moment ellipse
  Circle enclosing_circle;
  LabPixel mean_lab;
};

struct PoreStats {
  std::size_t pore_count = 0;
  double pore_area_total = 0.0;
  double pore_area_mean = 0.0;
  double mean_eccentricity = 0.0;
  double mean_orientation_deg = 0.0;
  double mean_L = 0.0;
  double mean_a = 0.0;
  double mean_b = 0.0;
};

struct DetectionConfig {
  double sigma1 = 1.0;
  double sigma2 = 3.0;
  double response_threshold = 0.02;
  int morph_radius = 1;
  std::size_t min_area_px = 4;
  std::size_t max_area_px = 400;
  double max_aspect_ratio = 4.0;
  int connectivity = 8;

  // Throws InvalidParameter when the invariants do not hold.
  void validate() const;
  friend bool operator==(const DetectionConfig&, const DetectionConfig&) = default;
};

struct Detection {
  BinaryMask mask;
  std::vector<PoreComponent> components;
};

// gray -> DoG -> (response <= -tau) -> closing, opening -> connected
// components -> area/shape filter -> per-component statistics.
// Components are ordered by their first pixel in raster order.
Detection detect_pores(const Raster& img, const DetectionConfig& cfg = {});

// Smallest circle containing every point (randomized incremental Welzl with
// a fixed shuffle seed, so the result is deterministic).
Circle min_enclosing_circle(std::span<const Point2> points);

PoreStats pore_stats(std::span<const PoreComponent> components);

struct MaskMetrics {
  double dice = 0.0;
  double iou = 0.0;
  double precision = 0.0;
  double accuracy = 0.0;
};

MaskMetrics mask_metrics(const BinaryMask& pred, const BinaryMask& truth);

// Morphology with a disk structuring element {dx^2 + dy^2 <= r^2}.
// Out-of-frame pixels are ignored rather than treated as background.
BinaryMask dilate(const BinaryMask& m, int radius);
BinaryMask erode(const BinaryMask& m, int radius);

// Connected components (4- or 8-connectivity) in raster order of their
// first pixel.
std::vector<std::vector<PixelCoord>> connected_components(const BinaryMask& m, int connectivity);

// Builds a component's shape statistics from its pixels; mean Lab is taken
// from `source` (gray sources are treated as R=G=B).
PoreComponent describe_component(std::vector<PixelCoord> pixels, const Raster& source);

// Mask as 8-bit PNG (0/255); reading thresholds at 128.
void write_mask_png(const std::filesystem::path& path, const BinaryMask& m);
BinaryMask read_mask_png(const std::filesystem::path& path);

// CSV with header id,cx,cy,area,ecc,orient,circle_x,circle_y,radius.
void write_components_csv(const std::filesystem::path& path,
                          std::span<const PoreComponent> components);
std::string components_csv(std::span<const PoreComponent> components);

}  // namespace poresim
