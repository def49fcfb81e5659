#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "poresim/datapipe.hpp"
#include "poresim/imagecore.hpp"
#include "poresim/poreseg.hpp"
#include "poresim/rfregress.hpp"

namespace poresim {

// Strength a of the radial map must lie in (-3, 1); on that open interval
// f(r) = (1 - (r/r_max - 1)^2 a) r is strictly increasing on [0, r_max],
// since d/du[u(1 - a(u-1)^2)] = 1 - a(u-1)(3u-1) and (u-1)(3u-1) spans
// [-1/3, 1] on [0, 1].
inline constexpr double kMinStrength = -3.0;
inline constexpr double kMaxStrength = 1.0;

class WarpCircle {
 public:
  WarpCircle(Point2 center, double r_max, double strength);

  Point2 center() const { return center_; }
  double r_max() const { return r_max_; }
  double strength() const { return strength_; }

  friend bool operator==(const WarpCircle&, const WarpCircle&) = default;

 private:
  Point2 center_;
  double r_max_;
  double strength_;
};

// Per output pixel, the absolute source coordinate to sample.
class FlowField {
 public:
  FlowField() = default;
  FlowField(int width, int height);  // identity grid

  static FlowField identity(int width, int height) { return {width, height}; }

  int width() const { return width_; }
  int height() const { return height_; }
  Point2 at(int x, int y) const {
    const std::size_t i = 2 * (static_cast<std::size_t>(y) * width_ + x);
    return {grid_[i], grid_[i + 1]};
  }
  void set(int x, int y, Point2 p) {
    const std::size_t i = 2 * (static_cast<std::size_t>(y) * width_ + x);
    grid_[i] = p.x;
    grid_[i + 1] = p.y;
  }
  const std::vector<double>& grid() const { return grid_; }

  friend bool operator==(const FlowField&, const FlowField&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> grid_;
};

// Local scaling map: destination radius r -> source radius. Requires
// 0 <= r <= r_max and a in (-3, 1).
double radial_map(double r, double r_max, double a);

// Strength that makes a pore of radius r_p = r_max / beta appear with area
// ratio rho: the destination radius sqrt(rho) r_p samples the source rim r_p.
// Throws Unsatisfiable when sqrt(rho) >= beta and OutOfRange when the solved
// strength leaves (-3, 1).
double solve_warp_strength(double rho, double beta);

struct RhoInterval {
  double lo = 0.0;
  double hi = 0.0;
};

// Connected range of rho around 1 whose solved strength is admissible.
RhoInterval admissible_rho(double beta);

// Identity grid plus, for every circle, a radial displacement inside
// r < r_max. Contributions of overlapping circles add; circles are summed
// in a canonical order so the field does not depend on list order.
FlowField build_flow_field(int width, int height, std::span<const WarpCircle> circles);

// out(x, y) = bilinear_sample(img, field(x, y)) with border clamping.
Raster apply_flow(const Raster& img, const FlowField& field);

// Flow-field sidecar: "PSFF", u32 width, u32 height, row-major f32 (x, y)
// pairs, little-endian.
void write_flow_field(const std::filesystem::path& path, const FlowField& field);
FlowField read_flow_field(const std::filesystem::path& path);

// Enclosing-circle radius of a component measured to the pixel edge, i.e.
// the min enclosing circle of pixel centers plus half a pixel.
double pore_radius(const PoreComponent& c);

std::vector<WarpCircle> pore_circles(std::span<const PoreComponent> components, double beta,
                                     double strength);

struct SimulationResult {
  Raster image;
  double rho = 1.0;
  double strength = 0.0;
  std::vector<WarpCircle> circles;
};

// Predicts the area ratio for `window`, solves the shared strength and warps
// every pore's beta-scaled enclosing circle. Pixels outside all circles are
// copied unchanged.
SimulationResult simulate(const Raster& img, std::span<const PoreComponent> components,
                          const RandomForestModel& model, TimeWindow window, double beta = 1.5);

// Same, with the area ratio given directly.
SimulationResult simulate_ratio(const Raster& img, std::span<const PoreComponent> components,
                                double rho, double beta = 1.5);

}  // namespace poresim
