#include "poresim/deform.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <tuple>

#include "poresim/error.hpp"
#include "poresim/io.hpp"
#include "poresim/parallel.hpp"

namespace poresim {

namespace {

bool admissible_strength(double a) { return a > kMinStrength && a < kMaxStrength; }

}  // namespace

WarpCircle::WarpCircle(Point2 center, double r_max, double strength)
    : center_(center), r_max_(r_max), strength_(strength) {
  if (!std::isfinite(center.x) || !std::isfinite(center.y))
    throw InvalidInput("warp circle center must be finite");
  if (!(r_max > 0.0) || !std::isfinite(r_max)) throw InvalidParameter("warp circle r_max must be > 0");
  if (!admissible_strength(strength))
    throw InvalidParameter("warp strength " + std::to_string(strength) + " outside (-3, 1)");
}

FlowField::FlowField(int width, int height) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw InvalidInput("flow field dimensions must be positive");
  grid_.resize(2 * static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) set(x, y, {static_cast<double>(x), static_cast<double>(y)});
}

double radial_map(double r, double r_max, double a) {
  if (!(r_max > 0.0)) throw InvalidParameter("r_max must be > 0");
  if (!admissible_strength(a))
    throw InvalidParameter("strength " + std::to_string(a) + " outside (-3, 1)");
  if (!(r >= 0.0 && r <= r_max))
    throw InvalidInput("radius " + std::to_string(r) + " outside [0, r_max]");
  const double t = r / r_max - 1.0;
  return (1.0 - t * t * a) * r;
}

namespace {

double strength_for(double s, double beta) {
  const double t = s / beta - 1.0;
  return (1.0 - 1.0 / s) / (t * t);
}

// Walks from s = 1 toward `limit` until strength_for leaves (-3, 1), then
// bisects the crossing.
double admissible_edge(double beta, double limit) {
  const double step = (limit - 1.0) / 4096.0;
  double inside = 1.0;
  double outside = limit;
  for (int i = 1; i < 4096; ++i) {
    const double s = 1.0 + step * i;
    if (!admissible_strength(strength_for(s, beta))) {
      outside = s;
      break;
    }
    inside = s;
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (inside + outside);
    if (mid == inside || mid == outside) break;
    (admissible_strength(strength_for(mid, beta)) ? inside : outside) = mid;
  }
  return inside;
}

}  // namespace

RhoInterval admissible_rho(double beta) {
  if (!(beta > 1.0) || !std::isfinite(beta)) throw InvalidParameter("beta must be > 1");
  const double lo = admissible_edge(beta, 0.0);
  const double hi = admissible_edge(beta, beta);
  return {lo * lo, hi * hi};
}

double solve_warp_strength(double rho, double beta) {
  if (!(beta > 1.0) || !std::isfinite(beta)) throw InvalidParameter("beta must be > 1");
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidParameter("rho must be a finite value > 0");
  const double s = std::sqrt(rho);
  if (s >= beta) {
    std::ostringstream os;
    os << "area ratio " << rho << " unreachable: sqrt(rho) must stay below beta " << beta;
    throw Unsatisfiable(os.str());
  }
  if (rho == 1.0) return 0.0;
  const double a = strength_for(s, beta);
  if (!admissible_strength(a)) {
    const auto range = admissible_rho(beta);
    std::ostringstream os;
    os << "area ratio " << rho << " needs strength " << a << " outside (-3, 1); admissible rho for beta "
       << beta << " is about (" << range.lo << ", " << range.hi << ")";
    throw OutOfRange(os.str());
  }
  return a;
}

FlowField build_flow_field(int width, int height, std::span<const WarpCircle> circles) {
  FlowField field(width, height);
  if (circles.empty()) return field;

  std::vector<WarpCircle> ordered(circles.begin(), circles.end());
  std::sort(ordered.begin(), ordered.end(), [](const WarpCircle& a, const WarpCircle& b) {
    return std::make_tuple(a.center().x, a.center().y, a.r_max(), a.strength()) <
           std::make_tuple(b.center().x, b.center().y, b.r_max(), b.strength());
  });

  // Row buckets keep each row's circle list in canonical order.
  std::vector<std::vector<std::size_t>> rows(static_cast<std::size_t>(height));
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const auto& c = ordered[i];
    const int y0 = std::max(0, static_cast<int>(std::floor(c.center().y - c.r_max())));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(c.center().y + c.r_max())));
    for (int y = y0; y <= y1; ++y) rows[y].push_back(i);
  }

  parallel_for(static_cast<std::size_t>(height), [&](std::size_t yi) {
    const int y = static_cast<int>(yi);
    if (rows[yi].empty()) return;
    std::vector<double> dx(static_cast<std::size_t>(width), 0.0);
    std::vector<double> dy(static_cast<std::size_t>(width), 0.0);
    for (std::size_t ci : rows[yi]) {
      const auto& c = ordered[ci];
      const double cx = c.center().x;
      const double cy = c.center().y;
      const double r_max = c.r_max();
      const double a = c.strength();
      const int x0 = std::max(0, static_cast<int>(std::floor(cx - r_max)));
      const int x1 = std::min(width - 1, static_cast<int>(std::ceil(cx + r_max)));
      const double ry = y - cy;
      for (int x = x0; x <= x1; ++x) {
        const double rx = x - cx;
        const double r = std::hypot(rx, ry);
        if (!(r < r_max)) continue;
        // Source point c + (p - c) f(r)/r, stored as displacement
        // (p - c)(f(r)/r - 1) = -(p - c) t^2 a.
        const double t = r / r_max - 1.0;
        const double k = -t * t * a;
        dx[x] += rx * k;
        dy[x] += ry * k;
      }
    }
    for (int x = 0; x < width; ++x) field.set(x, y, {x + dx[x], y + dy[x]});
  });
  return field;
}

Raster apply_flow(const Raster& img, const FlowField& field) {
  if (field.width() != img.width() || field.height() != img.height())
    throw InvalidInput("flow field and image dimensions differ");
  Raster out(img.width(), img.height(), img.channels());
  const int channels = img.channels();
  parallel_for(static_cast<std::size_t>(img.height()), [&](std::size_t yi) {
    const int y = static_cast<int>(yi);
    for (int x = 0; x < img.width(); ++x) {
      const Point2 p = field.at(x, y);
      for (int c = 0; c < channels; ++c) out.at(x, y, c) = bilinear_sample(img, p.x, p.y, c);
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// PSFF sidecar

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

}  // namespace

void write_flow_field(const std::filesystem::path& path, const FlowField& field) {
  std::string out = "PSFF";
  put_u32(out, static_cast<std::uint32_t>(field.width()));
  put_u32(out, static_cast<std::uint32_t>(field.height()));
  out.reserve(out.size() + field.grid().size() * 4);
  for (double v : field.grid()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  write_text_atomic(path, out);
}

FlowField read_flow_field(const std::filesystem::path& path) {
  const std::string bytes = read_text(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 12 || bytes.compare(0, 4, "PSFF") != 0)
    throw InvalidInput(path.string() + " is not a PSFF flow field");
  const std::uint32_t w = get_u32(p + 4);
  const std::uint32_t h = get_u32(p + 8);
  const std::size_t n = 2 * static_cast<std::size_t>(w) * h;
  if (w == 0 || h == 0 || bytes.size() != 12 + 4 * n)
    throw InvalidInput(path.string() + ": truncated or oversized flow field");
  FlowField field(static_cast<int>(w), static_cast<int>(h));
  for (std::uint32_t y = 0; y < h; ++y)
    for (std::uint32_t x = 0; x < w; ++x) {
      const std::size_t i = 12 + 8 * (static_cast<std::size_t>(y) * w + x);
      field.set(static_cast<int>(x), static_cast<int>(y),
                {std::bit_cast<float>(get_u32(p + i)), std::bit_cast<float>(get_u32(p + i + 4))});
    }
  return field;
}

// ---------------------------------------------------------------------------
// Simulation

double pore_radius(const PoreComponent& c) { return c.enclosing_circle.radius + 0.5; }

std::vector<WarpCircle> pore_circles(std::span<const PoreComponent> components, double beta,
                                     double strength) {
  if (!(beta >= 1.0)) throw InvalidParameter("beta must be >= 1");
  std::vector<WarpCircle> circles;
  circles.reserve(components.size());
  for (const auto& c : components)
    circles.emplace_back(c.enclosing_circle.center, pore_radius(c) * beta, strength);
  return circles;
}

SimulationResult simulate_ratio(const Raster& img, std::span<const PoreComponent> components,
                                double rho, double beta) {
  SimulationResult res;
  res.rho = rho;
  res.strength = solve_warp_strength(rho, beta);
  if (res.strength == 0.0 || components.empty()) {
    res.image = img;
    return res;
  }
  res.circles = pore_circles(components, beta, res.strength);
  res.image = apply_flow(img, build_flow_field(img.width(), img.height(), res.circles));
  return res;
}

SimulationResult simulate(const Raster& img, std::span<const PoreComponent> components,
                          const RandomForestModel& model, TimeWindow window, double beta) {
  const std::string ctx = "simulate " + std::string(to_string(window)) + ": ";
  double rho = 1.0;
  try {
    rho = model.predict(window_features(window, static_cast<double>(components.size())));
  } catch (const InvalidInput& e) {
    throw InvalidInput(ctx + e.what());
  }
  try {
    return simulate_ratio(img, components, rho, beta);
  } catch (const Unsatisfiable& e) {
    throw Unsatisfiable(ctx + e.what());
  } catch (const OutOfRange& e) {
    throw OutOfRange(ctx + e.what());
  } catch (const InvalidParameter& e) {
    throw InvalidParameter(ctx + e.what());
  }
}

}  // namespace poresim
