#include "poresim/poreseg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include "poresim/error.hpp"
#include "poresim/io.hpp"
#include "poresim/png_io.hpp"

namespace poresim {

BinaryMask::BinaryMask(int width, int height) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw InvalidInput("mask dimensions must be non-negative");
  bits_.assign(static_cast<std::size_t>(width) * height, 0);
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

void DetectionConfig::validate() const {
  if (!(sigma1 > 0.0) || !(sigma1 < sigma2))
    throw InvalidParameter("detection requires 0 < sigma1 < sigma2");
  if (!(response_threshold > 0.0))
    throw InvalidParameter("response_threshold must be > 0");
  if (morph_radius < 0) throw InvalidParameter("morph_radius must be >= 0");
  if (min_area_px < 1 || min_area_px > max_area_px)
    throw InvalidParameter("need 1 <= min_area_px <= max_area_px");
  if (!(max_aspect_ratio >= 1.0)) throw InvalidParameter("max_aspect_ratio must be >= 1");
  if (connectivity != 4 && connectivity != 8)
    throw InvalidParameter("connectivity must be 4 or 8");
}

// ---------------------------------------------------------------------------
// Morphology and labeling

namespace {

std::vector<PixelCoord> disk_offsets(int radius) {
  std::vector<PixelCoord> offs;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      if (dx * dx + dy * dy <= radius * radius) offs.push_back({dx, dy});
  return offs;
}

BinaryMask morph(const BinaryMask& m, int radius, bool dilation) {
  if (radius <= 0) return m;
  const auto offs = disk_offsets(radius);
  BinaryMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      bool v = !dilation;
      for (const auto& o : offs) {
        const int xx = x + o.x;
        const int yy = y + o.y;
        if (xx < 0 || yy < 0 || xx >= m.width() || yy >= m.height()) continue;
        if (m.get(xx, yy) == dilation) {
          v = dilation;
          break;
        }
      }
      out.set(x, y, v);
    }
  }
  return out;
}

}  // namespace

BinaryMask dilate(const BinaryMask& m, int radius) { return morph(m, radius, true); }
BinaryMask erode(const BinaryMask& m, int radius) { return morph(m, radius, false); }

std::vector<std::vector<PixelCoord>> connected_components(const BinaryMask& m, int connectivity) {
  static constexpr PixelCoord n4[] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  static constexpr PixelCoord n8[] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1},
                                      {1, 1}, {-1, 1}, {1, -1}, {-1, -1}};
  const std::span<const PixelCoord> nbrs =
      connectivity == 4 ? std::span<const PixelCoord>(n4) : std::span<const PixelCoord>(n8);

  std::vector<std::uint8_t> seen(m.bits().size(), 0);
  std::vector<std::vector<PixelCoord>> comps;
  std::vector<PixelCoord> stack;
  const int w = m.width();
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      if (!m.get(x, y) || seen[idx]) continue;
      std::vector<PixelCoord> comp;
      seen[idx] = 1;
      stack.push_back({x, y});
      while (!stack.empty()) {
        const PixelCoord p = stack.back();
        stack.pop_back();
        comp.push_back(p);
        for (const auto& d : nbrs) {
          const int xx = p.x + d.x;
          const int yy = p.y + d.y;
          if (xx < 0 || yy < 0 || xx >= w || yy >= m.height()) continue;
          const std::size_t j = static_cast<std::size_t>(yy) * w + xx;
          if (m.get(xx, yy) && !seen[j]) {
            seen[j] = 1;
            stack.push_back({xx, yy});
          }
        }
      }
      std::sort(comp.begin(), comp.end(), [](const PixelCoord& a, const PixelCoord& b) {
        return a.y != b.y ? a.y < b.y : a.x < b.x;
      });
      comps.push_back(std::move(comp));
    }
  }
  return comps;
}

// ---------------------------------------------------------------------------
// Minimum enclosing circle

namespace {

constexpr double kContainEps = 1e-10;

bool contains(const Circle& c, const Point2& p) {
  return std::hypot(p.x - c.center.x, p.y - c.center.y) <= c.radius + kContainEps * std::max(1.0, c.radius);
}

Circle circle_from(const Point2& a, const Point2& b) {
  const Point2 mid{(a.x + b.x) / 2.0, (a.y + b.y) / 2.0};
  return {mid, std::hypot(a.x - b.x, a.y - b.y) / 2.0};
}

Circle circle_from(const Point2& a, const Point2& b, const Point2& c) {
  const double bx = b.x - a.x;
  const double by = b.y - a.y;
  const double cx = c.x - a.x;
  const double cy = c.y - a.y;
  const double d = 2.0 * (bx * cy - by * cx);
  const double scale = std::max({std::abs(bx), std::abs(by), std::abs(cx), std::abs(cy), 1.0});
  if (std::abs(d) <= 1e-14 * scale * scale) {
    // Collinear: the widest pair spans the rest.
    Circle best = circle_from(a, b);
    for (const Circle& cand : {circle_from(a, c), circle_from(b, c)})
      if (cand.radius > best.radius) best = cand;
    return best;
  }
  const double b2 = bx * bx + by * by;
  const double c2 = cx * cx + cy * cy;
  const double ux = (cy * b2 - by * c2) / d;
  const double uy = (bx * c2 - cx * b2) / d;
  return {{a.x + ux, a.y + uy}, std::hypot(ux, uy)};
}

}  // namespace

Circle min_enclosing_circle(std::span<const Point2> points) {
  if (points.empty()) throw InvalidInput("min_enclosing_circle needs at least one point");
  std::vector<Point2> pts(points.begin(), points.end());
  std::mt19937 rng(0x5eed);
  std::shuffle(pts.begin(), pts.end(), rng);

  Circle c{pts[0], 0.0};
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (contains(c, pts[i])) continue;
    c = {pts[i], 0.0};
    for (std::size_t j = 0; j < i; ++j) {
      if (contains(c, pts[j])) continue;
      c = circle_from(pts[i], pts[j]);
      for (std::size_t k = 0; k < j; ++k) {
        if (!contains(c, pts[k])) c = circle_from(pts[i], pts[j], pts[k]);
      }
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Component description and detection

PoreComponent describe_component(std::vector<PixelCoord> pixels, const Raster& source) {
  if (pixels.empty()) throw InvalidInput("component has no pixels");
  PoreComponent pc;
  pc.area_px = pixels.size();

  const double n = static_cast<double>(pixels.size());
  double sx = 0.0;
  double sy = 0.0;
  for (const auto& p : pixels) {
    sx += p.x;
    sy += p.y;
  }
  pc.centroid = {sx / n, sy / n};

  // Second central moments of the pixel squares; the 1/12 term is each unit
  // pixel's own spread, so a single pixel reads as a unit disk-like blob.
  double mu20 = 0.0;
  double mu02 = 0.0;
  double mu11 = 0.0;
  for (const auto& p : pixels) {
    const double dx = p.x - pc.centroid.x;
    const double dy = p.y - pc.centroid.y;
    mu20 += dx * dx;
    mu02 += dy * dy;
    mu11 += dx * dy;
  }
  mu20 = mu20 / n + 1.0 / 12.0;
  mu02 = mu02 / n + 1.0 / 12.0;
  mu11 /= n;
  const double half_trace = 0.5 * (mu20 + mu02);
  const double disc = std::sqrt(0.25 * (mu20 - mu02) * (mu20 - mu02) + mu11 * mu11);
  const double l1 = half_trace + disc;
  const double l2 = std::max(half_trace - disc, 1e-12);
  pc.aspect_ratio = std::sqrt(l1 / l2);
  pc.eccentricity = std::sqrt(std::max(0.0, 1.0 - l2 / l1));
  double orient = 0.5 * std::atan2(2.0 * mu11, mu20 - mu02) * 180.0 / std::numbers::pi;
  if (orient < 0.0) orient += 180.0;
  if (orient >= 180.0) orient -= 180.0;
  pc.orientation_deg = orient;

  std::vector<Point2> pts;
  pts.reserve(pixels.size());
  for (const auto& p : pixels) pts.push_back({static_cast<double>(p.x), static_cast<double>(p.y)});
  pc.enclosing_circle = min_enclosing_circle(pts);

  double sl = 0.0;
  double sa = 0.0;
  double sb = 0.0;
  for (const auto& p : pixels) {
    double r, g, b;
    if (source.channels() == 3) {
      r = source.at(p.x, p.y, 0);
      g = source.at(p.x, p.y, 1);
      b = source.at(p.x, p.y, 2);
    } else {
      r = g = b = source.at(p.x, p.y, 0);
    }
    const LabPixel lab =
        rgb_to_lab(std::clamp(r, 0.0, 1.0), std::clamp(g, 0.0, 1.0), std::clamp(b, 0.0, 1.0));
    sl += lab.L;
    sa += lab.a;
    sb += lab.b;
  }
  pc.mean_lab = {sl / n, sa / n, sb / n};
  pc.pixels = std::move(pixels);
  return pc;
}

Detection detect_pores(const Raster& img, const DetectionConfig& cfg) {
  cfg.validate();
  if (img.width() < 64 || img.height() < 64)
    throw InvalidInput("detect_pores needs an image of at least 64x64, got " +
                       std::to_string(img.width()) + "x" + std::to_string(img.height()));

  const Raster gray = img.channels() == 3 ? to_gray(img) : img;
  const Raster response = dog_filter(gray, cfg.sigma1, cfg.sigma2);

  BinaryMask candidates(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (response.at(x, y) <= -cfg.response_threshold) candidates.set(x, y);

  BinaryMask cleaned = erode(dilate(candidates, cfg.morph_radius), cfg.morph_radius);
  cleaned = dilate(erode(cleaned, cfg.morph_radius), cfg.morph_radius);

  Detection out;
  out.mask = BinaryMask(img.width(), img.height());
  for (auto& pixels : connected_components(cleaned, cfg.connectivity)) {
    if (pixels.size() < cfg.min_area_px || pixels.size() > cfg.max_area_px) continue;
    PoreComponent pc = describe_component(std::move(pixels), img);
    if (pc.aspect_ratio > cfg.max_aspect_ratio) continue;
    for (const auto& p : pc.pixels) out.mask.set(p.x, p.y);
    out.components.push_back(std::move(pc));
  }
  return out;
}

PoreStats pore_stats(std::span<const PoreComponent> components) {
  PoreStats s;
  s.pore_count = components.size();
  if (components.empty()) return s;
  for (const auto& c : components) {
    s.pore_area_total += static_cast<double>(c.area_px);
    s.mean_eccentricity += c.eccentricity;
    s.mean_orientation_deg += c.orientation_deg;
    s.mean_L += c.mean_lab.L;
    s.mean_a += c.mean_lab.a;
    s.mean_b += c.mean_lab.b;
  }
  const double n = static_cast<double>(components.size());
  s.pore_area_mean = s.pore_area_total / n;
  s.mean_eccentricity /= n;
  s.mean_orientation_deg /= n;
  s.mean_L /= n;
  s.mean_a /= n;
  s.mean_b /= n;
  return s;
}

MaskMetrics mask_metrics(const BinaryMask& pred, const BinaryMask& truth) {
  if (pred.width() != truth.width() || pred.height() != truth.height())
    throw InvalidInput("mask_metrics: dimension mismatch");
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  const auto& p = pred.bits();
  const auto& t = truth.bits();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] && t[i]) ++tp;
    else if (p[i]) ++fp;
    else if (t[i]) ++fn;
  }
  const std::size_t total = p.size();
  const bool both_empty = tp + fp + fn == 0;
  auto ratio = [both_empty](double num, double den) {
    if (den == 0.0) return both_empty ? 1.0 : 0.0;
    return num / den;
  };
  MaskMetrics m;
  m.dice = ratio(2.0 * tp, static_cast<double>(2 * tp + fp + fn));
  m.iou = ratio(static_cast<double>(tp), static_cast<double>(tp + fp + fn));
  m.precision = ratio(static_cast<double>(tp), static_cast<double>(tp + fp));
  m.accuracy = ratio(static_cast<double>(total - fp - fn), static_cast<double>(total));
  return m;
}

// ---------------------------------------------------------------------------
// I/O

void write_mask_png(const std::filesystem::path& path, const BinaryMask& m) {
  Raster r(m.width(), m.height(), 1);
  for (std::size_t i = 0; i < m.bits().size(); ++i) r.data()[i] = m.bits()[i] ? 1.0 : 0.0;
  write_png(path, r);
}

BinaryMask read_mask_png(const std::filesystem::path& path) {
  const Raster r = read_png(path);
  BinaryMask m(r.width(), r.height());
  for (int y = 0; y < r.height(); ++y)
    for (int x = 0; x < r.width(); ++x) {
      double v = 0.0;
      for (int c = 0; c < r.channels(); ++c) v = std::max(v, r.at(x, y, c));
      m.set(x, y, v >= 128.0 / 255.0);
    }
  return m;
}

std::string components_csv(std::span<const PoreComponent> components) {
  std::ostringstream os;
  os << "id,cx,cy,area,ecc,orient,circle_x,circle_y,radius\n";
  char buf[256];
  for (std::size_t i = 0; i < components.size(); ++i) {
    const auto& c = components[i];
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%zu,%.6f,%.6f,%.6f,%.6f,%.6f\n", i,
                  c.centroid.x, c.centroid.y, c.area_px, c.eccentricity, c.orientation_deg,
                  c.enclosing_circle.center.x, c.enclosing_circle.center.y,
                  c.enclosing_circle.radius);
    os << buf;
  }
  return os.str();
}

void write_components_csv(const std::filesystem::path& path,
                          std::span<const PoreComponent> components) {
  write_text_atomic(path, components_csv(components));
}

}  // namespace poresim
