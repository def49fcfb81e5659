#include "poresim/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "poresim/error.hpp"

namespace poresim {

void SyntheticSheetSpec::validate() const {
  if (width < 64 || height < 64) throw InvalidParameter("sheet must be at least 64x64");
  if (n_pores < 0) throw InvalidParameter("n_pores must be >= 0");
  if (!(radius_min >= 1.0) || radius_min > radius_max)
    throw InvalidParameter("pore radii must satisfy 1 <= min <= max");
  if (!(contrast_min > 0.0) || !(contrast_max < 1.0) || contrast_min > contrast_max)
    throw InvalidParameter("pore contrast must lie in (0,1) with min <= max");
  if (!(max_elongation >= 1.0)) throw InvalidParameter("max_elongation must be >= 1");
  if (!(background > 0.0 && background < 1.0)) throw InvalidParameter("background must lie in (0,1)");
  if (texture_amplitude < 0.0 || noise_sigma < 0.0)
    throw InvalidParameter("texture and noise amplitudes must be >= 0");
  if (line_artifacts < 0 || !(line_length > 0.0) || !(line_width > 0.0))
    throw InvalidParameter("invalid line artifact geometry");
}

void CohortSpec::validate() const {
  if (n_subjects < 1) throw InvalidParameter("n_subjects must be >= 1");
  if (days < 1 || days > 30) throw InvalidParameter("days must lie in 1..30");
  if (1.0 + trend * days <= 0.0 || 1.0 + count_trend_factor * trend * days <= 0.0)
    throw InvalidParameter("trend drives values non-positive within the period");
  if (noise < 0.0) throw InvalidParameter("noise must be >= 0");
  if (outlier_rate < 0.0 || outlier_rate >= 1.0) throw InvalidParameter("outlier_rate must lie in [0,1)");
  if (outlier_amplitude < 0.0) throw InvalidParameter("outlier_amplitude must be >= 0");
}

namespace {

constexpr int kSuper = 4;  // supersamples per axis for anti-aliasing

// Fraction of the pixel centred at (px, py) covered by the shape.
template <typename Inside>
double coverage(int px, int py, Inside inside) {
  int hits = 0;
  for (int sy = 0; sy < kSuper; ++sy)
    for (int sx = 0; sx < kSuper; ++sx) {
      const double x = px - 0.5 + (sx + 0.5) / kSuper;
      const double y = py - 0.5 + (sy + 0.5) / kSuper;
      if (inside(x, y)) ++hits;
    }
  return static_cast<double>(hits) / (kSuper * kSuper);
}

struct Placed {
  Point2 center;
  double extent;  // bounding radius
};

}  // namespace

SyntheticSheet gen_synthetic_sheet(const SyntheticSheetSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const int w = spec.width;
  const int h = spec.height;

  // Shading: a few long-wavelength plane waves.
  struct Wave {
    double kx, ky, phase, amp;
  };
  std::vector<Wave> waves;
  for (int i = 0; i < 4; ++i) {
    const double wavelength = uniform(96.0, 320.0);
    const double theta = uniform(0.0, std::numbers::pi);
    const double k = 2.0 * std::numbers::pi / wavelength;
    waves.push_back({k * std::cos(theta), k * std::sin(theta), uniform(0.0, 2.0 * std::numbers::pi),
                     uniform(0.5, 1.0)});
  }
  double amp_sum = 0.0;
  for (const auto& wv : waves) amp_sum += wv.amp;

  std::vector<double> base(static_cast<std::size_t>(w) * h);
  std::normal_distribution<double> grain(0.0, 1.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double t = 0.0;
      for (const auto& wv : waves) t += wv.amp * std::sin(wv.kx * x + wv.ky * y + wv.phase);
      base[static_cast<std::size_t>(y) * w + x] =
          spec.background + spec.texture_amplitude * t / amp_sum + spec.noise_sigma * grain(rng);
    }

  SyntheticSheet sheet;
  std::vector<Placed> placed;
  const int max_attempts = 2000;
  auto place = [&](double extent, double gap) -> Point2 {
    const double margin = extent + 4.0;
    if (2.0 * margin >= std::min(w, h))
      throw Unsatisfiable("shape of extent " + std::to_string(extent) + " does not fit the sheet");
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
      const Point2 c{uniform(margin, w - 1 - margin), uniform(margin, h - 1 - margin)};
      const bool clear = std::all_of(placed.begin(), placed.end(), [&](const Placed& p) {
        return std::hypot(p.center.x - c.x, p.center.y - c.y) >= p.extent + extent + gap;
      });
      if (clear) {
        placed.push_back({c, extent});
        return c;
      }
    }
    throw Unsatisfiable("could not place " + std::to_string(spec.n_pores) + " pores and " +
                        std::to_string(spec.line_artifacts) + " lines without overlap");
  };

  // Darkening per pixel: max over shapes of contrast * coverage.
  std::vector<double> dark(base.size(), 0.0);
  sheet.truth_mask = BinaryMask(w, h);

  for (int i = 0; i < spec.line_artifacts; ++i) {
    TruthLine line;
    line.length = spec.line_length;
    line.width = spec.line_width;
    line.angle_rad = uniform(0.0, std::numbers::pi);
    line.center = place(0.5 * std::hypot(line.length, line.width), 8.0);
    const double ca = std::cos(line.angle_rad);
    const double sa = std::sin(line.angle_rad);
    auto inside = [&](double x, double y) {
      const double dx = x - line.center.x;
      const double dy = y - line.center.y;
      const double u = dx * ca + dy * sa;
      const double v = -dx * sa + dy * ca;
      return std::abs(u) <= line.length / 2 && std::abs(v) <= line.width / 2;
    };
    const int ext = static_cast<int>(std::ceil(0.5 * std::hypot(line.length, line.width))) + 1;
    for (int y = std::max(0, int(line.center.y) - ext); y <= std::min(h - 1, int(line.center.y) + ext); ++y)
      for (int x = std::max(0, int(line.center.x) - ext); x <= std::min(w - 1, int(line.center.x) + ext); ++x) {
        const double cov = coverage(x, y, inside);
        auto& d = dark[static_cast<std::size_t>(y) * w + x];
        d = std::max(d, spec.line_contrast * cov);
      }
    sheet.lines.push_back(line);
  }

  for (int i = 0; i < spec.n_pores; ++i) {
    TruthPore pore;
    pore.semi_major = uniform(spec.radius_min, spec.radius_max);
    pore.semi_minor = pore.semi_major / uniform(1.0, spec.max_elongation);
    pore.angle_rad = uniform(0.0, std::numbers::pi);
    pore.contrast = uniform(spec.contrast_min, spec.contrast_max);
    pore.analytic_area = std::numbers::pi * pore.semi_major * pore.semi_minor;
    // Gap keeps neighbouring pores out of each other's DoG surround.
    pore.center = place(pore.semi_major, 6.0);

    const double ca = std::cos(pore.angle_rad);
    const double sa = std::sin(pore.angle_rad);
    auto inside = [&](double x, double y) {
      const double dx = x - pore.center.x;
      const double dy = y - pore.center.y;
      const double u = (dx * ca + dy * sa) / pore.semi_major;
      const double v = (-dx * sa + dy * ca) / pore.semi_minor;
      return u * u + v * v <= 1.0;
    };
    const int ext = static_cast<int>(std::ceil(pore.semi_major)) + 1;
    const int cx = static_cast<int>(std::lround(pore.center.x));
    const int cy = static_cast<int>(std::lround(pore.center.y));
    for (int y = std::max(0, cy - ext); y <= std::min(h - 1, cy + ext); ++y)
      for (int x = std::max(0, cx - ext); x <= std::min(w - 1, cx + ext); ++x) {
        const double cov = coverage(x, y, inside);
        if (cov <= 0.0) continue;
        auto& d = dark[static_cast<std::size_t>(y) * w + x];
        d = std::max(d, pore.contrast * cov);
        if (cov >= 0.5) {
          sheet.truth_mask.set(x, y);
          ++pore.mask_area;
        }
      }
    sheet.pores.push_back(pore);
  }

  // Skin-like tint; channel gains average to ~1 under luma weights.
  const double tint[3] = {1.12, 0.96, 0.82};
  sheet.image = Raster(w, h, spec.rgb ? 3 : 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (spec.rgb) {
        for (int c = 0; c < 3; ++c)
          sheet.image.at(x, y, c) = std::clamp(base[i] * tint[c] - dark[i], 0.0, 1.0);
      } else {
        sheet.image.at(x, y) = std::clamp(base[i] - dark[i], 0.0, 1.0);
      }
    }
  return sheet;
}

// ---------------------------------------------------------------------------
// Cohort

SyntheticCohort gen_synthetic_cohort(const CohortSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  struct IndexDef {
    std::string name;
    double trend;
    double base_lo;
    double base_hi;
  };
  std::vector<IndexDef> indexes = {
      {"Pore_Area_total", spec.trend, 2000.0, 8000.0},
      {"Pore_Count", spec.count_trend_factor * spec.trend, 20.0, 120.0},
  };
  if (spec.include_flat_index) indexes.push_back({"L_mean", 0.0, 55.0, 70.0});

  std::vector<std::string> subjects;
  const int digits = std::max(3, static_cast<int>(std::to_string(spec.n_subjects).size()));
  for (int s = 0; s < spec.n_subjects; ++s) {
    std::string id = std::to_string(s + 1);
    subjects.push_back("S" + std::string(digits - id.size(), '0') + id);
  }

  // Outlier cells: interior days only, isolated within each series.
  std::map<std::tuple<std::string, std::string, int>, double> outlier_factor;
  SyntheticCohort cohort;
  if (spec.outlier_rate > 0.0 && spec.days >= 2) {
    std::vector<std::tuple<std::size_t, std::size_t, int>> eligible;
    for (std::size_t s = 0; s < subjects.size(); ++s)
      for (std::size_t k = 0; k < indexes.size(); ++k)
        for (int d = 1; d < spec.days; ++d) eligible.emplace_back(s, k, d);
    const auto target = static_cast<std::size_t>(std::llround(spec.outlier_rate * eligible.size()));
    std::shuffle(eligible.begin(), eligible.end(), rng);
    std::set<std::tuple<std::size_t, std::size_t, int>> chosen;
    for (const auto& cell : eligible) {
      if (chosen.size() == target) break;
      const auto [s, k, d] = cell;
      bool isolated = true;
      for (int dd = d - 2; dd <= d + 2; ++dd)
        if (chosen.count({s, k, dd})) isolated = false;
      if (isolated) chosen.insert(cell);
    }
    if (chosen.size() < target)
      throw InvalidParameter("outlier_rate too high to keep planted outliers isolated");
    for (const auto& [s, k, d] : chosen) {
      const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
      const double factor = std::exp(sign * spec.outlier_amplitude * spec.noise);
      outlier_factor[{subjects[s], indexes[k].name, d}] = factor;
      cohort.outliers.push_back({subjects[s], indexes[k].name, d, factor});
    }
  }

  for (const auto& subject : subjects) {
    for (const auto& idx : indexes) {
      const double base = idx.base_lo + (idx.base_hi - idx.base_lo) * unit(rng);
      for (int d = 0; d <= spec.days; ++d) {
        const auto it = outlier_factor.find({subject, idx.name, d});
        const double spike = it == outlier_factor.end() ? 1.0 : it->second;
        for (Session session : {Session::MorningWake, Session::MorningWash, Session::EveningWash}) {
          const double eps = spec.noise > 0.0 ? std::exp(spec.noise * gauss(rng)) : 1.0;
          cohort.samples.push_back(
              {subject, d, session, idx.name, base * (1.0 + idx.trend * d) * eps * spike});
        }
      }
    }
  }
  return cohort;
}

std::string outliers_csv(const std::vector<PlantedOutlier>& outliers) {
  std::ostringstream os;
  os.precision(17);
  os << "subject_id,index_name,day,factor\n";
  for (const auto& o : outliers)
    os << o.subject_id << ',' << o.index_name << ',' << o.day << ',' << o.factor << '\n';
  return os.str();
}

}  // namespace poresim
