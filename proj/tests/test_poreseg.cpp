#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "poresim/error.hpp"
#include "poresim/poreseg.hpp"
#include "poresim/synth.hpp"

namespace poresim {
namespace {

SyntheticSheetSpec ten_pore_sheet(std::uint64_t seed) {
  SyntheticSheetSpec s;
  s.width = 256;
  s.height = 256;
  s.n_pores = 10;
  s.radius_min = 2.0;
  s.radius_max = 6.0;
  s.contrast_min = s.contrast_max = 0.3;
  s.rng_seed = seed;
  return s;
}

// Greedy nearest match of detections to planted centers within `tol`.
std::size_t count_matches(const std::vector<PoreComponent>& comps,
                          const std::vector<TruthPore>& truth, double tol) {
  std::vector<bool> used(truth.size(), false);
  std::size_t matched = 0;
  for (const auto& c : comps) {
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (used[i]) continue;
      if (std::hypot(c.centroid.x - truth[i].center.x, c.centroid.y - truth[i].center.y) <= tol) {
        used[i] = true;
        ++matched;
        break;
      }
    }
  }
  return matched;
}

TEST(DetectPores, ConstantImageIsEmpty) {
  Raster img(96, 80, 3, 0.5);
  const Detection d = detect_pores(img);
  EXPECT_TRUE(d.components.empty());
  EXPECT_EQ(d.mask.count(), 0u);
}

TEST(DetectPores, RejectsSmallImages) {
  EXPECT_THROW(detect_pores(Raster(63, 100, 1, 0.5)), InvalidInput);
}

TEST(DetectPores, RejectsInvalidConfig) {
  DetectionConfig cfg;
  cfg.sigma2 = 0.5;
  EXPECT_THROW(detect_pores(Raster(64, 64, 1, 0.5), cfg), InvalidParameter);
  cfg = {};
  cfg.min_area_px = 500;
  EXPECT_THROW(cfg.validate(), InvalidParameter);
}

TEST(DetectPores, FindsEveryPlantedPore) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto sheet = gen_synthetic_sheet(ten_pore_sheet(seed));
    const Detection d = detect_pores(sheet.image);
    ASSERT_EQ(d.components.size(), 10u) << "seed " << seed;
    EXPECT_EQ(count_matches(d.components, sheet.pores, 1.5), 10u) << "seed " << seed;
  }
}

TEST(DetectPores, RejectsLineArtifact) {
  auto spec = ten_pore_sheet(3);
  spec.line_artifacts = 1;
  const auto sheet = gen_synthetic_sheet(spec);
  ASSERT_EQ(sheet.lines.size(), 1u);
  const Detection d = detect_pores(sheet.image);
  EXPECT_EQ(d.components.size(), 10u);
  EXPECT_EQ(count_matches(d.components, sheet.pores, 1.5), 10u);
}

TEST(DetectPores, SurvivorsRespectFiltersAndMaskIsTheirUnion) {
  DetectionConfig cfg;
  cfg.min_area_px = 10;
  cfg.max_area_px = 60;
  cfg.max_aspect_ratio = 1.5;
  SyntheticSheetSpec spec;
  spec.max_elongation = 2.5;
  const auto sheet = gen_synthetic_sheet(spec);
  const Detection d = detect_pores(sheet.image, cfg);
  std::size_t total = 0;
  for (const auto& c : d.components) {
    EXPECT_GE(c.area_px, cfg.min_area_px);
    EXPECT_LE(c.area_px, cfg.max_area_px);
    EXPECT_LE(c.aspect_ratio, cfg.max_aspect_ratio);
    EXPECT_EQ(c.area_px, c.pixels.size());
    for (const auto& p : c.pixels) {
      EXPECT_TRUE(d.mask.get(p.x, p.y));
      const double dist = std::hypot(p.x - c.enclosing_circle.center.x, p.y - c.enclosing_circle.center.y);
      EXPECT_LE(dist, c.enclosing_circle.radius + 1e-6);
    }
    total += c.area_px;
  }
  EXPECT_EQ(total, d.mask.count());
}

TEST(DetectPores, ComponentsOrderedByFirstPixel) {
  const auto sheet = gen_synthetic_sheet(SyntheticSheetSpec{});
  const Detection d = detect_pores(sheet.image);
  for (std::size_t i = 1; i < d.components.size(); ++i) {
    const auto& a = d.components[i - 1].pixels.front();
    const auto& b = d.components[i].pixels.front();
    EXPECT_TRUE(a.y < b.y || (a.y == b.y && a.x < b.x));
  }
}

TEST(DetectPores, Deterministic) {
  const auto sheet = gen_synthetic_sheet(SyntheticSheetSpec{});
  EXPECT_EQ(detect_pores(sheet.image).mask, detect_pores(sheet.image).mask);
}

TEST(DetectPores, TranslationEquivariance) {
  auto spec = ten_pore_sheet(8);
  spec.texture_amplitude = 0.0;
  const auto sheet = gen_synthetic_sheet(spec);
  const int dx = 5;
  const int dy = -3;
  Raster shifted(sheet.image.width(), sheet.image.height(), 3);
  for (int y = 0; y < shifted.height(); ++y)
    for (int x = 0; x < shifted.width(); ++x)
      for (int c = 0; c < 3; ++c) {
        const int sx = std::clamp(x - dx, 0, shifted.width() - 1);
        const int sy = std::clamp(y - dy, 0, shifted.height() - 1);
        shifted.at(x, y, c) = sheet.image.at(sx, sy, c);
      }
  const auto a = detect_pores(sheet.image).components;
  const auto b = detect_pores(shifted).components;
  ASSERT_EQ(a.size(), b.size());
  for (const auto& ca : a) {
    bool found = false;
    for (const auto& cb : b)
      if (std::abs(cb.centroid.x - ca.centroid.x - dx) <= 0.5 &&
          std::abs(cb.centroid.y - ca.centroid.y - dy) <= 0.5)
        found = true;
    EXPECT_TRUE(found);
  }
}

TEST(MinEnclosingCircle, SmallCases) {
  EXPECT_THROW(min_enclosing_circle(std::vector<Point2>{}), InvalidInput);

  const std::vector<Point2> one{{2.5, -1.0}};
  const Circle c1 = min_enclosing_circle(one);
  EXPECT_EQ(c1.center.x, 2.5);
  EXPECT_EQ(c1.center.y, -1.0);
  EXPECT_EQ(c1.radius, 0.0);

  const std::vector<Point2> two{{0, 0}, {3, 4}};
  const Circle c2 = min_enclosing_circle(two);
  EXPECT_NEAR(c2.center.x, 1.5, 1e-12);
  EXPECT_NEAR(c2.center.y, 2.0, 1e-12);
  EXPECT_NEAR(c2.radius, 2.5, 1e-12);

  const std::vector<Point2> tri{{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2}};
  EXPECT_NEAR(min_enclosing_circle(tri).radius, oracle::brute_force_mec(tri).radius, 1e-9);
  EXPECT_NEAR(min_enclosing_circle(tri).radius, 1.0 / std::sqrt(3.0), 1e-9);
}

TEST(MinEnclosingCircle, CollinearAndDuplicatePoints) {
  const std::vector<Point2> line{{0, 0}, {1, 1}, {2, 2}, {3, 3}, {1, 1}};
  const Circle c = min_enclosing_circle(line);
  EXPECT_NEAR(c.radius, std::sqrt(18.0) / 2, 1e-12);
  EXPECT_NEAR(c.center.x, 1.5, 1e-12);
}

TEST(MinEnclosingCircle, MatchesBruteForce) {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::uniform_int_distribution<int> count(1, 12);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Point2> pts(static_cast<std::size_t>(count(rng)));
    for (auto& p : pts) p = {u(rng), u(rng)};
    const Circle fast = min_enclosing_circle(pts);
    const Circle slow = oracle::brute_force_mec(pts);
    EXPECT_NEAR(fast.radius, slow.radius, 1e-9);
    for (const auto& p : pts) EXPECT_LE(std::hypot(p.x - fast.center.x, p.y - fast.center.y), fast.radius + 1e-9);
  }
}

TEST(PoreStats, Aggregates) {
  EXPECT_EQ(pore_stats({}).pore_count, 0u);
  EXPECT_EQ(pore_stats({}).pore_area_total, 0.0);

  std::vector<PoreComponent> comps(2);
  comps[0].area_px = 10;
  comps[0].eccentricity = 0.2;
  comps[1].area_px = 30;
  comps[1].eccentricity = 0.6;
  const PoreStats s = pore_stats(comps);
  EXPECT_EQ(s.pore_count, 2u);
  EXPECT_EQ(s.pore_area_total, 40.0);
  EXPECT_EQ(s.pore_area_mean, 20.0);
  EXPECT_NEAR(s.mean_eccentricity, 0.4, 1e-15);
}

TEST(PoreStats, TruthComponentsMatchAnalyticAreas) {
  const auto sheet = gen_synthetic_sheet(ten_pore_sheet(4));
  std::vector<PoreComponent> comps;
  for (auto& px : connected_components(sheet.truth_mask, 8))
    comps.push_back(describe_component(std::move(px), sheet.image));
  ASSERT_EQ(comps.size(), 10u);
  double analytic = 0.0;
  for (const auto& p : sheet.pores) analytic += p.analytic_area;
  const PoreStats s = pore_stats(comps);
  EXPECT_NEAR(s.pore_area_total / analytic, 1.0, 0.10);
  EXPECT_NEAR(s.pore_area_mean * static_cast<double>(s.pore_count), s.pore_area_total, 1e-6);
}

TEST(DescribeComponent, ShapeMoments) {
  Raster src(32, 32, 1, 0.5);
  std::vector<PixelCoord> bar;
  for (int x = 0; x < 12; ++x)
    for (int y = 0; y < 2; ++y) bar.push_back({x + 5, y + 10});
  const PoreComponent c = describe_component(bar, src);
  EXPECT_NEAR(c.orientation_deg, 0.0, 1e-9);
  EXPECT_GT(c.aspect_ratio, 4.0);
  EXPECT_GT(c.eccentricity, 0.9);

  std::vector<PixelCoord> vertical;
  for (const auto& p : bar) vertical.push_back({p.y, p.x});
  EXPECT_NEAR(describe_component(vertical, src).orientation_deg, 90.0, 1e-9);

  const PoreComponent single = describe_component({{3, 3}}, src);
  EXPECT_NEAR(single.aspect_ratio, 1.0, 1e-12);
  EXPECT_EQ(single.eccentricity, 0.0);
}

TEST(MaskMetrics, HandCounts) {
  BinaryMask a(4, 4);
  BinaryMask b(4, 4);
  for (int x = 0; x < 4; ++x) a.set(x, 0);
  const MaskMetrics same = mask_metrics(a, a);
  EXPECT_EQ(same.dice, 1.0);
  EXPECT_EQ(same.iou, 1.0);
  EXPECT_EQ(same.precision, 1.0);
  EXPECT_EQ(same.accuracy, 1.0);

  for (int x = 0; x < 4; ++x) b.set(x, 3);
  const MaskMetrics disjoint = mask_metrics(a, b);
  EXPECT_EQ(disjoint.dice, 0.0);
  EXPECT_EQ(disjoint.iou, 0.0);
  EXPECT_EQ(disjoint.precision, 0.0);

  BinaryMask t(4, 4);
  t.set(2, 0);
  t.set(3, 0);
  t.set(0, 1);
  t.set(1, 1);
  const MaskMetrics half = mask_metrics(a, t);
  EXPECT_DOUBLE_EQ(half.dice, 0.5);
  EXPECT_DOUBLE_EQ(half.iou, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(half.precision, 0.5);
  EXPECT_DOUBLE_EQ(half.accuracy, 12.0 / 16.0);
}

TEST(MaskMetrics, EmptyMaskConventions) {
  const BinaryMask empty(3, 3);
  const MaskMetrics both = mask_metrics(empty, empty);
  EXPECT_EQ(both.dice, 1.0);
  EXPECT_EQ(both.iou, 1.0);
  EXPECT_EQ(both.precision, 1.0);
  BinaryMask t(3, 3);
  t.set(1, 1);
  const MaskMetrics none = mask_metrics(empty, t);
  EXPECT_EQ(none.dice, 0.0);
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_THROW(mask_metrics(BinaryMask(3, 3), BinaryMask(3, 4)), InvalidInput);
}

TEST(MaskMetrics, DiceIouIdentity) {
  std::mt19937 rng(17);
  std::bernoulli_distribution bit(0.3);
  for (int trial = 0; trial < 200; ++trial) {
    BinaryMask a(20, 15);
    BinaryMask b(20, 15);
    for (int y = 0; y < 15; ++y)
      for (int x = 0; x < 20; ++x) {
        a.set(x, y, bit(rng));
        b.set(x, y, bit(rng));
      }
    const MaskMetrics m = mask_metrics(a, b);
    EXPECT_NEAR(m.dice, 2 * m.iou / (1 + m.iou), 1e-12);
  }
}

TEST(Morphology, ClosingFillsPinholeOpeningRemovesSpeck) {
  BinaryMask m(9, 9);
  for (int y = 2; y <= 6; ++y)
    for (int x = 2; x <= 6; ++x) m.set(x, y);
  m.set(4, 4, false);
  const BinaryMask closed = erode(dilate(m, 1), 1);
  EXPECT_TRUE(closed.get(4, 4));

  BinaryMask speck(9, 9);
  speck.set(4, 4);
  EXPECT_EQ(dilate(erode(speck, 1), 1).count(), 0u);
}

TEST(Components, EightConnectivityJoinsDiagonals) {
  BinaryMask m(4, 4);
  m.set(0, 0);
  m.set(1, 1);
  m.set(3, 3);
  EXPECT_EQ(connected_components(m, 8).size(), 2u);
  EXPECT_EQ(connected_components(m, 4).size(), 3u);
}

TEST(ComponentsCsv, HeaderAndRows) {
  Raster src(16, 16, 1, 0.4);
  std::vector<PoreComponent> comps{describe_component({{1, 1}, {2, 1}}, src)};
  const std::string csv = components_csv(comps);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "id,cx,cy,area,ecc,orient,circle_x,circle_y,radius");
  EXPECT_NE(csv.find("\n0,1.500000,1.000000,2,"), std::string::npos);
}

}  // namespace
}  // namespace poresim
