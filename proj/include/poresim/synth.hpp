#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "poresim/datapipe.hpp"
#include "poresim/imagecore.hpp"
#include "poresim/poreseg.hpp"

namespace poresim {

struct SyntheticSheetSpec {
  int width = 512;
  int height = 512;
  int n_pores = 30;
  double radius_min = 2.0;  // semi-major axis, px
  double radius_max = 6.0;
  double contrast_min = 0.3;  // intensity drop at full coverage
  double contrast_max = 0.3;
  double max_elongation = 1.3;  // semi-major / semi-minor
  double background = 0.65;
  double texture_amplitude = 0.05;  // low-frequency shading
  double noise_sigma = 0.005;       // per-pixel Gaussian grain
  bool rgb = true;
  int line_artifacts = 0;
  double line_length = 80.0;
  double line_width = 8.0;
  double line_contrast = 0.3;
  std::uint64_t rng_seed = 1;

  void validate() const;
};

struct TruthPore {
  Point2 center;
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double angle_rad = 0.0;
  double contrast = 0.0;
  double analytic_area = 0.0;  // pi * a * b
  std::size_t mask_area = 0;   // pixels with coverage >= 0.5
};

struct TruthLine {
  Point2 center;
  double length = 0.0;
  double width = 0.0;
  double angle_rad = 0.0;
};

struct SyntheticSheet {
  Raster image;
  BinaryMask truth_mask;  // pores only; line artifacts are not pores
  std::vector<TruthPore> pores;
  std::vector<TruthLine> lines;
};

// Low-frequency shaded background with anti-aliased dark elliptical pores at
// non-overlapping positions. Deterministic per seed. Throws Unsatisfiable
// when the pores cannot be packed after bounded retries.
SyntheticSheet gen_synthetic_sheet(const SyntheticSheetSpec& spec);

struct CohortSpec {
  int n_subjects = 60;
  int days = 30;  // days 0..days, 0 is the baseline
  double trend = -0.005;           // relative change per day of Pore_Area_total
  double count_trend_factor = 0.5;  // Pore_Count trend = factor * trend
  double noise = 0.02;              // multiplicative session noise (log sigma)
  double outlier_rate = 0.0;
  double outlier_amplitude = 5.0;  // in units of `noise`
  bool include_flat_index = true;  // adds "L_mean" with no trend
  std::uint64_t rng_seed = 7;

  void validate() const;
};

struct PlantedOutlier {
  std::string subject_id;
  std::string index_name;
  int day = 0;
  double factor = 1.0;
};

struct SyntheticCohort {
  std::vector<IndexSample> samples;
  std::vector<PlantedOutlier> outliers;
};

// Per-subject baselines, shared relative trend, lognormal session noise and
// isolated day-level outliers (no two within 2 days in one series, never on
// the first or last day). Outlier count is round(rate * eligible days).
SyntheticCohort gen_synthetic_cohort(const CohortSpec& spec);

std::string outliers_csv(const std::vector<PlantedOutlier>& outliers);

}  // namespace poresim
