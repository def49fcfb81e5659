#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "poresim/datapipe.hpp"

namespace poresim {

struct RegressionSample {
  std::vector<double> features;
  double target = 0.0;
};

struct TreeConfig {
  int max_depth = 8;  // <= 0 means unlimited
  std::size_t min_samples_leaf = 2;
  // Features tried per split; 0 means ceil(p/3).
  std::size_t features_per_split = 0;

  friend bool operator==(const TreeConfig&, const TreeConfig&) = default;
};

struct ForestConfig {
  std::size_t n_trees = 100;
  TreeConfig tree;
  bool bootstrap = true;
  std::uint64_t rng_seed = 42;

  void validate() const;
  friend bool operator==(const ForestConfig&, const ForestConfig&) = default;
};

// Flat binary regression tree. Internal nodes send x[feature] <= threshold
// left; leaves carry the mean target of their training subset.
struct RegressionTree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    std::size_t n_samples = 0;
  };
  std::vector<Node> nodes;

  double predict(std::span<const double> features) const;
  std::size_t leaf_count() const;
  int depth() const;
};

// CART regression tree minimizing weighted child variance. `indices` selects
// (with repetition) the training rows.
RegressionTree fit_tree(std::span<const RegressionSample> samples,
                        std::span<const std::size_t> indices, const TreeConfig& cfg,
                        std::mt19937_64& rng);

// Convenience overload over all samples.
RegressionTree fit_tree(std::span<const RegressionSample> samples, const TreeConfig& cfg,
                        std::mt19937_64& rng);

struct RandomForestModel {
  ForestConfig config;
  std::size_t n_features = 0;
  std::vector<RegressionTree> trees;

  double predict(std::span<const double> features) const;
  std::string to_json() const;
  static RandomForestModel from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static RandomForestModel load(const std::filesystem::path& path);
};

// Tree t trains on its own bootstrap draw from mt19937_64(seed + t), so the
// model is identical whether trees are built serially or in parallel.
RandomForestModel fit_forest(std::span<const RegressionSample> samples, const ForestConfig& cfg);

double predict(const RandomForestModel& model, std::span<const double> features);

struct RegressionMetrics {
  double r2 = 0.0;
  double mae = 0.0;
  double mae_std = 0.0;  // population std of |pred - target|
};

RegressionMetrics regression_metrics(std::span<const double> preds,
                                     std::span<const double> targets);

inline constexpr std::string_view kAreaIndex = "Pore_Area_total";
inline constexpr std::string_view kCountIndex = "Pore_Count";

// [time-window ordinal, normalized baseline area (1.0), baseline pore count].
std::vector<double> window_features(TimeWindow window, double baseline_pore_count);

// One sample per (subject, window) with kept data: target is the mean of the
// subject's normalized daily Pore_Area_total over the window's days. The
// baseline count is the subject's raw day-0 Pore_Count mean (0 if absent).
std::vector<RegressionSample> build_regression_samples(std::span<const IndexSample> kept_rows);

}  // namespace poresim
