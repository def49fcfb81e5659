#include "poresim/rfregress.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <json.hpp>

#include "poresim/error.hpp"
#include "poresim/io.hpp"
#include "poresim/parallel.hpp"

namespace poresim {

void ForestConfig::validate() const {
  if (n_trees < 1) throw InvalidParameter("n_trees must be >= 1");
  if (tree.min_samples_leaf < 1) throw InvalidParameter("min_samples_leaf must be >= 1");
}

double RegressionTree::predict(std::span<const double> features) const {
  if (nodes.empty()) throw InvalidInput("empty tree");
  int i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = features[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[i].value;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.feature < 0; }));
}

int RegressionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> d(nodes.size(), 0);
  int deepest = 0;
  // Children are always appended after their parent.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].feature < 0) continue;
    d[nodes[i].left] = d[nodes[i].right] = d[i] + 1;
    deepest = std::max(deepest, d[i] + 1);
  }
  return deepest;
}

// ---------------------------------------------------------------------------
// Tree growth

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double cost = std::numeric_limits<double>::infinity();
};

class TreeBuilder {
 public:
  TreeBuilder(std::span<const RegressionSample> samples, const TreeConfig& cfg,
              std::mt19937_64& rng)
      : samples_(samples), cfg_(cfg), rng_(rng), n_features_(samples.front().features.size()) {
    mtry_ = cfg.features_per_split > 0 ? cfg.features_per_split : (n_features_ + 2) / 3;
    mtry_ = std::clamp<std::size_t>(mtry_, 1, std::max<std::size_t>(1, n_features_));
    feature_pool_.resize(n_features_);
  }

  RegressionTree build(std::vector<std::size_t> indices) {
    tree_.nodes.clear();
    grow(std::move(indices), 0);
    return std::move(tree_);
  }

 private:
  double target(std::size_t i) const { return samples_[i].target; }

  int grow(std::vector<std::size_t> idx, int depth) {
    const int node_id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();

    double sum = 0.0;
    double lo = target(idx.front());
    double hi = lo;
    for (std::size_t i : idx) {
      sum += target(i);
      lo = std::min(lo, target(i));
      hi = std::max(hi, target(i));
    }
    const double n = static_cast<double>(idx.size());
    const double mean = sum / n;
    double sse = 0.0;
    for (std::size_t i : idx) sse += (target(i) - mean) * (target(i) - mean);

    auto& node = tree_.nodes[node_id];
    node.n_samples = idx.size();
    // Clamp so leaves stay inside the subset's target range despite rounding.
    node.value = std::clamp(mean, lo, hi);

    const bool depth_reached = cfg_.max_depth > 0 && depth >= cfg_.max_depth;
    if (depth_reached || lo == hi || idx.size() < 2 * cfg_.min_samples_leaf) return node_id;

    const Split best = find_split(idx, sse);
    if (best.feature < 0) return node_id;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t i : idx)
      (samples_[i].features[best.feature] <= best.threshold ? left : right).push_back(i);
    idx.clear();
    idx.shrink_to_fit();

    tree_.nodes[node_id].feature = best.feature;
    tree_.nodes[node_id].threshold = best.threshold;
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    tree_.nodes[node_id].left = l;
    tree_.nodes[node_id].right = r;
    return node_id;
  }

  Split find_split(std::vector<std::size_t>& idx, double parent_sse) {
    // Features are drawn lazily by partial Fisher-Yates. At least mtry are
    // evaluated; drawing continues while none of them yields a valid split.
    std::iota(feature_pool_.begin(), feature_pool_.end(), 0);

    Split best;
    const std::size_t n = idx.size();
    const std::size_t min_leaf = cfg_.min_samples_leaf;
    double total = 0.0;
    double total_sq = 0.0;
    for (std::size_t i : idx) {
      total += target(i);
      total_sq += target(i) * target(i);
    }

    for (std::size_t k = 0; k < n_features_ && (k < mtry_ || best.feature < 0); ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, n_features_ - 1);
      std::swap(feature_pool_[k], feature_pool_[pick(rng_)]);
      const auto f = feature_pool_[k];
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return samples_[a].features[f] < samples_[b].features[f];
      });
      double left_sum = 0.0;
      double left_sq = 0.0;
      for (std::size_t i = 1; i < n; ++i) {
        const double y = target(idx[i - 1]);
        left_sum += y;
        left_sq += y * y;
        if (i < min_leaf || n - i < min_leaf) continue;
        const double xl = samples_[idx[i - 1]].features[f];
        const double xr = samples_[idx[i]].features[f];
        if (!(xl < xr)) continue;
        const double nl = static_cast<double>(i);
        const double nr = static_cast<double>(n - i);
        const double right_sum = total - left_sum;
        const double right_sq = total_sq - left_sq;
        const double cost = (left_sq - left_sum * left_sum / nl) +
                            (right_sq - right_sum * right_sum / nr);
        if (cost < best.cost) {
          double thr = xl + (xr - xl) / 2.0;
          if (!(thr < xr)) thr = xl;
          best = {static_cast<int>(f), thr, cost};
        }
      }
    }
    if (best.feature >= 0 && !(best.cost < parent_sse * (1.0 - 1e-12))) best.feature = -1;
    return best;
  }

  std::span<const RegressionSample> samples_;
  const TreeConfig& cfg_;
  std::mt19937_64& rng_;
  std::size_t n_features_;
  std::size_t mtry_ = 1;
  std::vector<std::size_t> feature_pool_;
  RegressionTree tree_;
};

void check_samples(std::span<const RegressionSample> samples) {
  const std::size_t p = samples.front().features.size();
  if (p == 0) throw InvalidInput("regression samples need at least one feature");
  for (const auto& s : samples) {
    if (s.features.size() != p) throw InvalidInput("inconsistent feature vector lengths");
    if (!std::isfinite(s.target)) throw InvalidInput("non-finite regression target");
    for (double v : s.features)
      if (!std::isfinite(v)) throw InvalidInput("non-finite feature value");
  }
}

}  // namespace

RegressionTree fit_tree(std::span<const RegressionSample> samples,
                        std::span<const std::size_t> indices, const TreeConfig& cfg,
                        std::mt19937_64& rng) {
  if (samples.empty() || indices.empty()) throw InvalidInput("fit_tree needs at least one sample");
  if (cfg.min_samples_leaf < 1) throw InvalidParameter("min_samples_leaf must be >= 1");
  check_samples(samples);
  for (std::size_t i : indices)
    if (i >= samples.size()) throw InvalidInput("sample index out of range");
  TreeBuilder builder(samples, cfg, rng);
  return builder.build({indices.begin(), indices.end()});
}

RegressionTree fit_tree(std::span<const RegressionSample> samples, const TreeConfig& cfg,
                        std::mt19937_64& rng) {
  std::vector<std::size_t> all(samples.size());
  std::iota(all.begin(), all.end(), 0);
  return fit_tree(samples, all, cfg, rng);
}

// ---------------------------------------------------------------------------
// Forest

RandomForestModel fit_forest(std::span<const RegressionSample> samples, const ForestConfig& cfg) {
  cfg.validate();
  if (samples.size() < 2) throw InvalidInput("fit_forest needs at least 2 samples");
  check_samples(samples);

  RandomForestModel model;
  model.config = cfg;
  model.n_features = samples.front().features.size();
  model.trees.resize(cfg.n_trees);

  parallel_for(cfg.n_trees, [&](std::size_t t) {
    std::mt19937_64 rng(cfg.rng_seed + t);
    std::vector<std::size_t> idx(samples.size());
    if (cfg.bootstrap) {
      std::uniform_int_distribution<std::size_t> draw(0, samples.size() - 1);
      for (auto& i : idx) i = draw(rng);
    } else {
      std::iota(idx.begin(), idx.end(), 0);
    }
    model.trees[t] = fit_tree(samples, idx, cfg.tree, rng);
  });
  return model;
}

double RandomForestModel::predict(std::span<const double> features) const {
  if (features.size() != n_features)
    throw InvalidInput("feature length " + std::to_string(features.size()) +
                       " does not match model (" + std::to_string(n_features) + ")");
  if (trees.empty()) throw InvalidInput("model has no trees");
  double sum = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& t : trees) {
    const double v = t.predict(features);
    sum += v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return std::clamp(sum / static_cast<double>(trees.size()), lo, hi);
}

double predict(const RandomForestModel& model, std::span<const double> features) {
  return model.predict(features);
}

std::string RandomForestModel::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "poresim-forest";
  j["version"] = 1;
  j["config"] = {{"n_trees", config.n_trees},
                 {"max_depth", config.tree.max_depth},
                 {"min_samples_leaf", config.tree.min_samples_leaf},
                 {"features_per_split", config.tree.features_per_split},
                 {"bootstrap", config.bootstrap},
                 {"rng_seed", config.rng_seed}};
  j["n_features"] = n_features;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& t : trees) {
    nlohmann::ordered_json jt;
    std::vector<int> feature, left, right;
    std::vector<double> threshold, value;
    std::vector<std::size_t> count;
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
      count.push_back(n.n_samples);
    }
    jt["feature"] = feature;
    jt["threshold"] = threshold;
    jt["left"] = left;
    jt["right"] = right;
    jt["value"] = value;
    jt["n_samples"] = count;
    arr.push_back(std::move(jt));
  }
  j["trees"] = std::move(arr);
  return j.dump() + "\n";
}

RandomForestModel RandomForestModel::from_json(std::string_view text) {
  RandomForestModel m;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "poresim-forest") throw InvalidInput("not a poresim forest model");
    const auto& c = j.at("config");
    m.config.n_trees = c.at("n_trees").get<std::size_t>();
    m.config.tree.max_depth = c.at("max_depth").get<int>();
    m.config.tree.min_samples_leaf = c.at("min_samples_leaf").get<std::size_t>();
    m.config.tree.features_per_split = c.at("features_per_split").get<std::size_t>();
    m.config.bootstrap = c.at("bootstrap").get<bool>();
    m.config.rng_seed = c.at("rng_seed").get<std::uint64_t>();
    m.n_features = j.at("n_features").get<std::size_t>();
    for (const auto& jt : j.at("trees")) {
      const auto feature = jt.at("feature").get<std::vector<int>>();
      const auto threshold = jt.at("threshold").get<std::vector<double>>();
      const auto left = jt.at("left").get<std::vector<int>>();
      const auto right = jt.at("right").get<std::vector<int>>();
      const auto value = jt.at("value").get<std::vector<double>>();
      const auto count = jt.at("n_samples").get<std::vector<std::size_t>>();
      const std::size_t n = feature.size();
      if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n ||
          value.size() != n || count.size() != n)
        throw InvalidInput("malformed tree arrays");
      RegressionTree t;
      t.nodes.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        auto& node = t.nodes[i];
        node = {feature[i], threshold[i], left[i], right[i], value[i], count[i]};
        if (node.feature >= static_cast<int>(m.n_features))
          throw InvalidInput("split feature out of range");
        if (node.feature >= 0 &&
            (node.left <= static_cast<int>(i) || node.right <= static_cast<int>(i) ||
             node.left >= static_cast<int>(n) || node.right >= static_cast<int>(n)))
          throw InvalidInput("invalid child index");
      }
      m.trees.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("invalid model JSON: ") + e.what());
  }
  if (m.trees.size() != m.config.n_trees) throw InvalidInput("tree count does not match n_trees");
  return m;
}

void RandomForestModel::save(const std::filesystem::path& path) const {
  write_text_atomic(path, to_json());
}

RandomForestModel RandomForestModel::load(const std::filesystem::path& path) {
  return from_json(read_text(path));
}

// ---------------------------------------------------------------------------
// Metrics and dataset assembly

RegressionMetrics regression_metrics(std::span<const double> preds,
                                     std::span<const double> targets) {
  if (preds.size() != targets.size() || preds.empty())
    throw InvalidInput("regression_metrics needs equal, non-zero lengths");
  const double n = static_cast<double>(targets.size());
  const double mean = std::accumulate(targets.begin(), targets.end(), 0.0) / n;
  double ss_tot = 0.0;
  double ss_res = 0.0;
  double abs_sum = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    ss_tot += (targets[i] - mean) * (targets[i] - mean);
    ss_res += (preds[i] - targets[i]) * (preds[i] - targets[i]);
    abs_sum += std::abs(preds[i] - targets[i]);
  }
  RegressionMetrics m;
  m.mae = abs_sum / n;
  double var = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double d = std::abs(preds[i] - targets[i]) - m.mae;
    var += d * d;
  }
  m.mae_std = std::sqrt(var / n);
  if (ss_tot == 0.0) {
    if (ss_res != 0.0) throw InvalidInput("r2 undefined: constant targets with nonzero residuals");
    m.r2 = 1.0;
  } else {
    m.r2 = 1.0 - ss_res / ss_tot;
  }
  return m;
}

std::vector<double> window_features(TimeWindow window, double baseline_pore_count) {
  if (window == TimeWindow::Baseline) throw InvalidInput("baseline is not a prediction window");
  return {static_cast<double>(static_cast<int>(window)), 1.0, baseline_pore_count};
}

std::vector<RegressionSample> build_regression_samples(std::span<const IndexSample> kept_rows) {
  std::vector<IndexSample> area_rows;
  std::map<std::string, std::pair<double, int>> base_count;
  for (const auto& s : kept_rows) {
    if (s.index_name == kAreaIndex) area_rows.push_back(s);
    if (s.index_name == kCountIndex && s.day == 0) {
      auto& [sum, n] = base_count[s.subject_id];
      sum += s.value;
      ++n;
    }
  }
  const auto normalized = normalize_cohort(area_rows);
  const auto daily = daily_mean(normalized);

  // (subject, window) -> (sum, days)
  std::map<std::pair<std::string, int>, std::pair<double, int>> acc;
  for (const auto& d : daily) {
    if (d.day < 1 || d.day > 30) continue;
    auto& [sum, n] = acc[{d.subject_id, static_cast<int>(assign_time_window(d.day))}];
    sum += d.value;
    ++n;
  }
  std::vector<RegressionSample> out;
  for (const auto& [key, sn] : acc) {
    const auto it = base_count.find(key.first);
    const double count = it == base_count.end() ? 0.0 : it->second.first / it->second.second;
    out.push_back({window_features(static_cast<TimeWindow>(key.second), count),
                   sn.first / sn.second});
  }
  return out;
}

}  // namespace poresim
