// poresim command-line front end. Exit codes: 0 ok, 1 processing error,
// 2 usage error.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>

#include "poresim/config.hpp"
#include "poresim/datapipe.hpp"
#include "poresim/deform.hpp"
#include "poresim/error.hpp"
#include "poresim/io.hpp"
#include "poresim/png_io.hpp"
#include "poresim/poreseg.hpp"
#include "poresim/rfregress.hpp"
#include "poresim/synth.hpp"

namespace {

using namespace poresim;
using nlohmann::ordered_json;

std::mutex log_mutex;

void log_line(const std::string& msg) {
  std::lock_guard lock(log_mutex);
  std::cerr << "poresim: " << msg << '\n';
}

// Flag values are kept separate from the config so that only flags the user
// actually passed override the --config file.
struct Args {
  std::string config_path;
  std::string report_path;

  std::string in, out, components, removed, model, truth, pred, flow, outliers;

  std::optional<int> window_days;
  std::optional<double> k_sigma;
  std::optional<std::uint64_t> seed;
  std::optional<double> beta;
  std::string time_window;

  SyntheticSheetSpec sheet;
  CohortSpec cohort;
  bool no_flat_index = false;
};

PipelineConfig load_pipeline(const Args& a) {
  PipelineConfig cfg = a.config_path.empty() ? PipelineConfig{} : load_config(a.config_path);
  if (a.window_days) cfg.clean.window_days = *a.window_days;
  if (a.k_sigma) cfg.clean.k_sigma = *a.k_sigma;
  if (a.seed) {
    cfg.rng_seed = *a.seed;
    cfg.forest.rng_seed = *a.seed;
  }
  if (a.beta) cfg.beta = *a.beta;
  cfg.validate();
  return cfg;
}

void emit_report(const Args& a, ordered_json report) {
  if (a.report_path.empty()) return;
  write_text_atomic(a.report_path, report.dump(2) + "\n");
}

ordered_json base_report(const std::string& cmd, const PipelineConfig& cfg, const Args& a) {
  ordered_json r = run_report(cmd, cfg);
  ordered_json io;
  for (const auto& [key, value] : {std::pair{"in", a.in}, {"out", a.out}, {"model", a.model}}) {
    if (!value.empty()) io[key] = value;
  }
  r["io"] = io;
  return r;
}

void run_segment(const Args& a) {
  const PipelineConfig cfg = load_pipeline(a);
  const Raster img = read_png(a.in);
  const Detection det = detect_pores(img, cfg.detection);
  write_mask_png(a.out, det.mask);
  if (!a.components.empty()) write_components_csv(a.components, det.components);
  const PoreStats st = pore_stats(det.components);
  log_line("segment: " + std::to_string(st.pore_count) + " pores, area " +
           std::to_string(st.pore_area_total) + " px");
  ordered_json r = base_report("segment", cfg, a);
  r["results"] = {{"pore_count", st.pore_count},
                  {"pore_area_total", st.pore_area_total},
                  {"pore_area_mean", st.pore_area_mean},
                  {"mean_eccentricity", st.mean_eccentricity},
                  {"mean_L", st.mean_L}};
  emit_report(a, r);
}

void run_clean(const Args& a) {
  const PipelineConfig cfg = load_pipeline(a);
  const auto rows = read_samples_csv(a.in);
  const SampleCleanResult res = clean_samples(rows, cfg.clean);
  for (const auto& w : res.warnings) log_line("warning: " + w);
  write_samples_csv(a.out, res.kept);
  if (!a.removed.empty()) write_samples_csv(a.removed, res.removed);
  log_line("clean: kept " + std::to_string(res.kept.size()) + " rows, removed " +
           std::to_string(res.removed.size()));
  ordered_json r = base_report("clean", cfg, a);
  r["results"] = {{"rows_in", rows.size()},
                  {"rows_kept", res.kept.size()},
                  {"rows_removed", res.removed.size()},
                  {"warnings", res.warnings}};
  emit_report(a, r);
}

void run_analyze(const Args& a) {
  const PipelineConfig cfg = load_pipeline(a);
  const auto rows = read_samples_csv(a.in);
  const auto daily = daily_mean(normalize_cohort(rows));
  const auto reports = select_representative_index(daily);
  ordered_json r = base_report("analyze", cfg, a);
  r["results"] = ordered_json::parse(trend_report_json(reports));
  log_line("analyze: representative index " + reports.front().index_name);
  write_text_atomic(a.report_path, r.dump(2) + "\n");
}

void run_train(const Args& a) {
  const PipelineConfig cfg = load_pipeline(a);
  const auto samples = build_regression_samples(read_samples_csv(a.in));
  const RandomForestModel model = fit_forest(samples, cfg.forest);
  model.save(a.model);
  std::vector<double> preds, targets;
  for (const auto& s : samples) {
    preds.push_back(model.predict(s.features));
    targets.push_back(s.target);
  }
  const RegressionMetrics m = regression_metrics(preds, targets);
  ordered_json windows;
  for (TimeWindow w : {TimeWindow::TW10, TimeWindow::TW20, TimeWindow::TW30}) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : samples) {
      if (s.features[0] == static_cast<double>(w)) {
        sum += s.target;
        ++n;
      }
    }
    if (n > 0) windows[std::string(to_string(w))] = sum / static_cast<double>(n);
  }
  log_line("train: " + std::to_string(samples.size()) + " samples, training r2 " +
           std::to_string(m.r2));
  ordered_json r = base_report("train", cfg, a);
  r["results"] = {{"n_samples", samples.size()},
                  {"n_trees", model.trees.size()},
                  {"train_r2", m.r2},
                  {"train_mae", m.mae},
                  {"train_mae_std", m.mae_std},
                  {"mean_target_by_window", windows}};
  emit_report(a, r);
}

void run_simulate(const Args& a) {
  const PipelineConfig cfg = load_pipeline(a);
  const TimeWindow window = parse_time_window(a.time_window);
  const Raster img = read_png(a.in);
  const auto model = RandomForestModel::load(a.model);
  const Detection det = detect_pores(img, cfg.detection);
  const SimulationResult sim = simulate(img, det.components, model, window, cfg.beta);
  write_png(a.out, sim.image);
  if (!a.flow.empty())
    write_flow_field(a.flow, build_flow_field(img.width(), img.height(), sim.circles));
  log_line("simulate: " + std::string(to_string(window)) + " rho " + std::to_string(sim.rho) +
           ", strength " + std::to_string(sim.strength) + ", " +
           std::to_string(sim.circles.size()) + " pores warped");
  ordered_json r = base_report("simulate", cfg, a);
  r["results"] = {{"window", to_string(window)},
                  {"rho", sim.rho},
                  {"strength", sim.strength},
                  {"beta", cfg.beta},
                  {"pores_warped", sim.circles.size()},
                  {"pore_area_total_before", pore_stats(det.components).pore_area_total}};
  emit_report(a, r);
}

void run_gen_sheet(const Args& a) {
  PipelineConfig cfg;
  const SyntheticSheet sheet = gen_synthetic_sheet(a.sheet);
  write_png(a.out, sheet.image);
  if (!a.truth.empty()) write_mask_png(a.truth, sheet.truth_mask);
  ordered_json pores = ordered_json::array();
  for (const auto& p : sheet.pores) {
    pores.push_back({{"cx", p.center.x},
                     {"cy", p.center.y},
                     {"semi_major", p.semi_major},
                     {"semi_minor", p.semi_minor},
                     {"angle_rad", p.angle_rad},
                     {"contrast", p.contrast},
                     {"mask_area", p.mask_area}});
  }
  cfg.rng_seed = a.sheet.rng_seed;
  ordered_json r = base_report("gen-sheet", cfg, a);
  r["results"] = {{"width", a.sheet.width},
                  {"height", a.sheet.height},
                  {"n_pores", sheet.pores.size()},
                  {"n_lines", sheet.lines.size()},
                  {"truth_area", sheet.truth_mask.count()},
                  {"pores", pores}};
  emit_report(a, r);
}

void run_gen_cohort(const Args& a) {
  CohortSpec spec = a.cohort;
  spec.include_flat_index = !a.no_flat_index;
  const SyntheticCohort c = gen_synthetic_cohort(spec);
  write_samples_csv(a.out, c.samples);
  if (!a.outliers.empty()) write_text_atomic(a.outliers, outliers_csv(c.outliers));
  PipelineConfig cfg;
  cfg.rng_seed = spec.rng_seed;
  ordered_json r = base_report("gen-cohort", cfg, a);
  r["results"] = {{"n_subjects", spec.n_subjects},
                  {"days", spec.days},
                  {"trend", spec.trend},
                  {"noise", spec.noise},
                  {"rows", c.samples.size()},
                  {"planted_outliers", c.outliers.size()}};
  emit_report(a, r);
}

void run_eval_seg(const Args& a) {
  const MaskMetrics m = mask_metrics(read_mask_png(a.pred), read_mask_png(a.truth));
  std::printf("dice %.6f\niou %.6f\nprecision %.6f\naccuracy %.6f\n", m.dice, m.iou, m.precision,
              m.accuracy);
  ordered_json r = base_report("eval-seg", PipelineConfig{}, a);
  r["results"] = {{"dice", m.dice}, {"iou", m.iou}, {"precision", m.precision},
                  {"accuracy", m.accuracy}};
  emit_report(a, r);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Facial pore detection, index cleaning, trend modelling and pore warping"};
  app.set_version_flag("--version", library_version());
  app.require_subcommand(1);

  Args a;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", a.config_path, "Pipeline config JSON")->check(CLI::ExistingFile);
    sub->add_option("--report", a.report_path, "Write a JSON run report");
  };

  auto* seg = app.add_subcommand("segment", "Detect pores and write a mask");
  seg->add_option("--in", a.in, "Input PNG")->required();
  seg->add_option("--out", a.out, "Output mask PNG")->required();
  seg->add_option("--components", a.components, "Component CSV");
  common(seg);

  auto* cln = app.add_subcommand("clean", "Sliding-window outlier removal");
  cln->add_option("--in", a.in, "Index series CSV")->required();
  cln->add_option("--out", a.out, "Kept rows CSV")->required();
  cln->add_option("--removed", a.removed, "Removed rows CSV");
  cln->add_option("--window", a.window_days, "Window length in days")->check(CLI::PositiveNumber);
  cln->add_option("--k", a.k_sigma, "Threshold in window standard deviations");
  common(cln);

  auto* ana = app.add_subcommand("analyze", "Cohort trend fit and index ranking");
  ana->add_option("--in", a.in, "Cleaned series CSV")->required();
  ana->add_option("--config", a.config_path, "Pipeline config JSON")->check(CLI::ExistingFile);
  ana->add_option("--report", a.report_path, "Trend report JSON")->required();

  auto* trn = app.add_subcommand("train", "Fit the random forest");
  trn->add_option("--in", a.in, "Cleaned series CSV")->required();
  trn->add_option("--model", a.model, "Output model JSON")->required();
  trn->add_option("--seed", a.seed, "Random seed");
  common(trn);

  auto* sim = app.add_subcommand("simulate", "Warp detected pores to a predicted window");
  sim->add_option("--in", a.in, "Input PNG")->required();
  sim->add_option("--model", a.model, "Model JSON")->required();
  sim->add_option("--window", a.time_window, "Time window")
      ->required()
      ->check(CLI::IsMember({"TW10", "TW20", "TW30"}));
  sim->add_option("--out", a.out, "Output PNG")->required();
  sim->add_option("--beta", a.beta, "Warp margin factor (> 1)");
  sim->add_option("--flow", a.flow, "Flow-field sidecar");
  common(sim);

  auto* gsh = app.add_subcommand("gen-sheet", "Synthetic skin sheet with ground truth");
  gsh->add_option("--out", a.out, "Output PNG")->required();
  gsh->add_option("--truth", a.truth, "Truth mask PNG");
  gsh->add_option("--width", a.sheet.width)->capture_default_str();
  gsh->add_option("--height", a.sheet.height)->capture_default_str();
  gsh->add_option("--pores", a.sheet.n_pores)->capture_default_str();
  gsh->add_option("--radius-min", a.sheet.radius_min)->capture_default_str();
  gsh->add_option("--radius-max", a.sheet.radius_max)->capture_default_str();
  gsh->add_option("--contrast-min", a.sheet.contrast_min)->capture_default_str();
  gsh->add_option("--contrast-max", a.sheet.contrast_max)->capture_default_str();
  gsh->add_option("--texture", a.sheet.texture_amplitude)->capture_default_str();
  gsh->add_option("--noise", a.sheet.noise_sigma)->capture_default_str();
  gsh->add_option("--lines", a.sheet.line_artifacts, "Elongated non-pore artifacts")
      ->capture_default_str();
  gsh->add_flag("!--gray", a.sheet.rgb, "Single-channel output");
  gsh->add_option("--seed", a.sheet.rng_seed)->capture_default_str();
  gsh->add_option("--report", a.report_path, "Write a JSON run report");

  auto* gco = app.add_subcommand("gen-cohort", "Synthetic index series with planted outliers");
  gco->add_option("--out", a.out, "Output CSV")->required();
  gco->add_option("--outliers", a.outliers, "Planted outlier CSV");
  gco->add_option("--subjects", a.cohort.n_subjects)->capture_default_str();
  gco->add_option("--days", a.cohort.days)->capture_default_str();
  gco->add_option("--trend", a.cohort.trend, "Relative change per day")->capture_default_str();
  gco->add_option("--count-trend-factor", a.cohort.count_trend_factor)->capture_default_str();
  gco->add_option("--noise", a.cohort.noise, "Log-normal session noise")->capture_default_str();
  gco->add_option("--outlier-rate", a.cohort.outlier_rate)->capture_default_str();
  gco->add_option("--outlier-amplitude", a.cohort.outlier_amplitude, "In noise units")
      ->capture_default_str();
  gco->add_flag("--no-flat-index", a.no_flat_index, "Omit the trendless L_mean index");
  gco->add_option("--seed", a.cohort.rng_seed)->capture_default_str();
  gco->add_option("--report", a.report_path, "Write a JSON run report");

  auto* evs = app.add_subcommand("eval-seg", "Compare a predicted mask with a truth mask");
  evs->add_option("--pred", a.pred, "Predicted mask PNG")->required();
  evs->add_option("--truth", a.truth, "Truth mask PNG")->required();
  evs->add_option("--report", a.report_path, "Write a JSON run report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*seg) run_segment(a);
    else if (*cln) run_clean(a);
    else if (*ana) run_analyze(a);
    else if (*trn) run_train(a);
    else if (*sim) run_simulate(a);
    else if (*gsh) run_gen_sheet(a);
    else if (*gco) run_gen_cohort(a);
    else if (*evs) run_eval_seg(a);
  } catch (const InvalidParameter& e) {
    log_line(std::string("error: ") + e.what());
    return 2;
  } catch (const std::exception& e) {
    log_line(std::string("error: ") + e.what());
    return 1;
  }
  return 0;
}
