#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "oracles.hpp"
#include "poresim/datapipe.hpp"
#include "poresim/error.hpp"
#include "poresim/synth.hpp"

namespace poresim {
namespace {

std::vector<DailyValue> series_of(const std::vector<double>& values, const std::string& subject = "S1",
                                  const std::string& index = "Pore_Area_total") {
  std::vector<DailyValue> out;
  for (std::size_t d = 0; d < values.size(); ++d)
    out.push_back({subject, index, static_cast<int>(d), values[d], 3});
  return out;
}

double window_z(const std::vector<double>& w, double x) {
  double mean = 0.0;
  for (double v : w) mean += v;
  mean /= static_cast<double>(w.size());
  double ss = 0.0;
  for (double v : w) ss += (v - mean) * (v - mean);
  return std::abs(x - mean) / std::sqrt(ss / static_cast<double>(w.size() - 1));
}

TEST(NormalizeSubject, ConstantValuesBecomeOne) {
  std::vector<IndexSample> s;
  for (int d = 0; d < 5; ++d) s.push_back({"A", d, Session::MorningWake, "Pore_Area_total", 8.0});
  for (const auto& n : normalize_subject(s, "A")) EXPECT_EQ(n.value, 1.0);
}

TEST(NormalizeSubject, RatioToBaselineMean) {
  std::vector<IndexSample> s{{"A", 0, Session::MorningWake, "X", 3.0},
                             {"A", 0, Session::EveningWash, "X", 5.0},
                             {"A", 4, Session::MorningWake, "X", 3.0},
                             {"B", 0, Session::MorningWake, "X", 1.0}};
  const auto n = normalize_subject(s, "A");
  ASSERT_EQ(n.size(), 3u);
  EXPECT_DOUBLE_EQ(n[2].value, 0.75);
  EXPECT_DOUBLE_EQ((n[0].value + n[1].value) / 2.0, 1.0);
}

TEST(NormalizeSubject, MissingBaselineNamesSubject) {
  std::vector<IndexSample> s{{"A", 0, Session::MorningWake, "X", 3.0},
                             {"B", 2, Session::MorningWake, "X", 3.0},
                             {"C", 1, Session::MorningWake, "X", 3.0}};
  EXPECT_THROW(normalize_subject(s, "B"), InvalidInput);
  try {
    normalize_cohort(s);
    FAIL();
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("B"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("C"), std::string::npos);
  }
}

TEST(NormalizeCohort, ScaledTrajectoriesCoincide) {
  const std::vector<double> trajectory{1.0, 0.97, 1.02, 0.9, 0.85};
  std::vector<IndexSample> s;
  for (double base : {2.0, 4.0, 6.0, 8.0, 10.0})
    for (std::size_t d = 0; d < trajectory.size(); ++d)
      s.push_back({"S" + std::to_string(static_cast<int>(base)), static_cast<int>(d),
                   Session::MorningWake, "X", base * trajectory[d]});
  const auto n = normalize_cohort(s);
  for (const auto& v : n) EXPECT_NEAR(v.value, trajectory[static_cast<std::size_t>(v.day)], 1e-12);
}

TEST(NormalizeCohort, ScaleInvariant) {
  CohortSpec spec;
  spec.n_subjects = 5;
  const auto cohort = gen_synthetic_cohort(spec);
  auto scaled = cohort.samples;
  for (auto& s : scaled)
    if (s.subject_id == "S003") s.value *= 37.5;
  const auto a = normalize_cohort(cohort.samples);
  const auto b = normalize_cohort(scaled);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i].value, b[i].value, 1e-12);
}

TEST(DailyMean, AveragesSessions) {
  std::vector<IndexSample> s{{"A", 1, Session::MorningWake, "X", 0.9},
                             {"A", 1, Session::MorningWash, "X", 1.0},
                             {"A", 1, Session::EveningWash, "X", 1.1},
                             {"A", 2, Session::EveningWash, "X", 0.7}};
  const auto d = daily_mean(s);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_NEAR(d[0].value, 1.0, 1e-15);
  EXPECT_EQ(d[0].sessions, 3);
  EXPECT_EQ(d[1].value, 0.7);
  EXPECT_EQ(d[1].sessions, 1);
}

TEST(DailyMean, MatchesIndependentRecomputation) {
  CohortSpec spec;
  spec.n_subjects = 4;
  spec.noise = 0.05;
  auto samples = gen_synthetic_cohort(spec).samples;
  std::mt19937 rng(5);
  std::shuffle(samples.begin(), samples.end(), rng);
  samples.resize(samples.size() * 2 / 3);  // drop sessions at random

  const auto fast = daily_mean(samples);
  std::set<std::tuple<std::string, std::string, int>> keys;
  for (const auto& s : samples) keys.insert({s.subject_id, s.index_name, s.day});
  ASSERT_EQ(fast.size(), keys.size());
  std::size_t i = 0;
  for (const auto& [subj, idx, day] : keys) {
    double sum = 0.0;
    int n = 0;
    for (const auto& s : samples)
      if (s.subject_id == subj && s.index_name == idx && s.day == day) {
        sum += s.value;
        ++n;
      }
    EXPECT_EQ(fast[i].subject_id, subj);
    EXPECT_EQ(fast[i].day, day);
    EXPECT_EQ(fast[i].value, sum / n);
    ++i;
  }
}

TEST(SlidingWindowClean, ConstantSeriesKept) {
  const auto r = sliding_window_clean(series_of(std::vector<double>(12, 0.8)), {});
  EXPECT_TRUE(r.removed.empty());
  EXPECT_EQ(r.kept.size(), 12u);
}

TEST(SlidingWindowClean, SingleSpikeRemovedAtKOne) {
  std::vector<double> v(10, 1.0);
  v[5] = 2.0;
  // Window {1,2,1}: mean 4/3, sample sigma sqrt(1/3), z = (2/3)/sqrt(1/3) = 2/sqrt(3).
  EXPECT_NEAR(window_z({1.0, 2.0, 1.0}, 2.0), 2.0 / std::sqrt(3.0), 1e-12);
  const auto r = sliding_window_clean(series_of(v), {3, 1.0});
  ASSERT_EQ(r.removed.size(), 1u);
  EXPECT_EQ(r.removed[0].day, 5);

  const auto r2 = sliding_window_clean(series_of(v), {3, 2.0});
  EXPECT_TRUE(r2.removed.empty());
}

TEST(SlidingWindowClean, ThreeSampleZBound) {
  // Brute force: no 3-sample window reaches z > 2/sqrt(3).
  std::mt19937 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  double max_z = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const std::vector<double> w{g(rng), g(rng) * 10, g(rng)};
    for (double x : w) max_z = std::max(max_z, window_z(w, x));
  }
  EXPECT_LE(max_z, 2.0 / std::sqrt(3.0) + 1e-12);
  EXPECT_GT(max_z, 1.15);
}

TEST(SlidingWindowClean, NoRemovalAboveBoundFuzzed) {
  std::mt19937 rng(21);
  std::lognormal_distribution<double> v(0.0, 0.5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> vals(30);
    for (auto& x : vals) x = v(rng);
    EXPECT_TRUE(sliding_window_clean(series_of(vals), {3, 1.16}).removed.empty());
  }
}

TEST(SlidingWindowClean, PartitionAndRuleHold) {
  std::mt19937 rng(3);
  std::lognormal_distribution<double> v(0.0, 0.3);
  for (int n : {2, 3, 4, 5, 7}) {
    std::vector<DailyValue> daily;
    for (int s = 0; s < 3; ++s) {
      std::vector<double> vals(31);
      for (auto& x : vals) x = v(rng);
      auto part = series_of(vals, "S" + std::to_string(s));
      part.erase(part.begin() + 12);  // a gap: windows touching day 12 are incomplete
      daily.insert(daily.end(), part.begin(), part.end());
    }
    const CleanConfig cfg{n, 1.0};
    const auto r = sliding_window_clean(daily, cfg);
    EXPECT_EQ(r.kept.size() + r.removed.size(), daily.size());

    std::map<std::pair<std::string, int>, double> by_key;
    for (const auto& d : daily) by_key[{d.subject_id, d.day}] = d.value;
    const int before = n % 2 ? n / 2 : n / 2 - 1;
    const int after = n / 2;
    for (const auto& d : r.removed) {
      std::vector<double> w;
      for (int day = d.day - before; day <= d.day + after; ++day) {
        const auto it = by_key.find({d.subject_id, day});
        ASSERT_NE(it, by_key.end());
        w.push_back(it->second);
      }
      EXPECT_GT(window_z(w, d.value), cfg.k_sigma);
    }
    std::set<std::pair<std::string, int>> seen;
    for (const auto& d : r.kept) seen.insert({d.subject_id, d.day});
    for (const auto& d : r.removed) EXPECT_TRUE(seen.insert({d.subject_id, d.day}).second);
    // Edge days never have a complete window.
    for (const auto& d : r.removed) {
      EXPECT_NE(d.day, 0);
      EXPECT_NE(d.day, 30);
    }
  }
}

TEST(SlidingWindowClean, ShortSeriesWarns) {
  const auto r = sliding_window_clean(series_of({1.0, 5.0}), {3, 1.0});
  EXPECT_TRUE(r.removed.empty());
  EXPECT_EQ(r.kept.size(), 2u);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_THROW(sliding_window_clean(series_of({1.0}), {1, 1.0}), InvalidParameter);
}

TEST(CleanSamples, PartitionsRowsByDay) {
  std::vector<IndexSample> rows;
  for (int d = 0; d < 8; ++d)
    for (Session s : {Session::MorningWake, Session::EveningWash})
      rows.push_back({"A", d, s, "X", d == 4 ? 3.0 : 1.0});
  const auto r = clean_samples(rows, {});
  ASSERT_EQ(r.removed.size(), 2u);
  EXPECT_EQ(r.removed[0].day, 4);
  EXPECT_EQ(r.kept.size(), 14u);
}

TEST(AssignTimeWindow, Boundaries) {
  EXPECT_EQ(assign_time_window(0), TimeWindow::Baseline);
  EXPECT_EQ(assign_time_window(1), TimeWindow::TW10);
  EXPECT_EQ(assign_time_window(10), TimeWindow::TW10);
  EXPECT_EQ(assign_time_window(11), TimeWindow::TW20);
  EXPECT_EQ(assign_time_window(25), TimeWindow::TW30);
  EXPECT_EQ(assign_time_window(30), TimeWindow::TW30);
  EXPECT_THROW(assign_time_window(31), OutOfRange);
  EXPECT_THROW(assign_time_window(-1), OutOfRange);
  int prev = 0;
  for (int d = 0; d <= 30; ++d) {
    const int w = static_cast<int>(assign_time_window(d));
    EXPECT_GE(w, prev);
    prev = w;
  }
}

TEST(TrendFit, ExactLine) {
  std::vector<double> x, y;
  for (int d = 0; d <= 30; ++d) {
    x.push_back(d);
    y.push_back(-0.01 * d + 1.0);
  }
  const TrendFit f = trend_fit(x, y);
  EXPECT_NEAR(f.slope, -0.01, 1e-12);
  EXPECT_NEAR(f.intercept, 1.0, 1e-12);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
}

TEST(TrendFit, ConstantSeries) {
  const std::vector<double> x{0, 1, 2, 3};
  const std::vector<double> y{0.5, 0.5, 0.5, 0.5};
  EXPECT_NEAR(trend_fit(x, y).slope, 0.0, 1e-15);
}

TEST(TrendFit, NeedsTwoDistinctDays) {
  const std::vector<double> x{3, 3};
  const std::vector<double> y{1, 2};
  EXPECT_THROW(trend_fit(x, y), InvalidInput);
}

TEST(TrendFit, MatchesNormalEquationsOnNoisyCohort) {
  CohortSpec spec;
  spec.n_subjects = 60;
  spec.noise = 0.02;
  spec.trend = -0.005;
  const auto daily = daily_mean(normalize_cohort(gen_synthetic_cohort(spec).samples));
  const auto means = cohort_daily_mean(daily, "Pore_Area_total");
  std::vector<double> x, y;
  for (const auto& m : means) {
    x.push_back(m.day);
    y.push_back(m.value);
  }
  const TrendFit f = trend_fit(x, y);
  const auto [slope, intercept] = oracle::normal_equation_fit(x, y);
  EXPECT_LT(f.slope, 0.0);
  EXPECT_NEAR(f.slope, slope, 1e-9);
  EXPECT_NEAR(f.intercept, intercept, 1e-9);
}

TEST(SelectRepresentativeIndex, MonotoneBeatsNoise) {
  CohortSpec spec;
  spec.n_subjects = 20;
  spec.trend = -0.008;
  const auto daily = daily_mean(normalize_cohort(gen_synthetic_cohort(spec).samples));
  const auto reports = select_representative_index(daily);
  ASSERT_EQ(reports.size(), 3u);
  EXPECT_EQ(reports[0].index_name, "Pore_Area_total");
  EXPECT_EQ(reports[0].rank, 1);
  EXPECT_EQ(reports.back().index_name, "L_mean");
  ASSERT_TRUE(reports[0].window_means[1] && reports[0].window_means[3]);
  EXPECT_GT(*reports[0].window_means[1], *reports[0].window_means[3]);
  EXPECT_NE(trend_report_json(reports).find("\"representative_index\": \"Pore_Area_total\""),
            std::string::npos);
}

TEST(SelectRepresentativeIndex, SingleAndTiedIndexes) {
  const auto one = select_representative_index(series_of({1.0, 0.9, 0.8}, "S", "Only"));
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].rank, 1);

  auto daily = series_of({1.0, 0.9, 0.85, 0.8}, "S", "Zeta");
  const auto twin = series_of({1.0, 0.9, 0.85, 0.8}, "S", "Alpha");
  daily.insert(daily.end(), twin.begin(), twin.end());
  const auto r = select_representative_index(daily);
  EXPECT_EQ(r[0].score, r[1].score);
  EXPECT_EQ(r[0].index_name, "Alpha");
}

TEST(SamplesCsv, RoundTripAndValidation) {
  const auto cohort = gen_synthetic_cohort(CohortSpec{.n_subjects = 2, .days = 3});
  const auto text = samples_csv(cohort.samples);
  EXPECT_EQ(parse_samples_csv(text), cohort.samples);
  EXPECT_EQ(parse_samples_csv("subject_id,day,session,index_name,value\r\nA,0,morning_wake,X,1.5\r\n").size(), 1u);
  EXPECT_THROW(parse_samples_csv("subject,day\n"), InvalidInput);
  EXPECT_THROW(parse_samples_csv("subject_id,day,session,index_name,value\nA,0,noon,X,1\n"), InvalidInput);
  EXPECT_THROW(parse_samples_csv("subject_id,day,session,index_name,value\nA,0,morning_wake,X,-1\n"), InvalidInput);
  EXPECT_THROW(parse_samples_csv("subject_id,day,session,index_name,value\nA,x,morning_wake,X,1\n"), InvalidInput);
}

}  // namespace
}  // namespace poresim
