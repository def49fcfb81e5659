#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace poresim {

enum class Session { MorningWake, MorningWash, EveningWash };

std::string_view to_string(Session s);
Session parse_session(std::string_view s);

struct IndexSample {
  std::string subject_id;
  int day = 0;  // 0 is the baseline day
  Session session = Session::MorningWake;
  std::string index_name;
  double value = 0.0;

  friend bool operator==(const IndexSample&, const IndexSample&) = default;
};

struct CleanConfig {
  int window_days = 3;
  // A 3-sample window cannot produce |z| above (n-1)/sqrt(n) ~= 1.155 with
  // the sample standard deviation, so k >= 1.16 turns the n=3 cleaner off.
  double k_sigma = 1.0;

  void validate() const;
  friend bool operator==(const CleanConfig&, const CleanConfig&) = default;
};

enum class TimeWindow { Baseline = 0, TW10 = 1, TW20 = 2, TW30 = 3 };

std::string_view to_string(TimeWindow w);
TimeWindow parse_time_window(std::string_view s);

// 0 -> Baseline, 1-10 -> TW10, 11-20 -> TW20, 21-30 -> TW30.
TimeWindow assign_time_window(int day);

// Mean of one index for one subject on one day.
struct DailyValue {
  std::string subject_id;
  std::string index_name;
  int day = 0;
  double value = 0.0;
  int sessions = 0;

  friend bool operator==(const DailyValue&, const DailyValue&) = default;
};

// Divides each of `subject`'s values by that subject's day-0 mean of the same
// index. Throws InvalidInput naming the subject when a baseline is missing.
std::vector<IndexSample> normalize_subject(std::span<const IndexSample> series,
                                           std::string_view subject);

// normalize_subject over every subject, output ordered (subject, index, day,
// session). Missing baselines are collected and reported together.
std::vector<IndexSample> normalize_cohort(std::span<const IndexSample> series);

// Per (subject, index, day) mean over the available sessions, ordered by
// (subject, index, day).
std::vector<DailyValue> daily_mean(std::span<const IndexSample> series);

struct CleanResult {
  std::vector<DailyValue> kept;
  std::vector<DailyValue> removed;
  std::vector<std::string> warnings;
};

// Centered n-day window stepped one day at a time over each (subject, index)
// series. Day d is removed iff its window is fully occupied, the window's
// sample std sigma > 0 and |x_d - mean| > k * sigma. Even n uses days
// d-(n/2-1) .. d+n/2.
CleanResult sliding_window_clean(std::span<const DailyValue> daily, const CleanConfig& cfg);

struct SampleCleanResult {
  std::vector<IndexSample> kept;
  std::vector<IndexSample> removed;
  std::vector<std::string> warnings;
};

// Runs sliding_window_clean on the daily means and partitions the raw rows
// by their day's verdict. Row order is preserved.
SampleCleanResult clean_samples(std::span<const IndexSample> series, const CleanConfig& cfg);

struct TrendFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Ordinary least squares of value against day. Needs >= 2 distinct days.
// r2 is 1 for a perfect fit, including a flat series.
TrendFit trend_fit(std::span<const double> days, std::span<const double> values);

struct DayMean {
  int day = 0;
  double value = 0.0;
};

// Mean across subjects of the daily values of one index, ordered by day.
std::vector<DayMean> cohort_daily_mean(std::span<const DailyValue> daily,
                                       std::string_view index_name);

struct IndexReport {
  std::string index_name;
  TrendFit trend;
  // Mean of cohort daily means per window, indexed by TimeWindow ordinal;
  // nullopt when a window has no data.
  std::array<std::optional<double>, 4> window_means;
  double score = 0.0;  // |slope| * r2
  int rank = 0;        // 1-based
};

// Ranks every index by |slope| * r2 of its cohort trend (ties by name).
// `daily` should be normalized and cleaned.
std::vector<IndexReport> select_representative_index(std::span<const DailyValue> daily);

std::string trend_report_json(std::span<const IndexReport> reports);

// CSV with header subject_id,day,session,index_name,value.
std::vector<IndexSample> parse_samples_csv(std::string_view text);
std::vector<IndexSample> read_samples_csv(const std::filesystem::path& path);
std::string samples_csv(std::span<const IndexSample> rows);
void write_samples_csv(const std::filesystem::path& path, std::span<const IndexSample> rows);

}  // namespace poresim
