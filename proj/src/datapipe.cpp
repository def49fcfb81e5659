#include "poresim/datapipe.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include <json.hpp>

#include "poresim/error.hpp"
#include "poresim/io.hpp"

namespace poresim {

std::string_view to_string(Session s) {
  switch (s) {
    case Session::MorningWake: return "morning_wake";
    case Session::MorningWash: return "morning_wash";
    case Session::EveningWash: return "evening_wash";
  }
  return "?";
}

Session parse_session(std::string_view s) {
  if (s == "morning_wake") return Session::MorningWake;
  if (s == "morning_wash") return Session::MorningWash;
  if (s == "evening_wash") return Session::EveningWash;
  throw InvalidInput("unknown session '" + std::string(s) + "'");
}

void CleanConfig::validate() const {
  if (window_days < 2) throw InvalidParameter("window_days must be >= 2");
  if (!(k_sigma > 0.0) || !std::isfinite(k_sigma)) throw InvalidParameter("k_sigma must be > 0");
}

std::string_view to_string(TimeWindow w) {
  switch (w) {
    case TimeWindow::Baseline: return "Baseline";
    case TimeWindow::TW10: return "TW10";
    case TimeWindow::TW20: return "TW20";
    case TimeWindow::TW30: return "TW30";
  }
  return "?";
}

TimeWindow parse_time_window(std::string_view s) {
  if (s == "TW10") return TimeWindow::TW10;
  if (s == "TW20") return TimeWindow::TW20;
  if (s == "TW30") return TimeWindow::TW30;
  if (s == "Baseline") return TimeWindow::Baseline;
  throw InvalidInput("unknown time window '" + std::string(s) + "' (expected TW10, TW20 or TW30)");
}

TimeWindow assign_time_window(int day) {
  if (day < 0 || day > 30)
    throw OutOfRange("day " + std::to_string(day) + " outside the observation period 0-30");
  if (day == 0) return TimeWindow::Baseline;
  if (day <= 10) return TimeWindow::TW10;
  if (day <= 20) return TimeWindow::TW20;
  return TimeWindow::TW30;
}

// ---------------------------------------------------------------------------
// Normalization and aggregation

namespace {

using SeriesKey = std::pair<std::string, std::string>;  // (subject, index)

std::map<std::string, double> baseline_means(std::span<const IndexSample> series,
                                             std::string_view subject) {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& s : series)
    if (s.subject_id == subject && s.day == 0) {
      auto& [sum, n] = acc[s.index_name];
      sum += s.value;
      ++n;
    }
  std::map<std::string, double> out;
  for (const auto& [name, sn] : acc) out[name] = sn.first / sn.second;
  return out;
}

}  // namespace

std::vector<IndexSample> normalize_subject(std::span<const IndexSample> series,
                                           std::string_view subject) {
  const auto base = baseline_means(series, subject);
  std::vector<IndexSample> out;
  for (const auto& s : series) {
    if (s.subject_id != subject) continue;
    const auto it = base.find(s.index_name);
    if (it == base.end())
      throw InvalidInput("subject " + std::string(subject) + " has no day-0 baseline for index " +
                         s.index_name);
    IndexSample n = s;
    n.value = s.value / it->second;
    out.push_back(std::move(n));
  }
  if (out.empty()) throw InvalidInput("subject " + std::string(subject) + " has no samples");
  return out;
}

std::vector<IndexSample> normalize_cohort(std::span<const IndexSample> series) {
  std::set<std::string> subjects;
  for (const auto& s : series) subjects.insert(s.subject_id);

  std::vector<std::string> missing;
  std::vector<IndexSample> out;
  for (const auto& subject : subjects) {
    try {
      auto part = normalize_subject(series, subject);
      out.insert(out.end(), std::make_move_iterator(part.begin()),
                 std::make_move_iterator(part.end()));
    } catch (const InvalidInput&) {
      missing.push_back(subject);
    }
  }
  if (!missing.empty()) {
    std::string msg = "missing day-0 baseline for subject(s):";
    for (const auto& m : missing) msg += " " + m;
    throw InvalidInput(msg);
  }
  std::stable_sort(out.begin(), out.end(), [](const IndexSample& a, const IndexSample& b) {
    return std::tie(a.subject_id, a.index_name, a.day, a.session) <
           std::tie(b.subject_id, b.index_name, b.day, b.session);
  });
  return out;
}

std::vector<DailyValue> daily_mean(std::span<const IndexSample> series) {
  std::map<std::tuple<std::string, std::string, int>, std::pair<double, int>> acc;
  for (const auto& s : series) {
    auto& [sum, n] = acc[{s.subject_id, s.index_name, s.day}];
    sum += s.value;
    ++n;
  }
  std::vector<DailyValue> out;
  out.reserve(acc.size());
  for (const auto& [key, sn] : acc) {
    const auto& [subject, index, day] = key;
    out.push_back({subject, index, day, sn.first / sn.second, sn.second});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sliding-window cleaning

CleanResult sliding_window_clean(std::span<const DailyValue> daily, const CleanConfig& cfg) {
  cfg.validate();
  const int before = cfg.window_days % 2 == 1 ? cfg.window_days / 2 : cfg.window_days / 2 - 1;
  const int after = cfg.window_days / 2;

  std::map<SeriesKey, std::vector<const DailyValue*>> groups;
  for (const auto& d : daily) groups[{d.subject_id, d.index_name}].push_back(&d);

  CleanResult result;
  for (auto& [key, series] : groups) {
    std::sort(series.begin(), series.end(),
              [](const DailyValue* a, const DailyValue* b) { return a->day < b->day; });
    if (static_cast<int>(series.size()) < cfg.window_days) {
      result.warnings.push_back("series " + key.first + "/" + key.second + " has " +
                                std::to_string(series.size()) + " days, fewer than window " +
                                std::to_string(cfg.window_days) + "; nothing removed");
      for (const auto* d : series) result.kept.push_back(*d);
      continue;
    }

    std::map<int, double> by_day;
    for (const auto* d : series) by_day[d->day] = d->value;

    for (const auto* d : series) {
      std::vector<double> window;
      window.reserve(static_cast<std::size_t>(cfg.window_days));
      for (int day = d->day - before; day <= d->day + after; ++day) {
        const auto it = by_day.find(day);
        if (it == by_day.end()) break;
        window.push_back(it->second);
      }
      bool remove = false;
      if (static_cast<int>(window.size()) == cfg.window_days) {
        double mean = 0.0;
        for (double v : window) mean += v;
        mean /= static_cast<double>(window.size());
        double ss = 0.0;
        for (double v : window) ss += (v - mean) * (v - mean);
        const double sigma = std::sqrt(ss / static_cast<double>(window.size() - 1));
        remove = sigma > 0.0 && std::abs(d->value - mean) > cfg.k_sigma * sigma;
      }
      (remove ? result.removed : result.kept).push_back(*d);
    }
  }
  return result;
}

SampleCleanResult clean_samples(std::span<const IndexSample> series, const CleanConfig& cfg) {
  const auto daily = daily_mean(series);
  CleanResult cleaned = sliding_window_clean(daily, cfg);

  std::set<std::tuple<std::string, std::string, int>> removed_days;
  for (const auto& d : cleaned.removed) removed_days.insert({d.subject_id, d.index_name, d.day});

  SampleCleanResult out;
  out.warnings = std::move(cleaned.warnings);
  for (const auto& s : series) {
    const bool removed = removed_days.count({s.subject_id, s.index_name, s.day}) > 0;
    (removed ? out.removed : out.kept).push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trend analysis

TrendFit trend_fit(std::span<const double> days, std::span<const double> values) {
  if (days.size() != values.size()) throw InvalidInput("trend_fit: length mismatch");
  std::set<double> distinct(days.begin(), days.end());
  if (distinct.size() < 2) throw InvalidInput("trend_fit needs at least 2 distinct days");

  const double n = static_cast<double>(days.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < days.size(); ++i) {
    mx += days[i];
    my += values[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < days.size(); ++i) {
    const double dx = days[i] - mx;
    const double dy = values[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  TrendFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < days.size(); ++i) {
    const double r = values[i] - (fit.intercept + fit.slope * days[i]);
    ss_res += r * r;
  }
  fit.r2 = syy > 0.0 ? std::max(0.0, 1.0 - ss_res / syy) : 1.0;
  return fit;
}

std::vector<DayMean> cohort_daily_mean(std::span<const DailyValue> daily,
                                       std::string_view index_name) {
  std::map<int, std::pair<double, int>> acc;
  for (const auto& d : daily)
    if (d.index_name == index_name) {
      auto& [sum, n] = acc[d.day];
      sum += d.value;
      ++n;
    }
  std::vector<DayMean> out;
  for (const auto& [day, sn] : acc) out.push_back({day, sn.first / sn.second});
  return out;
}

std::vector<IndexReport> select_representative_index(std::span<const DailyValue> daily) {
  std::set<std::string> names;
  for (const auto& d : daily) names.insert(d.index_name);

  std::vector<IndexReport> reports;
  for (const auto& name : names) {
    IndexReport rep;
    rep.index_name = name;
    const auto means = cohort_daily_mean(daily, name);

    std::array<std::pair<double, int>, 4> acc{};
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& m : means) {
      xs.push_back(m.day);
      ys.push_back(m.value);
      if (m.day >= 0 && m.day <= 30) {
        auto& [sum, n] = acc[static_cast<std::size_t>(assign_time_window(m.day))];
        sum += m.value;
        ++n;
      }
    }
    for (std::size_t w = 0; w < acc.size(); ++w)
      if (acc[w].second > 0) rep.window_means[w] = acc[w].first / acc[w].second;

    if (means.size() >= 2) {
      rep.trend = trend_fit(xs, ys);
      rep.score = std::abs(rep.trend.slope) * rep.trend.r2;
    }
    reports.push_back(std::move(rep));
  }
  // `names` is ordered, so a stable sort breaks score ties by name.
  std::stable_sort(reports.begin(), reports.end(),
                   [](const IndexReport& a, const IndexReport& b) { return a.score > b.score; });
  for (std::size_t i = 0; i < reports.size(); ++i) reports[i].rank = static_cast<int>(i) + 1;
  return reports;
}

std::string trend_report_json(std::span<const IndexReport> reports) {
  nlohmann::ordered_json j;
  j["representative_index"] = reports.empty() ? nlohmann::ordered_json(nullptr)
                                              : nlohmann::ordered_json(reports.front().index_name);
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json e;
    e["rank"] = r.rank;
    e["index_name"] = r.index_name;
    e["score"] = r.score;
    e["trend"] = {{"slope", r.trend.slope}, {"intercept", r.trend.intercept}, {"r2", r.trend.r2}};
    nlohmann::ordered_json w;
    for (auto tw : {TimeWindow::Baseline, TimeWindow::TW10, TimeWindow::TW20, TimeWindow::TW30}) {
      const auto& v = r.window_means[static_cast<std::size_t>(tw)];
      w[std::string(to_string(tw))] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    }
    e["window_means"] = w;
    arr.push_back(e);
  }
  j["indexes"] = arr;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// CSV

namespace {

constexpr std::string_view kHeader = "subject_id,day,session,index_name,value";

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<IndexSample> parse_samples_csv(std::string_view text) {
  std::vector<IndexSample> rows;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kHeader)
        throw InvalidInput("expected CSV header '" + std::string(kHeader) + "'");
      header_seen = true;
      continue;
    }
    const auto f = split(line, ',');
    const std::string where = "line " + std::to_string(line_no);
    if (f.size() != 5) throw InvalidInput(where + ": expected 5 fields");
    IndexSample s;
    s.subject_id = std::string(f[0]);
    if (s.subject_id.empty()) throw InvalidInput(where + ": empty subject_id");
    auto r = std::from_chars(f[1].data(), f[1].data() + f[1].size(), s.day);
    if (r.ec != std::errc{} || r.ptr != f[1].data() + f[1].size() || s.day < 0)
      throw InvalidInput(where + ": invalid day '" + std::string(f[1]) + "'");
    try {
      s.session = parse_session(f[2]);
    } catch (const InvalidInput& e) {
      throw InvalidInput(where + ": " + e.what());
    }
    s.index_name = std::string(f[3]);
    if (s.index_name.empty()) throw InvalidInput(where + ": empty index_name");
    r = std::from_chars(f[4].data(), f[4].data() + f[4].size(), s.value);
    if (r.ec != std::errc{} || r.ptr != f[4].data() + f[4].size() || !std::isfinite(s.value) ||
        s.value <= 0.0)
      throw InvalidInput(where + ": value must be a finite number > 0");
    rows.push_back(std::move(s));
  }
  if (!header_seen) throw InvalidInput("empty CSV (missing header)");
  return rows;
}

std::vector<IndexSample> read_samples_csv(const std::filesystem::path& path) {
  try {
    return parse_samples_csv(read_text(path));
  } catch (const InvalidInput& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

std::string samples_csv(std::span<const IndexSample> rows) {
  std::string out(kHeader);
  out += '\n';
  for (const auto& s : rows) {
    out += s.subject_id;
    out += ',';
    out += std::to_string(s.day);
    out += ',';
    out += to_string(s.session);
    out += ',';
    out += s.index_name;
    out += ',';
    out += format_double(s.value);
    out += '\n';
  }
  return out;
}

void write_samples_csv(const std::filesystem::path& path, std::span<const IndexSample> rows) {
  write_text_atomic(path, samples_csv(rows));
}

}  // namespace poresim
