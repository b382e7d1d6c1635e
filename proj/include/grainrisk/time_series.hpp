#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace grainrisk {

/// Calendar date stored as yyyymmdd; ordering matches chronology. No day
/// arithmetic is needed anywhere in the pipeline, only ordering and identity.
struct Date {
  std::int32_t ymd = 0;

  auto operator<=>(const Date&) const = default;
  std::string iso() const;
  static Date parse(const std::string& iso_text);  // throws on malformed input
};

enum class Frequency { daily, monthly, annual };

std::string to_string(Frequency f);

/// Dated observation vectors for one or more named series on one calendar.
/// Immutable by convention after construction; safe to share across threads.
struct TimeSeriesFrame {
  std::vector<Date> dates;
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;  // values[s][t], one row per series
  std::vector<Frequency> frequencies;       // one tag per series

  std::size_t length() const { return dates.size(); }
  std::size_t series_count() const { return names.size(); }
  const std::vector<double>& series(const std::string& name) const;
  int series_index(const std::string& name) const;  // -1 when absent
};

struct ReturnSeries {
  std::vector<Date> dates;   // date of P(t+1)
  std::vector<double> values;  // 100 * (ln P(t+1) - ln P(t))
};

using WarnFn = std::function<void(const std::string&)>;

/// Loads a CSV panel: header row, first column ISO dates, remaining columns
/// numeric. Empty value cells count as missing and are forward-filled from the
/// previous observation (warned); leading missing cells stay absent until the
/// series' first observation.
TimeSeriesFrame load_csv(const std::string& path, Frequency frequency,
                         const WarnFn& warn = {});

/// Forward-fills every frame onto `target_calendar` (the daily price calendar):
/// the value at calendar date t is the series' last observation at or before t.
/// The joint frame starts at the latest first-observation date across series.
TimeSeriesFrame align_forward_fill(const std::vector<TimeSeriesFrame>& frames,
                                   const std::vector<Date>& target_calendar);

/// Percent log returns: values[t] = 100*(ln P(t+1) - ln P(t)).
ReturnSeries log_returns(std::span<const Date> dates, std::span<const double> prices);

}  // namespace grainrisk
