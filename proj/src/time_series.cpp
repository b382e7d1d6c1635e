#include "grainrisk/time_series.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "grainrisk/csv.hpp"

namespace grainrisk {

std::string Date::iso() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", ymd / 10000, (ymd / 100) % 100,
                ymd % 100);
  return buf;
}

Date Date::parse(const std::string& s) {
  int y = 0, m = 0, d = 0;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d", &y, &m, &d) != 3 || m < 1 || m > 12 ||
      d < 1 || d > 31)
    throw std::runtime_error("unparseable ISO date: '" + s + "'");
  return Date{y * 10000 + m * 100 + d};
}

std::string to_string(Frequency f) {
  switch (f) {
    case Frequency::daily: return "daily";
    case Frequency::monthly: return "monthly";
    case Frequency::annual: return "annual";
  }
  return "?";
}

int TimeSeriesFrame::series_index(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

const std::vector<double>& TimeSeriesFrame::series(const std::string& name) const {
  const int i = series_index(name);
  if (i < 0) throw std::runtime_error("no such series: " + name);
  return values[static_cast<std::size_t>(i)];
}

TimeSeriesFrame load_csv(const std::string& path, Frequency frequency,
                         const WarnFn& warn) {
  const csv::Table t = csv::read_file(path);
  if (t.header.size() < 2)
    throw std::runtime_error(path + ": need a date column and at least one value column");
  if (t.rows.empty()) throw std::runtime_error(path + ": no data rows");

  TimeSeriesFrame frame;
  frame.names.assign(t.header.begin() + 1, t.header.end());
  frame.frequencies.assign(frame.names.size(), frequency);
  frame.values.assign(frame.names.size(), {});

  const std::size_t cols = t.header.size();
  std::set<std::int32_t> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (row.size() != cols)
      throw std::runtime_error(path + ": row " + std::to_string(r + 2) + " has " +
                               std::to_string(row.size()) + " cells, expected " +
                               std::to_string(cols));
    Date date;
    try {
      date = Date::parse(row[0]);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ": row " + std::to_string(r + 2) +
                               ", column 1: " + e.what());
    }
    if (!seen.insert(date.ymd).second)
      throw std::runtime_error(path + ": duplicate date " + date.iso());
    if (!frame.dates.empty() && !(frame.dates.back() < date))
      throw std::runtime_error(path + ": dates not increasing at row " +
                               std::to_string(r + 2) + " (" + date.iso() + ")");
    frame.dates.push_back(date);

    for (std::size_t c = 1; c < cols; ++c) {
      auto& out = frame.values[c - 1];
      const std::string& cell = row[c];
      if (cell.empty()) {
        if (out.empty()) {
          out.push_back(std::nan(""));  // leading gap, trimmed by alignment
        } else {
          if (warn)
            warn(path + ": missing value at row " + std::to_string(r + 2) +
                 ", column " + t.header[c] + "; forward-filled");
          out.push_back(out.back());
        }
        continue;
      }
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0' || !std::isfinite(v))
        throw std::runtime_error(path + ": row " + std::to_string(r + 2) +
                                 ", column " + t.header[c] + ": unparseable value '" +
                                 cell + "'");
      out.push_back(v);
    }
  }
  // Leading NaNs that were never resolved by a later observation.
  for (std::size_t s = 0; s < frame.values.size(); ++s) {
    bool all_nan = true;
    for (double v : frame.values[s]) all_nan &= std::isnan(v);
    if (all_nan)
      throw std::runtime_error(path + ": series " + frame.names[s] + " has no values");
  }
  return frame;
}

TimeSeriesFrame align_forward_fill(const std::vector<TimeSeriesFrame>& frames,
                                   const std::vector<Date>& target_calendar) {
  if (frames.empty()) throw std::invalid_argument("align_forward_fill: no frames");
  if (target_calendar.empty())
    throw std::invalid_argument("align_forward_fill: empty target calendar");

  TimeSeriesFrame out;
  struct Col {
    const TimeSeriesFrame* frame;
    std::size_t index;
  };
  std::vector<Col> cols;
  for (const auto& f : frames)
    for (std::size_t s = 0; s < f.series_count(); ++s) cols.push_back({&f, s});

  // Joint start = latest first valid observation inside the target span.
  Date start = target_calendar.front();
  for (const auto& c : cols) {
    const auto& vals = c.frame->values[c.index];
    Date first{};
    bool found = false;
    for (std::size_t t = 0; t < vals.size(); ++t) {
      if (!std::isnan(vals[t])) {
        first = c.frame->dates[t];
        found = true;
        break;
      }
    }
    if (!found || first > target_calendar.back())
      throw std::runtime_error("align_forward_fill: series " +
                               c.frame->names[c.index] +
                               " has no observations inside the target span");
    start = std::max(start, first);
  }

  for (const Date& d : target_calendar)
    if (d >= start) out.dates.push_back(d);
  if (out.dates.empty())
    throw std::runtime_error("align_forward_fill: no calendar dates after joint start");

  for (const auto& c : cols) {
    const auto& src_dates = c.frame->dates;
    const auto& src_vals = c.frame->values[c.index];
    std::vector<double> filled;
    filled.reserve(out.dates.size());
    std::size_t j = 0;
    double last = std::nan("");
    for (const Date& d : out.dates) {
      while (j < src_dates.size() && src_dates[j] <= d) {
        if (!std::isnan(src_vals[j])) last = src_vals[j];
        ++j;
      }
      filled.push_back(last);
    }
    out.names.push_back(c.frame->names[c.index]);
    out.frequencies.push_back(c.frame->frequencies[c.index]);
    out.values.push_back(std::move(filled));
  }
  return out;
}

ReturnSeries log_returns(std::span<const Date> dates, std::span<const double> prices) {
  if (prices.size() < 2)
    throw std::invalid_argument("log_returns: need at least two prices");
  if (dates.size() != prices.size())
    throw std::invalid_argument("log_returns: dates/prices length mismatch");
  ReturnSeries out;
  out.dates.reserve(prices.size() - 1);
  out.values.reserve(prices.size() - 1);
  for (std::size_t t = 0; t < prices.size(); ++t)
    if (!(prices[t] > 0.0))
      throw std::domain_error("log_returns: nonpositive price at " + dates[t].iso());
  for (std::size_t t = 1; t < prices.size(); ++t) {
    out.dates.push_back(dates[t]);
    out.values.push_back(100.0 * (std::log(prices[t]) - std::log(prices[t - 1])));
  }
  return out;
}

}  // namespace grainrisk
