#pragma once

// Time-series ingestion, cleaning, resampling and supervised pattern
// construction. Timestamps are minutes since 1970-01-01T00:00 in the
// dataset's fixed local offset; there is no timezone handling beyond that.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pvcast/common.hpp"

namespace pvcast::dataio {

// ---- calendar helpers ----

struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;
  auto operator<=>(const Date&) const = default;
};

std::int64_t days_from_civil(const Date& date);
Date civil_from_days(std::int64_t days);
int day_of_year(const Date& date);  // 1..366
Date add_days(const Date& date, int delta);

std::int64_t minutes_at(const Date& date, int hour, int minute);
Date date_of_minutes(std::int64_t ts);
int minute_of_day(std::int64_t ts);

std::string format_date(const Date& date);                 // YYYY-MM-DD
std::string format_timestamp(std::int64_t ts);             // YYYY-MM-DDTHH:MM
Date parse_date(const std::string& text);
std::int64_t parse_timestamp(const std::string& text);     // ISO-8601, minute precision

// ---- core records ----

struct SampleRecord {
  std::int64_t timestamp = 0;  // minutes since epoch
  std::optional<double> pv_kw;
  std::optional<double> ghi_wm2;
  std::optional<double> temp_c;
  std::optional<double> wind_ms;
  std::optional<double> humidity_pct;
};

struct DaylightWindow {
  int start_hour = 7;
  int end_hour = 17;
};

struct Dataset {
  std::vector<SampleRecord> records;
  int resolution_minutes = 0;
  DaylightWindow daylight;

  std::size_t size() const { return records.size(); }
};

// validates strict spacing of resolution_minutes between consecutive records
Dataset make_dataset(std::vector<SampleRecord> records, int resolution_minutes,
                     DaylightWindow daylight = {});

// ---- CSV ingestion ----

struct CsvSchema {
  std::string timestamp = "timestamp";
  std::string pv = "pv_kw";
  std::string ghi = "ghi_wm2";
  std::string temp = "temp_c";
  std::string wind = "wind_ms";
  std::string humidity = "humidity_pct";
};

// Sorted by timestamp; unparseable numeric cells become missing; duplicate
// timestamps and invariant violations (negative irradiance/power, humidity
// outside [0,100]) are integrity errors.
std::vector<SampleRecord> parse_records(std::istream& source, const CsvSchema& schema = {});

std::string to_csv(const Dataset& dataset, const CsvSchema& schema = {});

// ---- cleaning / resampling ----

// Fills every missing value with the mean of the same time-of-day value from
// the k most similar days (Euclidean distance over the day's shared present
// cells, all fields). Days complete in the target field are the candidate
// pool; if fewer than k exist the available ones are used.
Dataset reconstruct_missing(const Dataset& dataset, int k = 3);

// arithmetic mean per window, window-start timestamps, missing samples
// excluded (all-missing window stays missing)
Dataset resample(const Dataset& dataset, int target_resolution_minutes);

// pv_power forced to exactly 0 outside [start_hour, end_hour)
Dataset apply_night_zero(const Dataset& dataset);

// ---- day-profile view & patterns ----

// Daylight-step matrix view of a dataset: row per complete calendar day,
// column per daylight step. Requires pv and meteorological values present
// for every daylight step (run reconstruct_missing/apply_night_zero first).
struct DayProfiles {
  std::vector<Date> dates;
  Matrix pv;        // n_days x steps, kW
  Matrix ghi;       // W/m^2
  Matrix temp;      // degC
  Matrix wind;      // m/s
  Matrix humidity;  // percent
  int steps = 0;
  int resolution_minutes = 0;
  DaylightWindow daylight;

  std::size_t day_count() const { return dates.size(); }
  int day_index_of(const Date& date) const;  // -1 when absent
};

DayProfiles extract_daylight(const Dataset& dataset);

struct FeatureScale {
  double lo = 0.0;
  double hi = 0.0;
};

struct Normalization {
  std::vector<FeatureScale> inputs;
  std::vector<FeatureScale> targets;
};

// min-max to [-1, 1]; zero-span features map to constant 0
double normalize_value(double x, const FeatureScale& scale);
double denormalize_value(double y, const FeatureScale& scale);

struct PatternSet {
  Matrix inputs;
  Matrix targets;
  Normalization normalization;
};

struct LagConfig {
  int day_lags = 2;  // number of previous-day same-step series values used as inputs
};

// One pattern per (target day, daylight step): series value of the previous
// day_lags days at that step, then target-step ghi/temp/wind/humidity;
// target is the series value at that step. Normalization extrema are frozen
// from exactly these patterns. `series` is any per-day step series aligned
// with `days` (a wavelet component or the raw pv matrix).
PatternSet build_patterns(const Matrix& series, const DayProfiles& days,
                          const std::vector<int>& target_day_indices, const LagConfig& lag);

// feature row for forecasting day d (same layout as build_patterns), met
// values supplied by the caller
std::vector<double> assemble_features(const std::vector<double>& lagged_series_at_step,
                                      double ghi, double temp, double wind, double humidity);

std::vector<double> normalize_row(const std::vector<double>& row,
                                  const std::vector<FeatureScale>& scales);

}  // namespace pvcast::dataio
