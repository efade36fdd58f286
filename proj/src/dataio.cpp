#include "pvcast/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <sstream>

namespace pvcast::dataio {

namespace {

constexpr int kMinutesPerDay = 24 * 60;

std::optional<double> SampleRecord::*field_ptr(std::size_t f) {
  switch (f) {
    case 0: return &SampleRecord::pv_kw;
    case 1: return &SampleRecord::ghi_wm2;
    case 2: return &SampleRecord::temp_c;
    case 3: return &SampleRecord::wind_ms;
    default: return &SampleRecord::humidity_pct;
  }
}

constexpr std::size_t kFieldCount = 5;

const char* field_name(std::size_t f) {
  switch (f) {
    case 0: return "pv_kw";
    case 1: return "ghi_wm2";
    case 2: return "temp_c";
    case 3: return "wind_ms";
    default: return "humidity_pct";
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_cell(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || !std::isfinite(v)) return std::nullopt;
  return v;
}

void check_record_invariants(const SampleRecord& r, std::size_t line_no) {
  auto fail = [&](const std::string& what) {
    throw Error(Error::Kind::Integrity,
                "line " + std::to_string(line_no) + ": " + what);
  };
  if (r.pv_kw && *r.pv_kw < 0.0) fail("negative pv power");
  if (r.ghi_wm2 && *r.ghi_wm2 < 0.0) fail("negative irradiance");
  if (r.humidity_pct && (*r.humidity_pct < 0.0 || *r.humidity_pct > 100.0)) {
    fail("humidity outside [0,100]");
  }
}

std::string fmt_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

// ---- calendar helpers (Howard Hinnant's civil algorithms) ----

std::int64_t days_from_civil(const Date& date) {
  const int y = date.year - (date.month <= 2 ? 1 : 0);
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy =
      (153u * static_cast<unsigned>(date.month + (date.month > 2 ? -3 : 9)) + 2u) / 5u +
      static_cast<unsigned>(date.day) - 1u;
  const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
  return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

Date civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365u * yoe + yoe / 4u - yoe / 100u);
  const unsigned mp = (5u * doy + 2u) / 153u;
  const unsigned d = doy - (153u * mp + 2u) / 5u + 1u;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return Date{static_cast<int>(y + (m <= 2 ? 1 : 0)), static_cast<int>(m), static_cast<int>(d)};
}

int day_of_year(const Date& date) {
  return static_cast<int>(days_from_civil(date) - days_from_civil({date.year, 1, 1})) + 1;
}

Date add_days(const Date& date, int delta) { return civil_from_days(days_from_civil(date) + delta); }

std::int64_t minutes_at(const Date& date, int hour, int minute) {
  return days_from_civil(date) * kMinutesPerDay + hour * 60 + minute;
}

Date date_of_minutes(std::int64_t ts) {
  std::int64_t days = ts / kMinutesPerDay;
  if (ts < 0 && ts % kMinutesPerDay != 0) --days;
  return civil_from_days(days);
}

int minute_of_day(std::int64_t ts) {
  std::int64_t m = ts % kMinutesPerDay;
  if (m < 0) m += kMinutesPerDay;
  return static_cast<int>(m);
}

std::string format_date(const Date& date) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", date.year, date.month, date.day);
  return buf;
}

std::string format_timestamp(std::int64_t ts) {
  const Date d = date_of_minutes(ts);
  const int m = minute_of_day(ts);
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d", d.year, d.month, d.day, m / 60,
                m % 60);
  return buf;
}

Date parse_date(const std::string& text) {
  int y = 0, mo = 0, da = 0;
  if (std::sscanf(text.c_str(), "%d-%d-%d", &y, &mo, &da) != 3 || mo < 1 || mo > 12 || da < 1 ||
      da > 31) {
    throw Error(Error::Kind::Schema, "unparseable date '" + text + "'");
  }
  return Date{y, mo, da};
}

std::int64_t parse_timestamp(const std::string& text) {
  int y = 0, mo = 0, da = 0, hh = 0, mm = 0, ss = 0;
  char sep = 0;
  const int got = std::sscanf(text.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &da, &sep, &hh, &mm, &ss);
  if (got < 6 || (sep != 'T' && sep != ' ') || mo < 1 || mo > 12 || da < 1 || da > 31 || hh < 0 ||
      hh > 23 || mm < 0 || mm > 59) {
    throw Error(Error::Kind::Integrity, "unparseable ISO-8601 timestamp '" + text + "'");
  }
  if (got == 7 && ss != 0) {
    throw Error(Error::Kind::Integrity, "sub-minute timestamp '" + text + "' not representable");
  }
  return minutes_at(Date{y, mo, da}, hh, mm);
}

// ---- dataset ----

Dataset make_dataset(std::vector<SampleRecord> records, int resolution_minutes,
                     DaylightWindow daylight) {
  if (resolution_minutes < 1) throw Error(Error::Kind::Resolution, "resolution must be >= 1 minute");
  if (records.empty()) throw Error(Error::Kind::EmptyInput, "no records");
  if (!(daylight.start_hour < daylight.end_hour)) {
    throw Error(Error::Kind::Spec, "daylight window start must precede end");
  }
  for (std::size_t i = 1; i < records.size(); ++i) {
    const std::int64_t gap = records[i].timestamp - records[i - 1].timestamp;
    if (gap != resolution_minutes) {
      throw Error(Error::Kind::Integrity,
                  "record spacing " + std::to_string(gap) + " min at " +
                      format_timestamp(records[i].timestamp) + ", expected " +
                      std::to_string(resolution_minutes));
    }
  }
  Dataset ds;
  ds.records = std::move(records);
  ds.resolution_minutes = resolution_minutes;
  ds.daylight = daylight;
  return ds;
}

std::vector<SampleRecord> parse_records(std::istream& source, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(source, line)) throw Error(Error::Kind::EmptyInput, "empty input");

  const std::vector<std::string> header = split_csv_line(line);
  std::map<std::string, std::size_t> columns;
  for (std::size_t i = 0; i < header.size(); ++i) columns[trim(header[i])] = i;

  auto column_of = [&](const std::string& name, bool required) -> std::optional<std::size_t> {
    auto it = columns.find(name);
    if (it == columns.end()) {
      if (required) throw Error(Error::Kind::Schema, "missing column '" + name + "' in header");
      return std::nullopt;
    }
    return it->second;
  };

  const std::size_t ts_col = *column_of(schema.timestamp, true);
  const std::optional<std::size_t> val_cols[kFieldCount] = {
      column_of(schema.pv, true),       column_of(schema.ghi, true),
      column_of(schema.temp, true),     column_of(schema.wind, true),
      column_of(schema.humidity, true),
  };

  std::vector<SampleRecord> records;
  std::size_t line_no = 1;
  while (std::getline(source, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() <= ts_col) {
      throw Error(Error::Kind::Integrity, "line " + std::to_string(line_no) + ": too few cells");
    }
    SampleRecord r;
    r.timestamp = parse_timestamp(trim(cells[ts_col]));
    for (std::size_t f = 0; f < kFieldCount; ++f) {
      const std::size_t c = *val_cols[f];
      r.*field_ptr(f) = c < cells.size() ? parse_cell(cells[c]) : std::nullopt;
    }
    check_record_invariants(r, line_no);
    records.push_back(r);
  }
  if (records.empty()) throw Error(Error::Kind::EmptyInput, "no data rows");

  std::stable_sort(records.begin(), records.end(),
                   [](const SampleRecord& a, const SampleRecord& b) { return a.timestamp < b.timestamp; });
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].timestamp == records[i - 1].timestamp) {
      throw Error(Error::Kind::Integrity,
                  "duplicate timestamp " + format_timestamp(records[i].timestamp));
    }
  }
  return records;
}

std::string to_csv(const Dataset& dataset, const CsvSchema& schema) {
  std::string out = schema.timestamp + "," + schema.pv + "," + schema.ghi + "," + schema.temp +
                    "," + schema.wind + "," + schema.humidity + "\n";
  for (const SampleRecord& r : dataset.records) {
    out += format_timestamp(r.timestamp);
    const std::optional<double> vals[kFieldCount] = {r.pv_kw, r.ghi_wm2, r.temp_c, r.wind_ms,
                                                     r.humidity_pct};
    for (const auto& v : vals) {
      out += ',';
      if (v) out += fmt_value(*v);
    }
    out += '\n';
  }
  return out;
}

Dataset reconstruct_missing(const Dataset& dataset, int k) {
  if (k < 1) throw Error(Error::Kind::Spec, "neighbor count must be >= 1");

  // group record indices by calendar day, aligned by time-of-day slot
  std::map<std::int64_t, std::vector<std::size_t>> by_day;
  const int steps = kMinutesPerDay / dataset.resolution_minutes;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    by_day[days_from_civil(date_of_minutes(dataset.records[i].timestamp))].push_back(i);
  }
  std::vector<std::vector<std::size_t>> days;
  days.reserve(by_day.size());
  for (auto& [_, idx] : by_day) days.push_back(std::move(idx));

  auto slot_of = [&](std::size_t rec) {
    return minute_of_day(dataset.records[rec].timestamp) / dataset.resolution_minutes;
  };

  Dataset out = dataset;

  for (std::size_t f = 0; f < kFieldCount; ++f) {
    auto member = field_ptr(f);
    bool any_gap = false;
    bool any_value = false;
    for (const SampleRecord& r : dataset.records) {
      if (r.*member) any_value = true;
      else any_gap = true;
    }
    if (!any_gap) continue;
    if (!any_value) {
      throw Error(Error::Kind::IrrecoverableField,
                  std::string("field ") + field_name(f) + " is missing for the entire dataset");
    }

    // candidate pool: full days complete in this field
    std::vector<std::size_t> complete_days;
    for (std::size_t d = 0; d < days.size(); ++d) {
      if (days[d].size() != static_cast<std::size_t>(steps)) continue;
      bool complete = true;
      for (std::size_t rec : days[d]) {
        if (!(dataset.records[rec].*member)) {
          complete = false;
          break;
        }
      }
      if (complete) complete_days.push_back(d);
    }
    if (complete_days.empty()) {
      throw Error(Error::Kind::IrrecoverableField,
                  std::string("no complete day available for field ") + field_name(f));
    }

    for (std::size_t d = 0; d < days.size(); ++d) {
      bool has_gap = false;
      for (std::size_t rec : days[d]) {
        if (!(dataset.records[rec].*member)) {
          has_gap = true;
          break;
        }
      }
      if (!has_gap) continue;

      // Euclidean distance over shared present cells of all fields
      std::vector<std::pair<double, std::size_t>> ranked;
      for (std::size_t cand : complete_days) {
        if (cand == d) continue;
        double sumsq = 0.0;
        const std::size_t overlap = std::min(days[d].size(), days[cand].size());
        for (std::size_t s = 0; s < overlap; ++s) {
          const SampleRecord& ra = dataset.records[days[d][s]];
          const SampleRecord& rb = dataset.records[days[cand][s]];
          for (std::size_t g = 0; g < kFieldCount; ++g) {
            auto fp = field_ptr(g);
            if ((ra.*fp) && (rb.*fp)) {
              const double diff = *(ra.*fp) - *(rb.*fp);
              sumsq += diff * diff;
            }
          }
        }
        ranked.emplace_back(std::sqrt(sumsq), cand);
      }
      if (ranked.empty()) {
        throw Error(Error::Kind::IrrecoverableField,
                    std::string("no neighbor day for field ") + field_name(f));
      }
      std::stable_sort(ranked.begin(), ranked.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size());

      for (std::size_t rec : days[d]) {
        if (dataset.records[rec].*member) continue;
        const int slot = slot_of(rec);
        double sum = 0.0;
        std::size_t used = 0;
        for (std::size_t j = 0; j < take; ++j) {
          const auto& cand_day = days[ranked[j].second];
          if (static_cast<std::size_t>(slot) < cand_day.size()) {
            sum += *(dataset.records[cand_day[slot]].*member);
            ++used;
          }
        }
        if (used == 0) {
          throw Error(Error::Kind::IrrecoverableField,
                      std::string("no neighbor value at slot for field ") + field_name(f));
        }
        out.records[rec].*member = sum / static_cast<double>(used);
      }
    }
  }
  return out;
}

Dataset resample(const Dataset& dataset, int target_resolution_minutes) {
  if (target_resolution_minutes < 1 ||
      target_resolution_minutes % dataset.resolution_minutes != 0) {
    throw Error(Error::Kind::Resolution,
                "target resolution " + std::to_string(target_resolution_minutes) +
                    " is not a multiple of source " + std::to_string(dataset.resolution_minutes));
  }
  if (target_resolution_minutes == dataset.resolution_minutes) return dataset;

  const std::int64_t target = target_resolution_minutes;
  std::vector<SampleRecord> out_records;
  std::size_t i = 0;
  while (i < dataset.records.size()) {
    const std::int64_t window = dataset.records[i].timestamp -
                                ((dataset.records[i].timestamp % target + target) % target);
    SampleRecord merged;
    merged.timestamp = window;
    double sums[kFieldCount] = {};
    std::size_t counts[kFieldCount] = {};
    while (i < dataset.records.size() && dataset.records[i].timestamp < window + target) {
      const SampleRecord& r = dataset.records[i];
      for (std::size_t f = 0; f < kFieldCount; ++f) {
        if (r.*field_ptr(f)) {
          sums[f] += *(r.*field_ptr(f));
          ++counts[f];
        }
      }
      ++i;
    }
    for (std::size_t f = 0; f < kFieldCount; ++f) {
      if (counts[f] > 0) merged.*field_ptr(f) = sums[f] / static_cast<double>(counts[f]);
    }
    out_records.push_back(merged);
  }
  return make_dataset(std::move(out_records), target_resolution_minutes, dataset.daylight);
}

Dataset apply_night_zero(const Dataset& dataset) {
  if (!(dataset.daylight.start_hour < dataset.daylight.end_hour)) {
    throw Error(Error::Kind::Spec, "daylight window start must precede end");
  }
  Dataset out = dataset;
  const int start = dataset.daylight.start_hour * 60;
  const int end = dataset.daylight.end_hour * 60;
  for (SampleRecord& r : out.records) {
    const int m = minute_of_day(r.timestamp);
    if (m < start || m >= end) r.pv_kw = 0.0;
  }
  return out;
}

int DayProfiles::day_index_of(const Date& date) const {
  const auto it = std::lower_bound(dates.begin(), dates.end(), date);
  if (it == dates.end() || !(*it == date)) return -1;
  return static_cast<int>(it - dates.begin());
}

DayProfiles extract_daylight(const Dataset& dataset) {
  const int start = dataset.daylight.start_hour * 60;
  const int end = dataset.daylight.end_hour * 60;
  const int steps = (end - start) / dataset.resolution_minutes;
  if (steps < 1) throw Error(Error::Kind::Spec, "daylight window shorter than one sample");

  std::map<std::int64_t, std::vector<std::size_t>> by_day;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const int m = minute_of_day(dataset.records[i].timestamp);
    if (m < start || m >= end) continue;
    by_day[days_from_civil(date_of_minutes(dataset.records[i].timestamp))].push_back(i);
  }

  DayProfiles out;
  out.steps = steps;
  out.resolution_minutes = dataset.resolution_minutes;
  out.daylight = dataset.daylight;

  std::vector<std::pair<Date, std::vector<std::size_t>>> complete;
  for (const auto& [day, idx] : by_day) {
    if (idx.size() == static_cast<std::size_t>(steps)) complete.emplace_back(civil_from_days(day), idx);
  }
  if (complete.empty()) throw Error(Error::Kind::Gap, "no complete daylight day in dataset");

  const std::size_t n = complete.size();
  out.dates.reserve(n);
  out.pv = Matrix(n, static_cast<std::size_t>(steps));
  out.ghi = Matrix(n, static_cast<std::size_t>(steps));
  out.temp = Matrix(n, static_cast<std::size_t>(steps));
  out.wind = Matrix(n, static_cast<std::size_t>(steps));
  out.humidity = Matrix(n, static_cast<std::size_t>(steps));

  for (std::size_t d = 0; d < n; ++d) {
    out.dates.push_back(complete[d].first);
    for (int s = 0; s < steps; ++s) {
      const SampleRecord& r = dataset.records[complete[d].second[static_cast<std::size_t>(s)]];
      auto need = [&](const std::optional<double>& v, const char* what) {
        if (!v) {
          throw Error(Error::Kind::Gap, std::string("day ") + format_date(complete[d].first) +
                                            " missing " + what + " at " +
                                            format_timestamp(r.timestamp));
        }
        return *v;
      };
      out.pv(d, static_cast<std::size_t>(s)) = need(r.pv_kw, "pv_kw");
      out.ghi(d, static_cast<std::size_t>(s)) = need(r.ghi_wm2, "ghi_wm2");
      out.temp(d, static_cast<std::size_t>(s)) = need(r.temp_c, "temp_c");
      out.wind(d, static_cast<std::size_t>(s)) = need(r.wind_ms, "wind_ms");
      out.humidity(d, static_cast<std::size_t>(s)) = need(r.humidity_pct, "humidity_pct");
    }
  }
  return out;
}

double normalize_value(double x, const FeatureScale& scale) {
  const double span = scale.hi - scale.lo;
  if (span == 0.0) return 0.0;
  return -1.0 + 2.0 * (x - scale.lo) / span;
}

double denormalize_value(double y, const FeatureScale& scale) {
  const double span = scale.hi - scale.lo;
  if (span == 0.0) return scale.lo;
  return scale.lo + (y + 1.0) * span / 2.0;
}

std::vector<double> assemble_features(const std::vector<double>& lagged_series_at_step, double ghi,
                                      double temp, double wind, double humidity) {
  std::vector<double> row = lagged_series_at_step;
  row.push_back(ghi);
  row.push_back(temp);
  row.push_back(wind);
  row.push_back(humidity);
  return row;
}

std::vector<double> normalize_row(const std::vector<double>& row,
                                  const std::vector<FeatureScale>& scales) {
  if (row.size() != scales.size()) {
    throw Error(Error::Kind::Shape, "feature row width does not match normalization");
  }
  std::vector<double> out(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) out[i] = normalize_value(row[i], scales[i]);
  return out;
}

PatternSet build_patterns(const Matrix& series, const DayProfiles& days,
                          const std::vector<int>& target_day_indices, const LagConfig& lag) {
  if (lag.day_lags < 1) throw Error(Error::Kind::Spec, "day_lags must be >= 1");
  if (series.rows != days.day_count() || series.cols != static_cast<std::size_t>(days.steps)) {
    throw Error(Error::Kind::Shape, "series shape does not match day profiles");
  }
  if (target_day_indices.empty()) throw Error(Error::Kind::EmptyInput, "no target days");

  for (int d : target_day_indices) {
    if (d < lag.day_lags || d >= static_cast<int>(days.day_count())) {
      throw Error(Error::Kind::Gap, "target day index " + std::to_string(d) +
                                        " lacks " + std::to_string(lag.day_lags) +
                                        " preceding days");
    }
    // lagged days must be consecutive calendar days
    for (int l = 1; l <= lag.day_lags; ++l) {
      if (!(add_days(days.dates[static_cast<std::size_t>(d)], -l) ==
            days.dates[static_cast<std::size_t>(d - l)])) {
        throw Error(Error::Kind::Gap,
                    "day " + format_date(days.dates[static_cast<std::size_t>(d)]) +
                        " is missing its complete previous day " + std::to_string(l));
      }
    }
  }

  const std::size_t n_features = static_cast<std::size_t>(lag.day_lags) + 4;
  const std::size_t n_patterns = target_day_indices.size() * static_cast<std::size_t>(days.steps);
  Matrix raw_inputs(n_patterns, n_features);
  Matrix raw_targets(n_patterns, 1);

  std::size_t p = 0;
  for (int d : target_day_indices) {
    for (int s = 0; s < days.steps; ++s) {
      const auto du = static_cast<std::size_t>(d);
      const auto su = static_cast<std::size_t>(s);
      for (int l = 1; l <= lag.day_lags; ++l) {
        raw_inputs(p, static_cast<std::size_t>(l - 1)) = series(du - static_cast<std::size_t>(l), su);
      }
      raw_inputs(p, static_cast<std::size_t>(lag.day_lags) + 0) = days.ghi(du, su);
      raw_inputs(p, static_cast<std::size_t>(lag.day_lags) + 1) = days.temp(du, su);
      raw_inputs(p, static_cast<std::size_t>(lag.day_lags) + 2) = days.wind(du, su);
      raw_inputs(p, static_cast<std::size_t>(lag.day_lags) + 3) = days.humidity(du, su);
      raw_targets(p, 0) = series(du, su);
      ++p;
    }
  }

  PatternSet ps;
  ps.normalization.inputs.resize(n_features);
  ps.normalization.targets.resize(1);
  for (std::size_t c = 0; c < n_features; ++c) {
    double lo = raw_inputs(0, c), hi = raw_inputs(0, c);
    for (std::size_t r = 1; r < n_patterns; ++r) {
      lo = std::min(lo, raw_inputs(r, c));
      hi = std::max(hi, raw_inputs(r, c));
    }
    ps.normalization.inputs[c] = {lo, hi};
  }
  {
    double lo = raw_targets(0, 0), hi = raw_targets(0, 0);
    for (std::size_t r = 1; r < n_patterns; ++r) {
      lo = std::min(lo, raw_targets(r, 0));
      hi = std::max(hi, raw_targets(r, 0));
    }
    ps.normalization.targets[0] = {lo, hi};
  }

  ps.inputs = Matrix(n_patterns, n_features);
  ps.targets = Matrix(n_patterns, 1);
  for (std::size_t r = 0; r < n_patterns; ++r) {
    for (std::size_t c = 0; c < n_features; ++c) {
      ps.inputs(r, c) = normalize_value(raw_inputs(r, c), ps.normalization.inputs[c]);
    }
    ps.targets(r, 0) = normalize_value(raw_targets(r, 0), ps.normalization.targets[0]);
  }
  return ps;
}

}  // namespace pvcast::dataio
