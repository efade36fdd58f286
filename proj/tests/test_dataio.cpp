#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pvcast/dataio.hpp"
#include "pvcast/physics.hpp"

using namespace pvcast;
using namespace pvcast::dataio;

namespace {

std::vector<SampleRecord> parse(const std::string& csv, const CsvSchema& schema = {}) {
  std::istringstream in(csv);
  return parse_records(in, schema);
}

SampleRecord rec(std::int64_t ts, double pv, double ghi, double temp, double wind, double hum) {
  SampleRecord r;
  r.timestamp = ts;
  r.pv_kw = pv;
  r.ghi_wm2 = ghi;
  r.temp_c = temp;
  r.wind_ms = wind;
  r.humidity_pct = hum;
  return r;
}

// days of hourly data with a simple per-day signature
Dataset hourly_days(int n_days, double base = 10.0) {
  std::vector<SampleRecord> records;
  for (int d = 0; d < n_days; ++d) {
    for (int h = 0; h < 24; ++h) {
      const std::int64_t ts = minutes_at({2014, 1, 1 + d}, h, 0);
      const double shape = std::max(0.0, std::sin(3.14159 * (h - 7) / 10.0));
      records.push_back(rec(ts, base * (d + 1) * shape, 800.0 * shape, 20.0 + h * 0.1, 3.0,
                            50.0 + d));
    }
  }
  return make_dataset(std::move(records), 60);
}

}  // namespace

TEST_CASE("calendar helpers round-trip and know leap years") {
  CHECK(days_from_civil({1970, 1, 1}) == 0);
  CHECK(days_from_civil({2014, 1, 1}) == 16071);
  for (const Date d : {Date{2014, 1, 1}, Date{2016, 2, 29}, Date{1999, 12, 31}}) {
    CHECK(civil_from_days(days_from_civil(d)) == d);
  }
  CHECK(day_of_year({2014, 1, 1}) == 1);
  CHECK(day_of_year({2014, 12, 31}) == 365);
  CHECK(day_of_year({2016, 12, 31}) == 366);
  CHECK(add_days({2014, 1, 31}, 1) == Date{2014, 2, 1});

  const std::int64_t ts = minutes_at({2014, 6, 15}, 13, 45);
  CHECK(format_timestamp(ts) == "2014-06-15T13:45");
  CHECK(parse_timestamp("2014-06-15T13:45") == ts);
  CHECK(parse_timestamp("2014-06-15 13:45:00") == ts);
  CHECK(minute_of_day(ts) == 13 * 60 + 45);
  CHECK(date_of_minutes(ts) == Date{2014, 6, 15});
  CHECK_THROWS_AS(parse_timestamp("junk"), Error);
  CHECK_THROWS_AS(parse_timestamp("2014-06-15T13:45:30"), Error);
  CHECK(parse_date("2014-06-15") == Date{2014, 6, 15});
}

TEST_CASE("parse_records: identity, missing cells, sorting, error paths") {
  const std::string header = "timestamp,pv_kw,ghi_wm2,temp_c,wind_ms,humidity_pct\n";

  // two valid rows stay two records in order
  auto records = parse(header +
                       "2014-01-01T07:00,1.5,300,22,3,55\n"
                       "2014-01-01T07:15,2.0,350,23,3,54\n");
  REQUIRE(records.size() == 2);
  CHECK(records[0].timestamp < records[1].timestamp);
  CHECK(*records[0].pv_kw == 1.5);

  // empty pv cell becomes a missing value, not zero
  records = parse(header + "2014-01-01T07:00,,300,22,3,55\n");
  REQUIRE(records.size() == 1);
  CHECK_FALSE(records[0].pv_kw.has_value());
  CHECK(records[0].ghi_wm2.has_value());

  // unparseable numeric cell becomes missing
  records = parse(header + "2014-01-01T07:00,abc,300,22,3,55\n");
  CHECK_FALSE(records[0].pv_kw.has_value());

  // shuffled rows sort ascending: oracle is an independent std::sort
  {
    std::vector<std::string> lines;
    std::vector<std::int64_t> stamps;
    Rng rng(17);
    for (int i = 0; i < 100; ++i) {
      stamps.push_back(minutes_at({2014, 2, 1}, i / 4, (i % 4) * 15));
    }
    std::vector<std::int64_t> shuffled = stamps;
    for (std::size_t i = shuffled.size(); i > 1; --i) {
      std::swap(shuffled[i - 1],
                shuffled[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    }
    std::string csv = header;
    for (std::int64_t ts : shuffled) csv += format_timestamp(ts) + ",1,2,3,4,5\n";
    const auto sorted = parse(csv);
    std::sort(stamps.begin(), stamps.end());
    REQUIRE(sorted.size() == stamps.size());
    for (std::size_t i = 0; i < stamps.size(); ++i) CHECK(sorted[i].timestamp == stamps[i]);
  }

  // schema remapping picks columns by configured names
  CsvSchema remap;
  remap.timestamp = "time";
  remap.pv = "power";
  records = parse("time,power,ghi_wm2,temp_c,wind_ms,humidity_pct\n2014-01-01T12:00,9,1,2,3,4\n",
                  remap);
  CHECK(*records[0].pv_kw == 9.0);

  CHECK_THROWS_AS(parse(""), Error);                                  // empty input
  CHECK_THROWS_AS(parse(header), Error);                              // no data rows
  CHECK_THROWS_AS(parse("bad,header\n1,2\n"), Error);                 // schema error
  CHECK_THROWS_AS(parse(header + "2014-01-01T07:00,1,2,3,4,5\n2014-01-01T07:00,1,2,3,4,5\n"),
                  Error);                                             // duplicate timestamp
  CHECK_THROWS_AS(parse(header + "2014-01-01T07:00,-1,2,3,4,5\n"), Error);  // negative pv
  CHECK_THROWS_AS(parse(header + "2014-01-01T07:00,1,2,3,4,101\n"), Error); // humidity range
}

TEST_CASE("dataset csv round-trips through parse_records") {
  const Dataset ds = hourly_days(2);
  const std::string csv = to_csv(ds);
  const auto records = parse(csv);
  REQUIRE(records.size() == ds.records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(records[i].timestamp == ds.records[i].timestamp);
    CHECK(*records[i].pv_kw == doctest::Approx(*ds.records[i].pv_kw).epsilon(1e-9));
  }
}

TEST_CASE("make_dataset validates spacing") {
  std::vector<SampleRecord> records = {rec(0, 1, 1, 1, 1, 1), rec(60, 1, 1, 1, 1, 1),
                                       rec(180, 1, 1, 1, 1, 1)};
  CHECK_THROWS_AS(make_dataset(std::move(records), 60), Error);
}

TEST_CASE("apply_night_zero zeroes outside the window and nothing else") {
  std::vector<SampleRecord> records;
  records.push_back(rec(minutes_at({2014, 1, 1}, 3, 0), 5.0, 0, 10, 1, 50));
  records.push_back(rec(minutes_at({2014, 1, 1}, 4, 0), 2.0, 0, 10, 1, 50));
  const Dataset ds = make_dataset(std::move(records), 60);
  const Dataset z = apply_night_zero(ds);
  CHECK(*z.records[0].pv_kw == 0.0);
  CHECK(*z.records[1].pv_kw == 0.0);

  // daylight samples untouched, element-wise
  const Dataset day = hourly_days(1);
  const Dataset zday = apply_night_zero(day);
  for (std::size_t i = 0; i < day.records.size(); ++i) {
    const int h = minute_of_day(day.records[i].timestamp) / 60;
    if (h >= 7 && h < 17) {
      CHECK(zday.records[i].pv_kw == day.records[i].pv_kw);
    } else {
      CHECK(*zday.records[i].pv_kw == 0.0);
    }
  }
}

TEST_CASE("resample: identity, mean, energy preservation, errors") {
  const Dataset ds = hourly_days(2);
  const Dataset same = resample(ds, 60);
  CHECK(same.records.size() == ds.records.size());
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    CHECK(same.records[i].pv_kw == ds.records[i].pv_kw);
  }

  // [2,4,6] at 1-min -> mean 4 in one 3-min window (illustrative window)
  std::vector<SampleRecord> tri = {rec(0, 2, 2, 2, 2, 2), rec(1, 4, 4, 4, 4, 4),
                                   rec(2, 6, 6, 6, 6, 6)};
  const Dataset tri_ds = make_dataset(std::move(tri), 1);
  const Dataset merged = resample(tri_ds, 3);
  REQUIRE(merged.records.size() == 1);
  CHECK(*merged.records[0].pv_kw == 4.0);
  CHECK(merged.records[0].timestamp == 0);

  // missing samples are excluded from the mean; all-missing stays missing
  std::vector<SampleRecord> gaps(4);
  for (int i = 0; i < 4; ++i) {
    gaps[static_cast<std::size_t>(i)] = rec(i, 1, 1, 1, 1, 1);
  }
  gaps[1].pv_kw.reset();
  gaps[2].ghi_wm2.reset();
  gaps[3].ghi_wm2.reset();
  gaps[2].pv_kw = 7.0;
  const Dataset gap_ds = make_dataset(std::move(gaps), 1);
  const Dataset half = resample(gap_ds, 2);
  REQUIRE(half.records.size() == 2);
  CHECK(*half.records[0].pv_kw == 1.0);       // only the present sample
  CHECK(*half.records[1].pv_kw == 4.0);       // mean of 7 and 1
  CHECK_FALSE(half.records[1].ghi_wm2.has_value());

  // synthetic 1-min day: daily energy preserved to 1e-9 relative at 15 min
  physics::SynthConfig synth;
  synth.seed = 9;
  synth.resolution_minutes = 1;
  const auto day_records = physics::generate_day({2014, 4, 1}, sky::DayKind::Clear, synth);
  const Dataset minute = make_dataset(day_records, 1);
  const Dataset quarter = resample(minute, 15);
  CHECK(quarter.records.size() == minute.records.size() / 15);
  double e1 = 0.0, e15 = 0.0;
  for (const auto& r : minute.records) e1 += *r.pv_kw;       // kW-minutes
  for (const auto& r : quarter.records) e15 += *r.pv_kw * 15.0;
  CHECK(e15 == doctest::Approx(e1).epsilon(1e-9));

  CHECK_THROWS_AS(resample(ds, 90), Error);  // not a multiple of 60
  CHECK_THROWS_AS(resample(ds, 0), Error);

  // daily mean invariance for the complete hourly fixture
  const Dataset two = resample(hourly_days(1), 120);
  double mean_src = 0.0, mean_dst = 0.0;
  for (const auto& r : hourly_days(1).records) mean_src += *r.pv_kw;
  mean_src /= 24.0;
  for (const auto& r : two.records) mean_dst += *r.pv_kw;
  mean_dst /= static_cast<double>(two.records.size());
  CHECK(mean_dst == doctest::Approx(mean_src).epsilon(1e-12));
}

TEST_CASE("reconstruct_missing: identity, forced fill, idempotence") {
  const Dataset full = hourly_days(4);
  const Dataset same = reconstruct_missing(full, 2);
  for (std::size_t i = 0; i < full.records.size(); ++i) {
    CHECK(same.records[i].pv_kw == full.records[i].pv_kw);
  }

  // one gap, k = 1: day 0 and day 2 identical except the gap, so the fill
  // must copy day 2's same-time value
  std::vector<SampleRecord> records;
  for (int d = 0; d < 3; ++d) {
    for (int h = 0; h < 24; ++h) {
      const double v = (d == 1) ? 50.0 : 10.0 + h;  // day 1 deliberately distant
      records.push_back(rec(minutes_at({2014, 1, 1 + d}, h, 0), v, v, v, v, std::min(100.0, v)));
    }
  }
  records[12].pv_kw.reset();  // day 0, hour 12
  const Dataset gap_ds = make_dataset(std::move(records), 60);
  const Dataset filled = reconstruct_missing(gap_ds, 1);
  CHECK(*filled.records[12].pv_kw == doctest::Approx(22.0).epsilon(1e-12));  // day 2 hour 12

  const Dataset twice = reconstruct_missing(filled, 1);
  for (std::size_t i = 0; i < filled.records.size(); ++i) {
    CHECK(twice.records[i].pv_kw == filled.records[i].pv_kw);
  }

  // a field that is entirely absent cannot be reconstructed
  std::vector<SampleRecord> nowind;
  for (int h = 0; h < 24; ++h) {
    auto r = rec(minutes_at({2014, 1, 1}, h, 0), 1, 1, 1, 0, 1);
    r.wind_ms.reset();
    nowind.push_back(r);
  }
  const Dataset nowind_ds = make_dataset(std::move(nowind), 60);
  CHECK_THROWS_AS(reconstruct_missing(nowind_ds, 1), Error);
}

TEST_CASE("0.62 percent random deletion refills within the neighbor spread") {
  physics::SynthConfig synth;
  synth.seed = 33;
  synth.resolution_minutes = 30;
  const dataio::Dataset year = physics::generate_year(synth);

  Dataset holed = year;
  Rng rng(4096);
  std::vector<std::size_t> deleted;
  const auto n = holed.records.size();
  const auto n_delete = static_cast<std::size_t>(0.0062 * static_cast<double>(n));
  for (std::size_t i = 0; i < n_delete; ++i) {
    const auto idx = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
    if (holed.records[idx].pv_kw.has_value()) {
      holed.records[idx].pv_kw.reset();
      deleted.push_back(idx);
    }
  }
  REQUIRE(deleted.size() > 100);

  const Dataset restored = reconstruct_missing(holed, 3);
  for (std::size_t idx : deleted) {
    REQUIRE(restored.records[idx].pv_kw.has_value());
  }
  // non-missing values never altered
  for (std::size_t i = 0; i < n; ++i) {
    if (holed.records[i].pv_kw.has_value()) {
      CHECK(restored.records[i].pv_kw == holed.records[i].pv_kw);
    }
  }
  // fills stay within the plausible day range and close to the truth on average
  double total_err = 0.0;
  const double peak = physics::PlantParams{}.peak_kw();
  for (std::size_t idx : deleted) {
    const double err = std::abs(*restored.records[idx].pv_kw - *year.records[idx].pv_kw);
    total_err += err;
    CHECK(*restored.records[idx].pv_kw >= 0.0);
    CHECK(*restored.records[idx].pv_kw <= peak);
  }
  CHECK(total_err / static_cast<double>(deleted.size()) < 0.15 * peak);
}

TEST_CASE("extract_daylight: shapes, gap reporting") {
  const Dataset ds = hourly_days(3);
  const DayProfiles days = extract_daylight(ds);
  CHECK(days.day_count() == 3);
  CHECK(days.steps == 10);
  CHECK(days.dates[0] == Date{2014, 1, 1});
  CHECK(days.day_index_of({2014, 1, 2}) == 1);
  CHECK(days.day_index_of({2015, 1, 1}) == -1);

  Dataset holed = ds;
  holed.records[9].temp_c.reset();  // 09:00 on day 0 is daylight
  CHECK_THROWS_AS(extract_daylight(holed), Error);
}

TEST_CASE("normalization: round-trip, zero-span mapping") {
  const FeatureScale scale{-3.0, 9.0};
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const double x = rng.uniform(-3.0, 9.0);
    const double y = normalize_value(x, scale);
    CHECK(y >= -1.0);
    CHECK(y <= 1.0);
    CHECK(denormalize_value(y, scale) == doctest::Approx(x).epsilon(1e-12));
  }
  const FeatureScale degenerate{4.0, 4.0};
  CHECK(normalize_value(4.0, degenerate) == 0.0);
  CHECK(denormalize_value(0.0, degenerate) == 4.0);
}

TEST_CASE("build_patterns: counting, lag handling, degenerate data") {
  const Dataset ds = hourly_days(5);
  const DayProfiles days = extract_daylight(ds);

  // 3 complete days, lag 1: target days 2..3 only (indices 1, 2)
  {
    std::vector<int> targets = {1, 2};
    const PatternSet ps = build_patterns(days.pv, days, targets, LagConfig{1});
    CHECK(ps.inputs.rows == 2u * 10u);
    CHECK(ps.inputs.cols == 5);  // 1 lag + 4 met
    CHECK(ps.targets.cols == 1);
  }

  // lag 2 forbids day 1 as a target
  CHECK_THROWS_AS(build_patterns(days.pv, days, std::vector<int>{1}, LagConfig{2}), Error);

  // all features normalized into [-1, 1]
  std::vector<int> targets = {2, 3, 4};
  const PatternSet ps = build_patterns(days.pv, days, targets, LagConfig{2});
  CHECK(ps.inputs.cols == 6);
  CHECK(ps.inputs.rows == 30);
  for (double v : ps.inputs.a) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
  // normalization inverts exactly for the stored extrema
  for (std::size_t r = 0; r < ps.targets.rows; ++r) {
    const double denorm = denormalize_value(ps.targets(r, 0), ps.normalization.targets[0]);
    const double renorm = normalize_value(denorm, ps.normalization.targets[0]);
    CHECK(renorm == doctest::Approx(ps.targets(r, 0)).epsilon(1e-12));
  }

  // constant series: degenerate span maps every feature to zero
  Matrix flat(days.day_count(), static_cast<std::size_t>(days.steps), 3.14);
  const PatternSet zero = build_patterns(flat, days, targets, LagConfig{1});
  for (std::size_t r = 0; r < zero.inputs.rows; ++r) {
    CHECK(zero.inputs(r, 0) == 0.0);
    CHECK(zero.targets(r, 0) == 0.0);
  }
}

TEST_CASE("thirty-day synthetic set yields 29 days by 40 steps of patterns") {
  physics::SynthConfig synth;
  synth.seed = 21;
  synth.resolution_minutes = 15;
  std::vector<SampleRecord> records;
  for (int d = 0; d < 30; ++d) {
    const auto day =
        physics::generate_day(add_days({2014, 3, 1}, d), sky::DayKind::Clear, synth);
    records.insert(records.end(), day.begin(), day.end());
  }
  const Dataset ds = make_dataset(std::move(records), 15);
  const DayProfiles days = extract_daylight(ds);
  REQUIRE(days.day_count() == 30);
  REQUIRE(days.steps == 40);

  std::vector<int> targets;
  for (int d = 1; d < 30; ++d) targets.push_back(d);
  const PatternSet ps = build_patterns(days.pv, days, targets, LagConfig{1});
  CHECK(ps.inputs.rows == 29u * 40u);
}
