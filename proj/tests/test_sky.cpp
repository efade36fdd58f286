#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "pvcast/sky.hpp"

using namespace pvcast;
using namespace pvcast::sky;

TEST_CASE("declination: zero crossing, extremes, periodic bound, range check") {
  CHECK(declination(80) == 0.0);
  CHECK(std::abs(declination(171) - 23.45) < 0.01);
  CHECK(std::abs(declination(354) - (-23.45)) < 0.01);
  for (int n = 1; n <= 365; ++n) {
    CHECK(std::abs(declination(n)) <= 23.45);
  }
  CHECK_THROWS_AS(declination(0), Error);
  CHECK_THROWS_AS(declination(366), Error);
}

TEST_CASE("sunrise hour angle: symmetric cases and the subtropical value") {
  const double half_pi = std::numbers::pi / 2.0;
  CHECK(sunrise_hour_angle(0.0, 17.3) == doctest::Approx(half_pi).epsilon(1e-12));
  CHECK(sunrise_hour_angle(-33.0, 0.0) == doctest::Approx(half_pi).epsilon(1e-12));
  // phi = -27.5, delta = 23.45: arccos(0.225763...) = 1.3430 rad
  CHECK(sunrise_hour_angle(-27.5, 23.45) == doctest::Approx(1.343).epsilon(1e-3));
  CHECK_THROWS_AS(sunrise_hour_angle(89.9, 23.45), Error);
}

TEST_CASE("extraterrestrial insolation: equator equinox, first day, zero coefficient") {
  SiteGeometry site;
  site.latitude_deg = 0.0;

  // delta(80) = 0 exactly, so H0 collapses to 24 I0 / pi
  const double i0_80 =
      site.solar_constant *
      (1.0 + site.eccentricity_coeff * std::cos(360.0 * 80 / 365.0 * std::numbers::pi / 180.0));
  const double expected = 24.0 * i0_80 / std::numbers::pi;
  CHECK(extraterrestrial_insolation(80, site) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(expected == doctest::Approx(10.51).epsilon(1e-3));

  // N = 1 with the default coefficient: I0 = 1.412 kW/m^2
  const double i0_1 =
      site.solar_constant *
      (1.0 + site.eccentricity_coeff * std::cos(360.0 * 1 / 365.0 * std::numbers::pi / 180.0));
  CHECK(i0_1 == doctest::Approx(1.412).epsilon(1e-3));

  // with the coefficient zeroed I0 = I_sc exactly, so the ratio between the
  // default and zero-coefficient H0 must be the eccentricity factor itself
  SiteGeometry flat = site;
  flat.eccentricity_coeff = 0.0;
  CHECK(extraterrestrial_insolation(80, flat) ==
        doctest::Approx(24.0 * flat.solar_constant / std::numbers::pi).epsilon(1e-12));
  for (int n : {1, 100, 200, 300, 365}) {
    const double ratio = extraterrestrial_insolation(n, site) / extraterrestrial_insolation(n, flat);
    const double factor =
        1.0 + site.eccentricity_coeff * std::cos(360.0 * n / 365.0 * std::numbers::pi / 180.0);
    CHECK(ratio == doctest::Approx(factor).epsilon(1e-12));
  }
}

TEST_CASE("equator H0 with zero eccentricity peaks at the equinoxes") {
  SiteGeometry site;
  site.latitude_deg = 0.0;
  site.eccentricity_coeff = 0.0;
  double h0_equinox = extraterrestrial_insolation(80, site);
  for (int n = 1; n <= 365; ++n) {
    CHECK(extraterrestrial_insolation(n, site) <= h0_equinox + 1e-12);
  }
}

TEST_CASE("day classification thresholds with clearer-class boundaries") {
  const struct {
    double kt;
    DayKind kind;
  } grid[] = {
      {0.10, DayKind::Cloudy},         {0.24, DayKind::Cloudy},
      {0.25, DayKind::PartiallyCloudy}, {0.26, DayKind::PartiallyCloudy},
      {0.30, DayKind::PartiallyCloudy}, {0.44, DayKind::PartiallyCloudy},
      {0.45, DayKind::Clear},          {0.46, DayKind::Clear},
      {0.50, DayKind::Clear},
  };
  for (const auto& g : grid) {
    const DayClass c = classify_day(g.kt * 10.0, 10.0);
    CHECK(c.kind == g.kind);
    CHECK(c.k_t == doctest::Approx(g.kt).epsilon(1e-12));
  }
  CHECK_THROWS_AS(classify_day(1.0, 0.0), Error);
  CHECK_THROWS_AS(classify_day(-1.0, 10.0), Error);
}

TEST_CASE("classification is monotone in the clearness index") {
  auto rank = [](DayKind k) {
    return k == DayKind::Clear ? 2 : (k == DayKind::PartiallyCloudy ? 1 : 0);
  };
  int prev = 0;
  for (double kt = 0.0; kt <= 1.2; kt += 0.01) {
    const int r = rank(classify_day(kt * 8.0, 8.0).kind);
    CHECK(r >= prev);
    prev = r;
  }
}

TEST_CASE("season composition: uniform, mixed and partial windows") {
  std::vector<DayClass> days(30, DayClass{DayKind::Clear, 0.6});
  auto comp = season_composition(days, 30);
  REQUIRE(comp.size() == 1);
  CHECK(comp[0].clear_pct == 100.0);
  CHECK(comp[0].partial_pct == 0.0);
  CHECK(comp[0].cloudy_pct == 0.0);

  // 27 CD / 2 PCD / 1 CLD -> (90.0, 6.7, 3.3)
  days.assign(27, DayClass{DayKind::Clear, 0.6});
  days.insert(days.end(), 2, DayClass{DayKind::PartiallyCloudy, 0.3});
  days.insert(days.end(), 1, DayClass{DayKind::Cloudy, 0.1});
  comp = season_composition(days, 30);
  REQUIRE(comp.size() == 1);
  CHECK(comp[0].clear_pct == 90.0);
  CHECK(comp[0].partial_pct == 6.7);
  CHECK(comp[0].cloudy_pct == 3.3);
  CHECK(std::abs(comp[0].clear_pct + comp[0].partial_pct + comp[0].cloudy_pct - 100.0) <= 0.5);

  // 40 days: one full window plus a 10-day tail flagged partial
  days.assign(40, DayClass{DayKind::Cloudy, 0.1});
  comp = season_composition(days, 30);
  REQUIRE(comp.size() == 2);
  CHECK_FALSE(comp[0].partial_window);
  CHECK(comp[1].partial_window);
  CHECK(comp[1].window_days == 10);
  CHECK(comp[1].cloudy_pct == 100.0);

  CHECK_THROWS_AS(season_composition({}, 30), Error);
}

TEST_CASE("composition percentages sum to 100 within rounding for random mixes") {
  Rng rng(31);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<DayClass> days;
    for (int i = 0; i < 30; ++i) {
      const double u = rng.uniform01();
      days.push_back(DayClass{
          u < 0.4 ? DayKind::Clear : (u < 0.7 ? DayKind::PartiallyCloudy : DayKind::Cloudy), u});
    }
    const auto comp = season_composition(days, 30);
    const double total = comp[0].clear_pct + comp[0].partial_pct + comp[0].cloudy_pct;
    CHECK(std::abs(total - 100.0) <= 0.5);
  }
}

TEST_CASE("trapezoidal insolation and the csv report") {
  // constant 500 W/m^2 for 11 hourly samples = 5 kWh/m^2 over 10 hours
  std::vector<double> flat(11, 500.0);
  CHECK(daily_insolation_kwh(flat, 60) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK_THROWS_AS(daily_insolation_kwh({1.0}, 60), Error);

  std::vector<dataio::Date> dates = {{2014, 1, 1}, {2014, 1, 2}};
  std::vector<DayClass> classes = {{DayKind::Clear, 0.61}, {DayKind::Cloudy, 0.14}};
  const std::string csv = classification_csv(dates, classes);
  CHECK(csv.find("date,k_t,class") == 0);
  CHECK(csv.find("2014-01-01,0.610000,CD") != std::string::npos);
  CHECK(csv.find("2014-01-02,0.140000,CLD") != std::string::npos);
}

TEST_CASE("day kind tags round-trip") {
  for (DayKind k : {DayKind::Clear, DayKind::PartiallyCloudy, DayKind::Cloudy}) {
    CHECK(day_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(day_kind_from_string("sunny"), Error);
}
