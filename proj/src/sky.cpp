#include "pvcast/sky.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

namespace pvcast::sky {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kDegToRad = kPi / 180.0;

double round1(double v) { return std::round(v * 10.0) / 10.0; }
}  // namespace

double declination(int day_of_year) {
  if (day_of_year < 1 || day_of_year > 365) {
    throw Error(Error::Kind::Range, "day of year " + std::to_string(day_of_year) + " outside 1..365");
  }
  return 23.45 * std::sin(2.0 * kPi * (day_of_year - 80) / 365.0);
}

double sunrise_hour_angle(double latitude_deg, double declination_deg) {
  const double x = -std::tan(latitude_deg * kDegToRad) * std::tan(declination_deg * kDegToRad);
  if (x < -1.0 || x > 1.0) {
    throw Error(Error::Kind::Latitude,
                "polar day/night at latitude " + std::to_string(latitude_deg) + " deg");
  }
  return std::acos(x);
}

double extraterrestrial_insolation(int day_of_year, const SiteGeometry& site) {
  if (site.solar_constant <= 0.0) throw Error(Error::Kind::Spec, "solar constant must be positive");
  const double delta = declination(day_of_year);
  const double omega = sunrise_hour_angle(site.latitude_deg, delta);
  const double i0 =
      site.solar_constant *
      (1.0 + site.eccentricity_coeff * std::cos(360.0 * day_of_year / 365.0 * kDegToRad));
  const double phi = site.latitude_deg * kDegToRad;
  const double d = delta * kDegToRad;
  return 24.0 * i0 / kPi *
         (std::cos(phi) * std::cos(d) * std::sin(omega) + omega * std::sin(phi) * std::sin(d));
}

DayClass classify_day(double daily_insolation_kwh, double h0_kwh) {
  if (!(h0_kwh > 0.0)) throw Error(Error::Kind::Geometry, "extraterrestrial insolation must be positive");
  if (daily_insolation_kwh < 0.0) {
    throw Error(Error::Kind::Spec, "daily insolation must be non-negative");
  }
  const double kt = daily_insolation_kwh / h0_kwh;
  DayClass c;
  c.k_t = kt;
  if (kt >= 0.45) c.kind = DayKind::Clear;
  else if (kt >= 0.25) c.kind = DayKind::PartiallyCloudy;
  else c.kind = DayKind::Cloudy;
  return c;
}

std::vector<SeasonComposition> season_composition(const std::vector<DayClass>& classes,
                                                  int window_days) {
  if (classes.empty()) throw Error(Error::Kind::EmptyInput, "no day classes");
  if (window_days < 1) throw Error(Error::Kind::Spec, "window must be >= 1 day");

  std::vector<SeasonComposition> out;
  for (std::size_t begin = 0; begin < classes.size(); begin += static_cast<std::size_t>(window_days)) {
    const std::size_t end = std::min(classes.size(), begin + static_cast<std::size_t>(window_days));
    int counts[3] = {0, 0, 0};
    for (std::size_t i = begin; i < end; ++i) counts[static_cast<int>(classes[i].kind)]++;
    const auto len = static_cast<int>(end - begin);
    SeasonComposition comp;
    comp.window_days = len;
    comp.partial_window = len != window_days;
    comp.clear_pct = round1(100.0 * counts[0] / len);
    comp.partial_pct = round1(100.0 * counts[1] / len);
    comp.cloudy_pct = round1(100.0 * counts[2] / len);
    out.push_back(comp);
  }
  return out;
}

double daily_insolation_kwh(const std::vector<double>& irradiance_wm2, int resolution_minutes) {
  if (irradiance_wm2.size() < 2) {
    throw Error(Error::Kind::EmptyInput, "need at least two samples for the trapezoid rule");
  }
  const double dt_hours = resolution_minutes / 60.0;
  double wh = 0.0;
  for (std::size_t i = 1; i < irradiance_wm2.size(); ++i) {
    wh += 0.5 * (irradiance_wm2[i - 1] + irradiance_wm2[i]) * dt_hours;
  }
  return wh / 1000.0;
}

std::string classification_csv(const std::vector<dataio::Date>& dates,
                               const std::vector<DayClass>& classes) {
  if (dates.size() != classes.size()) {
    throw Error(Error::Kind::Shape, "dates and classes length mismatch");
  }
  std::string out = "date,k_t,class\n";
  char buf[64];
  for (std::size_t i = 0; i < dates.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%s\n", dataio::format_date(dates[i]).c_str(),
                  classes[i].k_t, to_string(classes[i].kind).c_str());
    out += buf;
  }
  return out;
}

std::vector<DayClass> classify_profiles(const dataio::DayProfiles& days, const SiteGeometry& site) {
  std::vector<DayClass> out;
  out.reserve(days.day_count());
  for (std::size_t d = 0; d < days.day_count(); ++d) {
    std::vector<double> ghi(days.ghi.row(d), days.ghi.row(d) + days.steps);
    const double measured = daily_insolation_kwh(ghi, days.resolution_minutes);
    const int doy = std::min(dataio::day_of_year(days.dates[d]), 365);
    out.push_back(classify_day(measured, extraterrestrial_insolation(doy, site)));
  }
  return out;
}

std::string to_string(DayKind kind) {
  switch (kind) {
    case DayKind::Clear: return "CD";
    case DayKind::PartiallyCloudy: return "PCD";
    case DayKind::Cloudy: return "CLD";
  }
  return "?";
}

DayKind day_kind_from_string(const std::string& tag) {
  if (tag == "CD") return DayKind::Clear;
  if (tag == "PCD") return DayKind::PartiallyCloudy;
  if (tag == "CLD") return DayKind::Cloudy;
  throw Error(Error::Kind::Config, "unknown day kind '" + tag + "'");
}

}  // namespace pvcast::sky
