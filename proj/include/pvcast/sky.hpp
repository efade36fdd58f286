#pragma once

// Clearness-index computation from extraterrestrial insolation geometry and
// day classification into clear / partially cloudy / cloudy.

#include <string>
#include <vector>

#include "pvcast/dataio.hpp"

namespace pvcast::sky {

struct SiteGeometry {
  double latitude_deg = -27.5;
  double solar_constant = 1.367;     // kW/m^2
  double eccentricity_coeff = 0.033; // see classify configuration: 0.33 as printed is selectable
};

enum class DayKind { Clear, PartiallyCloudy, Cloudy };

struct DayClass {
  DayKind kind = DayKind::Clear;
  double k_t = 0.0;
};

struct SeasonComposition {
  int window_days = 30;
  double clear_pct = 0.0;
  double partial_pct = 0.0;
  double cloudy_pct = 0.0;
  bool partial_window = false;  // tail window shorter than window_days
};

// delta = 23.45 sin(2 pi (N - 80) / 365), degrees
double declination(int day_of_year);

// omega_sr = arccos(-tan(phi) tan(delta)), radians in [0, pi]
double sunrise_hour_angle(double latitude_deg, double declination_deg);

// H0 in kWh/m^2 per day
double extraterrestrial_insolation(int day_of_year, const SiteGeometry& site);

// thresholds: Clear at K_t >= 0.45, PartiallyCloudy at 0.25 <= K_t < 0.45,
// Cloudy below; boundaries go to the clearer class
DayClass classify_day(double daily_insolation_kwh, double h0_kwh);

std::vector<SeasonComposition> season_composition(const std::vector<DayClass>& classes,
                                                  int window_days = 30);

// trapezoidal integral of irradiance samples over the day, kWh/m^2
double daily_insolation_kwh(const std::vector<double>& irradiance_wm2, int resolution_minutes);

// one row per day: date,k_t,class
std::string classification_csv(const std::vector<dataio::Date>& dates,
                               const std::vector<DayClass>& classes);

// classifies every day of a profile set against its extraterrestrial insolation
std::vector<DayClass> classify_profiles(const dataio::DayProfiles& days, const SiteGeometry& site);

std::string to_string(DayKind kind);          // CD / PCD / CLD
DayKind day_kind_from_string(const std::string& tag);

}  // namespace pvcast::sky
