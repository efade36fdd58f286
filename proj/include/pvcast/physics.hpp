#pragma once

// Synthetic PV-plant and weather generator: clear-sky bell profiles with
// per-class cloud attenuation, rescaled so each day's clearness index lands
// inside the requested class band, and plant power from the NOCT cell
// temperature model.

#include <array>
#include <cstdint>
#include <vector>

#include "pvcast/dataio.hpp"
#include "pvcast/sky.hpp"

namespace pvcast::physics {

struct PlantParams {
  double p_stc_w = 300.0;     // per array at standard test conditions
  double gamma_per_c = 0.004; // power temperature coefficient
  double noct_c = 45.0;
  int n_series = 20;
  int n_parallel = 50;

  double peak_kw() const { return p_stc_w * n_series * n_parallel / 1000.0; }
};

struct CompositionTarget {
  double clear_pct = 0.0;
  double partial_pct = 0.0;
  double cloudy_pct = 0.0;
};

// monthly clear / partially-cloudy / cloudy shares used when no targets are
// configured; summer sits at both ends of the year (southern hemisphere)
std::array<CompositionTarget, 12> default_composition();

struct SynthConfig {
  sky::SiteGeometry site;
  PlantParams plant;
  dataio::Date start_date{2014, 1, 1};
  std::array<CompositionTarget, 12> composition = default_composition();
  int resolution_minutes = 15;
  dataio::DaylightWindow daylight;
  std::uint64_t seed = 42;
  int jobs = 1;
};

// T_x = T_amb + SI/800 * (NOCT - 20)
double cell_temperature(double t_amb_c, double irradiance_wm2, double noct_c);

// P = P_stc * SI/1000 * (1 - gamma (T_x - 25)) * N_s * N_p, floored at 0, watts
double pv_power(double irradiance_wm2, double cell_temp_c, const PlantParams& plant);

// One day of records at config resolution covering the full 24 h; daylight
// irradiance is scaled so sky::classify_day returns `kind` (up to 5
// regeneration attempts before a generation error).
std::vector<dataio::SampleRecord> generate_day(const dataio::Date& date, sky::DayKind kind,
                                               const SynthConfig& config);

// 360 days in twelve 30-day windows; day kinds match the window targets by
// largest-remainder assignment, order shuffled per window
dataio::Dataset generate_year(const SynthConfig& config);

// kind counts for one window (largest remainder, deterministic ties)
std::array<int, 3> window_day_counts(const CompositionTarget& target, int window_days);

}  // namespace pvcast::physics
