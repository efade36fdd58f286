#include "pvcast/physics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pvcast::physics {

namespace {

constexpr double kPi = std::numbers::pi;

// K_t sampling bands sit inside the classification thresholds with margin,
// so rescaled profiles classify as requested
struct Band {
  double lo, hi;
};
Band kt_band(sky::DayKind kind) {
  switch (kind) {
    case sky::DayKind::Clear: return {0.52, 0.66};
    case sky::DayKind::PartiallyCloudy: return {0.28, 0.42};
    case sky::DayKind::Cloudy: return {0.10, 0.18};
  }
  return {0.5, 0.6};
}

// low-order random Fourier series in [-1, 1]-ish, smooth over the day
struct SmoothNoise {
  double a1, a2, a3, p1, p2, p3;
  explicit SmoothNoise(Rng& rng)
      : a1(rng.normal() * 0.6),
        a2(rng.normal() * 0.3),
        a3(rng.normal() * 0.15),
        p1(rng.uniform(0.0, 2.0 * kPi)),
        p2(rng.uniform(0.0, 2.0 * kPi)),
        p3(rng.uniform(0.0, 2.0 * kPi)) {}
  double operator()(double frac) const {
    return a1 * std::sin(2.0 * kPi * frac + p1) + a2 * std::sin(4.0 * kPi * frac + p2) +
           a3 * std::sin(6.0 * kPi * frac + p3);
  }
};

struct CloudDip {
  double center, width, depth;
};

double seasonal_base_temp(int day_of_year) {
  // southern hemisphere: warm near the turn of the year
  return 20.0 + 8.0 * std::cos(2.0 * kPi * (day_of_year - 15) / 365.0);
}

}  // namespace

std::array<CompositionTarget, 12> default_composition() {
  return {{
      {81, 16, 3},
      {71, 26, 3},
      {87, 6, 7},
      {80, 16, 4},
      {77, 12, 11},
      {60, 26, 14},
      {77, 11, 12},
      {67, 22, 11},
      {77, 20, 3},
      {87, 13, 0},
      {87, 10, 3},
      {90, 6, 4},
  }};
}

double cell_temperature(double t_amb_c, double irradiance_wm2, double noct_c) {
  if (irradiance_wm2 < 0.0) throw Error(Error::Kind::Spec, "irradiance must be non-negative");
  return t_amb_c + irradiance_wm2 / 800.0 * (noct_c - 20.0);
}

double pv_power(double irradiance_wm2, double cell_temp_c, const PlantParams& plant) {
  if (irradiance_wm2 < 0.0) throw Error(Error::Kind::Spec, "irradiance must be non-negative");
  if (plant.p_stc_w <= 0.0 || plant.n_series < 1 || plant.n_parallel < 1 ||
      plant.gamma_per_c <= 0.0 || plant.gamma_per_c >= 0.01) {
    throw Error(Error::Kind::Spec, "invalid plant parameters");
  }
  const double p = plant.p_stc_w * (irradiance_wm2 / 1000.0) *
                   (1.0 - plant.gamma_per_c * (cell_temp_c - 25.0)) * plant.n_series *
                   plant.n_parallel;
  return std::max(p, 0.0);
}

std::array<int, 3> window_day_counts(const CompositionTarget& target, int window_days) {
  const double pct[3] = {target.clear_pct, target.partial_pct, target.cloudy_pct};
  const double total = pct[0] + pct[1] + pct[2];
  if (std::abs(total - 100.0) > 0.5) {
    throw Error(Error::Kind::Config, "composition percentages sum to " + std::to_string(total));
  }
  std::array<int, 3> counts{};
  double exact[3];
  int assigned = 0;
  for (int i = 0; i < 3; ++i) {
    exact[i] = pct[i] * window_days / 100.0;
    counts[i] = static_cast<int>(std::floor(exact[i]));
    assigned += counts[i];
  }
  // hand out the remainder by largest fractional part, class order on ties
  for (int r = assigned; r < window_days; ++r) {
    int best = 0;
    double best_frac = -1.0;
    for (int i = 0; i < 3; ++i) {
      const double frac = exact[i] - counts[i];
      if (frac > best_frac + 1e-12) {
        best_frac = frac;
        best = i;
      }
    }
    counts[best]++;
  }
  return counts;
}

std::vector<dataio::SampleRecord> generate_day(const dataio::Date& date, sky::DayKind kind,
                                               const SynthConfig& config) {
  const int res = config.resolution_minutes;
  if (res < 1 || 1440 % res != 0) {
    throw Error(Error::Kind::Resolution, "resolution must divide a day");
  }
  const int steps = 1440 / res;
  const int start_min = config.daylight.start_hour * 60;
  const int end_min = config.daylight.end_hour * 60;
  const int doy = std::min(dataio::day_of_year(date), 365);
  const double h0 = sky::extraterrestrial_insolation(doy, config.site);
  const Band band = kt_band(kind);

  const std::uint64_t day_index = static_cast<std::uint64_t>(dataio::days_from_civil(date));

  for (int attempt = 0; attempt < 5; ++attempt) {
    Rng rng(derive_seed(config.seed, {1, day_index, static_cast<std::uint64_t>(attempt)}));
    const double kt_target = rng.uniform(band.lo, band.hi);

    // half-sine clear-sky shape over the daylight window, attenuated per class
    std::vector<double> ghi(static_cast<std::size_t>(steps), 0.0);
    SmoothNoise wobble(rng);

    std::vector<CloudDip> dips;
    double base_attenuation = 1.0;
    SmoothNoise slow(rng);
    if (kind == sky::DayKind::PartiallyCloudy) {
      const int n_dips = static_cast<int>(rng.uniform_int(3, 6));
      for (int i = 0; i < n_dips; ++i) {
        dips.push_back({rng.uniform(0.1, 0.9), rng.uniform(0.02, 0.10), rng.uniform(0.45, 0.9)});
      }
    } else if (kind == sky::DayKind::Cloudy) {
      base_attenuation = rng.uniform(0.20, 0.30);
    }

    for (int s = 0; s < steps; ++s) {
      const int minute = s * res;
      if (minute < start_min || minute >= end_min) continue;
      const double frac = (minute - start_min + 0.5 * res) / static_cast<double>(end_min - start_min);
      double v = std::sin(kPi * frac);
      switch (kind) {
        case sky::DayKind::Clear:
          v *= 1.0 - 0.04 * std::abs(wobble(frac));
          break;
        case sky::DayKind::PartiallyCloudy: {
          double att = 1.0 - 0.08 * std::abs(wobble(frac));
          for (const CloudDip& dip : dips) {
            const double u = (frac - dip.center) / dip.width;
            att *= 1.0 - dip.depth * std::exp(-u * u);
          }
          v *= std::max(att, 0.03);
          break;
        }
        case sky::DayKind::Cloudy:
          v *= std::clamp(base_attenuation + 0.05 * slow(frac), 0.08, 0.40);
          break;
      }
      ghi[static_cast<std::size_t>(s)] = std::max(v, 0.0);
    }

    // Scale the profile so the clearness index of the daylight slice equals
    // the target; classification downstream integrates the same slice.
    const std::size_t first_step = static_cast<std::size_t>(start_min / res);
    const std::size_t last_step = static_cast<std::size_t>(end_min / res);
    std::vector<double> daylight(ghi.begin() + static_cast<long>(first_step),
                                 ghi.begin() + static_cast<long>(last_step));
    const double current = sky::daily_insolation_kwh(daylight, res);
    if (current <= 0.0) continue;
    const double scale = kt_target * h0 / current;
    for (double& v : ghi) v *= scale;
    for (double& v : daylight) v *= scale;
    const double peak = *std::max_element(ghi.begin(), ghi.end());
    if (peak > 1450.0) continue;  // unphysical draw, resample

    const sky::DayClass check = sky::classify_day(sky::daily_insolation_kwh(daylight, res), h0);
    if (check.kind != kind) continue;

    // weather and plant output
    const double t_base = seasonal_base_temp(doy);
    SmoothNoise t_noise(rng);
    SmoothNoise w_noise(rng);
    SmoothNoise h_noise(rng);
    SmoothNoise p_noise(rng);
    double hum_base = 45.0;
    double diurnal_amp = 6.0;
    if (kind == sky::DayKind::PartiallyCloudy) {
      hum_base = 65.0;
      diurnal_amp = 4.5;
    } else if (kind == sky::DayKind::Cloudy) {
      hum_base = 80.0;
      diurnal_amp = 3.0;
    }

    std::vector<dataio::SampleRecord> records;
    records.reserve(static_cast<std::size_t>(steps));
    for (int s = 0; s < steps; ++s) {
      const int minute = s * res;
      const double day_frac = minute / 1440.0;
      dataio::SampleRecord r;
      r.timestamp = dataio::minutes_at(date, 0, 0) + minute;

      const double si = ghi[static_cast<std::size_t>(s)];
      // afternoon-peaked diurnal temperature
      const double temp = t_base + diurnal_amp * std::sin(2.0 * kPi * (day_frac - 0.375)) +
                          1.2 * t_noise(day_frac);
      const double wind = std::max(0.0, 3.0 + 1.8 * w_noise(day_frac));
      const double hum = std::clamp(hum_base + 8.0 * h_noise(day_frac) - 0.15 * (temp - t_base), 5.0, 100.0);

      r.ghi_wm2 = si;
      r.temp_c = temp;
      r.wind_ms = wind;
      r.humidity_pct = hum;

      if (minute < start_min || minute >= end_min) {
        r.pv_kw = 0.0;
      } else {
        const double tx = cell_temperature(temp, si, config.plant.noct_c);
        const double watts = pv_power(si, tx, config.plant);
        r.pv_kw = std::max(0.0, watts / 1000.0 * (1.0 + 0.015 * p_noise(day_frac)));
      }
      records.push_back(r);
    }
    return records;
  }

  throw Error(Error::Kind::Generation,
              "could not realize a " + sky::to_string(kind) + " day at " + dataio::format_date(date));
}

dataio::Dataset generate_year(const SynthConfig& config) {
  constexpr int kWindowDays = 30;
  constexpr int kWindows = 12;

  std::vector<sky::DayKind> kinds;
  kinds.reserve(kWindows * kWindowDays);
  for (int w = 0; w < kWindows; ++w) {
    const std::array<int, 3> counts = window_day_counts(config.composition[static_cast<std::size_t>(w)], kWindowDays);
    std::vector<sky::DayKind> window;
    window.insert(window.end(), counts[0], sky::DayKind::Clear);
    window.insert(window.end(), counts[1], sky::DayKind::PartiallyCloudy);
    window.insert(window.end(), counts[2], sky::DayKind::Cloudy);
    // Fisher-Yates with a window-derived stream
    Rng rng(derive_seed(config.seed, {2, static_cast<std::uint64_t>(w)}));
    for (std::size_t i = window.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(window[i - 1], window[j]);
    }
    kinds.insert(kinds.end(), window.begin(), window.end());
  }

  const std::size_t n_days = kinds.size();
  std::vector<std::vector<dataio::SampleRecord>> per_day(n_days);
  parallel_for(n_days, config.jobs, [&](std::size_t d) {
    const dataio::Date date = dataio::add_days(config.start_date, static_cast<int>(d));
    per_day[d] = generate_day(date, kinds[d], config);
  });

  std::vector<dataio::SampleRecord> records;
  records.reserve(n_days * static_cast<std::size_t>(1440 / config.resolution_minutes));
  for (auto& day : per_day) records.insert(records.end(), day.begin(), day.end());
  return dataio::make_dataset(std::move(records), config.resolution_minutes, config.daylight);
}

}  // namespace pvcast::physics
