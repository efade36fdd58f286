#pragma once

// Forecast accuracy metrics and the M1..M6 benchmark matrix: persistence,
// BPNN, FNN+PSO, WT+BPNN, WT+FNN+PSO and the proposed ensemble, evaluated
// on season/kind test days.

#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pvcast/ensemble.hpp"
#include "pvcast/sky.hpp"

namespace pvcast::eval {

// (100/FH) sum |actual - forecast| / peak
double mape(std::span<const double> actual, std::span<const double> forecast, double peak);

// population variance of the signed per-step errors (actual-forecast)/peak
double error_variance(std::span<const double> actual, std::span<const double> forecast,
                      double peak);

// 1 - SS_res / SS_tot about the actual mean
double r_squared(std::span<const double> actual, std::span<const double> forecast);

// previous day's profile copied forward
std::vector<double> persistence_forecast(const dataio::DayProfiles& days, int target_day_index);

struct TestDay {
  dataio::Date date;
  std::string season;  // Su / Au / W / Sp
  sky::DayKind kind = sky::DayKind::Clear;
  int day_index = -1;
};

// season of a 0-based day offset inside the 360-day synthetic layout
std::string season_of_window(int window_index);
std::string season_of_day_offset(int day_offset);

// Latest day of each (season, kind) pair with at least min_history_days
// complete preceding days; errors when a pair has no qualifying day.
std::vector<TestDay> select_test_days(const dataio::DayProfiles& days,
                                      const std::vector<sky::DayClass>& classes,
                                      int min_history_days);

struct ModelOutcome {
  bool ok = false;
  std::string error;
  std::vector<double> forecast;
  double mape = std::numeric_limits<double>::quiet_NaN();
  double variance = std::numeric_limits<double>::quiet_NaN();
  double r2 = std::numeric_limits<double>::quiet_NaN();
};

ModelOutcome evaluate_outcome(const std::vector<double>& actual,
                              std::vector<double> forecast, double peak);

struct BenchmarkRow {
  TestDay day;
  std::map<std::string, ModelOutcome> models;  // M1..M6
  double avg_member_mape = std::numeric_limits<double>::quiet_NaN();
  double selected_alpha = std::numeric_limits<double>::quiet_NaN();
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;
  std::map<std::string, double> average_mape;  // per model over rows where it succeeded
  double average_member_mape = std::numeric_limits<double>::quiet_NaN();
  double wall_seconds = 0.0;
};

struct BenchmarkConfig {
  ensemble::EnsembleConfig ens;
  ensemble::FitOptions fit;  // budgets, wavelet, lags, window sizes, peak
  int baseline_hidden = 20;
  std::uint64_t seed = 42;
  int jobs = 1;
};

BenchmarkReport run_benchmarks(const dataio::DayProfiles& days,
                               const std::vector<TestDay>& test_days,
                               const BenchmarkConfig& config);

std::string benchmark_csv(const BenchmarkReport& report);        // season,day,M1..M6 (MAPE)
std::string benchmark_variance_csv(const BenchmarkReport& report);
std::string benchmark_long_csv(const BenchmarkReport& report);   // plot-ready long format
nlohmann::json benchmark_summary(const BenchmarkReport& report);

// ---- training-data experiments ----

struct ResolutionResult {
  int resolution_minutes = 0;
  double r2 = std::numeric_limits<double>::quiet_NaN();
  double mape = std::numeric_limits<double>::quiet_NaN();
};

// resamples `base` to each resolution, refits the ensemble and pools R^2
// across the test days
std::vector<ResolutionResult> experiment_resolution(const dataio::Dataset& base,
                                                    const std::vector<int>& resolutions,
                                                    const std::vector<dataio::Date>& test_dates,
                                                    const BenchmarkConfig& config);

struct LengthResult {
  dataio::Date date;
  int training_days = 0;
  double mape = std::numeric_limits<double>::quiet_NaN();
};

std::vector<LengthResult> experiment_length(const dataio::DayProfiles& days,
                                            const std::vector<int>& lengths,
                                            const std::vector<dataio::Date>& test_dates,
                                            const BenchmarkConfig& config);

}  // namespace pvcast::eval
