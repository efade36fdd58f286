#include "pvcast/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

namespace pvcast::eval {

namespace {

void check_pair(std::span<const double> actual, std::span<const double> forecast, double peak) {
  if (actual.size() != forecast.size()) {
    throw Error(Error::Kind::Shape, "actual and forecast lengths differ");
  }
  if (actual.empty()) throw Error(Error::Kind::EmptyInput, "empty series");
  if (!(peak > 0.0)) throw Error(Error::Kind::Normalization, "peak power must be positive");
}

const char* kModelIds[6] = {"M1", "M2", "M3", "M4", "M5", "M6"};

std::string fmt(double v) {
  if (std::isnan(v)) return "failed";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// single-network baselines ----------------------------------------------

std::vector<double> baseline_forecast_raw(const dataio::DayProfiles& days, int target_day,
                                          const std::vector<int>& train_targets,
                                          const dataio::LagConfig& lag, int hidden,
                                          bool use_pso, const ensemble::TrainerBudgets& budgets,
                                          std::uint64_t seed) {
  const dataio::PatternSet ps = dataio::build_patterns(days.pv, days, train_targets, lag);

  neural::NetworkSpec spec;
  spec.layer_sizes = {lag.day_lags + 4, hidden, 1};
  spec.seed = seed;
  neural::Network net = neural::init_network(spec);
  if (use_pso) {
    pso::PsoConfig cfg = budgets.pso;
    cfg.seed = derive_seed(seed, {11});
    cfg.jobs = 1;
    net = pso::train_pso(std::move(net), ps.inputs, ps.targets, cfg).first;
  } else {
    net = neural::train_backprop(std::move(net), ps.inputs, ps.targets, budgets.bp_learning_rate,
                                 budgets.bp_max_epochs, budgets.bp_tolerance)
              .first;
  }

  const auto du = static_cast<std::size_t>(target_day);
  std::vector<double> forecast(static_cast<std::size_t>(days.steps));
  for (int t = 0; t < days.steps; ++t) {
    const auto tu = static_cast<std::size_t>(t);
    std::vector<double> lags;
    for (int l = 1; l <= lag.day_lags; ++l) {
      lags.push_back(days.pv(du - static_cast<std::size_t>(l), tu));
    }
    const auto raw = dataio::assemble_features(lags, days.ghi(du, tu), days.temp(du, tu),
                                               days.wind(du, tu), days.humidity(du, tu));
    const auto norm = dataio::normalize_row(raw, ps.normalization.inputs);
    const double out = neural::forward(net, norm)[0];
    forecast[tu] = std::max(0.0, dataio::denormalize_value(out, ps.normalization.targets[0]));
  }
  return forecast;
}

std::vector<double> baseline_forecast_wt(const dataio::DayProfiles& days,
                                         const std::vector<Matrix>& components, int target_day,
                                         const std::vector<int>& train_targets,
                                         const dataio::LagConfig& lag, int hidden, bool use_pso,
                                         const ensemble::TrainerBudgets& budgets,
                                         std::uint64_t seed) {
  const auto du = static_cast<std::size_t>(target_day);
  std::vector<double> forecast(static_cast<std::size_t>(days.steps), 0.0);

  for (std::size_t c = 0; c < components.size(); ++c) {
    const dataio::PatternSet ps = dataio::build_patterns(components[c], days, train_targets, lag);

    neural::NetworkSpec spec;
    spec.layer_sizes = {lag.day_lags + 4, hidden, 1};
    spec.seed = derive_seed(seed, {12, c});
    neural::Network net = neural::init_network(spec);
    if (use_pso) {
      pso::PsoConfig cfg = budgets.pso;
      cfg.seed = derive_seed(seed, {13, c});
      cfg.jobs = 1;
      net = pso::train_pso(std::move(net), ps.inputs, ps.targets, cfg).first;
    } else {
      net = neural::train_backprop(std::move(net), ps.inputs, ps.targets, budgets.bp_learning_rate,
                                   budgets.bp_max_epochs, budgets.bp_tolerance)
                .first;
    }

    for (int t = 0; t < days.steps; ++t) {
      const auto tu = static_cast<std::size_t>(t);
      std::vector<double> lags;
      for (int l = 1; l <= lag.day_lags; ++l) {
        lags.push_back(components[c](du - static_cast<std::size_t>(l), tu));
      }
      const auto raw = dataio::assemble_features(lags, days.ghi(du, tu), days.temp(du, tu),
                                                 days.wind(du, tu), days.humidity(du, tu));
      const auto norm = dataio::normalize_row(raw, ps.normalization.inputs);
      const double out = neural::forward(net, norm)[0];
      forecast[tu] += dataio::denormalize_value(out, ps.normalization.targets[0]);
    }
  }
  for (double& v : forecast) v = std::max(v, 0.0);
  return forecast;
}

}  // namespace

double mape(std::span<const double> actual, std::span<const double> forecast, double peak) {
  check_pair(actual, forecast, peak);
  double sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    sum += std::abs(actual[i] - forecast[i]) / peak;
  }
  return 100.0 * sum / static_cast<double>(actual.size());
}

double error_variance(std::span<const double> actual, std::span<const double> forecast,
                      double peak) {
  check_pair(actual, forecast, peak);
  const auto n = static_cast<double>(actual.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) mean += (actual[i] - forecast[i]) / peak;
  mean /= n;
  double var = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double e = (actual[i] - forecast[i]) / peak - mean;
    var += e * e;
  }
  return var / n;
}

double r_squared(std::span<const double> actual, std::span<const double> forecast) {
  if (actual.size() != forecast.size()) {
    throw Error(Error::Kind::Shape, "actual and forecast lengths differ");
  }
  if (actual.size() < 2) {
    throw Error(Error::Kind::DegenerateVariance, "need at least two samples");
  }
  double mean = 0.0;
  for (double a : actual) mean += a;
  mean /= static_cast<double>(actual.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ss_res += (actual[i] - forecast[i]) * (actual[i] - forecast[i]);
    ss_tot += (actual[i] - mean) * (actual[i] - mean);
  }
  if (ss_tot == 0.0) {
    throw Error(Error::Kind::DegenerateVariance, "constant actual series");
  }
  return 1.0 - ss_res / ss_tot;
}

std::vector<double> persistence_forecast(const dataio::DayProfiles& days, int target_day_index) {
  if (target_day_index < 1 || target_day_index >= static_cast<int>(days.day_count())) {
    throw Error(Error::Kind::Gap, "no previous day for persistence forecast");
  }
  const auto prev = static_cast<std::size_t>(target_day_index - 1);
  if (!(dataio::add_days(days.dates[prev], 1) ==
        days.dates[static_cast<std::size_t>(target_day_index)])) {
    throw Error(Error::Kind::Gap,
                "previous day missing before " +
                    dataio::format_date(days.dates[static_cast<std::size_t>(target_day_index)]));
  }
  return {days.pv.row(prev), days.pv.row(prev) + days.steps};
}

std::string season_of_window(int window_index) {
  if (window_index < 2) return "Su";
  if (window_index < 5) return "Au";
  if (window_index < 8) return "W";
  if (window_index < 11) return "Sp";
  return "Su";
}

std::string season_of_day_offset(int day_offset) { return season_of_window(day_offset / 30); }

std::vector<TestDay> select_test_days(const dataio::DayProfiles& days,
                                      const std::vector<sky::DayClass>& classes,
                                      int min_history_days) {
  if (classes.size() != days.day_count()) {
    throw Error(Error::Kind::Shape, "need one class per day");
  }
  const char* seasons[4] = {"Su", "Au", "W", "Sp"};
  const sky::DayKind kinds[3] = {sky::DayKind::Clear, sky::DayKind::PartiallyCloudy,
                                 sky::DayKind::Cloudy};
  std::vector<TestDay> out;
  for (const char* season : seasons) {
    for (sky::DayKind kind : kinds) {
      int found = -1;
      for (int d = static_cast<int>(days.day_count()) - 1; d >= min_history_days; --d) {
        if (classes[static_cast<std::size_t>(d)].kind != kind) continue;
        if (season_of_day_offset(d) != season) continue;
        found = d;
        break;
      }
      if (found < 0) {
        throw Error(Error::Kind::Gap, std::string("no ") + sky::to_string(kind) + " day in season " +
                                          season + " with enough history");
      }
      out.push_back(TestDay{days.dates[static_cast<std::size_t>(found)], season, kind, found});
    }
  }
  return out;
}

ModelOutcome evaluate_outcome(const std::vector<double>& actual, std::vector<double> forecast,
                              double peak) {
  ModelOutcome o;
  o.forecast = std::move(forecast);
  o.mape = mape(actual, o.forecast, peak);
  o.variance = error_variance(actual, o.forecast, peak);
  try {
    o.r2 = r_squared(actual, o.forecast);
  } catch (const Error&) {
    // constant actual day; R^2 undefined but MAPE/variance stand
  }
  o.ok = true;
  return o;
}

BenchmarkReport run_benchmarks(const dataio::DayProfiles& days,
                               const std::vector<TestDay>& test_days,
                               const BenchmarkConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();

  const std::vector<Matrix> components =
      ensemble::component_matrices(days.pv, config.fit.wspec, config.fit.extension, config.jobs);

  BenchmarkReport report;
  for (std::size_t ti = 0; ti < test_days.size(); ++ti) {
    const TestDay& td = test_days[ti];
    BenchmarkRow row;
    row.day = td;
    const int d = td.day_index;
    if (d < 0 || d >= static_cast<int>(days.day_count())) {
      throw Error(Error::Kind::Gap, "test day not present in profiles");
    }
    const auto du = static_cast<std::size_t>(d);
    const std::vector<double> actual(days.pv.row(du), days.pv.row(du) + days.steps);

    const int window = config.fit.training_days + config.fit.validation_days;
    std::vector<int> train_targets;
    for (int t = d - window; t < d - config.fit.validation_days; ++t) train_targets.push_back(t);
    const dataio::LagConfig lag = config.fit.lag;
    const std::uint64_t day_seed = derive_seed(config.seed, {20, static_cast<std::uint64_t>(ti)});

    auto run_model = [&](const std::string& id, auto&& fn) {
      try {
        row.models[id] = evaluate_outcome(actual, fn(), config.fit.peak_kw);
      } catch (const std::exception& e) {
        ModelOutcome o;
        o.error = e.what();
        row.models[id] = std::move(o);
      }
    };

    run_model("M1", [&] { return persistence_forecast(days, d); });
    run_model("M2", [&] {
      return baseline_forecast_raw(days, d, train_targets, lag, config.baseline_hidden, false,
                                   config.fit.budgets, derive_seed(day_seed, {2}));
    });
    run_model("M3", [&] {
      return baseline_forecast_raw(days, d, train_targets, lag, config.baseline_hidden, true,
                                   config.fit.budgets, derive_seed(day_seed, {3}));
    });
    run_model("M4", [&] {
      return baseline_forecast_wt(days, components, d, train_targets, lag, config.baseline_hidden,
                                  false, config.fit.budgets, derive_seed(day_seed, {4}));
    });
    run_model("M5", [&] {
      return baseline_forecast_wt(days, components, d, train_targets, lag, config.baseline_hidden,
                                  true, config.fit.budgets, derive_seed(day_seed, {5}));
    });
    run_model("M6", [&] {
      ensemble::EnsembleConfig ens = config.ens;
      ens.base_seed = derive_seed(day_seed, {6});
      ensemble::FitOptions fit_opts = config.fit;
      fit_opts.jobs = config.jobs;
      const ensemble::EnsembleModel model = ensemble::fit(days, components, d, ens, fit_opts);
      row.selected_alpha = model.alpha;

      ensemble::MetForecast met;
      met.ghi.assign(days.ghi.row(du), days.ghi.row(du) + days.steps);
      met.temp.assign(days.temp.row(du), days.temp.row(du) + days.steps);
      met.wind.assign(days.wind.row(du), days.wind.row(du) + days.steps);
      met.humidity.assign(days.humidity.row(du), days.humidity.row(du) + days.steps);
      const ensemble::DayAheadForecast fc =
          ensemble::forecast_day(model, days, met, td.date, config.jobs);

      double member_total = 0.0;
      for (std::size_t r = 0; r < fc.members.values.rows; ++r) {
        const std::vector<double> member(fc.members.values.row(r),
                                         fc.members.values.row(r) + days.steps);
        member_total += mape(actual, member, config.fit.peak_kw);
      }
      row.avg_member_mape = member_total / static_cast<double>(fc.members.values.rows);
      return fc.aggregate;
    });

    report.rows.push_back(std::move(row));
  }

  // column averages over succeeded rows
  for (const char* id : kModelIds) {
    double sum = 0.0;
    int n = 0;
    for (const BenchmarkRow& row : report.rows) {
      const auto it = row.models.find(id);
      if (it != row.models.end() && it->second.ok) {
        sum += it->second.mape;
        ++n;
      }
    }
    if (n > 0) report.average_mape[id] = sum / n;
  }
  {
    double sum = 0.0;
    int n = 0;
    for (const BenchmarkRow& row : report.rows) {
      if (!std::isnan(row.avg_member_mape)) {
        sum += row.avg_member_mape;
        ++n;
      }
    }
    if (n > 0) report.average_member_mape = sum / n;
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::string benchmark_csv(const BenchmarkReport& report) {
  std::string out = "season,day,M1,M2,M3,M4,M5,M6\n";
  for (const BenchmarkRow& row : report.rows) {
    out += row.day.season + "," + sky::to_string(row.day.kind);
    for (const char* id : kModelIds) {
      const auto it = row.models.find(id);
      out += "," + (it != row.models.end() && it->second.ok ? fmt(it->second.mape) : "failed");
    }
    out += "\n";
  }
  out += "avg,";
  for (const char* id : kModelIds) {
    const auto it = report.average_mape.find(id);
    out += ",";
    out += it != report.average_mape.end() ? fmt(it->second) : "failed";
  }
  out += "\n";
  return out;
}

std::string benchmark_variance_csv(const BenchmarkReport& report) {
  std::string out = "season,day,M1,M2,M3,M4,M5,M6\n";
  for (const BenchmarkRow& row : report.rows) {
    out += row.day.season + "," + sky::to_string(row.day.kind);
    for (const char* id : kModelIds) {
      const auto it = row.models.find(id);
      out += "," + (it != row.models.end() && it->second.ok ? fmt(it->second.variance) : "failed");
    }
    out += "\n";
  }
  return out;
}

std::string benchmark_long_csv(const BenchmarkReport& report) {
  std::string out = "date,season,day,model,mape,variance,r2\n";
  for (const BenchmarkRow& row : report.rows) {
    for (const char* id : kModelIds) {
      const auto it = row.models.find(id);
      if (it == row.models.end()) continue;
      out += dataio::format_date(row.day.date) + "," + row.day.season + "," +
             sky::to_string(row.day.kind) + "," + id + "," + fmt(it->second.mape) + "," +
             fmt(it->second.variance) + "," + fmt(it->second.r2) + "\n";
    }
  }
  return out;
}

nlohmann::json benchmark_summary(const BenchmarkReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const BenchmarkRow& row : report.rows) {
    nlohmann::json models = nlohmann::json::object();
    for (const auto& [id, o] : row.models) {
      if (o.ok) {
        models[id] = {{"mape", o.mape}, {"variance", o.variance}};
        if (!std::isnan(o.r2)) models[id]["r2"] = o.r2;
      } else {
        models[id] = {{"failed", o.error}};
      }
    }
    nlohmann::json jrow = {
        {"date", dataio::format_date(row.day.date)},
        {"season", row.day.season},
        {"day", sky::to_string(row.day.kind)},
        {"models", models},
    };
    if (!std::isnan(row.avg_member_mape)) jrow["avg_member_mape"] = row.avg_member_mape;
    if (!std::isnan(row.selected_alpha)) jrow["alpha"] = row.selected_alpha;
    rows.push_back(jrow);
  }
  nlohmann::json summary = {
      {"rows", rows},
      {"average_mape", report.average_mape},
      {"wall_seconds", report.wall_seconds},
  };
  if (!std::isnan(report.average_member_mape)) {
    summary["average_member_mape"] = report.average_member_mape;
  }
  return summary;
}

std::vector<ResolutionResult> experiment_resolution(const dataio::Dataset& base,
                                                    const std::vector<int>& resolutions,
                                                    const std::vector<dataio::Date>& test_dates,
                                                    const BenchmarkConfig& config) {
  std::vector<ResolutionResult> out;
  for (int res : resolutions) {
    const dataio::Dataset ds = dataio::resample(base, res);
    const dataio::DayProfiles days = dataio::extract_daylight(ds);
    const std::vector<Matrix> components =
        ensemble::component_matrices(days.pv, config.fit.wspec, config.fit.extension, config.jobs);

    std::vector<double> pooled_actual;
    std::vector<double> pooled_forecast;
    for (const dataio::Date& date : test_dates) {
      const int d = days.day_index_of(date);
      if (d < 0) throw Error(Error::Kind::Gap, "test day " + dataio::format_date(date) + " absent");
      ensemble::EnsembleConfig ens = config.ens;
      ens.base_seed = derive_seed(config.seed, {30, static_cast<std::uint64_t>(res),
                                                static_cast<std::uint64_t>(d)});
      ensemble::FitOptions fit_opts = config.fit;
      fit_opts.jobs = config.jobs;
      const ensemble::EnsembleModel model = ensemble::fit(days, components, d, ens, fit_opts);

      const auto du = static_cast<std::size_t>(d);
      ensemble::MetForecast met;
      met.ghi.assign(days.ghi.row(du), days.ghi.row(du) + days.steps);
      met.temp.assign(days.temp.row(du), days.temp.row(du) + days.steps);
      met.wind.assign(days.wind.row(du), days.wind.row(du) + days.steps);
      met.humidity.assign(days.humidity.row(du), days.humidity.row(du) + days.steps);
      const auto fc = ensemble::forecast_day(model, days, met, date, config.jobs);

      pooled_actual.insert(pooled_actual.end(), days.pv.row(du), days.pv.row(du) + days.steps);
      pooled_forecast.insert(pooled_forecast.end(), fc.aggregate.begin(), fc.aggregate.end());
    }
    ResolutionResult r;
    r.resolution_minutes = res;
    r.r2 = r_squared(pooled_actual, pooled_forecast);
    r.mape = mape(pooled_actual, pooled_forecast, config.fit.peak_kw);
    out.push_back(r);
  }
  return out;
}

std::vector<LengthResult> experiment_length(const dataio::DayProfiles& days,
                                            const std::vector<int>& lengths,
                                            const std::vector<dataio::Date>& test_dates,
                                            const BenchmarkConfig& config) {
  const std::vector<Matrix> components =
      ensemble::component_matrices(days.pv, config.fit.wspec, config.fit.extension, config.jobs);

  std::vector<LengthResult> out;
  for (const dataio::Date& date : test_dates) {
    const int d = days.day_index_of(date);
    if (d < 0) throw Error(Error::Kind::Gap, "test day " + dataio::format_date(date) + " absent");
    const auto du = static_cast<std::size_t>(d);
    const std::vector<double> actual(days.pv.row(du), days.pv.row(du) + days.steps);

    for (int len : lengths) {
      ensemble::EnsembleConfig ens = config.ens;
      ens.base_seed = derive_seed(config.seed, {31, static_cast<std::uint64_t>(len),
                                                static_cast<std::uint64_t>(d)});
      ensemble::FitOptions fit_opts = config.fit;
      fit_opts.training_days = len - fit_opts.validation_days;
      if (fit_opts.training_days < 1) {
        throw Error(Error::Kind::Config, "training length shorter than validation window");
      }
      fit_opts.jobs = config.jobs;
      const ensemble::EnsembleModel model = ensemble::fit(days, components, d, ens, fit_opts);

      ensemble::MetForecast met;
      met.ghi.assign(days.ghi.row(du), days.ghi.row(du) + days.steps);
      met.temp.assign(days.temp.row(du), days.temp.row(du) + days.steps);
      met.wind.assign(days.wind.row(du), days.wind.row(du) + days.steps);
      met.humidity.assign(days.humidity.row(du), days.humidity.row(du) + days.steps);
      const auto fc = ensemble::forecast_day(model, days, met, date, config.jobs);

      LengthResult r;
      r.date = date;
      r.training_days = len;
      r.mape = mape(actual, fc.aggregate, config.fit.peak_kw);
      out.push_back(r);
    }
  }
  return out;
}

}  // namespace pvcast::eval
