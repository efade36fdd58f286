// pvcast command line: synthesize data, ingest, classify days, train the
// ensemble, forecast, run the M1..M6 benchmark and the training-data
// experiments.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

#include "pvcast/config.hpp"

namespace {

using namespace pvcast;

struct CommonArgs {
  std::string config_path;
  std::int64_t seed = -1;
  int jobs = -1;
  int resolution = 0;
};

config::RunConfig resolve_config(const CommonArgs& args) {
  config::RunConfig cfg =
      args.config_path.empty() ? config::RunConfig{} : config::load_file(args.config_path);
  if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
  if (args.jobs >= 0) cfg.jobs = args.jobs;
  if (args.resolution > 0) cfg.data.resolution_minutes = args.resolution;
  return cfg;
}

std::string parent_dir(const std::string& path) {
  const std::filesystem::path p(path);
  const auto dir = p.parent_path();
  return dir.empty() ? std::string(".") : dir.string();
}

dataio::Dataset load_dataset_csv(const std::string& path, const config::RunConfig& cfg) {
  std::istringstream in(read_file(path));
  std::vector<dataio::SampleRecord> records = dataio::parse_records(in, cfg.data.schema);
  if (records.size() < 2) throw Error(Error::Kind::EmptyInput, "need at least two records");
  const int res = static_cast<int>(records[1].timestamp - records[0].timestamp);
  return dataio::make_dataset(std::move(records), res, cfg.data.daylight);
}

ensemble::MetForecast met_of_day(const dataio::DayProfiles& days, int index) {
  const auto du = static_cast<std::size_t>(index);
  ensemble::MetForecast met;
  met.ghi.assign(days.ghi.row(du), days.ghi.row(du) + days.steps);
  met.temp.assign(days.temp.row(du), days.temp.row(du) + days.steps);
  met.wind.assign(days.wind.row(du), days.wind.row(du) + days.steps);
  met.humidity.assign(days.humidity.row(du), days.humidity.row(du) + days.steps);
  return met;
}

std::string forecast_csv(const dataio::Date& date, const dataio::DaylightWindow& window,
                         int resolution, const std::vector<double>& profile) {
  std::string out = "timestamp,forecast_kw\n";
  char buf[64];
  for (std::size_t t = 0; t < profile.size(); ++t) {
    const std::int64_t ts = dataio::minutes_at(date, window.start_hour, 0) +
                            static_cast<std::int64_t>(t) * resolution;
    std::snprintf(buf, sizeof(buf), "%s,%.6f\n", dataio::format_timestamp(ts).c_str(), profile[t]);
    out += buf;
  }
  return out;
}

std::string members_csv(const ensemble::EnsembleModel& model,
                        const ensemble::MemberForecastMatrix& members) {
  std::string out = "member,structure,model";
  for (std::size_t t = 0; t < members.values.cols; ++t) out += ",t" + std::to_string(t);
  out += "\n";
  char buf[32];
  for (std::size_t r = 0; r < members.values.rows; ++r) {
    const ensemble::Member& m = model.members[static_cast<std::size_t>(members.member_rows[r])];
    out += std::to_string(members.member_rows[r]) + "," + std::to_string(m.structure) + "," +
           std::to_string(m.index);
    for (std::size_t t = 0; t < members.values.cols; ++t) {
      std::snprintf(buf, sizeof(buf), ",%.6f", members.values(r, t));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

// clear days from summer, winter and spring with enough history
std::vector<dataio::Date> default_experiment_days(const dataio::DayProfiles& days,
                                                  const sky::SiteGeometry& site,
                                                  int min_history) {
  const std::vector<sky::DayClass> classes = sky::classify_profiles(days, site);
  std::vector<dataio::Date> out;
  for (const char* season : {"Su", "W", "Sp"}) {
    int found = -1;
    for (int d = static_cast<int>(days.day_count()) - 1; d >= min_history; --d) {
      if (classes[static_cast<std::size_t>(d)].kind == sky::DayKind::Clear &&
          eval::season_of_day_offset(d) == season) {
        found = d;
        break;
      }
    }
    if (found < 0) {
      throw Error(Error::Kind::Gap, std::string("no clear day with history in season ") + season);
    }
    out.push_back(days.dates[static_cast<std::size_t>(found)]);
  }
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"day-ahead solar PV forecasting toolkit"};
  app.require_subcommand(1);

  CommonArgs common;
  app.add_option("--config", common.config_path, "JSON configuration file");
  app.add_option("--seed", common.seed, "override the configured seed");
  app.add_option("--jobs", common.jobs, "parallel jobs (0 = hardware)");

  std::string in_path, out_path, model_path, members_path, day_text;

  auto* synth = app.add_subcommand("synth", "generate a synthetic year of plant data");
  synth->add_option("--out", out_path, "output CSV")->required();
  synth->add_option("--resolution", common.resolution, "sample resolution in minutes");

  auto* ingest = app.add_subcommand("ingest", "parse, clean and resample a CSV");
  ingest->add_option("--in", in_path, "input CSV")->required();
  ingest->add_option("--out", out_path, "output CSV")->required();
  ingest->add_option("--resolution", common.resolution, "target resolution in minutes");

  auto* classify = app.add_subcommand("classify", "clearness-index day classification");
  classify->add_option("--in", in_path, "input CSV")->required();
  classify->add_option("--out", out_path, "classification CSV")->required();

  auto* train = app.add_subcommand("train", "train the forecasting ensemble");
  train->add_option("--in", in_path, "input CSV")->required();
  train->add_option("--out", out_path, "model JSON")->required();
  train->add_option("--day", day_text, "target day (window ends before it; default: day after data)");

  auto* forecast = app.add_subcommand("forecast", "day-ahead forecast with a trained model");
  forecast->add_option("--model", model_path, "model JSON")->required();
  forecast->add_option("--in", in_path, "input CSV with history and target-day weather")->required();
  forecast->add_option("--day", day_text, "target day YYYY-MM-DD")->required();
  forecast->add_option("--out", out_path, "forecast CSV")->required();
  forecast->add_option("--members", members_path, "also write the per-member matrix CSV");

  auto* evaluate = app.add_subcommand("evaluate", "M1..M6 benchmark on season/kind test days");
  evaluate->add_option("--in", in_path, "input CSV")->required();
  evaluate->add_option("--out", out_path, "output directory")->required();

  auto* exp_res = app.add_subcommand("experiment-resolution", "training-resolution sweep");
  exp_res->add_option("--in", in_path, "input CSV at the finest resolution")->required();
  exp_res->add_option("--out", out_path, "output directory")->required();

  auto* exp_len = app.add_subcommand("experiment-length", "training-length sweep");
  exp_len->add_option("--in", in_path, "input CSV")->required();
  exp_len->add_option("--out", out_path, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  const config::RunConfig cfg = resolve_config(common);

  if (synth->parsed()) {
    const dataio::Dataset ds = physics::generate_year(config::synth_config(cfg));
    write_file_atomic(out_path, dataio::to_csv(ds, cfg.data.schema));
    config::write_run_artifacts(parent_dir(out_path), cfg, "synth", {}, {out_path});
    std::cout << "wrote " << ds.size() << " records to " << out_path << "\n";
    return 0;
  }

  if (ingest->parsed()) {
    dataio::Dataset ds = load_dataset_csv(in_path, cfg);
    ds = dataio::apply_night_zero(ds);
    ds = dataio::reconstruct_missing(ds, cfg.data.knn_fill_k);
    const int target = common.resolution > 0 ? common.resolution : ds.resolution_minutes;
    ds = dataio::resample(ds, target);
    write_file_atomic(out_path, dataio::to_csv(ds, cfg.data.schema));
    config::write_run_artifacts(parent_dir(out_path), cfg, "ingest", {in_path}, {out_path});
    std::cout << "wrote " << ds.size() << " records at " << ds.resolution_minutes << " min to "
              << out_path << "\n";
    return 0;
  }

  if (classify->parsed()) {
    const dataio::Dataset ds = load_dataset_csv(in_path, cfg);
    const dataio::DayProfiles days = dataio::extract_daylight(ds);
    const std::vector<sky::DayClass> classes = sky::classify_profiles(days, cfg.site);
    write_file_atomic(out_path, sky::classification_csv(days.dates, classes));

    const auto comp = sky::season_composition(classes, 30);
    nlohmann::json windows = nlohmann::json::array();
    for (const auto& w : comp) {
      windows.push_back({{"window_days", w.window_days},
                         {"clear_pct", w.clear_pct},
                         {"partial_pct", w.partial_pct},
                         {"cloudy_pct", w.cloudy_pct},
                         {"partial_window", w.partial_window}});
    }
    const std::string comp_path = parent_dir(out_path) + "/composition.json";
    write_file_atomic(comp_path, windows.dump(2) + "\n");
    config::write_run_artifacts(parent_dir(out_path), cfg, "classify", {in_path},
                                {out_path, comp_path});
    std::cout << "classified " << classes.size() << " days to " << out_path << "\n";
    return 0;
  }

  if (train->parsed()) {
    const dataio::Dataset ds = load_dataset_csv(in_path, cfg);
    const dataio::DayProfiles days = dataio::extract_daylight(ds);
    int end_index;
    if (day_text.empty()) {
      end_index = static_cast<int>(days.day_count());
    } else {
      end_index = days.day_index_of(dataio::parse_date(day_text));
      if (end_index < 0) {
        throw Error(Error::Kind::Gap, "day " + day_text + " not present in the dataset");
      }
    }
    const ensemble::FitOptions opts = config::fit_options(cfg);
    const std::vector<Matrix> comps =
        ensemble::component_matrices(days.pv, opts.wspec, opts.extension, cfg.jobs);
    const ensemble::EnsembleModel model = ensemble::fit(days, comps, end_index, cfg.ens, opts);
    write_file_atomic(out_path, ensemble::to_json(model).dump() + "\n");
    config::write_run_artifacts(parent_dir(out_path), cfg, "train", {in_path}, {out_path});
    std::cout << "trained " << model.usable_members() << "/" << model.members.size()
              << " members, alpha = " << model.alpha << ", model at " << out_path << "\n";
    return 0;
  }

  if (forecast->parsed()) {
    const dataio::Dataset ds = load_dataset_csv(in_path, cfg);
    const dataio::DayProfiles days = dataio::extract_daylight(ds);
    const ensemble::EnsembleModel model =
        ensemble::model_from_json(nlohmann::json::parse(read_file(model_path)));
    const dataio::Date day = dataio::parse_date(day_text);
    const int index = days.day_index_of(day);
    if (index < 0) {
      throw Error(Error::Kind::Gap, "no weather rows for " + day_text + " in the dataset");
    }
    const ensemble::DayAheadForecast fc =
        ensemble::forecast_day(model, days, met_of_day(days, index), day, cfg.jobs);
    write_file_atomic(out_path,
                      forecast_csv(day, model.daylight, model.resolution_minutes, fc.aggregate));
    std::vector<std::string> outputs = {out_path};
    if (!members_path.empty()) {
      write_file_atomic(members_path, members_csv(model, fc.members));
      outputs.push_back(members_path);
    }
    config::write_run_artifacts(parent_dir(out_path), cfg, "forecast", {in_path, model_path},
                                outputs);
    std::cout << "forecast for " << day_text << " written to " << out_path << "\n";
    return 0;
  }

  if (evaluate->parsed()) {
    const dataio::Dataset ds = load_dataset_csv(in_path, cfg);
    const dataio::DayProfiles days = dataio::extract_daylight(ds);
    const std::vector<sky::DayClass> classes = sky::classify_profiles(days, cfg.site);
    const eval::BenchmarkConfig bench = config::benchmark_config(cfg);
    const int min_history =
        bench.fit.training_days + bench.fit.validation_days + bench.fit.lag.day_lags;
    const std::vector<eval::TestDay> test_days =
        eval::select_test_days(days, classes, min_history);
    const eval::BenchmarkReport report = eval::run_benchmarks(days, test_days, bench);

    std::filesystem::create_directories(out_path);
    write_file_atomic(out_path + "/benchmark.csv", eval::benchmark_csv(report));
    write_file_atomic(out_path + "/benchmark_variance.csv", eval::benchmark_variance_csv(report));
    write_file_atomic(out_path + "/benchmark_long.csv", eval::benchmark_long_csv(report));
    write_file_atomic(out_path + "/summary.json", eval::benchmark_summary(report).dump(2) + "\n");
    config::write_run_artifacts(out_path, cfg, "evaluate", {in_path},
                                {out_path + "/benchmark.csv", out_path + "/summary.json"});
    std::cout << eval::benchmark_csv(report);
    return 0;
  }

  if (exp_res->parsed()) {
    const dataio::Dataset base = load_dataset_csv(in_path, cfg);
    eval::BenchmarkConfig bench = config::benchmark_config(cfg);
    const int min_history =
        bench.fit.training_days + bench.fit.validation_days + bench.fit.lag.day_lags;
    const dataio::DayProfiles coarse =
        dataio::extract_daylight(dataio::resample(base, cfg.experiments.resolutions.back()));
    const std::vector<dataio::Date> days =
        default_experiment_days(coarse, cfg.site, min_history);
    const auto results =
        eval::experiment_resolution(base, cfg.experiments.resolutions, days, bench);

    std::filesystem::create_directories(out_path);
    std::string csv = "resolution_minutes,r_squared,mape\n";
    nlohmann::json jout = nlohmann::json::array();
    char buf[96];
    for (const auto& r : results) {
      std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f\n", r.resolution_minutes, r.r2, r.mape);
      csv += buf;
      jout.push_back({{"resolution_minutes", r.resolution_minutes}, {"r2", r.r2}, {"mape", r.mape}});
    }
    write_file_atomic(out_path + "/resolution.csv", csv);
    write_file_atomic(out_path + "/resolution.json", jout.dump(2) + "\n");
    config::write_run_artifacts(out_path, cfg, "experiment-resolution", {in_path},
                                {out_path + "/resolution.csv"});
    std::cout << csv;
    return 0;
  }

  if (exp_len->parsed()) {
    const dataio::Dataset ds = load_dataset_csv(in_path, cfg);
    const dataio::DayProfiles days = dataio::extract_daylight(ds);
    eval::BenchmarkConfig bench = config::benchmark_config(cfg);
    const int max_len =
        *std::max_element(cfg.experiments.lengths.begin(), cfg.experiments.lengths.end());
    const std::vector<dataio::Date> test_dates =
        default_experiment_days(days, cfg.site, max_len + bench.fit.lag.day_lags);
    const auto results = eval::experiment_length(days, cfg.experiments.lengths, test_dates, bench);

    std::filesystem::create_directories(out_path);
    std::string csv = "date,training_days,mape\n";
    nlohmann::json jout = nlohmann::json::array();
    char buf[96];
    for (const auto& r : results) {
      std::snprintf(buf, sizeof(buf), "%s,%d,%.6f\n", dataio::format_date(r.date).c_str(),
                    r.training_days, r.mape);
      csv += buf;
      jout.push_back({{"date", dataio::format_date(r.date)},
                      {"training_days", r.training_days},
                      {"mape", r.mape}});
    }
    write_file_atomic(out_path + "/length.csv", csv);
    write_file_atomic(out_path + "/length.json", jout.dump(2) + "\n");
    config::write_run_artifacts(out_path, cfg, "experiment-length", {in_path},
                                {out_path + "/length.csv"});
    std::cout << csv;
    return 0;
  }

  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const pvcast::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
