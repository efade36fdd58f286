#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "pvcast/ensemble.hpp"
#include "pvcast/physics.hpp"

using namespace pvcast;
using namespace pvcast::ensemble;

namespace {

// independent sort-slice-mean oracle, same canonical ascending summation
double trim_oracle(std::vector<double> values, double alpha) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  const auto cut = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n) / 200.0));
  double sum = 0.0;
  std::size_t kept = 0;
  for (std::size_t i = cut; i < n - cut; ++i) {
    sum += values[i];
    ++kept;
  }
  return sum / static_cast<double>(kept);
}

dataio::DayProfiles synth_profiles(int n_days, std::uint64_t seed, int resolution = 60) {
  physics::SynthConfig cfg;
  cfg.seed = seed;
  cfg.resolution_minutes = resolution;
  std::vector<dataio::SampleRecord> records;
  Rng rng(seed);
  for (int d = 0; d < n_days; ++d) {
    const double u = rng.uniform01();
    const sky::DayKind kind = u < 0.7 ? sky::DayKind::Clear
                              : (u < 0.9 ? sky::DayKind::PartiallyCloudy : sky::DayKind::Cloudy);
    const auto day = physics::generate_day(dataio::add_days({2014, 5, 1}, d), kind, cfg);
    records.insert(records.end(), day.begin(), day.end());
  }
  return dataio::extract_daylight(
      dataio::make_dataset(std::move(records), resolution, cfg.daylight));
}

EnsembleConfig tiny_config(std::uint64_t seed) {
  EnsembleConfig cfg;
  cfg.n_structures = 2;
  cfg.models_per_structure = 2;
  cfg.hidden_schedule = {4, 6};
  cfg.trainer_split = {{1, Trainer::LM}, {2, Trainer::PSO}};
  cfg.base_seed = seed;
  return cfg;
}

FitOptions tiny_fit(double peak) {
  FitOptions opts;
  opts.training_days = 8;
  opts.validation_days = 2;
  opts.peak_kw = peak;
  opts.budgets.lm.max_epochs = 30;
  opts.budgets.pso.swarm_size = 10;
  opts.budgets.pso.max_iterations = 25;
  opts.jobs = 2;
  return opts;
}

}  // namespace

TEST_CASE("trim_aggregate: hand cases") {
  // alpha = 0 is the plain (ascending-summed) mean
  const std::vector<double> v = {3.0, 1.0, 2.0, 4.0};
  CHECK(trim_aggregate(v, 0.0) == 2.5);

  // N = 100, alpha = 10: drop 5 from each end, average the middle 90
  std::vector<double> big(100);
  for (std::size_t i = 0; i < 100; ++i) big[i] = static_cast<double>(i);
  double expect = 0.0;
  for (std::size_t i = 5; i < 95; ++i) expect += static_cast<double>(i);
  expect /= 90.0;
  CHECK(trim_aggregate(big, 10.0) == doctest::Approx(expect).epsilon(1e-15));

  // {1,2,3,100} at alpha 50 -> mean of {2,3}
  CHECK(trim_aggregate(std::vector<double>{1, 2, 3, 100}, 50.0) == 2.5);

  // single value survives any feasible alpha
  CHECK(trim_aggregate(std::vector<double>{42.0}, 95.0) == 42.0);

  CHECK_THROWS_AS(trim_aggregate(std::vector<double>{1.0, 2.0}, 100.0), Error);
  CHECK_THROWS_AS(trim_aggregate(std::vector<double>{}, 0.0), Error);
  CHECK_THROWS_AS(trim_aggregate(v, -1.0), Error);
}

TEST_CASE("trim_aggregate equals the brute-force oracle on 10000 random cases") {
  Rng rng(55);
  for (int rep = 0; rep < 10000; ++rep) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(1, 200));
    const double alpha = rng.uniform(0.0, 95.0);
    std::vector<double> values(n);
    for (double& v : values) v = rng.uniform(-100.0, 100.0);
    REQUIRE(trim_aggregate(values, alpha) == trim_oracle(values, alpha));
  }
}

TEST_CASE("trim_aggregate: permutation invariance and range bounds") {
  Rng rng(56);
  for (int rep = 0; rep < 200; ++rep) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(2, 50));
    const double alpha = rng.uniform(0.0, 90.0);
    std::vector<double> values(n);
    for (double& v : values) v = rng.uniform(-10.0, 10.0);
    const double direct = trim_aggregate(values, alpha);

    std::vector<double> shuffled = values;
    for (std::size_t i = shuffled.size(); i > 1; --i) {
      std::swap(shuffled[i - 1],
                shuffled[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    }
    CHECK(trim_aggregate(shuffled, alpha) == direct);

    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    CHECK(direct >= *lo);
    CHECK(direct <= *hi);
  }
}

TEST_CASE("trim_aggregate excises outliers exactly on the fixture") {
  // k good members at v plus a few extremes: enough trimming returns v
  std::vector<double> values(20, 7.25);
  values[0] = -1000.0;
  values[1] = 500.0;
  values[2] = 900.0;
  CHECK(trim_aggregate(values, 40.0) == 7.25);
}

TEST_CASE("build_ensemble: schedule, determinism, degenerate single member") {
  EnsembleConfig cfg;  // defaults: 5 structures x 20 models
  const EnsembleModel model = build_ensemble(cfg, 6, 4);
  REQUIRE(model.members.size() == 100);
  int hidden_counts[5] = {0, 0, 0, 0, 0};
  for (const Member& m : model.members) {
    REQUIRE(m.nets.size() == 4);
    const int hidden = m.nets[0].spec.layer_sizes[1];
    for (int s = 0; s < 5; ++s) {
      if (hidden == cfg.hidden_schedule[static_cast<std::size_t>(s)]) hidden_counts[s]++;
    }
  }
  for (int c : hidden_counts) CHECK(c == 20);

  const EnsembleModel again = build_ensemble(cfg, 6, 4);
  for (std::size_t i = 0; i < model.members.size(); ++i) {
    CHECK(model.members[i].nets[0].weights[0] == again.members[i].nets[0].weights[0]);
  }

  EnsembleConfig single;
  single.n_structures = 1;
  single.models_per_structure = 1;
  single.hidden_schedule = {8};
  single.trainer_split = {{1, Trainer::LM}};
  CHECK(build_ensemble(single, 6, 4).members.size() == 1);

  EnsembleConfig bad;
  bad.hidden_schedule = {10, 10, 20, 25, 30};
  CHECK_THROWS_AS(build_ensemble(bad, 6, 4), Error);
  EnsembleConfig short_schedule;
  short_schedule.hidden_schedule = {10, 15};
  CHECK_THROWS_AS(build_ensemble(short_schedule, 6, 4), Error);
}

TEST_CASE("select_alpha: singleton, exact tie, outlier fixture") {
  const std::size_t horizon = 5;
  std::vector<double> actual = {10, 20, 30, 20, 10};

  // members equal to the actual: every candidate gives zero error, smallest wins
  MemberForecastMatrix exact;
  exact.values = Matrix(8, horizon);
  for (std::size_t r = 0; r < 8; ++r) {
    for (std::size_t t = 0; t < horizon; ++t) exact.values(r, t) = actual[t];
  }
  exact.member_rows.resize(8);
  CHECK(select_alpha({exact}, {actual}, 100.0, {30.0, 0.0, 10.0}) == 0.0);
  CHECK(select_alpha({exact}, {actual}, 100.0, {40.0}) == 40.0);

  // 19 accurate members and 1 wild outlier: trimming must engage
  MemberForecastMatrix noisy;
  noisy.values = Matrix(20, horizon);
  Rng rng(3);
  for (std::size_t r = 0; r < 20; ++r) {
    for (std::size_t t = 0; t < horizon; ++t) {
      noisy.values(r, t) = actual[t] + 0.05 * rng.normal();
    }
  }
  for (std::size_t t = 0; t < horizon; ++t) noisy.values(7, t) = 95.0;  // broken member
  const double alpha = select_alpha({noisy}, {actual}, 100.0, {0, 10, 20, 30, 40, 50});
  CHECK(alpha >= 10.0);

  CHECK_THROWS_AS(select_alpha({noisy}, {actual}, 100.0, {}), Error);
  CHECK_THROWS_AS(select_alpha({}, {}, 100.0, {0.0}), Error);
}

TEST_CASE("fit + forecast on synthetic days: members, alpha, aggregate sanity") {
  const dataio::DayProfiles days = synth_profiles(13, 101);
  const double peak = physics::PlantParams{}.peak_kw();
  const FitOptions opts = tiny_fit(peak);
  const std::vector<Matrix> comps =
      component_matrices(days.pv, opts.wspec, opts.extension, 2);

  const int target = static_cast<int>(days.day_count()) - 1;
  const EnsembleModel model = fit(days, comps, target, tiny_config(7), opts);
  CHECK(model.usable_members() == 4);
  CHECK(model.horizon_steps == days.steps);
  CHECK(std::find(model.config.alpha_candidates.begin(), model.config.alpha_candidates.end(),
                  model.alpha) != model.config.alpha_candidates.end());

  ensemble::MetForecast met;
  const auto du = static_cast<std::size_t>(target);
  met.ghi.assign(days.ghi.row(du), days.ghi.row(du) + days.steps);
  met.temp.assign(days.temp.row(du), days.temp.row(du) + days.steps);
  met.wind.assign(days.wind.row(du), days.wind.row(du) + days.steps);
  met.humidity.assign(days.humidity.row(du), days.humidity.row(du) + days.steps);

  const DayAheadForecast fc = forecast_day(model, days, met, days.dates[du], 2);
  REQUIRE(fc.aggregate.size() == static_cast<std::size_t>(days.steps));
  REQUIRE(fc.members.values.rows == 4);
  for (double v : fc.aggregate) {
    CHECK(v >= 0.0);
    CHECK(v <= 2.0 * peak);
  }
  // aggregate stays inside the member envelope per step
  for (std::size_t t = 0; t < fc.aggregate.size(); ++t) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t r = 0; r < fc.members.values.rows; ++r) {
      lo = std::min(lo, fc.members.values(r, t));
      hi = std::max(hi, fc.members.values(r, t));
    }
    CHECK(fc.aggregate[t] >= lo - 1e-9);
    CHECK(fc.aggregate[t] <= hi + 1e-9);
  }

  // missing history is a gap error
  CHECK_THROWS_AS(forecast_day(model, days, met, {2031, 1, 1}, 1), Error);
}

TEST_CASE("training and prediction are schedule-independent") {
  const dataio::DayProfiles days = synth_profiles(13, 202);
  const double peak = physics::PlantParams{}.peak_kw();
  FitOptions serial = tiny_fit(peak);
  serial.jobs = 1;
  FitOptions parallel = tiny_fit(peak);
  parallel.jobs = 2;
  const std::vector<Matrix> comps =
      component_matrices(days.pv, serial.wspec, serial.extension, 1);

  const int target = static_cast<int>(days.day_count()) - 1;
  const EnsembleModel a = fit(days, comps, target, tiny_config(9), serial);
  const EnsembleModel b = fit(days, comps, target, tiny_config(9), parallel);

  CHECK(a.alpha == b.alpha);
  REQUIRE(a.members.size() == b.members.size());
  for (std::size_t i = 0; i < a.members.size(); ++i) {
    for (std::size_t c = 0; c < a.members[i].nets.size(); ++c) {
      CHECK(a.members[i].nets[c].weights[0] == b.members[i].nets[c].weights[0]);
      CHECK(a.members[i].nets[c].weights[1] == b.members[i].nets[c].weights[1]);
      CHECK(a.members[i].nets[c].biases == b.members[i].nets[c].biases);
    }
  }
}

TEST_CASE("single-member ensemble aggregate equals that member") {
  const dataio::DayProfiles days = synth_profiles(13, 303);
  const double peak = physics::PlantParams{}.peak_kw();
  EnsembleConfig cfg;
  cfg.n_structures = 1;
  cfg.models_per_structure = 1;
  cfg.hidden_schedule = {6};
  cfg.trainer_split = {{1, Trainer::LM}};
  cfg.base_seed = 77;
  FitOptions opts = tiny_fit(peak);

  const std::vector<Matrix> comps =
      component_matrices(days.pv, opts.wspec, opts.extension, 1);
  const int target = static_cast<int>(days.day_count()) - 1;
  const EnsembleModel model = fit(days, comps, target, cfg, opts);

  ensemble::MetForecast met;
  const auto du = static_cast<std::size_t>(target);
  met.ghi.assign(days.ghi.row(du), days.ghi.row(du) + days.steps);
  met.temp.assign(days.temp.row(du), days.temp.row(du) + days.steps);
  met.wind.assign(days.wind.row(du), days.wind.row(du) + days.steps);
  met.humidity.assign(days.humidity.row(du), days.humidity.row(du) + days.steps);
  const DayAheadForecast fc = forecast_day(model, days, met, days.dates[du], 1);
  for (std::size_t t = 0; t < fc.aggregate.size(); ++t) {
    CHECK(fc.aggregate[t] == fc.members.values(0, t));
  }
}

TEST_CASE("model json bundle round-trips and rejects foreign documents") {
  const dataio::DayProfiles days = synth_profiles(13, 404);
  const double peak = physics::PlantParams{}.peak_kw();
  const FitOptions opts = tiny_fit(peak);
  const std::vector<Matrix> comps =
      component_matrices(days.pv, opts.wspec, opts.extension, 2);
  const int target = static_cast<int>(days.day_count()) - 1;
  const EnsembleModel model = fit(days, comps, target, tiny_config(11), opts);

  const nlohmann::json j = to_json(model);
  const EnsembleModel back = model_from_json(j);
  CHECK(back.alpha == model.alpha);
  CHECK(back.horizon_steps == model.horizon_steps);
  CHECK(back.norms.size() == model.norms.size());
  REQUIRE(back.members.size() == model.members.size());
  for (std::size_t i = 0; i < model.members.size(); ++i) {
    CHECK(back.members[i].nets[0].weights[0] == model.members[i].nets[0].weights[0]);
  }

  // identical forecasts after the round trip
  ensemble::MetForecast met;
  const auto du = static_cast<std::size_t>(target);
  met.ghi.assign(days.ghi.row(du), days.ghi.row(du) + days.steps);
  met.temp.assign(days.temp.row(du), days.temp.row(du) + days.steps);
  met.wind.assign(days.wind.row(du), days.wind.row(du) + days.steps);
  met.humidity.assign(days.humidity.row(du), days.humidity.row(du) + days.steps);
  const auto fa = forecast_day(model, days, met, days.dates[du], 1);
  const auto fb = forecast_day(back, days, met, days.dates[du], 1);
  CHECK(fa.aggregate == fb.aggregate);

  nlohmann::json foreign = j;
  foreign["format"] = "something-else";
  CHECK_THROWS_AS(model_from_json(foreign), Error);
}

TEST_CASE("predict_members rejects mismatched shapes") {
  EnsembleConfig cfg = tiny_config(1);
  EnsembleModel model = build_ensemble(cfg, 6, 4);
  model.horizon_steps = 10;
  std::vector<Matrix> wrong(4, Matrix(3, 6));
  CHECK_THROWS_AS(predict_members(model, wrong, 1), Error);
}
