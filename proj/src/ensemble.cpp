#include "pvcast/ensemble.hpp"

#include <algorithm>
#include <cmath>

namespace pvcast::ensemble {

namespace {

void check_config(const EnsembleConfig& c) {
  if (c.n_structures < 1 || c.models_per_structure < 1) {
    throw Error(Error::Kind::Config, "ensemble needs at least one structure and one model");
  }
  if (c.hidden_schedule.size() != static_cast<std::size_t>(c.n_structures)) {
    throw Error(Error::Kind::Config, "hidden_schedule length must equal n_structures");
  }
  std::vector<int> sorted = c.hidden_schedule;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] < 1 || (i > 0 && sorted[i] == sorted[i - 1])) {
      throw Error(Error::Kind::Config, "hidden_schedule entries must be distinct and positive");
    }
  }
  for (int s = 1; s <= c.n_structures; ++s) {
    if (!c.trainer_split.contains(s)) {
      throw Error(Error::Kind::Config, "trainer_split missing structure " + std::to_string(s));
    }
  }
  if (c.alpha_candidates.empty()) {
    throw Error(Error::Kind::Config, "alpha_candidates must not be empty");
  }
  for (double a : c.alpha_candidates) {
    if (a < 0.0 || a > 100.0) throw Error(Error::Kind::Config, "alpha candidates must lie in [0,100]");
  }
}

std::vector<double> member_power_profile(const Member& member, const EnsembleModel& model,
                                         const std::vector<Matrix>& day_inputs) {
  const auto horizon = static_cast<std::size_t>(model.horizon_steps);
  std::vector<double> power(horizon, 0.0);
  for (int c = 0; c < model.n_components(); ++c) {
    const Matrix& inputs = day_inputs[static_cast<std::size_t>(c)];
    const auto& scale = model.norms[static_cast<std::size_t>(c)].targets[0];
    const neural::Network& net = member.nets[static_cast<std::size_t>(c)];
    for (std::size_t t = 0; t < horizon; ++t) {
      const std::vector<double> out =
          neural::forward(net, std::span<const double>(inputs.row(t), inputs.cols));
      power[t] += dataio::denormalize_value(out[0], scale);
    }
  }
  for (double& v : power) v = std::max(v, 0.0);
  return power;
}

}  // namespace

int EnsembleModel::usable_members() const {
  int n = 0;
  for (const Member& m : members) n += m.usable ? 1 : 0;
  return n;
}

EnsembleModel build_ensemble(const EnsembleConfig& config, int n_features, int n_components) {
  check_config(config);
  if (n_features < 1 || n_components < 1) {
    throw Error(Error::Kind::Config, "feature and component counts must be positive");
  }
  EnsembleModel model;
  model.config = config;
  for (int s = 1; s <= config.n_structures; ++s) {
    const int hidden = config.hidden_schedule[static_cast<std::size_t>(s - 1)];
    for (int m = 0; m < config.models_per_structure; ++m) {
      Member member;
      member.structure = s;
      member.index = m;
      for (int c = 0; c < n_components; ++c) {
        neural::NetworkSpec spec;
        spec.layer_sizes = {n_features, hidden, 1};
        spec.seed = derive_seed(config.base_seed,
                                {4, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(m),
                                 static_cast<std::uint64_t>(c)});
        member.nets.push_back(neural::init_network(spec));
      }
      model.members.push_back(std::move(member));
    }
  }
  return model;
}

void train_ensemble(EnsembleModel& model, const std::vector<dataio::PatternSet>& patterns,
                    const TrainerBudgets& budgets, int jobs) {
  if (patterns.size() != static_cast<std::size_t>(model.n_components())) {
    throw Error(Error::Kind::Shape, "need one pattern set per wavelet component");
  }
  const std::size_t n_components = patterns.size();
  const std::size_t n_tasks = model.members.size() * n_components;

  struct TaskResult {
    bool ok = false;
    std::string error;
    neural::Network net;
  };
  std::vector<TaskResult> results(n_tasks);

  parallel_for(n_tasks, jobs, [&](std::size_t task) {
    const std::size_t mi = task / n_components;
    const std::size_t ci = task % n_components;
    Member& member = model.members[mi];
    const Trainer trainer = model.config.trainer_split.at(member.structure);
    TaskResult& r = results[task];
    try {
      const dataio::PatternSet& ps = patterns[ci];
      if (trainer == Trainer::LM) {
        auto [net, report] = neural::train_lm(member.nets[ci], ps.inputs, ps.targets, budgets.lm);
        (void)report;
        r.net = std::move(net);
      } else {
        pso::PsoConfig cfg = budgets.pso;
        cfg.seed = derive_seed(model.config.base_seed,
                               {3, static_cast<std::uint64_t>(member.structure),
                                static_cast<std::uint64_t>(member.index),
                                static_cast<std::uint64_t>(ci)});
        cfg.jobs = 1;  // parallelism lives at the task level
        auto [net, report] = pso::train_pso(member.nets[ci], ps.inputs, ps.targets, cfg);
        (void)report;
        r.net = std::move(net);
      }
      r.ok = true;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  });

  for (std::size_t mi = 0; mi < model.members.size(); ++mi) {
    Member& member = model.members[mi];
    member.usable = true;
    member.failure.clear();
    for (std::size_t ci = 0; ci < n_components; ++ci) {
      TaskResult& r = results[mi * n_components + ci];
      if (r.ok) {
        member.nets[ci] = std::move(r.net);
      } else {
        member.usable = false;
        member.failure += (member.failure.empty() ? "" : "; ") + r.error;
      }
    }
  }

  const int usable = model.usable_members();
  const int total = static_cast<int>(model.members.size());
  if (usable * 2 < total) {
    std::string diag;
    for (const Member& m : model.members) {
      if (!m.usable) {
        diag += "structure " + std::to_string(m.structure) + " model " + std::to_string(m.index) +
                ": " + m.failure + "\n";
      }
    }
    throw Error(Error::Kind::Divergence,
                "ensemble training failed for " + std::to_string(total - usable) + " of " +
                    std::to_string(total) + " members:\n" + diag);
  }
}

MemberForecastMatrix predict_members(const EnsembleModel& model,
                                     const std::vector<Matrix>& day_inputs, int jobs) {
  if (day_inputs.size() != static_cast<std::size_t>(model.n_components())) {
    throw Error(Error::Kind::Shape, "need one input matrix per wavelet component");
  }
  for (const Matrix& m : day_inputs) {
    if (m.rows != static_cast<std::size_t>(model.horizon_steps)) {
      throw Error(Error::Kind::Shape, "input rows must equal the forecast horizon");
    }
  }

  std::vector<int> usable;
  for (std::size_t i = 0; i < model.members.size(); ++i) {
    if (model.members[i].usable) usable.push_back(static_cast<int>(i));
  }
  if (usable.empty()) throw Error(Error::Kind::Spec, "no usable ensemble members");

  MemberForecastMatrix out;
  out.member_rows = usable;
  out.values = Matrix(usable.size(), static_cast<std::size_t>(model.horizon_steps));
  parallel_for(usable.size(), jobs, [&](std::size_t row) {
    const Member& member = model.members[static_cast<std::size_t>(usable[row])];
    const std::vector<double> profile = member_power_profile(member, model, day_inputs);
    std::copy(profile.begin(), profile.end(), out.values.row(row));
  });
  return out;
}

double trim_aggregate(std::span<const double> member_values, double alpha) {
  const std::size_t n = member_values.size();
  if (n == 0) throw Error(Error::Kind::EmptyInput, "no member values to aggregate");
  if (alpha < 0.0 || alpha > 100.0) throw Error(Error::Kind::Trim, "alpha outside [0,100]");

  const auto trim_total =
      2 * static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n) / 200.0));
  if (trim_total >= n) {
    throw Error(Error::Kind::Trim, "alpha " + std::to_string(alpha) + " trims all " +
                                       std::to_string(n) + " values");
  }

  std::vector<double> sorted(member_values.begin(), member_values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t half = trim_total / 2;
  double sum = 0.0;
  for (std::size_t i = half; i < n - half; ++i) sum += sorted[i];
  return sum / static_cast<double>(n - trim_total);
}

double select_alpha(const std::vector<MemberForecastMatrix>& validation_forecasts,
                    const std::vector<std::vector<double>>& validation_actuals, double peak_kw,
                    const std::vector<double>& candidates) {
  if (candidates.empty()) throw Error(Error::Kind::Config, "no alpha candidates");
  if (validation_forecasts.empty() || validation_forecasts.size() != validation_actuals.size()) {
    throw Error(Error::Kind::Shape, "need matching member forecasts and actuals per validation day");
  }
  if (!(peak_kw > 0.0)) throw Error(Error::Kind::Normalization, "peak power must be positive");

  std::vector<double> order = candidates;
  std::sort(order.begin(), order.end());

  double best_alpha = order.front();
  double best_mape = std::numeric_limits<double>::infinity();
  std::vector<double> column;
  for (double alpha : order) {
    double total = 0.0;
    for (std::size_t d = 0; d < validation_forecasts.size(); ++d) {
      const Matrix& values = validation_forecasts[d].values;
      const auto& actual = validation_actuals[d];
      if (actual.size() != values.cols) {
        throw Error(Error::Kind::Shape, "validation actual length mismatch");
      }
      double sum_abs = 0.0;
      for (std::size_t t = 0; t < values.cols; ++t) {
        column.resize(values.rows);
        for (std::size_t r = 0; r < values.rows; ++r) column[r] = values(r, t);
        sum_abs += std::abs(actual[t] - trim_aggregate(column, alpha)) / peak_kw;
      }
      total += 100.0 * sum_abs / static_cast<double>(values.cols);
    }
    const double mean_mape = total / static_cast<double>(validation_forecasts.size());
    if (mean_mape < best_mape) {
      best_mape = mean_mape;
      best_alpha = alpha;
    }
  }
  return best_alpha;
}

std::vector<Matrix> component_matrices(const Matrix& day_series, const wavelet::WaveletSpec& spec,
                                       wavelet::Extension extension, int jobs) {
  const int n_components = spec.levels + 1;
  std::vector<Matrix> out(static_cast<std::size_t>(n_components),
                          Matrix(day_series.rows, day_series.cols));
  parallel_for(day_series.rows, jobs, [&](std::size_t d) {
    const std::span<const double> row(day_series.row(d), day_series.cols);
    const auto series = wavelet::mra_components(row, spec, extension);
    for (int c = 0; c < n_components; ++c) {
      std::copy(series[static_cast<std::size_t>(c)].begin(),
                series[static_cast<std::size_t>(c)].end(),
                out[static_cast<std::size_t>(c)].row(d));
    }
  });
  return out;
}

namespace {

// Normalized feature matrices (one per component) for forecasting one day.
std::vector<Matrix> day_feature_matrices(const EnsembleModel& model,
                                         const std::vector<Matrix>& components,
                                         const std::vector<int>& lag_day_indices,
                                         const MetForecast& met) {
  const auto horizon = static_cast<std::size_t>(model.horizon_steps);
  if (met.ghi.size() != horizon || met.temp.size() != horizon || met.wind.size() != horizon ||
      met.humidity.size() != horizon) {
    throw Error(Error::Kind::Shape, "met forecast length must equal the horizon");
  }
  const auto n_features = static_cast<std::size_t>(model.lag.day_lags) + 4;
  std::vector<Matrix> out;
  for (int c = 0; c < model.n_components(); ++c) {
    const Matrix& comp = components[static_cast<std::size_t>(c)];
    const auto& scales = model.norms[static_cast<std::size_t>(c)].inputs;
    if (scales.size() != n_features) {
      throw Error(Error::Kind::Shape, "stored normalization width mismatch");
    }
    Matrix rows(horizon, n_features);
    for (std::size_t t = 0; t < horizon; ++t) {
      std::vector<double> lags;
      for (int l = 0; l < model.lag.day_lags; ++l) {
        lags.push_back(comp(static_cast<std::size_t>(lag_day_indices[static_cast<std::size_t>(l)]), t));
      }
      const std::vector<double> raw =
          dataio::assemble_features(lags, met.ghi[t], met.temp[t], met.wind[t], met.humidity[t]);
      for (std::size_t f = 0; f < n_features; ++f) {
        rows(t, f) = dataio::normalize_value(raw[f], scales[f]);
      }
    }
    out.push_back(std::move(rows));
  }
  return out;
}

}  // namespace

DayAheadForecast forecast_day(const EnsembleModel& model, const dataio::DayProfiles& history,
                              const MetForecast& met, const dataio::Date& target_date, int jobs) {
  if (history.steps != model.horizon_steps) {
    throw Error(Error::Kind::Shape, "history step count differs from the model horizon");
  }
  std::vector<int> lag_rows;
  for (int l = 1; l <= model.lag.day_lags; ++l) {
    const int idx = history.day_index_of(dataio::add_days(target_date, -l));
    if (idx < 0) {
      throw Error(Error::Kind::Gap, "history is missing complete day " +
                                        dataio::format_date(dataio::add_days(target_date, -l)));
    }
    lag_rows.push_back(idx);
  }

  // per-component series of just the lag days, stacked in lag order
  Matrix lag_pv(lag_rows.size(), static_cast<std::size_t>(history.steps));
  for (std::size_t l = 0; l < lag_rows.size(); ++l) {
    std::copy(history.pv.row(static_cast<std::size_t>(lag_rows[l])),
              history.pv.row(static_cast<std::size_t>(lag_rows[l])) + history.steps, lag_pv.row(l));
  }
  const std::vector<Matrix> comps = component_matrices(lag_pv, model.wspec, model.extension, 1);
  std::vector<int> lag_indices(lag_rows.size());
  for (std::size_t l = 0; l < lag_rows.size(); ++l) lag_indices[l] = static_cast<int>(l);

  const std::vector<Matrix> features = day_feature_matrices(model, comps, lag_indices, met);
  MemberForecastMatrix members = predict_members(model, features, jobs);

  DayAheadForecast result;
  result.aggregate.resize(static_cast<std::size_t>(model.horizon_steps));
  std::vector<double> column(members.values.rows);
  for (std::size_t t = 0; t < result.aggregate.size(); ++t) {
    for (std::size_t r = 0; r < members.values.rows; ++r) column[r] = members.values(r, t);
    result.aggregate[t] = trim_aggregate(column, model.alpha);
  }
  result.members = std::move(members);
  return result;
}

EnsembleModel fit(const dataio::DayProfiles& days, const std::vector<Matrix>& components,
                  int end_day_index, const EnsembleConfig& config, const FitOptions& options) {
  if (options.training_days < 1 || options.validation_days < 1) {
    throw Error(Error::Kind::Config, "need at least one training and one validation day");
  }
  if (!(options.peak_kw > 0.0)) {
    throw Error(Error::Kind::Normalization, "peak power must be positive");
  }
  const int lags = options.lag.day_lags;
  const int window = options.training_days + options.validation_days;
  const int w0 = end_day_index - window;
  if (w0 < lags || end_day_index > static_cast<int>(days.day_count())) {
    throw Error(Error::Kind::Gap,
                "not enough history: need " + std::to_string(window + lags) + " days before day " +
                    std::to_string(end_day_index));
  }
  // the window plus its lag reach must be consecutive calendar days
  for (int d = w0 - lags + 1; d < end_day_index; ++d) {
    if (!(dataio::add_days(days.dates[static_cast<std::size_t>(d - 1)], 1) ==
          days.dates[static_cast<std::size_t>(d)])) {
      throw Error(Error::Kind::Gap, "training window has a gap before " +
                                        dataio::format_date(days.dates[static_cast<std::size_t>(d)]));
    }
  }

  const int vstart = end_day_index - options.validation_days;
  std::vector<int> train_targets;
  for (int d = w0; d < vstart; ++d) train_targets.push_back(d);

  EnsembleModel model = build_ensemble(config, lags + 4, options.wspec.levels + 1);
  model.wspec = options.wspec;
  model.extension = options.extension;
  model.lag = options.lag;
  model.horizon_steps = days.steps;
  model.resolution_minutes = days.resolution_minutes;
  model.daylight = days.daylight;
  model.peak_kw = options.peak_kw;

  std::vector<dataio::PatternSet> patterns;
  for (int c = 0; c < model.n_components(); ++c) {
    patterns.push_back(dataio::build_patterns(components[static_cast<std::size_t>(c)], days,
                                              train_targets, options.lag));
    model.norms.push_back(patterns.back().normalization);
  }

  train_ensemble(model, patterns, options.budgets, options.jobs);

  // alpha from the held-out validation days
  std::vector<MemberForecastMatrix> val_forecasts;
  std::vector<std::vector<double>> val_actuals;
  for (int d = vstart; d < end_day_index; ++d) {
    std::vector<int> lag_indices;
    for (int l = 1; l <= lags; ++l) lag_indices.push_back(d - l);
    MetForecast met;
    const auto du = static_cast<std::size_t>(d);
    met.ghi.assign(days.ghi.row(du), days.ghi.row(du) + days.steps);
    met.temp.assign(days.temp.row(du), days.temp.row(du) + days.steps);
    met.wind.assign(days.wind.row(du), days.wind.row(du) + days.steps);
    met.humidity.assign(days.humidity.row(du), days.humidity.row(du) + days.steps);
    const std::vector<Matrix> features = day_feature_matrices(model, components, lag_indices, met);
    val_forecasts.push_back(predict_members(model, features, options.jobs));
    val_actuals.emplace_back(days.pv.row(du), days.pv.row(du) + days.steps);
  }
  model.alpha = select_alpha(val_forecasts, val_actuals, options.peak_kw, config.alpha_candidates);
  return model;
}

nlohmann::json to_json(const EnsembleModel& model) {
  nlohmann::json members = nlohmann::json::array();
  for (const Member& m : model.members) {
    nlohmann::json nets = nlohmann::json::array();
    for (const neural::Network& net : m.nets) nets.push_back(neural::to_json(net));
    members.push_back(nlohmann::json{
        {"structure", m.structure},
        {"index", m.index},
        {"usable", m.usable},
        {"failure", m.failure},
        {"nets", nets},
    });
  }
  auto scales_json = [](const std::vector<dataio::FeatureScale>& scales) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : scales) arr.push_back(nlohmann::json{{"lo", s.lo}, {"hi", s.hi}});
    return arr;
  };
  nlohmann::json norms = nlohmann::json::array();
  for (const auto& n : model.norms) {
    norms.push_back(nlohmann::json{{"inputs", scales_json(n.inputs)}, {"targets", scales_json(n.targets)}});
  }
  nlohmann::json split = nlohmann::json::object();
  for (const auto& [s, t] : model.config.trainer_split) split[std::to_string(s)] = to_string(t);
  return nlohmann::json{
      {"format", "pvcast-ensemble"},
      {"version", 1},
      {"config",
       {
           {"n_structures", model.config.n_structures},
           {"models_per_structure", model.config.models_per_structure},
           {"hidden_schedule", model.config.hidden_schedule},
           {"trainer_split", split},
           {"alpha_candidates", model.config.alpha_candidates},
           {"base_seed", model.config.base_seed},
       }},
      {"wavelet", {{"name", model.wspec.name}, {"levels", model.wspec.levels}}},
      {"extension", wavelet::to_string(model.extension)},
      {"day_lags", model.lag.day_lags},
      {"horizon_steps", model.horizon_steps},
      {"resolution_minutes", model.resolution_minutes},
      {"daylight", {{"start_hour", model.daylight.start_hour}, {"end_hour", model.daylight.end_hour}}},
      {"peak_kw", model.peak_kw},
      {"alpha", model.alpha},
      {"normalization", norms},
      {"members", members},
  };
}

EnsembleModel model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "pvcast-ensemble" || j.value("version", 0) != 1) {
    throw Error(Error::Kind::Schema, "not a version-1 pvcast-ensemble document");
  }
  EnsembleModel model;
  const auto& cfg = j.at("config");
  model.config.n_structures = cfg.at("n_structures").get<int>();
  model.config.models_per_structure = cfg.at("models_per_structure").get<int>();
  model.config.hidden_schedule = cfg.at("hidden_schedule").get<std::vector<int>>();
  model.config.alpha_candidates = cfg.at("alpha_candidates").get<std::vector<double>>();
  model.config.base_seed = cfg.at("base_seed").get<std::uint64_t>();
  model.config.trainer_split.clear();
  for (const auto& [key, value] : cfg.at("trainer_split").items()) {
    model.config.trainer_split[std::stoi(key)] = trainer_from_string(value.get<std::string>());
  }
  model.wspec = wavelet::WaveletSpec::make(j.at("wavelet").at("name").get<std::string>(),
                                           j.at("wavelet").at("levels").get<int>());
  model.extension = wavelet::extension_from_string(j.at("extension").get<std::string>());
  model.lag.day_lags = j.at("day_lags").get<int>();
  model.horizon_steps = j.at("horizon_steps").get<int>();
  model.resolution_minutes = j.at("resolution_minutes").get<int>();
  model.daylight.start_hour = j.at("daylight").at("start_hour").get<int>();
  model.daylight.end_hour = j.at("daylight").at("end_hour").get<int>();
  model.peak_kw = j.at("peak_kw").get<double>();
  model.alpha = j.at("alpha").get<double>();
  for (const auto& n : j.at("normalization")) {
    dataio::Normalization norm;
    for (const auto& s : n.at("inputs")) {
      norm.inputs.push_back({s.at("lo").get<double>(), s.at("hi").get<double>()});
    }
    for (const auto& s : n.at("targets")) {
      norm.targets.push_back({s.at("lo").get<double>(), s.at("hi").get<double>()});
    }
    model.norms.push_back(std::move(norm));
  }
  for (const auto& mj : j.at("members")) {
    Member m;
    m.structure = mj.at("structure").get<int>();
    m.index = mj.at("index").get<int>();
    m.usable = mj.at("usable").get<bool>();
    m.failure = mj.at("failure").get<std::string>();
    for (const auto& nj : mj.at("nets")) m.nets.push_back(neural::network_from_json(nj));
    model.members.push_back(std::move(m));
  }
  return model;
}

std::string to_string(Trainer trainer) { return trainer == Trainer::LM ? "lm" : "pso"; }

Trainer trainer_from_string(const std::string& name) {
  if (name == "lm") return Trainer::LM;
  if (name == "pso") return Trainer::PSO;
  throw Error(Error::Kind::Config, "unknown trainer '" + name + "'");
}

}  // namespace pvcast::ensemble
