#include "pvcast/config.hpp"

#include <filesystem>

namespace pvcast::config {

namespace {

// every leaf of `candidate` must exist in `reference`
void reject_unknown_keys(const nlohmann::json& candidate, const nlohmann::json& reference,
                         const std::string& path) {
  if (!candidate.is_object()) return;
  if (!reference.is_object()) {
    throw Error(Error::Kind::Config, "unexpected object at " + path);
  }
  for (const auto& [key, value] : candidate.items()) {
    if (!reference.contains(key)) {
      throw Error(Error::Kind::Config, "unknown configuration key '" + path + key + "'");
    }
    reject_unknown_keys(value, reference[key], path + key + ".");
  }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

}  // namespace

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json composition = nlohmann::json::array();
  for (const auto& w : c.synth.composition) {
    composition.push_back({w.clear_pct, w.partial_pct, w.cloudy_pct});
  }
  std::vector<std::string> split;
  for (int s = 1; s <= c.ens.n_structures; ++s) {
    split.push_back(ensemble::to_string(c.ens.trainer_split.at(s)));
  }
  return nlohmann::json{
      {"seed", c.seed},
      {"jobs", c.jobs},
      {"data",
       {
           {"schema",
            {
                {"timestamp", c.data.schema.timestamp},
                {"pv", c.data.schema.pv},
                {"ghi", c.data.schema.ghi},
                {"temp", c.data.schema.temp},
                {"wind", c.data.schema.wind},
                {"humidity", c.data.schema.humidity},
            }},
           {"resolution_minutes", c.data.resolution_minutes},
           {"daylight", {{"start_hour", c.data.daylight.start_hour}, {"end_hour", c.data.daylight.end_hour}}},
           {"knn_fill_k", c.data.knn_fill_k},
       }},
      {"site",
       {
           {"latitude_deg", c.site.latitude_deg},
           {"solar_constant", c.site.solar_constant},
           {"eccentricity_coeff", c.site.eccentricity_coeff},
       }},
      {"plant",
       {
           {"p_stc_w", c.plant.p_stc_w},
           {"gamma_per_c", c.plant.gamma_per_c},
           {"noct_c", c.plant.noct_c},
           {"n_series", c.plant.n_series},
           {"n_parallel", c.plant.n_parallel},
       }},
      {"synth",
       {
           {"start_date", dataio::format_date(c.synth.start_date)},
           {"composition", composition},
       }},
      {"wavelet",
       {
           {"name", c.wavelet.name},
           {"levels", c.wavelet.levels},
           {"extension", c.wavelet.extension},
       }},
      {"ensemble",
       {
           {"n_structures", c.ens.n_structures},
           {"models_per_structure", c.ens.models_per_structure},
           {"hidden_schedule", c.ens.hidden_schedule},
           {"trainer_split", split},
           {"alpha_candidates", c.ens.alpha_candidates},
       }},
      {"trainers",
       {
           {"lm",
            {
                {"mu0", c.trainers.lm.mu0},
                {"mu_scale", c.trainers.lm.mu_scale},
                {"max_epochs", c.trainers.lm.max_epochs},
                {"tolerance", c.trainers.lm.tolerance},
            }},
           {"pso",
            {
                {"swarm_size", c.trainers.pso.swarm_size},
                {"max_iterations", c.trainers.pso.max_iterations},
                {"inertia_start", c.trainers.pso.inertia_start},
                {"inertia_end", c.trainers.pso.inertia_end},
                {"cognitive_c1", c.trainers.pso.cognitive_c1},
                {"social_c2", c.trainers.pso.social_c2},
                {"position_low", c.trainers.pso.position_low},
                {"position_high", c.trainers.pso.position_high},
                {"velocity_clamp", c.trainers.pso.velocity_clamp},
            }},
           {"bp",
            {
                {"learning_rate", c.trainers.bp_learning_rate},
                {"max_epochs", c.trainers.bp_max_epochs},
                {"tolerance", c.trainers.bp_tolerance},
            }},
       }},
      {"train",
       {
           {"training_days", c.train.training_days},
           {"validation_days", c.train.validation_days},
           {"day_lags", c.train.day_lags},
       }},
      {"evaluation",
       {
           {"peak_kw", c.evaluation.peak_kw},
           {"baseline_hidden", c.evaluation.baseline_hidden},
       }},
      {"experiments",
       {
           {"resolutions", c.experiments.resolutions},
           {"lengths", c.experiments.lengths},
       }},
  };
}

RunConfig from_json(const nlohmann::json& j) {
  RunConfig c;
  reject_unknown_keys(j, to_json(c), "");

  read(j, "seed", c.seed);
  read(j, "jobs", c.jobs);

  if (j.contains("data")) {
    const auto& d = j.at("data");
    if (d.contains("schema")) {
      const auto& s = d.at("schema");
      read(s, "timestamp", c.data.schema.timestamp);
      read(s, "pv", c.data.schema.pv);
      read(s, "ghi", c.data.schema.ghi);
      read(s, "temp", c.data.schema.temp);
      read(s, "wind", c.data.schema.wind);
      read(s, "humidity", c.data.schema.humidity);
    }
    read(d, "resolution_minutes", c.data.resolution_minutes);
    if (d.contains("daylight")) {
      read(d.at("daylight"), "start_hour", c.data.daylight.start_hour);
      read(d.at("daylight"), "end_hour", c.data.daylight.end_hour);
    }
    read(d, "knn_fill_k", c.data.knn_fill_k);
  }
  if (j.contains("site")) {
    const auto& s = j.at("site");
    read(s, "latitude_deg", c.site.latitude_deg);
    read(s, "solar_constant", c.site.solar_constant);
    read(s, "eccentricity_coeff", c.site.eccentricity_coeff);
  }
  if (j.contains("plant")) {
    const auto& p = j.at("plant");
    read(p, "p_stc_w", c.plant.p_stc_w);
    read(p, "gamma_per_c", c.plant.gamma_per_c);
    read(p, "noct_c", c.plant.noct_c);
    read(p, "n_series", c.plant.n_series);
    read(p, "n_parallel", c.plant.n_parallel);
  }
  if (j.contains("synth")) {
    const auto& s = j.at("synth");
    if (s.contains("start_date")) c.synth.start_date = dataio::parse_date(s.at("start_date"));
    if (s.contains("composition")) {
      const auto& comp = s.at("composition");
      if (comp.size() != 12) {
        throw Error(Error::Kind::Config, "synth.composition needs 12 windows");
      }
      for (std::size_t w = 0; w < 12; ++w) {
        const auto& t = comp[w];
        if (!t.is_array() || t.size() != 3) {
          throw Error(Error::Kind::Config, "each composition window is [clear, partial, cloudy]");
        }
        c.synth.composition[w] = {t[0].get<double>(), t[1].get<double>(), t[2].get<double>()};
      }
    }
  }
  if (j.contains("wavelet")) {
    const auto& w = j.at("wavelet");
    read(w, "name", c.wavelet.name);
    read(w, "levels", c.wavelet.levels);
    read(w, "extension", c.wavelet.extension);
  }
  if (j.contains("ensemble")) {
    const auto& e = j.at("ensemble");
    read(e, "n_structures", c.ens.n_structures);
    read(e, "models_per_structure", c.ens.models_per_structure);
    read(e, "hidden_schedule", c.ens.hidden_schedule);
    read(e, "alpha_candidates", c.ens.alpha_candidates);
    if (e.contains("trainer_split")) {
      const auto split = e.at("trainer_split").get<std::vector<std::string>>();
      if (split.size() != static_cast<std::size_t>(c.ens.n_structures)) {
        throw Error(Error::Kind::Config, "trainer_split needs one entry per structure");
      }
      c.ens.trainer_split.clear();
      for (std::size_t s = 0; s < split.size(); ++s) {
        c.ens.trainer_split[static_cast<int>(s) + 1] = ensemble::trainer_from_string(split[s]);
      }
    } else if (c.ens.n_structures != 5) {
      throw Error(Error::Kind::Config, "trainer_split required when n_structures != 5");
    }
  }
  if (j.contains("trainers")) {
    const auto& t = j.at("trainers");
    if (t.contains("lm")) {
      const auto& lm = t.at("lm");
      read(lm, "mu0", c.trainers.lm.mu0);
      read(lm, "mu_scale", c.trainers.lm.mu_scale);
      read(lm, "max_epochs", c.trainers.lm.max_epochs);
      read(lm, "tolerance", c.trainers.lm.tolerance);
    }
    if (t.contains("pso")) {
      const auto& p = t.at("pso");
      read(p, "swarm_size", c.trainers.pso.swarm_size);
      read(p, "max_iterations", c.trainers.pso.max_iterations);
      read(p, "inertia_start", c.trainers.pso.inertia_start);
      read(p, "inertia_end", c.trainers.pso.inertia_end);
      read(p, "cognitive_c1", c.trainers.pso.cognitive_c1);
      read(p, "social_c2", c.trainers.pso.social_c2);
      read(p, "position_low", c.trainers.pso.position_low);
      read(p, "position_high", c.trainers.pso.position_high);
      read(p, "velocity_clamp", c.trainers.pso.velocity_clamp);
    }
    if (t.contains("bp")) {
      const auto& b = t.at("bp");
      read(b, "learning_rate", c.trainers.bp_learning_rate);
      read(b, "max_epochs", c.trainers.bp_max_epochs);
      read(b, "tolerance", c.trainers.bp_tolerance);
    }
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    read(t, "training_days", c.train.training_days);
    read(t, "validation_days", c.train.validation_days);
    read(t, "day_lags", c.train.day_lags);
  }
  if (j.contains("evaluation")) {
    const auto& e = j.at("evaluation");
    read(e, "peak_kw", c.evaluation.peak_kw);
    read(e, "baseline_hidden", c.evaluation.baseline_hidden);
  }
  if (j.contains("experiments")) {
    const auto& e = j.at("experiments");
    read(e, "resolutions", c.experiments.resolutions);
    read(e, "lengths", c.experiments.lengths);
  }
  return c;
}

RunConfig load_file(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Error::Kind::Config, "cannot parse config " + path + ": " + e.what());
  }
  return from_json(j);
}

physics::SynthConfig synth_config(const RunConfig& c) {
  physics::SynthConfig s;
  s.site = c.site;
  s.plant = c.plant;
  s.start_date = c.synth.start_date;
  s.composition = c.synth.composition;
  s.resolution_minutes = c.data.resolution_minutes;
  s.daylight = c.data.daylight;
  s.seed = c.seed;
  s.jobs = c.jobs;
  return s;
}

ensemble::TrainerBudgets trainer_budgets(const RunConfig& c) {
  ensemble::TrainerBudgets b;
  b.lm = c.trainers.lm;
  b.pso = c.trainers.pso;
  b.bp_learning_rate = c.trainers.bp_learning_rate;
  b.bp_max_epochs = c.trainers.bp_max_epochs;
  b.bp_tolerance = c.trainers.bp_tolerance;
  return b;
}

ensemble::FitOptions fit_options(const RunConfig& c) {
  ensemble::FitOptions f;
  f.wspec = wavelet::WaveletSpec::make(c.wavelet.name, c.wavelet.levels);
  f.extension = wavelet::extension_from_string(c.wavelet.extension);
  f.lag.day_lags = c.train.day_lags;
  f.training_days = c.train.training_days;
  f.validation_days = c.train.validation_days;
  f.peak_kw = c.resolved_peak_kw();
  f.budgets = trainer_budgets(c);
  f.jobs = c.jobs;
  return f;
}

ensemble::EnsembleConfig ensemble_config(const RunConfig& c) {
  ensemble::EnsembleConfig e = c.ens;
  e.base_seed = c.seed;
  return e;
}

eval::BenchmarkConfig benchmark_config(const RunConfig& c) {
  eval::BenchmarkConfig b;
  b.ens = ensemble_config(c);
  b.fit = fit_options(c);
  b.baseline_hidden = c.evaluation.baseline_hidden;
  b.seed = c.seed;
  b.jobs = c.jobs;
  return b;
}

void write_run_artifacts(const std::string& out_dir, const RunConfig& config,
                         const std::string& command,
                         const std::vector<std::string>& input_paths,
                         const std::vector<std::string>& output_paths) {
  std::filesystem::create_directories(out_dir);
  const std::string effective = to_json(config).dump(2) + "\n";
  write_file_atomic(out_dir + "/config_effective.json", effective);

  nlohmann::json inputs = nlohmann::json::object();
  for (const std::string& p : input_paths) inputs[p] = hex64(fnv1a64_file(p));
  nlohmann::json outputs = nlohmann::json::object();
  for (const std::string& p : output_paths) outputs[p] = hex64(fnv1a64_file(p));

  const nlohmann::json manifest{
      {"format", "pvcast-manifest"},
      {"version", 1},
      {"command", command},
      {"seed", config.seed},
      {"config_hash", hex64(fnv1a64(effective.data(), effective.size()))},
      {"inputs", inputs},
      {"outputs", outputs},
  };
  write_file_atomic(out_dir + "/manifest.json", manifest.dump(2) + "\n");
}

}  // namespace pvcast::config
