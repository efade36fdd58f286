#pragma once

// Single-file JSON run configuration. Every field has a default; unknown
// keys are rejected; the effective configuration is echoed into each output
// directory together with a manifest (config hash, seed, input digests).

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "pvcast/ensemble.hpp"
#include "pvcast/evaluation.hpp"
#include "pvcast/physics.hpp"

namespace pvcast::config {

struct RunConfig {
  std::uint64_t seed = 42;
  int jobs = 0;  // 0 = hardware concurrency

  struct Data {
    dataio::CsvSchema schema;
    int resolution_minutes = 60;
    dataio::DaylightWindow daylight;
    int knn_fill_k = 3;
  } data;

  sky::SiteGeometry site;
  physics::PlantParams plant;

  struct Synth {
    dataio::Date start_date{2014, 1, 1};
    std::array<physics::CompositionTarget, 12> composition = physics::default_composition();
  } synth;

  struct Wavelet {
    std::string name = "db4";
    int levels = 3;
    std::string extension = "symmetric";
  } wavelet;

  ensemble::EnsembleConfig ens;

  struct Trainers {
    neural::LmOptions lm;
    pso::PsoConfig pso{.swarm_size = 24, .max_iterations = 100};
    double bp_learning_rate = 0.1;
    int bp_max_epochs = 2000;
    double bp_tolerance = 1e-6;
  } trainers;

  struct Train {
    int training_days = 21;
    int validation_days = 3;
    int day_lags = 2;
  } train;

  struct Evaluation {
    double peak_kw = 0.0;  // 0 = plant rated peak
    int baseline_hidden = 20;
  } evaluation;

  struct Experiments {
    std::vector<int> resolutions = {1, 15, 30, 60};
    std::vector<int> lengths = {30, 60, 90};
  } experiments;

  double resolved_peak_kw() const {
    return evaluation.peak_kw > 0.0 ? evaluation.peak_kw : plant.peak_kw();
  }
};

nlohmann::json to_json(const RunConfig& config);
RunConfig from_json(const nlohmann::json& j);  // rejects unknown keys
RunConfig load_file(const std::string& path);

// ensemble section with base_seed bound to the top-level seed; all
// randomness derives from that one value
ensemble::EnsembleConfig ensemble_config(const RunConfig& config);

physics::SynthConfig synth_config(const RunConfig& config);
ensemble::TrainerBudgets trainer_budgets(const RunConfig& config);
ensemble::FitOptions fit_options(const RunConfig& config);
eval::BenchmarkConfig benchmark_config(const RunConfig& config);

// config_effective.json + manifest.json under out_dir
void write_run_artifacts(const std::string& out_dir, const RunConfig& config,
                         const std::string& command,
                         const std::vector<std::string>& input_paths,
                         const std::vector<std::string>& output_paths);

}  // namespace pvcast::config
