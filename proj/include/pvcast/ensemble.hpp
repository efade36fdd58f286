#pragma once

// Neural network ensemble: n_structures x models_per_structure feedforward
// members, one sub-network per wavelet component each, trained with LM or
// PSO per structure, combined per forecast step by an alpha-trimmed mean.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pvcast/dataio.hpp"
#include "pvcast/neural.hpp"
#include "pvcast/pso.hpp"
#include "pvcast/wavelet.hpp"

namespace pvcast::ensemble {

enum class Trainer { LM, PSO };

struct EnsembleConfig {
  int n_structures = 5;
  int models_per_structure = 20;
  std::vector<int> hidden_schedule = {10, 15, 20, 25, 30};
  std::map<int, Trainer> trainer_split = {
      {1, Trainer::LM}, {2, Trainer::LM}, {3, Trainer::PSO}, {4, Trainer::PSO}, {5, Trainer::PSO},
  };  // 1-based structure index
  std::vector<double> alpha_candidates = {0, 10, 20, 30, 40, 50};
  std::uint64_t base_seed = 42;

  int total_members() const { return n_structures * models_per_structure; }
};

struct TrainerBudgets {
  neural::LmOptions lm;
  pso::PsoConfig pso;                 // seed is overridden per member/component
  double bp_learning_rate = 0.1;     // baseline BPNN models
  int bp_max_epochs = 2000;
  double bp_tolerance = 1e-6;
};

struct Member {
  int structure = 1;  // 1-based
  int index = 0;      // 0-based within structure
  bool usable = false;
  std::vector<neural::Network> nets;  // one per wavelet component
  std::string failure;
};

struct EnsembleModel {
  EnsembleConfig config;
  wavelet::WaveletSpec wspec;
  wavelet::Extension extension = wavelet::Extension::Symmetric;
  dataio::LagConfig lag;
  int horizon_steps = 0;
  int resolution_minutes = 0;
  dataio::DaylightWindow daylight;
  double peak_kw = 0.0;
  std::vector<Member> members;
  std::vector<dataio::Normalization> norms;  // per component
  double alpha = 0.0;

  int n_components() const { return wspec.levels + 1; }
  int usable_members() const;
};

struct MemberForecastMatrix {
  Matrix values;                 // usable members x horizon steps, kW
  std::vector<int> member_rows;  // member index per row
};

// member (s, m) gets hidden size hidden_schedule[s-1] and per-component
// init seeds derived from (base_seed, s, m, component)
EnsembleModel build_ensemble(const EnsembleConfig& config, int n_features, int n_components);

// Trains every member sub-network with the trainer assigned to its
// structure. Individual failures mark the member unusable; more than half
// failing is an error carrying the diagnostics.
void train_ensemble(EnsembleModel& model, const std::vector<dataio::PatternSet>& patterns,
                    const TrainerBudgets& budgets, int jobs);

// day_inputs: per component, horizon x features, already normalized with
// the model's stored normalization
MemberForecastMatrix predict_members(const EnsembleModel& model,
                                     const std::vector<Matrix>& day_inputs, int jobs);

// NN_trim = 2 floor(alpha N / 200); drops NN_trim/2 from each end of the
// sorted values and averages the survivors in ascending order
double trim_aggregate(std::span<const double> member_values, double alpha);

// candidate with minimal validation MAPE (peak-normalized); ties go to the
// smaller alpha
double select_alpha(const std::vector<MemberForecastMatrix>& validation_forecasts,
                    const std::vector<std::vector<double>>& validation_actuals, double peak_kw,
                    const std::vector<double>& candidates);

struct MetForecast {
  std::vector<double> ghi;
  std::vector<double> temp;
  std::vector<double> wind;
  std::vector<double> humidity;
};

struct DayAheadForecast {
  std::vector<double> aggregate;  // kW per horizon step
  MemberForecastMatrix members;
};

// Full chain for one target day: decompose the lagged history days, build
// and normalize features, run every member, trim-aggregate per step.
DayAheadForecast forecast_day(const EnsembleModel& model, const dataio::DayProfiles& history,
                              const MetForecast& met, const dataio::Date& target_date,
                              int jobs = 1);

// ---- fitting pipeline ----

struct FitOptions {
  wavelet::WaveletSpec wspec = wavelet::WaveletSpec::make("db4", 3);
  wavelet::Extension extension = wavelet::Extension::Symmetric;
  dataio::LagConfig lag;
  int training_days = 21;
  int validation_days = 3;
  double peak_kw = 0.0;
  TrainerBudgets budgets;
  int jobs = 1;
};

// per-day band series of a day-profile matrix: one n_days x steps matrix
// per component ([A, D1, ...])
std::vector<Matrix> component_matrices(const Matrix& day_series, const wavelet::WaveletSpec& spec,
                                       wavelet::Extension extension, int jobs);

// Trains an ensemble to forecast day `end_day_index` of `days`: patterns
// from the training window before it, alpha from the validation days at the
// window's end.
EnsembleModel fit(const dataio::DayProfiles& days, const std::vector<Matrix>& components,
                  int end_day_index, const EnsembleConfig& config, const FitOptions& options);

nlohmann::json to_json(const EnsembleModel& model);
EnsembleModel model_from_json(const nlohmann::json& j);

std::string to_string(Trainer trainer);
Trainer trainer_from_string(const std::string& name);

}  // namespace pvcast::ensemble
