#pragma once

// Canonical global-best particle swarm over real vectors. Per-iteration
// velocity draws are pre-generated from one stream, and objective
// evaluations write to per-particle slots, so results are identical for
// any jobs value.

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "pvcast/common.hpp"
#include "pvcast/neural.hpp"

namespace pvcast::pso {

struct PsoConfig {
  int swarm_size = 30;
  int max_iterations = 200;
  double inertia_start = 0.9;
  double inertia_end = 0.4;
  double cognitive_c1 = 2.0;
  double social_c2 = 2.0;
  double position_low = -5.0;
  double position_high = 5.0;
  double velocity_clamp = 0.2;  // fraction of the bound span
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct PsoResult {
  std::vector<double> best_position;
  double best_value = 0.0;
  std::vector<double> value_history;  // global best after init, then per iteration
};

using Objective = std::function<double(std::span<const double>)>;

PsoResult pso_minimize(const Objective& objective, int dimension, const PsoConfig& config);

// objective = batch mse of the network with parameters taken from the
// particle position (shared flattening order with the neural module)
std::pair<neural::Network, neural::TrainReport> train_pso(neural::Network net,
                                                          const Matrix& inputs,
                                                          const Matrix& targets,
                                                          const PsoConfig& config);

}  // namespace pvcast::pso
