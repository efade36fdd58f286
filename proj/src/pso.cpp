#include "pvcast/pso.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pvcast::pso {

namespace {

void check_config(const PsoConfig& c) {
  if (c.swarm_size < 2) throw Error(Error::Kind::Config, "swarm_size must be >= 2");
  if (c.max_iterations < 1) throw Error(Error::Kind::Config, "max_iterations must be >= 1");
  if (!(c.position_low < c.position_high)) {
    throw Error(Error::Kind::Config, "position bounds must satisfy low < high");
  }
  if (!(c.velocity_clamp > 0.0 && c.velocity_clamp <= 1.0)) {
    throw Error(Error::Kind::Config, "velocity_clamp must be in (0, 1]");
  }
}

}  // namespace

PsoResult pso_minimize(const Objective& objective, int dimension, const PsoConfig& config) {
  check_config(config);
  if (dimension < 1) throw Error(Error::Kind::Spec, "objective dimension must be >= 1");

  const auto n = static_cast<std::size_t>(config.swarm_size);
  const auto d = static_cast<std::size_t>(dimension);
  const double span = config.position_high - config.position_low;
  const double v_max = config.velocity_clamp * span;

  Rng rng(config.seed);
  std::vector<std::vector<double>> positions(n, std::vector<double>(d));
  std::vector<std::vector<double>> velocities(n, std::vector<double>(d));
  for (auto& x : positions) {
    for (auto& xi : x) xi = rng.uniform(config.position_low, config.position_high);
  }
  // velocities start uniform within the clamp to keep early exploration alive
  for (auto& v : velocities) {
    for (auto& vi : v) vi = rng.uniform(-v_max, v_max);
  }

  std::vector<double> values(n);
  auto evaluate_all = [&]() {
    parallel_for(n, config.jobs, [&](std::size_t i) {
      const double v = objective(positions[i]);
      if (!std::isfinite(v)) {
        throw Error(Error::Kind::Objective,
                    "non-finite objective value at particle " + std::to_string(i));
      }
      values[i] = v;
    });
  };

  evaluate_all();
  std::vector<std::vector<double>> pbest = positions;
  std::vector<double> pbest_value = values;
  std::size_t g = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (pbest_value[i] < pbest_value[g]) g = i;
  }
  std::vector<double> gbest = pbest[g];
  double gbest_value = pbest_value[g];

  PsoResult result;
  result.value_history.reserve(static_cast<std::size_t>(config.max_iterations) + 1);
  result.value_history.push_back(gbest_value);

  std::vector<double> draws(2 * n * d);
  for (int it = 0; it < config.max_iterations; ++it) {
    const double frac =
        config.max_iterations > 1 ? static_cast<double>(it) / (config.max_iterations - 1) : 0.0;
    const double w = config.inertia_start + (config.inertia_end - config.inertia_start) * frac;

    // draws are consumed before the parallel section; the trajectory cannot
    // depend on evaluation order
    for (auto& r : draws) r = rng.uniform01();

    for (std::size_t i = 0; i < n; ++i) {
      const double* r1 = draws.data() + 2 * i * d;
      const double* r2 = r1 + d;
      for (std::size_t k = 0; k < d; ++k) {
        double v = w * velocities[i][k] +
                   config.cognitive_c1 * r1[k] * (pbest[i][k] - positions[i][k]) +
                   config.social_c2 * r2[k] * (gbest[k] - positions[i][k]);
        v = std::clamp(v, -v_max, v_max);
        velocities[i][k] = v;
        positions[i][k] =
            std::clamp(positions[i][k] + v, config.position_low, config.position_high);
      }
    }

    evaluate_all();
    for (std::size_t i = 0; i < n; ++i) {
      if (values[i] < pbest_value[i]) {
        pbest_value[i] = values[i];
        pbest[i] = positions[i];
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (pbest_value[i] < gbest_value) {
        gbest_value = pbest_value[i];
        gbest = pbest[i];
      }
    }
    result.value_history.push_back(gbest_value);
  }

  result.best_position = std::move(gbest);
  result.best_value = gbest_value;
  return result;
}

std::pair<neural::Network, neural::TrainReport> train_pso(neural::Network net,
                                                          const Matrix& inputs,
                                                          const Matrix& targets,
                                                          const PsoConfig& config) {
  const std::size_t n_params = net.parameter_count();
  if (n_params == 0) throw Error(Error::Kind::Spec, "network has no trainable parameters");
  if (inputs.rows == 0) throw Error(Error::Kind::EmptyInput, "empty pattern set");

  const neural::Network& base = net;
  Objective objective = [&](std::span<const double> position) {
    neural::Network candidate = base;
    neural::unflatten(candidate, position);
    return neural::batch_mse(candidate, inputs, targets);
  };

  PsoResult r = pso_minimize(objective, static_cast<int>(n_params), config);
  neural::unflatten(net, r.best_position);

  neural::TrainReport report;
  report.epochs_run = config.max_iterations;
  report.mse_history = std::move(r.value_history);
  report.final_mse = report.mse_history.back();
  report.terminated_by = neural::TrainReport::Stop::MaxEpochs;
  return {std::move(net), report};
}

}  // namespace pvcast::pso
