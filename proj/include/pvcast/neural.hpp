#pragma once

// Feedforward network with hand-rolled forward pass, backprop gradient,
// full-batch gradient descent and Levenberg-Marquardt training. Parameters
// flatten layer-major: for each layer transition the weight matrix row-major,
// then its bias vector.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pvcast/common.hpp"

namespace pvcast::neural {

enum class Activation { Tanh, Linear };

struct NetworkSpec {
  std::vector<int> layer_sizes;  // input, hidden..., output; >= 2 entries
  Activation hidden_activation = Activation::Tanh;
  Activation output_activation = Activation::Linear;
  std::uint64_t seed = 0;
};

struct Network {
  NetworkSpec spec;
  std::vector<Matrix> weights;              // weights[l]: sizes[l+1] x sizes[l]
  std::vector<std::vector<double>> biases;  // biases[l]: sizes[l+1]

  std::size_t parameter_count() const;
  int input_size() const { return spec.layer_sizes.front(); }
  int output_size() const { return spec.layer_sizes.back(); }
};

struct TrainReport {
  enum class Stop { MaxEpochs, Tolerance, Stall };
  int epochs_run = 0;
  double final_mse = 0.0;
  std::vector<double> mse_history;  // entry 0 = pre-training mse, then one per epoch
  Stop terminated_by = Stop::MaxEpochs;
};

// weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero,
// deterministic per spec.seed
Network init_network(const NetworkSpec& spec);

std::vector<double> forward(const Network& net, std::span<const double> input);

// mse = mean over patterns and outputs of squared error
double batch_mse(const Network& net, const Matrix& inputs, const Matrix& targets);

// gradient of batch_mse with respect to the flattened parameters
std::vector<double> gradient(const Network& net, const Matrix& inputs, const Matrix& targets);

std::vector<double> flatten(const Network& net);
void unflatten(Network& net, std::span<const double> params);

std::pair<Network, TrainReport> train_backprop(Network net, const Matrix& inputs,
                                               const Matrix& targets, double learning_rate,
                                               int max_epochs, double tolerance);

struct LmOptions {
  double mu0 = 1e-3;
  double mu_scale = 10.0;
  int max_epochs = 100;
  double tolerance = 1e-6;
  double mu_max = 1e10;
};

std::pair<Network, TrainReport> train_lm(Network net, const Matrix& inputs, const Matrix& targets,
                                         const LmOptions& options);

nlohmann::json to_json(const Network& net);
Network network_from_json(const nlohmann::json& j);

std::string to_string(Activation activation);
Activation activation_from_string(const std::string& name);
std::string to_string(TrainReport::Stop stop);

}  // namespace pvcast::neural
