#include "pvcast/neural.hpp"

#include <algorithm>
#include <cmath>

namespace pvcast::neural {

namespace {

void check_spec(const NetworkSpec& spec) {
  if (spec.layer_sizes.size() < 2) {
    throw Error(Error::Kind::Spec, "network needs at least input and output layers");
  }
  for (int s : spec.layer_sizes) {
    if (s < 1) throw Error(Error::Kind::Spec, "zero or negative layer size");
  }
}

double activate(Activation a, double x) { return a == Activation::Tanh ? std::tanh(x) : x; }

// derivative expressed through the activated value
double activate_deriv(Activation a, double y) { return a == Activation::Tanh ? 1.0 - y * y : 1.0; }

// Forward pass recording activations per layer; activations[0] is the input.
void forward_layers(const Network& net, std::span<const double> input,
                    std::vector<std::vector<double>>& activations) {
  const auto& sizes = net.spec.layer_sizes;
  const std::size_t n_trans = net.weights.size();
  activations.resize(sizes.size());
  activations[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < n_trans; ++l) {
    const Matrix& w = net.weights[l];
    const auto& b = net.biases[l];
    const auto& prev = activations[l];
    auto& cur = activations[l + 1];
    cur.assign(w.rows, 0.0);
    const Activation act =
        (l + 1 == sizes.size() - 1) ? net.spec.output_activation : net.spec.hidden_activation;
    for (std::size_t r = 0; r < w.rows; ++r) {
      double z = b[r];
      const double* wr = w.row(r);
      for (std::size_t c = 0; c < w.cols; ++c) z += wr[c] * prev[c];
      cur[r] = activate(act, z);
    }
  }
}

// Backpropagates output_seed (d loss / d output) into flat parameter slots.
// Layout per transition: weights row-major, then biases.
void backprop_accumulate(const Network& net, const std::vector<std::vector<double>>& activations,
                         std::span<const double> output_seed, std::span<double> grad) {
  const auto& sizes = net.spec.layer_sizes;
  const std::size_t n_trans = net.weights.size();

  std::vector<double> delta(output_seed.begin(), output_seed.end());
  // seed is w.r.t. the activated output; fold in the output activation derivative
  for (std::size_t r = 0; r < delta.size(); ++r) {
    delta[r] *= activate_deriv(net.spec.output_activation, activations[n_trans][r]);
  }

  std::size_t offset = grad.size();
  std::vector<double> prev_delta;
  for (std::size_t l = n_trans; l-- > 0;) {
    const Matrix& w = net.weights[l];
    offset -= w.rows * w.cols + w.rows;
    double* gw = grad.data() + offset;
    double* gb = gw + w.rows * w.cols;
    const auto& below = activations[l];
    for (std::size_t r = 0; r < w.rows; ++r) {
      const double d = delta[r];
      double* gwr = gw + r * w.cols;
      for (std::size_t c = 0; c < w.cols; ++c) gwr[c] += d * below[c];
      gb[r] += d;
    }
    if (l == 0) break;
    prev_delta.assign(w.cols, 0.0);
    for (std::size_t r = 0; r < w.rows; ++r) {
      const double d = delta[r];
      const double* wr = w.row(r);
      for (std::size_t c = 0; c < w.cols; ++c) prev_delta[c] += wr[c] * d;
    }
    const Activation act = net.spec.hidden_activation;
    for (std::size_t c = 0; c < w.cols; ++c) {
      prev_delta[c] *= activate_deriv(act, activations[l][c]);
    }
    delta.swap(prev_delta);
  }
  (void)sizes;
}

void check_batch(const Network& net, const Matrix& inputs, const Matrix& targets) {
  if (inputs.rows != targets.rows) {
    throw Error(Error::Kind::Shape, "inputs and targets row counts differ");
  }
  if (inputs.cols != static_cast<std::size_t>(net.input_size()) ||
      targets.cols != static_cast<std::size_t>(net.output_size())) {
    throw Error(Error::Kind::Shape, "pattern width does not match network layer sizes");
  }
  if (inputs.rows == 0) throw Error(Error::Kind::EmptyInput, "empty pattern set");
}

// dense symmetric positive-definite solve; returns false if factorization fails
bool cholesky_solve(std::vector<double>& a, std::size_t n, std::vector<double>& rhs) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    const double lj = std::sqrt(d);
    a[j * n + j] = lj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = v / lj;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double v = rhs[i];
    for (std::size_t k = 0; k < i; ++k) v -= a[i * n + k] * rhs[k];
    rhs[i] = v / a[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double v = rhs[i];
    for (std::size_t k = i + 1; k < n; ++k) v -= a[k * n + i] * rhs[k];
    rhs[i] = v / a[i * n + i];
  }
  return true;
}

}  // namespace

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    n += weights[l].rows * weights[l].cols + biases[l].size();
  }
  return n;
}

Network init_network(const NetworkSpec& spec) {
  check_spec(spec);
  Network net;
  net.spec = spec;
  Rng rng(spec.seed);
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    const auto rows = static_cast<std::size_t>(spec.layer_sizes[l + 1]);
    const auto cols = static_cast<std::size_t>(spec.layer_sizes[l]);
    Matrix w(rows, cols);
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) w(r, c) = rng.uniform(-bound, bound);
    }
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(rows, 0.0);
  }
  return net;
}

std::vector<double> forward(const Network& net, std::span<const double> input) {
  if (input.size() != static_cast<std::size_t>(net.input_size())) {
    throw Error(Error::Kind::Shape, "input length " + std::to_string(input.size()) +
                                        " != first layer size " + std::to_string(net.input_size()));
  }
  std::vector<std::vector<double>> acts;
  forward_layers(net, input, acts);
  return acts.back();
}

double batch_mse(const Network& net, const Matrix& inputs, const Matrix& targets) {
  check_batch(net, inputs, targets);
  std::vector<std::vector<double>> acts;
  double sse = 0.0;
  for (std::size_t p = 0; p < inputs.rows; ++p) {
    forward_layers(net, std::span<const double>(inputs.row(p), inputs.cols), acts);
    const auto& out = acts.back();
    for (std::size_t o = 0; o < targets.cols; ++o) {
      const double r = out[o] - targets(p, o);
      sse += r * r;
    }
  }
  return sse / static_cast<double>(inputs.rows * targets.cols);
}

std::vector<double> gradient(const Network& net, const Matrix& inputs, const Matrix& targets) {
  check_batch(net, inputs, targets);
  std::vector<double> grad(net.parameter_count(), 0.0);
  std::vector<std::vector<double>> acts;
  std::vector<double> seed(targets.cols, 0.0);
  const double scale = 2.0 / static_cast<double>(inputs.rows * targets.cols);
  for (std::size_t p = 0; p < inputs.rows; ++p) {
    forward_layers(net, std::span<const double>(inputs.row(p), inputs.cols), acts);
    const auto& out = acts.back();
    for (std::size_t o = 0; o < targets.cols; ++o) {
      seed[o] = scale * (out[o] - targets(p, o));
    }
    backprop_accumulate(net, acts, seed, grad);
  }
  return grad;
}

std::vector<double> flatten(const Network& net) {
  std::vector<double> params;
  params.reserve(net.parameter_count());
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    params.insert(params.end(), net.weights[l].a.begin(), net.weights[l].a.end());
    params.insert(params.end(), net.biases[l].begin(), net.biases[l].end());
  }
  return params;
}

void unflatten(Network& net, std::span<const double> params) {
  if (params.size() != net.parameter_count()) {
    throw Error(Error::Kind::Shape, "parameter vector length mismatch");
  }
  std::size_t off = 0;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    auto& w = net.weights[l];
    std::copy_n(params.begin() + off, w.a.size(), w.a.begin());
    off += w.a.size();
    std::copy_n(params.begin() + off, net.biases[l].size(), net.biases[l].begin());
    off += net.biases[l].size();
  }
}

std::pair<Network, TrainReport> train_backprop(Network net, const Matrix& inputs,
                                               const Matrix& targets, double learning_rate,
                                               int max_epochs, double tolerance) {
  check_batch(net, inputs, targets);
  if (learning_rate <= 0.0) throw Error(Error::Kind::Spec, "learning rate must be positive");

  TrainReport report;
  double mse = batch_mse(net, inputs, targets);
  report.mse_history.push_back(mse);
  if (mse < tolerance) {
    report.epochs_run = 0;
    report.final_mse = mse;
    report.terminated_by = TrainReport::Stop::Tolerance;
    return {std::move(net), report};
  }

  std::vector<double> params = flatten(net);
  for (int epoch = 1; epoch <= max_epochs; ++epoch) {
    const std::vector<double> grad = gradient(net, inputs, targets);
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= learning_rate * grad[i];
    unflatten(net, params);
    mse = batch_mse(net, inputs, targets);
    if (!std::isfinite(mse)) {
      throw Error(Error::Kind::Divergence,
                  "backprop diverged at epoch " + std::to_string(epoch));
    }
    report.mse_history.push_back(mse);
    report.epochs_run = epoch;
    if (mse < tolerance) {
      report.terminated_by = TrainReport::Stop::Tolerance;
      break;
    }
  }
  report.final_mse = report.mse_history.back();
  if (report.terminated_by != TrainReport::Stop::Tolerance) {
    report.terminated_by = TrainReport::Stop::MaxEpochs;
  }
  return {std::move(net), report};
}

std::pair<Network, TrainReport> train_lm(Network net, const Matrix& inputs, const Matrix& targets,
                                         const LmOptions& options) {
  check_batch(net, inputs, targets);
  if (options.mu0 <= 0.0 || options.mu_scale <= 1.0) {
    throw Error(Error::Kind::Spec, "LM requires mu0 > 0 and mu_scale > 1");
  }

  const std::size_t n_params = net.parameter_count();
  const std::size_t n_res = inputs.rows * targets.cols;
  const double norm = static_cast<double>(n_res);

  // residuals and per-residual Jacobian rows via backprop on each output unit
  std::vector<double> residuals(n_res);
  std::vector<double> jrow(n_params);
  std::vector<double> jtj(n_params * n_params);
  std::vector<double> jtr(n_params);
  std::vector<std::vector<double>> acts;
  std::vector<double> seed(targets.cols);

  auto sse_of = [&](const Network& candidate) {
    return batch_mse(candidate, inputs, targets) * norm;
  };

  auto build_normal_equations = [&](const Network& at) {
    std::fill(jtj.begin(), jtj.end(), 0.0);
    std::fill(jtr.begin(), jtr.end(), 0.0);
    std::size_t idx = 0;
    for (std::size_t p = 0; p < inputs.rows; ++p) {
      forward_layers(at, std::span<const double>(inputs.row(p), inputs.cols), acts);
      const auto& out = acts.back();
      for (std::size_t o = 0; o < targets.cols; ++o) {
        residuals[idx] = out[o] - targets(p, o);
        std::fill(seed.begin(), seed.end(), 0.0);
        seed[o] = 1.0;
        std::fill(jrow.begin(), jrow.end(), 0.0);
        backprop_accumulate(at, acts, seed, jrow);
        const double r = residuals[idx];
        for (std::size_t i = 0; i < n_params; ++i) {
          if (jrow[i] == 0.0) continue;
          const double ji = jrow[i];
          jtr[i] += ji * r;
          double* row = jtj.data() + i * n_params;
          for (std::size_t k = i; k < n_params; ++k) row[k] += ji * jrow[k];
        }
        ++idx;
      }
    }
    // mirror the upper triangle
    for (std::size_t i = 0; i < n_params; ++i) {
      for (std::size_t k = i + 1; k < n_params; ++k) {
        jtj[k * n_params + i] = jtj[i * n_params + k];
      }
    }
    for (double v : jtj) {
      if (!std::isfinite(v)) throw Error(Error::Kind::Numeric, "non-finite normal equations");
    }
  };

  TrainReport report;
  double sse = sse_of(net);
  if (!std::isfinite(sse)) throw Error(Error::Kind::Divergence, "non-finite residuals at start");
  report.mse_history.push_back(sse / norm);
  if (sse / norm < options.tolerance) {
    report.epochs_run = 0;
    report.final_mse = sse / norm;
    report.terminated_by = TrainReport::Stop::Tolerance;
    return {std::move(net), report};
  }

  double mu = options.mu0;
  bool equations_stale = true;
  std::vector<double> chol(n_params * n_params);
  std::vector<double> step(n_params);
  std::vector<double> params = flatten(net);

  for (int epoch = 1; epoch <= options.max_epochs; ++epoch) {
    report.epochs_run = epoch;
    if (equations_stale) {
      build_normal_equations(net);
      equations_stale = false;
    }

    chol = jtj;
    for (std::size_t i = 0; i < n_params; ++i) chol[i * n_params + i] += mu;
    for (std::size_t i = 0; i < n_params; ++i) step[i] = -jtr[i];

    bool accepted = false;
    if (cholesky_solve(chol, n_params, step)) {
      Network candidate = net;
      std::vector<double> cand_params = params;
      for (std::size_t i = 0; i < n_params; ++i) cand_params[i] += step[i];
      unflatten(candidate, cand_params);
      const double cand_sse = sse_of(candidate);
      if (!std::isfinite(cand_sse)) {
        throw Error(Error::Kind::Divergence,
                    "non-finite residuals at epoch " + std::to_string(epoch));
      }
      if (cand_sse < sse) {
        net = std::move(candidate);
        params = std::move(cand_params);
        sse = cand_sse;
        mu = std::max(mu / options.mu_scale, 1e-12);
        accepted = true;
        equations_stale = true;
      }
    }
    if (!accepted) mu *= options.mu_scale;

    report.mse_history.push_back(sse / norm);
    if (sse / norm < options.tolerance) {
      report.terminated_by = TrainReport::Stop::Tolerance;
      break;
    }
    if (mu > options.mu_max) {
      report.terminated_by = TrainReport::Stop::Stall;
      break;
    }
    report.terminated_by = TrainReport::Stop::MaxEpochs;
  }

  report.final_mse = report.mse_history.back();
  return {std::move(net), report};
}

nlohmann::json to_json(const Network& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    layers.push_back(nlohmann::json{
        {"rows", net.weights[l].rows},
        {"cols", net.weights[l].cols},
        {"weights", net.weights[l].a},
        {"biases", net.biases[l]},
    });
  }
  return nlohmann::json{
      {"format", "pvcast-network"},
      {"version", 1},
      {"layer_sizes", net.spec.layer_sizes},
      {"hidden_activation", to_string(net.spec.hidden_activation)},
      {"output_activation", to_string(net.spec.output_activation)},
      {"seed", net.spec.seed},
      {"layers", layers},
  };
}

Network network_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "pvcast-network" || j.value("version", 0) != 1) {
    throw Error(Error::Kind::Schema, "not a version-1 pvcast-network document");
  }
  NetworkSpec spec;
  spec.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  spec.hidden_activation = activation_from_string(j.at("hidden_activation").get<std::string>());
  spec.output_activation = activation_from_string(j.at("output_activation").get<std::string>());
  spec.seed = j.at("seed").get<std::uint64_t>();
  Network net = init_network(spec);
  const auto& layers = j.at("layers");
  if (layers.size() != net.weights.size()) {
    throw Error(Error::Kind::Schema, "layer count mismatch in network document");
  }
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const auto& layer = layers[l];
    auto w = layer.at("weights").get<std::vector<double>>();
    auto b = layer.at("biases").get<std::vector<double>>();
    if (w.size() != net.weights[l].a.size() || b.size() != net.biases[l].size()) {
      throw Error(Error::Kind::Schema, "parameter shape mismatch in network document");
    }
    net.weights[l].a = std::move(w);
    net.biases[l] = std::move(b);
  }
  return net;
}

std::string to_string(Activation activation) {
  return activation == Activation::Tanh ? "tanh" : "linear";
}

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "linear") return Activation::Linear;
  throw Error(Error::Kind::Config, "unknown activation '" + name + "'");
}

std::string to_string(TrainReport::Stop stop) {
  switch (stop) {
    case TrainReport::Stop::MaxEpochs: return "max-epochs";
    case TrainReport::Stop::Tolerance: return "tolerance";
    case TrainReport::Stop::Stall: return "stall";
  }
  return "unknown";
}

}  // namespace pvcast::neural
