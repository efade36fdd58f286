#pragma once

// Discrete wavelet transform as an iterated two-channel analysis/synthesis
// filter bank, plus band-limited component series for the forecasting
// pipeline. Two boundary modes:
//
//  - Periodic: circular convolution, bands of length ceil(n/2) per level
//    (odd inputs are edge-padded to even before the stage). For even input
//    lengths the stage is an orthonormal map, so coefficient energy equals
//    signal energy and reconstruction is exact.
//  - Symmetric (default): half-sample reflection with full-width band
//    windows of length floor((n + L) / 2). The extra boundary coefficients
//    make reconstruction of the interior exact for any extension content.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace pvcast::wavelet {

enum class Extension { Symmetric, Periodic };

struct WaveletSpec {
  std::string name = "db4";
  std::vector<double> lowpass;   // orthonormal scaling filter, taps sum to sqrt(2)
  std::vector<double> highpass;  // quadrature mirror: hi[k] = (-1)^k lo[L-1-k]
  int levels = 3;

  // known names: "haar", "db2", "db4"; validates tap orthonormality
  static WaveletSpec make(const std::string& name, int levels = 3);
};

struct WaveletDecomposition {
  std::vector<double> approximation;         // deepest-level approximation band
  std::vector<std::vector<double>> details;  // details[0] = D1 (finest) .. D_levels
  std::vector<std::size_t> level_lengths;    // input length of each analysis stage
  std::size_t original_length = 0;
  WaveletSpec spec;
  Extension extension = Extension::Symmetric;
};

WaveletDecomposition decompose(std::span<const double> signal, const WaveletSpec& spec,
                               Extension extension = Extension::Symmetric);

std::vector<double> reconstruct(const WaveletDecomposition& decomposition);

// Full-length series per band, ordered [A_levels, D1, D2, ..., D_levels].
// Each is the synthesis with every other band zeroed; by linearity the
// series sum to the reconstructed signal.
std::vector<std::vector<double>> component_series(const WaveletDecomposition& decomposition);
std::vector<std::vector<double>> mra_components(std::span<const double> signal,
                                                const WaveletSpec& spec,
                                                Extension extension = Extension::Symmetric);

nlohmann::json to_json(const WaveletDecomposition& decomposition);

std::string to_string(Extension extension);
Extension extension_from_string(const std::string& name);

}  // namespace pvcast::wavelet
