#include "pvcast/wavelet.hpp"

#include <cmath>

#include "pvcast/common.hpp"

namespace pvcast::wavelet {

namespace {

// Daubechies scaling filters (orthonormal: sum h = sqrt(2), sum h^2 = 1)
const std::vector<double> kHaar = {
    0.7071067811865476,
    0.7071067811865476,
};

const std::vector<double> kDb2 = {
    0.4829629131445341,
    0.8365163037378079,
    0.2241438680420134,
    -0.1294095225512604,
};

const std::vector<double> kDb4 = {
    0.23037781330885523,
    0.7148465705525415,
    0.6308807679295904,
    -0.02798376941698385,
    -0.18703481171888114,
    0.030841381835986965,
    0.032883011666982945,
    -0.010597401784997278,
};

void check_orthonormal(const WaveletSpec& spec) {
  double sumsq = 0.0;
  for (double h : spec.lowpass) sumsq += h * h;
  if (std::abs(sumsq - 1.0) > 1e-12) {
    throw Error(Error::Kind::Numeric,
                "wavelet '" + spec.name + "': lowpass taps not orthonormal (sum sq = " +
                    std::to_string(sumsq) + ")");
  }
  if (spec.highpass.size() != spec.lowpass.size()) {
    throw Error(Error::Kind::Spec, "wavelet '" + spec.name + "': filter length mismatch");
  }
}

// half-sample symmetric reflection, folds any index into [0, n)
std::size_t reflect_index(long long p, std::size_t n) {
  const long long period = 2 * static_cast<long long>(n);
  long long q = p % period;
  if (q < 0) q += period;
  if (q >= static_cast<long long>(n)) q = period - 1 - q;
  return static_cast<std::size_t>(q);
}

struct BandPair {
  std::vector<double> approx;
  std::vector<double> detail;
};

// One analysis stage. Periodic: circular correlation at even shifts on an
// even-length input (odd inputs edge-padded first), m = n_pad / 2 per band.
// Symmetric: correlation window starts at -(L-1), m = floor((n + L) / 2);
// every window read stays inside the materialized reflection.
BandPair analyze(std::span<const double> x, const WaveletSpec& spec, Extension ext) {
  const std::size_t n = x.size();
  const std::size_t L = spec.lowpass.size();
  BandPair out;

  if (ext == Extension::Periodic) {
    const std::size_t n_pad = n + (n % 2);
    const std::size_t m = n_pad / 2;
    out.approx.assign(m, 0.0);
    out.detail.assign(m, 0.0);
    auto at = [&](std::size_t idx) {
      const std::size_t q = idx % n_pad;
      return q < n ? x[q] : x[n - 1];  // pad slot replicates the edge
    };
    for (std::size_t i = 0; i < m; ++i) {
      double a = 0.0, d = 0.0;
      for (std::size_t k = 0; k < L; ++k) {
        const double v = at(2 * i + k);
        a += spec.lowpass[k] * v;
        d += spec.highpass[k] * v;
      }
      out.approx[i] = a;
      out.detail[i] = d;
    }
  } else {
    const std::size_t m = (n + L) / 2;
    out.approx.assign(m, 0.0);
    out.detail.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      double a = 0.0, d = 0.0;
      const long long base = 2 * static_cast<long long>(i) - (static_cast<long long>(L) - 1);
      for (std::size_t k = 0; k < L; ++k) {
        const double v = x[reflect_index(base + static_cast<long long>(k), n)];
        a += spec.lowpass[k] * v;
        d += spec.highpass[k] * v;
      }
      out.approx[i] = a;
      out.detail[i] = d;
    }
  }
  return out;
}

// Inverse of one stage: adjoint scatter of both bands, cropped to n_out.
std::vector<double> synthesize(std::span<const double> approx, std::span<const double> detail,
                               const WaveletSpec& spec, Extension ext, std::size_t n_out) {
  const std::size_t L = spec.lowpass.size();
  const std::size_t m = approx.size();

  if (ext == Extension::Periodic) {
    const std::size_t n_pad = n_out + (n_out % 2);
    std::vector<double> y(n_pad, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t k = 0; k < L; ++k) {
        y[(2 * i + k) % n_pad] += approx[i] * spec.lowpass[k] + detail[i] * spec.highpass[k];
      }
    }
    y.resize(n_out);
    return y;
  }

  std::vector<double> y(n_out, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const long long base = 2 * static_cast<long long>(i) - (static_cast<long long>(L) - 1);
    for (std::size_t k = 0; k < L; ++k) {
      const long long t = base + static_cast<long long>(k);
      if (t >= 0 && t < static_cast<long long>(n_out)) {
        y[static_cast<std::size_t>(t)] += approx[i] * spec.lowpass[k] + detail[i] * spec.highpass[k];
      }
    }
  }
  return y;
}

std::size_t band_length(std::size_t n, std::size_t L, Extension ext) {
  return ext == Extension::Periodic ? (n + n % 2) / 2 : (n + L) / 2;
}

void check_consistent(const WaveletDecomposition& d) {
  const std::size_t L = d.spec.lowpass.size();
  if (d.level_lengths.size() != static_cast<std::size_t>(d.spec.levels) ||
      d.details.size() != static_cast<std::size_t>(d.spec.levels) ||
      d.level_lengths.empty() || d.level_lengths.front() != d.original_length) {
    throw Error(Error::Kind::Integrity, "decomposition bookkeeping does not match spec");
  }
  for (std::size_t l = 0; l < d.details.size(); ++l) {
    const std::size_t expect = band_length(d.level_lengths[l], L, d.extension);
    if (d.details[l].size() != expect) {
      throw Error(Error::Kind::Integrity,
                  "detail band D" + std::to_string(l + 1) + " has length " +
                      std::to_string(d.details[l].size()) + ", expected " + std::to_string(expect));
    }
    if (l + 1 < d.level_lengths.size() && d.level_lengths[l + 1] != expect) {
      throw Error(Error::Kind::Integrity, "level length chain broken at level " + std::to_string(l + 1));
    }
  }
  if (d.approximation.size() != band_length(d.level_lengths.back(), L, d.extension)) {
    throw Error(Error::Kind::Integrity, "approximation band length mismatch");
  }
}

}  // namespace

WaveletSpec WaveletSpec::make(const std::string& name, int levels) {
  if (levels < 1) throw Error(Error::Kind::Spec, "wavelet levels must be >= 1");
  WaveletSpec spec;
  spec.name = name;
  spec.levels = levels;
  if (name == "haar") {
    spec.lowpass = kHaar;
  } else if (name == "db2") {
    spec.lowpass = kDb2;
  } else if (name == "db4") {
    spec.lowpass = kDb4;
  } else {
    throw Error(Error::Kind::Spec, "unknown wavelet '" + name + "' (known: haar, db2, db4)");
  }
  const std::size_t L = spec.lowpass.size();
  spec.highpass.resize(L);
  for (std::size_t k = 0; k < L; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    spec.highpass[k] = sign * spec.lowpass[L - 1 - k];
  }
  check_orthonormal(spec);
  return spec;
}

WaveletDecomposition decompose(std::span<const double> signal, const WaveletSpec& spec,
                               Extension extension) {
  check_orthonormal(spec);
  const std::size_t min_len = std::size_t{1} << spec.levels;
  if (signal.size() < min_len) {
    throw Error(Error::Kind::Length, "signal length " + std::to_string(signal.size()) +
                                         " below 2^levels = " + std::to_string(min_len));
  }
  for (double v : signal) {
    if (!std::isfinite(v)) throw Error(Error::Kind::Numeric, "non-finite sample in signal");
  }

  WaveletDecomposition d;
  d.spec = spec;
  d.extension = extension;
  d.original_length = signal.size();
  d.details.resize(spec.levels);

  std::vector<double> current(signal.begin(), signal.end());
  for (int l = 0; l < spec.levels; ++l) {
    d.level_lengths.push_back(current.size());
    BandPair bands = analyze(current, spec, extension);
    d.details[l] = std::move(bands.detail);
    current = std::move(bands.approx);
  }
  d.approximation = std::move(current);
  return d;
}

std::vector<double> reconstruct(const WaveletDecomposition& d) {
  check_consistent(d);
  std::vector<double> current = d.approximation;
  for (int l = d.spec.levels - 1; l >= 0; --l) {
    current = synthesize(current, d.details[l], d.spec, d.extension,
                         d.level_lengths[static_cast<std::size_t>(l)]);
  }
  return current;
}

std::vector<std::vector<double>> component_series(const WaveletDecomposition& d) {
  check_consistent(d);
  std::vector<std::vector<double>> out;
  out.reserve(d.details.size() + 1);

  WaveletDecomposition only = d;
  for (auto& band : only.details) band.assign(band.size(), 0.0);
  out.push_back(reconstruct(only));  // approximation series

  for (std::size_t l = 0; l < d.details.size(); ++l) {
    only.approximation.assign(d.approximation.size(), 0.0);
    for (std::size_t j = 0; j < d.details.size(); ++j) {
      only.details[j].assign(d.details[j].size(), 0.0);
    }
    only.details[l] = d.details[l];
    out.push_back(reconstruct(only));
  }
  return out;
}

std::vector<std::vector<double>> mra_components(std::span<const double> signal,
                                                const WaveletSpec& spec, Extension extension) {
  return component_series(decompose(signal, spec, extension));
}

nlohmann::json to_json(const WaveletDecomposition& d) {
  nlohmann::json bands = nlohmann::json::object();
  bands["A" + std::to_string(d.spec.levels)] = d.approximation;
  for (std::size_t l = 0; l < d.details.size(); ++l) {
    bands["D" + std::to_string(l + 1)] = d.details[l];
  }
  return nlohmann::json{
      {"wavelet", d.spec.name},
      {"levels", d.spec.levels},
      {"extension", to_string(d.extension)},
      {"original_length", d.original_length},
      {"level_lengths", d.level_lengths},
      {"bands", bands},
  };
}

std::string to_string(Extension extension) {
  return extension == Extension::Periodic ? "periodic" : "symmetric";
}

Extension extension_from_string(const std::string& name) {
  if (name == "periodic") return Extension::Periodic;
  if (name == "symmetric") return Extension::Symmetric;
  throw Error(Error::Kind::Config, "unknown boundary mode '" + name + "'");
}

}  // namespace pvcast::wavelet
