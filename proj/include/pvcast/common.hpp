#pragma once

// Shared plumbing: error type, deterministic RNG, parallel loop helper,
// dense row-major matrix, file digests and atomic writes.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace pvcast {

class Error : public std::runtime_error {
public:
  enum class Kind {
    Schema,
    Integrity,
    EmptyInput,
    Resolution,
    Gap,
    IrrecoverableField,
    Length,
    Numeric,
    Shape,
    Spec,
    Divergence,
    Objective,
    Config,
    Trim,
    Range,
    Latitude,
    Geometry,
    Generation,
    Normalization,
    DegenerateVariance,
    Io,
  };

  Error(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

// splitmix64 finalizer. Seeds for parallel tasks are derived from
// (base_seed, task path) so results never depend on execution schedule.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

// mt19937_64 with self-contained distributions. Standard-library
// distribution adapters are implementation-defined; these are pinned.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // [0,1) with 53 random bits
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  double normal();  // Box-Muller with cached spare
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);  // inclusive
  std::uint64_t raw() { return eng_(); }

private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Runs body(i) for i in [0, n). jobs == 1 is the serial reference path,
// jobs <= 0 selects hardware concurrency. Bodies must write only to
// index-owned slots so results are identical for every jobs value.
// The first exception thrown by any body is rethrown after the loop.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body);
int resolve_jobs(int jobs);

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
  const double* row(std::size_t r) const { return a.data() + r * cols; }
  double* row(std::size_t r) { return a.data() + r * cols; }

  bool operator==(const Matrix&) const = default;
};

// FNV-1a 64-bit; manifest digests, not cryptographic.
std::uint64_t fnv1a64(const void* data, std::size_t n);
std::uint64_t fnv1a64_file(const std::string& path);
std::string hex64(std::uint64_t v);

// temp file + rename, so readers never observe partial output
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace pvcast
