#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "pvcast/pso.hpp"

using namespace pvcast;
using namespace pvcast::pso;

namespace {

double sphere(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double rosenbrock2(std::span<const double> x) {
  const double a = 1.0 - x[0];
  const double b = x[1] - x[0] * x[0];
  return a * a + 100.0 * b * b;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Matrix row_matrix(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

}  // namespace

TEST_CASE("constant objective yields a flat history at the constant") {
  PsoConfig cfg;
  cfg.seed = 5;
  const PsoResult r = pso_minimize([](std::span<const double>) { return 7.0; }, 3, cfg);
  CHECK(r.best_value == 7.0);
  for (double v : r.value_history) CHECK(v == 7.0);
  CHECK(r.value_history.size() == static_cast<std::size_t>(cfg.max_iterations) + 1);
}

TEST_CASE("sphere in 10 dims: defaults reach median best below 1e-3 over 20 seeds") {
  std::vector<double> bests;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    PsoConfig cfg;
    cfg.seed = seed;
    bests.push_back(pso_minimize(sphere, 10, cfg).best_value);
  }
  CHECK(median(bests) < 1e-3);
}

TEST_CASE("2-d rosenbrock with 400 iterations: median best below 1e-2 over 20 seeds") {
  std::vector<double> bests;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    PsoConfig cfg;
    cfg.seed = seed;
    cfg.max_iterations = 400;
    bests.push_back(pso_minimize(rosenbrock2, 2, cfg).best_value);
  }
  CHECK(median(bests) < 1e-2);
}

TEST_CASE("history is non-increasing and longer runs do not lose ground") {
  int improved = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    PsoConfig cfg;
    cfg.seed = seed;
    const PsoResult r = pso_minimize(sphere, 10, cfg);
    for (std::size_t i = 1; i < r.value_history.size(); ++i) {
      REQUIRE(r.value_history[i] <= r.value_history[i - 1]);
    }
    CHECK(r.best_value == r.value_history.back());
    if (r.value_history[200] < r.value_history[20]) ++improved;
  }
  CHECK(improved >= 38);  // 95% of seeds
}

TEST_CASE("positions remain inside the bounds after every iteration") {
  PsoConfig cfg;
  cfg.seed = 3;
  cfg.max_iterations = 50;
  cfg.position_low = -1.5;
  cfg.position_high = 2.5;
  // the objective observes every evaluated position
  const Objective probe = [&](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) {
      REQUIRE(v >= cfg.position_low);
      REQUIRE(v <= cfg.position_high);
      s += v * v;
    }
    return s;
  };
  const PsoResult r = pso_minimize(probe, 4, cfg);
  for (double v : r.best_position) {
    CHECK(v >= cfg.position_low);
    CHECK(v <= cfg.position_high);
  }
}

TEST_CASE("seed determinism and schedule independence") {
  PsoConfig a;
  a.seed = 12;
  a.jobs = 1;
  PsoConfig b = a;
  b.jobs = 4;
  const PsoResult ra = pso_minimize(sphere, 6, a);
  const PsoResult rb = pso_minimize(sphere, 6, b);
  CHECK(ra.best_value == rb.best_value);
  CHECK(ra.best_position == rb.best_position);
  CHECK(ra.value_history == rb.value_history);

  PsoConfig c = a;
  c.seed = 13;
  const PsoResult rc = pso_minimize(sphere, 6, c);
  CHECK(ra.best_value != rc.best_value);
}

TEST_CASE("non-finite objective is reported with the particle index") {
  PsoConfig cfg;
  cfg.seed = 1;
  CHECK_THROWS_AS(
      pso_minimize([](std::span<const double>) { return std::nan(""); }, 2, cfg), Error);
  CHECK_THROWS_AS(pso_minimize(sphere, 0, cfg), Error);

  PsoConfig bad;
  bad.swarm_size = 1;
  CHECK_THROWS_AS(pso_minimize(sphere, 2, bad), Error);
}

TEST_CASE("train_pso: xor statistics, determinism, degenerate guard") {
  const Matrix xin = row_matrix({{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  const Matrix xtg = row_matrix({{0}, {1}, {1}, {0}});

  int solved = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    neural::NetworkSpec spec;
    spec.layer_sizes = {2, 4, 1};
    spec.seed = seed;
    PsoConfig cfg;
    cfg.seed = seed;
    auto [net, report] = train_pso(neural::init_network(spec), xin, xtg, cfg);
    if (report.final_mse < 0.01) ++solved;
  }
  CHECK(solved >= 8);

  neural::NetworkSpec spec;
  spec.layer_sizes = {2, 4, 1};
  spec.seed = 4;
  PsoConfig cfg;
  cfg.seed = 4;
  cfg.max_iterations = 30;
  auto [n1, r1] = train_pso(neural::init_network(spec), xin, xtg, cfg);
  auto [n2, r2] = train_pso(neural::init_network(spec), xin, xtg, cfg);
  CHECK(n1.weights[0] == n2.weights[0]);
  CHECK(n1.weights[1] == n2.weights[1]);
  CHECK(n1.biases == n2.biases);
  CHECK(r1.mse_history == r2.mse_history);

  const Matrix empty_in(0, 2);
  const Matrix empty_tg(0, 1);
  CHECK_THROWS_AS(train_pso(neural::init_network(spec), empty_in, empty_tg, cfg), Error);
}
