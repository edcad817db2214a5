#include "dol/metrics.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace dol;
using Catch::Approx;

namespace {

EvalSeries random_series(int T, int m, double err_scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  EvalSeries s;
  for (int t = 0; t < T; ++t) {
    Vector f(m), y(m);
    for (int j = 0; j < m; ++j) {
      y[j] = z(rng);
      f[j] = y[j] + err_scale * z(rng);
    }
    s.add(f, y, -1.0 + 0.1 * z(rng));
  }
  return s;
}

}  // namespace

TEST_CASE("a model compared with itself", "[metrics]") {
  const auto s = random_series(50, 3, 1.0, 1);
  CHECK(msfe_ratio(s, s) == 1.0);
  CHECK(lpdr(s, s) == 0.0);
}

TEST_CASE("halved squared errors give ratio one half", "[metrics]") {
  EvalSeries base, cand;
  for (int t = 0; t < 10; ++t) {
    Vector y = Vector::Constant(2, 1.0);
    base.add(Vector::Constant(2, 1.0 - std::sqrt(2.0)), y, 0.0);
    cand.add(Vector::Zero(2), y, 0.0);
  }
  CHECK(msfe_ratio(cand, base) == Approx(0.5).epsilon(1e-14));
}

TEST_CASE("a constant density advantage accumulates", "[metrics]") {
  EvalSeries base, cand;
  for (int t = 0; t < 10; ++t) {
    base.add(Vector::Zero(1), Vector::Zero(1), -2.0);
    cand.add(Vector::Zero(1), Vector::Zero(1), -1.0);
  }
  CHECK(lpdr(cand, base) == Approx(10.0));
  const auto path = accumulated_lpl(cand, base);
  REQUIRE(path.size() == 10);
  for (std::size_t t = 0; t < 10; ++t) CHECK(path[t] == Approx(static_cast<double>(t + 1)));
}

TEST_CASE("LPDR is antisymmetric", "[metrics][property]") {
  for (std::uint64_t seed = 1; seed < 20; ++seed) {
    const auto a = random_series(40, 2, 0.5, seed);
    const auto b = random_series(40, 2, 0.8, seed + 1000);
    REQUIRE(lpdr(a, b) == Approx(-lpdr(b, a)).margin(1e-12));
    REQUIRE(msfe_ratio(a, b) * msfe_ratio(b, a) == Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("mismatched horizons are rejected", "[metrics]") {
  const auto a = random_series(10, 2, 1.0, 1);
  const auto b = random_series(11, 2, 1.0, 2);
  CHECK_THROWS_AS(msfe_ratio(a, b), ConfigError);
  CHECK_THROWS_AS(lpdr(a, b), ConfigError);
}
