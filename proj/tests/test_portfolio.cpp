#include "dol/portfolio.hpp"
#include "oracles/oracles.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace dol;
using Catch::Approx;

namespace {

std::vector<double> gross_stream(std::size_t n, double mean, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(mean, sd);
  std::vector<double> out(n);
  for (auto& v : out) v = 1.0 + z(rng);
  return out;
}

}  // namespace

TEST_CASE("single asset weight", "[portfolio]") {
  const Vector w = optimal_weights(Vector::Constant(1, 0.01), Matrix::Constant(1, 1, 0.0025), 0.0, 0.05);
  CHECK(w[0] == Approx(1.0).epsilon(1e-12));
  const Vector w2 = optimal_weights(Vector::Constant(1, -0.01), Matrix::Constant(1, 1, 0.0025), 0.0, 0.05);
  CHECK(w2[0] == Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("zero excess return falls back to the riskless asset", "[portfolio]") {
  WarningLog log;
  const Vector w = optimal_weights(Vector::Constant(3, 0.002), Matrix::Identity(3, 3), 0.002, 0.03, &log);
  CHECK(w.isZero());
  CHECK(log.size() == 1);
}

TEST_CASE("weights hit the volatility target", "[portfolio][property]") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 200; ++trial) {
    Matrix A(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) A(i, j) = 0.05 * z(rng);
    const Matrix sigma = A * A.transpose() + 1e-4 * Matrix::Identity(4, 4);
    Vector mu(4);
    for (int i = 0; i < 4; ++i) mu[i] = 0.01 * z(rng);
    const double target = 0.1 / std::sqrt(12.0);
    const Vector w = optimal_weights(mu, sigma, 0.001, target);
    REQUIRE(w.dot(sigma * w) == Approx(target * target).epsilon(1e-10));
    // The direction is Sigma^{-1}(mu - r_f).
    const Vector d = sigma.ldlt().solve((mu.array() - 0.001).matrix());
    REQUIRE(std::abs(w.normalized().dot(d.normalized())) == Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("realised return arithmetic", "[portfolio]") {
  Vector w(2), r(2), prev(2);
  w << 0.6, 0.2;
  r << 0.05, -0.02;
  prev << 0.5, 0.5;
  const auto rr = realize_return(w, r, 0.001, prev, 10.0);
  CHECK(rr.gross == Approx(1.0 + 0.2 * 0.001 + 0.6 * 0.05 - 0.2 * 0.02));
  CHECK(rr.turnover == Approx(0.1 + 0.3));
  CHECK(rr.net == Approx(rr.gross - 0.001 * 0.4));
  CHECK(rr.drifted[0] == Approx(0.6 * 1.05 / rr.gross));
  CHECK(rr.drifted[1] == Approx(0.2 * 0.98 / rr.gross));
}

TEST_CASE("fee of identical streams is zero", "[portfolio]") {
  const auto a = gross_stream(240, 0.006, 0.04, 1);
  CHECK(performance_fee(a, a, 2.0) == Approx(0.0).margin(1e-6));
}

TEST_CASE("fee agrees with a direct grid scan", "[portfolio][oracle]") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto cand = gross_stream(240, 0.008, 0.04, seed);
    const auto base = gross_stream(240, 0.005, 0.05, seed + 100);
    for (double gamma : {2.0, 6.0, 10.0}) {
      const double fee = performance_fee(cand, base, gamma);
      CHECK(fee == Approx(oracle::fee_by_grid_scan(cand, base, gamma, 12.0)).margin(0.1));
    }
  }
}

TEST_CASE("with negligible risk aversion the fee is the mean difference", "[portfolio]") {
  const auto cand = gross_stream(120, 0.01, 0.03, 7);
  const auto base = gross_stream(120, 0.004, 0.03, 8);
  double diff = 0.0;
  for (std::size_t t = 0; t < cand.size(); ++t) diff += cand[t] - base[t];
  diff /= static_cast<double>(cand.size());
  CHECK(performance_fee(cand, base, 1e-9) == Approx(diff * 12.0 * 1e4).margin(1e-3));
}

TEST_CASE("fee increases when the candidate improves", "[portfolio][property]") {
  auto cand = gross_stream(120, 0.006, 0.03, 9);
  const auto base = gross_stream(120, 0.006, 0.03, 10);
  double prev = performance_fee(cand, base, 3.0);
  for (int k = 0; k < 10; ++k) {
    for (auto& r : cand) r += 0.0005;
    const double fee = performance_fee(cand, base, 3.0);
    REQUIRE(fee > prev);
    prev = fee;
  }
}

TEST_CASE("Sharpe ratio", "[portfolio]") {
  const std::vector<double> net{1.01, 1.03, 1.01, 1.03};
  const std::vector<double> rf(4, 0.0);
  const double sd = std::sqrt(4.0 * 0.0001 / 3.0);
  CHECK(sharpe_ratio(net, rf, 12.0) == Approx(0.02 / sd * std::sqrt(12.0)).epsilon(1e-12));
  const std::vector<double> flat(4, 1.01);
  CHECK_THROWS_AS(sharpe_ratio(flat, rf, 12.0), NumericalError);

  const auto stream = gross_stream(1000, 0.005, 0.04, 3);
  std::vector<double> rfs(1000);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 0.003);
  for (auto& v : rfs) v = u(rng);
  CHECK(sharpe_ratio(stream, rfs, 12.0) == Approx(oracle::sharpe_two_pass(stream, rfs, 12.0)).epsilon(1e-10));
}

TEST_CASE("ledger tracks drifted weights between rebalances", "[portfolio]") {
  BacktestLedger led("DOA", 2);
  Vector w(2), r(2);
  w << 0.5, 0.5;
  r << 0.1, 0.0;
  led.record("2001-01-31", w, r, 0.0, 10.0);
  CHECK(led.rows[0].turnover == Approx(1.0));
  led.record("2001-02-28", w, r, 0.0, 10.0);
  const double g = 1.0 + 0.05;
  CHECK(led.rows[1].turnover == Approx(std::abs(0.5 - 0.55 / g) + std::abs(0.5 - 0.5 / g)));
  CHECK(led.net_returns().size() == 2);
}
