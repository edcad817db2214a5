#include "dol/recouple.hpp"
#include "oracles/oracles.hpp"
#include "support/recouple_instances.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace dol;
using Catch::Approx;

using test_support::Instance;
using test_support::moments;
using test_support::random_instance;

TEST_CASE("a single series reduces to the univariate forecast", "[recouple]") {
  PriorState p{Vector::Constant(1, 0.5), Matrix::Constant(1, 1, 0.2), 8.0, 0.3};
  EquationComponent c{Vector::Constant(1, 2.0), p, {}, 1.0};
  std::vector<std::span<const EquationComponent>> per{std::span<const EquationComponent>(&c, 1)};
  const auto jf = joint_moments(std::vector<int>{0}, per);
  const auto fc = forecast(p, c.x);
  CHECK(jf.f[0] == Approx(fc.f));
  CHECK(jf.Q(0, 0) == Approx(fc.variance()));
}

TEST_CASE("zero parent loadings decouple the system", "[recouple]") {
  const int m = 3;
  std::vector<EquationComponent> comps;
  std::vector<double> expect_f, expect_var;
  const std::vector<int> perm{2, 0, 1};
  for (int pos = 0; pos < m; ++pos) {
    std::vector<int> parents(perm.begin(), perm.begin() + pos);
    Vector a = Vector::Zero(1 + pos);
    a[0] = 0.4 + pos;
    Matrix R = Matrix::Zero(1 + pos, 1 + pos);
    R(0, 0) = 0.1;
    PriorState p{a, R, 12.0, 0.5 + pos};
    comps.push_back(EquationComponent{Vector::Constant(1, 1.5), p, parents, 1.0});
    PriorState own{a.head(1), R.topLeftCorner(1, 1), 12.0, 0.5 + pos};
    const auto fc = forecast(own, Vector::Constant(1, 1.5));
    expect_f.push_back(fc.f);
    expect_var.push_back(fc.variance());
  }
  std::vector<std::span<const EquationComponent>> per;
  for (const auto& c : comps) per.emplace_back(&c, 1);
  const auto jf = joint_moments(perm, per);
  for (int pos = 0; pos < m; ++pos) {
    const int j = perm[static_cast<std::size_t>(pos)];
    CHECK(jf.f[j] == Approx(expect_f[static_cast<std::size_t>(pos)]));
    CHECK(jf.Q(j, j) == Approx(expect_var[static_cast<std::size_t>(pos)]));
  }
  CHECK((jf.Q - Matrix(jf.Q.diagonal().asDiagonal())).norm() < 1e-15);
}

TEST_CASE("joint moments match sequential Monte Carlo", "[recouple][oracle]") {
  std::mt19937_64 rng(20240611);
  int failures = 0, checks = 0;
  for (int inst = 0; inst < 20; ++inst) {
    const auto in = random_instance(3, rng);
    const auto jf = moments(in);
    REQUIRE(is_psd(jf.Q));
    const auto mc = oracle::sample_moments(oracle::sample_triangular(in.perm, in.eqs, 1'000'000, 1000 + inst));
    for (int i = 0; i < 3; ++i) {
      ++checks;
      if (std::abs(mc.mean[i] - jf.f[i]) >= 3.0 * mc.mean_se[i]) ++failures;
      for (int j = i; j < 3; ++j) {
        ++checks;
        if (std::abs(mc.cov(i, j) - jf.Q(i, j)) >= 3.0 * mc.cov_se(i, j)) ++failures;
      }
    }
  }
  // At the nominal 0.27% rate, 180 checks give 0.49 exceedances on average;
  // four or more has probability below 0.002 when the moments are right.
  INFO(failures << " of " << checks << " moments outside 3 standard errors");
  CHECK(failures <= 3);
}

TEST_CASE("joint log density sums the equation densities", "[recouple]") {
  const std::vector<double> two{std::log(1.0 / std::numbers::pi), std::log(1.0 / std::numbers::pi)};
  CHECK(joint_log_density(two) == Approx(2.0 * std::log(1.0 / std::numbers::pi)));
  const std::vector<double> one{-1.25};
  CHECK(joint_log_density(one) == -1.25);
}

TEST_CASE("recoupling rejects undefined variances and bad layouts", "[recouple]") {
  PriorState p{Vector::Zero(1), Matrix::Identity(1, 1), 2.0, 1.0};
  EquationComponent c{Vector::Ones(1), p, {}, 1.0};
  std::vector<std::span<const EquationComponent>> per{std::span<const EquationComponent>(&c, 1)};
  CHECK_THROWS_AS(joint_moments(std::vector<int>{0}, per), NumericalError);

  c.prior.r = 10.0;
  c.parent_series = {1};
  CHECK_THROWS_AS(joint_moments(std::vector<int>{0}, per), ConfigError);
}
