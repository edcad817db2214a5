#pragma once

// Regime-switching triangular system with mean-reverting coefficients and
// log-AR(1) stochastic volatility. The active ordering changes every
// `block_length` periods, cycling through `orderings`.

#include "dol/errors.hpp"
#include "dol/linalg.hpp"
#include "dol/ordering.hpp"

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace dol {

struct DgpConfig {
  int m = 10;
  int T = 600;
  int block_length = 100;
  std::vector<Permutation> orderings;  // empty: identity, then its reverse
  double rho = 0.99;  // coefficient persistence
  double phi = 0.99;  // log-volatility persistence
  double log_var_level = 0.1;  // anchor of log sigma^2
  std::optional<double> delta_bar;  // coefficient innovation sd; default T^(-2/3)
  std::optional<double> xi_bar;     // log-volatility innovation sd; default T^(-2/3)
  double beta_sd = 0.2;      // anchors beta_j ~ N(0, beta_sd^2)
  double gamma_bound = 1.0;  // anchors gamma_jk ~ U(-bound, bound)
  std::uint64_t seed = 1;

  std::vector<Permutation> resolved_orderings() const {
    if (!orderings.empty()) return orderings;
    Permutation fwd(static_cast<std::size_t>(m));
    std::iota(fwd.begin(), fwd.end(), 0);
    Permutation rev(fwd.rbegin(), fwd.rend());
    if (m == 1) return {fwd};
    return {fwd, rev};
  }

  void validate() const {
    if (m <= 0 || T <= 0 || block_length <= 0) {
      throw ConfigError("dgp: m, T and block_length must be positive");
    }
    if (!(std::abs(rho) < 1.0) || !(std::abs(phi) < 1.0)) {
      throw ConfigError("dgp: rho and phi must lie in (-1, 1)");
    }
    if (beta_sd < 0.0 || gamma_bound < 0.0) throw ConfigError("dgp: anchor scales must be >= 0");
    if ((delta_bar && *delta_bar < 0.0) || (xi_bar && *xi_bar < 0.0)) {
      throw ConfigError("dgp: innovation scales must be >= 0");
    }
    for (const auto& p : resolved_orderings()) {
      if (!is_permutation_of_n(p, m)) {
        throw ConfigError("dgp: ordering " + format_permutation(p) + " is not a permutation");
      }
    }
  }
};

struct SimulationResult {
  Matrix y;                // T x m
  std::vector<int> regime; // index into the resolved ordering list, per period
  std::vector<Permutation> orderings;
  Matrix log_var;          // T x m, log sigma^2 paths
  Vector beta_anchor;      // m
  Matrix gamma_anchor;     // m x m, [child, parent]
};

inline SimulationResult generate(const DgpConfig& cfg) {
  cfg.validate();
  const int m = cfg.m;
  const int T = cfg.T;
  const double default_scale = std::pow(static_cast<double>(T), -2.0 / 3.0);
  const double dbar = cfg.delta_bar.value_or(default_scale);
  const double xbar = cfg.xi_bar.value_or(default_scale);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  SimulationResult out;
  out.orderings = cfg.resolved_orderings();
  out.beta_anchor = Vector(m);
  out.gamma_anchor = Matrix::Zero(m, m);
  for (int j = 0; j < m; ++j) out.beta_anchor[j] = cfg.beta_sd * normal(rng);
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < m; ++k) {
      if (j != k) out.gamma_anchor(j, k) = cfg.gamma_bound * unit(rng);
    }
  }

  Vector beta = out.beta_anchor;
  Matrix gamma = out.gamma_anchor;
  Vector log_var = Vector::Constant(m, cfg.log_var_level);
  Vector prev = Vector::Zero(m);

  out.y = Matrix::Zero(T, m);
  out.log_var = Matrix::Zero(T, m);
  out.regime.resize(static_cast<std::size_t>(T));
  const int n_orderings = static_cast<int>(out.orderings.size());

  for (int t = 0; t < T; ++t) {
    // Every state evolves every period, active or not, so the random stream
    // does not depend on which ordering is in force.
    for (int j = 0; j < m; ++j) {
      beta[j] = out.beta_anchor[j] + cfg.rho * (beta[j] - out.beta_anchor[j]) + dbar * normal(rng);
    }
    for (int j = 0; j < m; ++j) {
      for (int k = 0; k < m; ++k) {
        if (j == k) continue;
        gamma(j, k) = out.gamma_anchor(j, k) + cfg.rho * (gamma(j, k) - out.gamma_anchor(j, k)) +
                      dbar * normal(rng);
      }
    }
    for (int j = 0; j < m; ++j) {
      log_var[j] = cfg.log_var_level + cfg.phi * (log_var[j] - cfg.log_var_level) + xbar * normal(rng);
    }
    Vector eps(m);
    for (int j = 0; j < m; ++j) eps[j] = normal(rng);

    const int regime = (t / cfg.block_length) % n_orderings;
    out.regime[static_cast<std::size_t>(t)] = regime;
    const auto& perm = out.orderings[static_cast<std::size_t>(regime)];
    Vector cur = Vector::Zero(m);
    for (std::size_t pos = 0; pos < perm.size(); ++pos) {
      const int j = perm[pos];
      double v = beta[j] * prev[j] + std::exp(0.5 * log_var[j]) * eps[j];
      for (std::size_t q = 0; q < pos; ++q) v += gamma(j, perm[q]) * cur[perm[q]];
      if (!std::isfinite(v) || std::abs(v) > 1e6) {
        throw NumericalError("dgp: explosive sample at t=" + std::to_string(t + 1) +
                             "; use a smaller gamma_bound");
      }
      cur[j] = v;
    }
    out.y.row(t) = cur.transpose();
    out.log_var.row(t) = log_var.transpose();
    prev = cur;
  }
  return out;
}

}  // namespace dol
