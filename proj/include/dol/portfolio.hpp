#pragma once

// Volatility-targeted mean-variance allocation, return accounting with
// proportional transaction costs, performance fee and Sharpe ratio.

#include "dol/errors.hpp"
#include "dol/linalg.hpp"

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace dol {

struct PortfolioConfig {
  double vol_target = 0.10;  // annualised
  double risk_aversion = 2.0;
  double tc_bps = 10.0;  // one-way, per unit of turnover
  double periods_per_year = 12.0;

  void validate() const {
    if (!(vol_target > 0.0)) throw ConfigError("portfolio.vol_target must be positive");
    if (!(risk_aversion > 0.0)) throw ConfigError("portfolio.risk_aversion must be positive");
    if (!(tc_bps >= 0.0)) throw ConfigError("portfolio.tc_bps must be non-negative");
    if (!(periods_per_year > 0.0)) throw ConfigError("portfolio.periods_per_year must be positive");
  }

  double periodic_vol_target() const { return vol_target / std::sqrt(periods_per_year); }
};

// w = (sigma* / sqrt(C)) Sigma^{-1} (mu - iota r_f), C = (mu - iota r_f)' Sigma^{-1} (mu - iota r_f).
inline Vector optimal_weights(const Vector& mu, const Matrix& sigma, double r_f, double vol_target,
                              WarningLog* warnings = nullptr) {
  const Eigen::Index m = mu.size();
  if (sigma.rows() != m || sigma.cols() != m) throw ConfigError("optimal_weights: dimension mismatch");
  const Vector excess = mu.array() - r_f;

  Matrix cov = sigma;
  symmetrize(cov);
  for (int attempt = 0; attempt < 2; ++attempt) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo > 0.0 && hi / lo < 1e12) break;
    if (attempt == 1) throw NumericalError("optimal_weights: covariance is ill-conditioned after jitter");
    warn(warnings, "optimal_weights", "ridge jitter added to ill-conditioned covariance");
    cov.diagonal().array() += 1e-8 * cov.trace() / static_cast<double>(m);
  }

  Eigen::LDLT<Matrix> ldlt(cov);
  const Vector direction = ldlt.solve(excess);
  const double c = excess.dot(direction);
  if (!(c > 1e-16)) {
    warn(warnings, "optimal_weights", "degenerate excess return; holding the riskless asset");
    return Vector::Zero(m);
  }
  // d' Sigma d equals C analytically; scaling by it keeps w' Sigma w on
  // target even when the solve carries rounding error.
  const double quad = direction.dot(cov * direction);
  Vector w = (vol_target / std::sqrt(quad)) * direction;
  const double var = w.dot(cov * w);
  const double target = vol_target * vol_target;
  if (std::abs(var - target) > 1e-10 * target) {
    throw NumericalError("optimal_weights: ex-ante variance misses the volatility target");
  }
  return w;
}

struct RealizedReturn {
  double gross = 1.0;  // 1 + (1 - w'i) r_f + w'r
  double net = 1.0;    // gross - tc * turnover
  double turnover = 0.0;
  Vector drifted;  // end-of-period weights, the next period's turnover reference
};

inline RealizedReturn realize_return(const Vector& w, const Vector& r_risky, double r_f,
                                     const Vector& prev_drifted, double tc_bps) {
  if (r_risky.size() != w.size() || prev_drifted.size() != w.size()) {
    throw ConfigError("realize_return: dimension mismatch");
  }
  RealizedReturn out;
  out.gross = 1.0 + (1.0 - w.sum()) * r_f + w.dot(r_risky);
  out.turnover = (w - prev_drifted).cwiseAbs().sum();
  out.net = out.gross - tc_bps / 1e4 * out.turnover;
  out.drifted = (w.array() * (1.0 + r_risky.array())).matrix() / out.gross;
  return out;
}

// Annualised fee (bps) that equates average quadratic utility of the
// candidate stream, net of the fee, with that of the baseline.
inline double performance_fee(std::span<const double> candidate, std::span<const double> baseline,
                              double gamma, double periods_per_year = 12.0) {
  if (candidate.size() != baseline.size() || candidate.size() < 2) {
    throw ConfigError("performance_fee: streams must have equal length >= 2");
  }
  const double k = gamma / (2.0 * (1.0 + gamma));
  double base = 0.0;
  for (double r : baseline) base += r - k * r * r;
  auto gap = [&](double fee) {
    double u = 0.0;
    for (double r : candidate) u += (r - fee) - k * (r - fee) * (r - fee);
    return u - base;
  };
  if (gap(0.0) == 0.0) return 0.0;
  // Utility of R - F falls with F only while mean(R) - F < 1/(2k); the
  // bracket stays on that branch so the root is unique.
  double mean = 0.0;
  for (double r : candidate) mean += r;
  mean /= static_cast<double>(candidate.size());
  double lo = k > 0.0 ? std::max(-0.5, mean - 0.5 / k + 1e-9) : -0.5;
  double hi = 0.5;
  double g_lo = gap(lo);
  const double g_hi = gap(hi);
  if (g_lo == 0.0) return lo * periods_per_year * 1e4;
  if (g_hi == 0.0) return hi * periods_per_year * 1e4;
  if ((g_lo > 0.0) == (g_hi > 0.0)) {
    throw NumericalError("performance_fee: no sign change on [" + std::to_string(lo) + ", 0.5] (utility gaps " +
                         std::to_string(g_lo) + ", " + std::to_string(g_hi) + ")");
  }
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    const double g_mid = gap(mid);
    if (g_mid == 0.0) {
      lo = hi = mid;
      break;
    }
    if ((g_mid > 0.0) == (g_lo > 0.0)) {
      lo = mid;
      g_lo = g_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi) * periods_per_year * 1e4;
}

// Annualised Sharpe ratio of (net - 1 - r_f); `net_returns` are gross-form (1 + r).
inline double sharpe_ratio(std::span<const double> net_returns, std::span<const double> r_f,
                           double periods_per_year) {
  if (net_returns.size() != r_f.size() || net_returns.size() < 2) {
    throw ConfigError("sharpe_ratio: need aligned series of length >= 2");
  }
  // Welford accumulation.
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < net_returns.size(); ++t) {
    const double x = net_returns[t] - 1.0 - r_f[t];
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  const double var = m2 / static_cast<double>(n - 1);
  if (!(var > 0.0)) throw NumericalError("sharpe_ratio: zero variance, ratio undefined");
  return mean / std::sqrt(var) * std::sqrt(periods_per_year);
}

struct LedgerRow {
  std::string date;
  Vector weights;
  double gross = 1.0;
  double net = 1.0;
  double turnover = 0.0;
  double r_f = 0.0;
};

struct BacktestLedger {
  std::string model;
  std::vector<LedgerRow> rows;
  Vector drifted;  // last end-of-period weights

  explicit BacktestLedger(std::string name = {}, Eigen::Index m = 0)
      : model(std::move(name)), drifted(Vector::Zero(m)) {}

  void record(std::string date, const Vector& w, const Vector& r_risky, double r_f, double tc_bps) {
    const RealizedReturn rr = realize_return(w, r_risky, r_f, drifted, tc_bps);
    rows.push_back(LedgerRow{std::move(date), w, rr.gross, rr.net, rr.turnover, r_f});
    drifted = rr.drifted;
  }

  std::vector<double> net_returns() const {
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(r.net);
    return out;
  }
  std::vector<double> riskfree() const {
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(r.r_f);
    return out;
  }
};

}  // namespace dol
