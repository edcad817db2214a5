#pragma once

// Driftless multivariate random walk with a discounted inverse-Wishart
// covariance (W-RW benchmark).
//
// Conventions: Sigma ~ IW(h, S) with E[Sigma] = S / (h - m - 1). One step:
//   prior        h_p = kappa * h,  S_p = kappa * S
//   predictive   y ~ multivariate t with nu = h_p - m + 1 dof, location 0,
//                scale S_p / nu, covariance S_p / (h_p - m - 1)
//   update       h = h_p + 1,  S = S_p + y y'
// For m = 1 this is the no-regressor Normal-Gamma volatility recursion with
// n = h and n * s = S.

#include "dol/errors.hpp"
#include "dol/linalg.hpp"
#include "dol/recouple.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

namespace dol {

struct WishartState {
  Matrix S;
  double h = 0.0;
  double kappa = 1.0;

  Eigen::Index dim() const { return S.rows(); }

  // The covariance needs h_p > m + 1 at every step. h_t moves monotonically
  // from h0 towards 1/(1 - kappa), so checking both ends suffices.
  void validate() const {
    const auto m = static_cast<double>(S.rows());
    if (S.rows() != S.cols() || S.rows() == 0) throw ConfigError("W-RW: scale matrix must be square");
    if (!(kappa > 0.0 && kappa <= 1.0)) throw ConfigError("W-RW: kappa must lie in (0, 1]");
    if (!(h > m - 1.0)) throw ConfigError("W-RW: dof must exceed m - 1");
    const double h_floor = kappa < 1.0 ? std::min(h, 1.0 / (1.0 - kappa)) : h;
    if (!(kappa * h_floor > m + 1.0)) {
      throw ConfigError("W-RW: discounted dof " + std::to_string(kappa * h_floor) +
                        " must exceed m + 1 = " + std::to_string(m + 1.0) +
                        "; raise the initial dof or kappa");
    }
    if (!is_psd(S)) throw ConfigError("W-RW: scale matrix must be PSD");
  }
};

// S0 = sample covariance * (h0 - m - 1), h0 = m + dof_offset.
inline WishartState make_wishart(const Matrix& sample_cov, double kappa, double dof_offset = 10.0) {
  const auto m = static_cast<double>(sample_cov.rows());
  WishartState st;
  st.h = m + dof_offset;
  st.S = sample_cov * (st.h - m - 1.0);
  symmetrize(st.S);
  st.kappa = kappa;
  st.validate();
  return st;
}

inline double multivariate_t_log_density(const Vector& y, const Vector& loc, const Matrix& scale,
                                         double nu) {
  const auto m = static_cast<double>(y.size());
  Eigen::LLT<Matrix> llt(scale);
  if (llt.info() != Eigen::Success) throw NumericalError("multivariate t: scale not positive definite");
  const Vector z = llt.matrixL().solve(y - loc);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return std::lgamma(0.5 * (nu + m)) - std::lgamma(0.5 * nu) - 0.5 * m * std::log(nu * std::numbers::pi) -
         0.5 * logdet - 0.5 * (nu + m) * std::log1p(z.squaredNorm() / nu);
}

struct WrwStep {
  JointForecast forecast;  // log_density at y
  WishartState state;      // after observing y
};

inline WrwStep wrw_step(const WishartState& state, const Vector& y) {
  const Eigen::Index m = state.dim();
  if (y.size() != m) throw ConfigError("W-RW: observation length mismatch");
  const double h_p = state.kappa * state.h;
  const Matrix S_p = state.kappa * state.S;
  const double nu = h_p - static_cast<double>(m) + 1.0;
  if (!(h_p - static_cast<double>(m) - 1.0 > 0.0)) {
    throw NumericalError("W-RW: predictive covariance undefined (dof too small)");
  }
  WrwStep out;
  out.forecast.f = Vector::Zero(m);
  out.forecast.Q = S_p / (h_p - static_cast<double>(m) - 1.0);
  out.forecast.log_density = multivariate_t_log_density(y, out.forecast.f, S_p / nu, nu);
  out.state = state;
  out.state.h = h_p + 1.0;
  out.state.S = S_p + y * y.transpose();
  symmetrize(out.state.S);
  return out;
}

}  // namespace dol
