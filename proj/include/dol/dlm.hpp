#pragma once

// Conjugate Normal-Gamma dynamic linear model with discount evolution.
//
// Parameterisation: given the precision phi = 1/sigma^2,
//   theta | phi ~ N(m, C / (s * phi)),   phi ~ Gamma(n/2, rate = n*s/2),
// so C is a covariance *factor* in units of the scale estimate s, and the
// one-step predictive is Student-t with n degrees of freedom.

#include "dol/errors.hpp"
#include "dol/linalg.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace dol {

struct DiscountPair {
  double delta = 1.0;  // coefficient discount
  double kappa = 1.0;  // volatility discount

  void validate() const {
    if (!(delta > 0.0 && delta <= 1.0)) {
      throw ConfigError("discount delta must lie in (0, 1], got " + std::to_string(delta));
    }
    if (!(kappa > 0.0 && kappa <= 1.0)) {
      throw ConfigError("discount kappa must lie in (0, 1], got " + std::to_string(kappa));
    }
  }

  friend bool operator==(const DiscountPair&, const DiscountPair&) = default;
};

struct NormalGammaState {
  Vector m;
  Matrix C;
  double n = 1.0;
  double s = 1.0;

  Eigen::Index dim() const { return m.size(); }

  // Throws NumericalError when an invariant is broken.
  void validate(double tol = 1e-10) const {
    if (C.rows() != m.size() || C.cols() != m.size()) {
      throw NumericalError("NormalGammaState: covariance factor is not d x d");
    }
    if (!m.allFinite() || !C.allFinite() || !std::isfinite(n) || !std::isfinite(s)) {
      throw NumericalError("NormalGammaState: non-finite field");
    }
    if (!(n > 0.0) || !(s > 0.0)) {
      throw NumericalError("NormalGammaState: n and s must be positive");
    }
    if (symmetry_error(C) > tol) throw NumericalError("NormalGammaState: C not symmetric");
    if (!is_psd(C, tol)) throw NumericalError("NormalGammaState: C not PSD");
  }
};

struct PriorState {
  Vector a;
  Matrix R;
  double r = 1.0;
  double s_prev = 1.0;

  Eigen::Index dim() const { return a.size(); }
};

struct UnivariateForecast {
  double f = 0.0;
  double q = 1.0;
  double dof = 1.0;
  double log_density = std::numeric_limits<double>::quiet_NaN();

  // Predictive variance q*r/(r-2); +inf when r <= 2.
  double variance() const {
    if (dof <= 2.0) return std::numeric_limits<double>::infinity();
    return q * dof / (dof - 2.0);
  }
};

inline PriorState evolve_prior(const NormalGammaState& post, DiscountPair disc) {
  if (!post.m.allFinite() || !post.C.allFinite() || !std::isfinite(post.n) ||
      !std::isfinite(post.s)) {
    throw NumericalError("evolve_prior: non-finite posterior state");
  }
  disc.validate();
  PriorState prior;
  prior.a = post.m;
  prior.R = post.C / disc.delta;
  symmetrize(prior.R);
  prior.r = disc.kappa * post.n;
  prior.s_prev = post.s;
  return prior;
}

inline UnivariateForecast forecast(const PriorState& prior, const Vector& F,
                                   WarningLog* warnings = nullptr) {
  if (F.size() != prior.a.size()) {
    throw ConfigError("forecast: regressor length " + std::to_string(F.size()) +
                      " does not match state dimension " + std::to_string(prior.a.size()));
  }
  if (!F.allFinite()) throw NumericalError("forecast: non-finite regressors");
  UnivariateForecast fc;
  fc.f = F.dot(prior.a);
  fc.q = prior.s_prev + F.dot(prior.R * F);
  fc.dof = prior.r;
  if (!(fc.q > 0.0)) {
    warn(warnings, "forecast", "non-positive predictive scale clamped");
    fc.q = prior.s_prev * 1e-8;
  }
  return fc;
}

// Log density of the location-scale Student-t with location `loc`, squared
// scale `scale2` and `dof` degrees of freedom.
inline double student_t_log_density(double y, double loc, double scale2, double dof) {
  const double z2 = (y - loc) * (y - loc) / scale2;
  return std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
         0.5 * std::log(dof * std::numbers::pi * scale2) -
         0.5 * (dof + 1.0) * std::log1p(z2 / dof);
}

inline double log_predictive_density(const UnivariateForecast& fc, double y) {
  if (!std::isfinite(y) || !std::isfinite(fc.f) || !std::isfinite(fc.q) || !std::isfinite(fc.dof)) {
    throw NumericalError("log_predictive_density: non-finite input");
  }
  return student_t_log_density(y, fc.f, fc.q, fc.dof);
}

inline NormalGammaState update(const PriorState& prior, const Vector& F, double y,
                               WarningLog* warnings = nullptr) {
  const UnivariateForecast fc = forecast(prior, F, warnings);
  const double e = y - fc.f;
  const double q = fc.q;
  const Vector RF = prior.R * F;
  const Vector A = RF / q;
  const double z = (prior.r + e * e / q) / (prior.r + 1.0);

  NormalGammaState post;
  post.m = prior.a + A * e;
  post.n = prior.r + 1.0;
  post.s = prior.s_prev * z;
  post.C = (prior.R - A * A.transpose() * q) * z;
  symmetrize(post.C);
  if (!is_psd(post.C)) {
    warn(warnings, "update", "posterior covariance factor projected to PSD");
    post.C = project_psd(post.C);
  }
  return post;
}

// Missing observation: the posterior is the evolved prior.
inline NormalGammaState skip_update(const PriorState& prior) {
  return NormalGammaState{prior.a, prior.R, prior.r, prior.s_prev};
}

// Initial-state recipe. With `ols`, the mean is the least-squares fit on the
// training rows and s0 the residual variance; otherwise m0 = 0 and s0 is the
// sample variance of the training response (or `s0` when there is none).
struct InitialPrior {
  bool ols = true;
  double c0 = 100.0;
  double n0 = 10.0;
  double s0 = 1.0;
  // Columns at and beyond this index are fixed at zero with zero prior
  // variance; they stay exactly zero under every update.
  Eigen::Index pinned_from = std::numeric_limits<Eigen::Index>::max();
};

inline NormalGammaState initial_state(const Matrix& X, const Vector& y, const InitialPrior& cfg) {
  const Eigen::Index d = X.cols();
  const Eigen::Index free_cols = std::min(d, cfg.pinned_from);
  NormalGammaState st;
  st.m = Vector::Zero(d);
  st.C = Matrix::Zero(d, d);
  st.C.topLeftCorner(free_cols, free_cols) = cfg.c0 * Matrix::Identity(free_cols, free_cols);
  st.n = cfg.n0;
  st.s = cfg.s0;

  const Eigen::Index rows = X.rows();
  if (rows == 0) return st;

  const double mean_y = y.mean();
  const double var_y = rows > 1 ? (y.array() - mean_y).square().sum() / static_cast<double>(rows - 1)
                                : 0.0;
  if (cfg.ols && rows > free_cols) {
    const Matrix Xf = X.leftCols(free_cols);
    Vector beta = Vector::Zero(free_cols);
    if (free_cols > 0) beta = Xf.colPivHouseholderQr().solve(y);
    const Vector resid = y - Xf * beta;
    const double ssr = resid.squaredNorm();
    const double denom = static_cast<double>(rows - free_cols);
    st.m.head(free_cols) = beta;
    if (ssr / denom > 0.0 && std::isfinite(ssr)) st.s = ssr / denom;
  } else if (var_y > 0.0) {
    st.s = var_y;
  }
  return st;
}

}  // namespace dol
