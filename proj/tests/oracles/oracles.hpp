#pragma once

// Independent reference computations used by the tests. None of these call
// into the library's filtering code; they integrate, sample or scan directly.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Grid Bayes for y_t = x_t * theta + e_t, e_t ~ N(0, 1/phi), with the
// conjugate prior theta | phi ~ N(m0, c0 / (s0 phi)), phi ~ Gamma(n0/2, rate n0 s0/2).
// Posterior moments are reported in the same (m, C, n, s) coordinates:
//   E[phi] = 1/s, Var[phi] = 2/(n s^2), Var[theta] = C n/(n-2).

struct GridPosterior {
  double m, C, n, s;
  double log_marginal;  // log p(y_1..N)
};

inline double simpson_weight(int i, int n) {
  if (i == 0 || i == n - 1) return 1.0;
  return (i % 2 == 1) ? 4.0 : 2.0;
}

inline GridPosterior grid_bayes(const std::vector<double>& x, const std::vector<double>& y, double m0, double c0,
                                double n0, double s0, int points = 2001) {
  const double N = static_cast<double>(x.size());
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  // Rough location from least squares, only to place the grid.
  const double b = sxy / sxx;
  const double rss = std::max(syy - b * sxy, 1e-12);
  const double v = rss / N;
  const double se = std::sqrt(v / sxx);
  const double th_lo = b - 14.0 * se - 0.5 * std::abs(b - m0), th_hi = b + 14.0 * se + 0.5 * std::abs(b - m0);
  const double prec = 1.0 / v;
  const double rel = 12.0 * std::sqrt(2.0 / (N + n0));
  const double ph_lo = std::max(prec * (1.0 - rel) * 0.5, 1e-12), ph_hi = prec * (1.0 + rel) * 2.0;

  const double h_th = (th_hi - th_lo) / (points - 1);
  const double h_ph = (ph_hi - ph_lo) / (points - 1);
  const double log_prior_const = 0.5 * n0 * std::log(0.5 * n0 * s0) - std::lgamma(0.5 * n0) +
                                 0.5 * std::log(s0 / (2.0 * std::numbers::pi * c0));
  std::vector<double> logp(static_cast<std::size_t>(points) * points);
  double mx = -INFINITY;
  for (int i = 0; i < points; ++i) {
    const double th = th_lo + i * h_th;
    for (int k = 0; k < points; ++k) {
      const double ph = ph_lo + k * h_ph;
      const double lp = log_prior_const + 0.5 * std::log(ph) - ph * s0 * (th - m0) * (th - m0) / (2.0 * c0) +
                        (0.5 * n0 - 1.0) * std::log(ph) - 0.5 * n0 * s0 * ph +
                        0.5 * N * std::log(ph / (2.0 * std::numbers::pi)) -
                        0.5 * ph * (syy - 2.0 * th * sxy + th * th * sxx);
      logp[static_cast<std::size_t>(i) * points + k] = lp;
      mx = std::max(mx, lp);
    }
  }
  long double z = 0, e_th = 0, e_th2 = 0, e_ph = 0, e_ph2 = 0;
  for (int i = 0; i < points; ++i) {
    const double th = th_lo + i * h_th;
    const double wi = simpson_weight(i, points);
    for (int k = 0; k < points; ++k) {
      const double ph = ph_lo + k * h_ph;
      const long double w = wi * simpson_weight(k, points) * std::exp(logp[static_cast<std::size_t>(i) * points + k] - mx);
      z += w;
      e_th += w * th;
      e_th2 += w * th * th;
      e_ph += w * ph;
      e_ph2 += w * ph * ph;
    }
  }
  GridPosterior out;
  const double mean_th = static_cast<double>(e_th / z);
  const double var_th = static_cast<double>(e_th2 / z) - mean_th * mean_th;
  const double mean_ph = static_cast<double>(e_ph / z);
  const double var_ph = static_cast<double>(e_ph2 / z) - mean_ph * mean_ph;
  out.m = mean_th;
  out.s = 1.0 / mean_ph;
  out.n = 2.0 / (var_ph * out.s * out.s);
  out.C = var_th * (out.n - 2.0) / out.n;
  out.log_marginal = mx + std::log(static_cast<double>(z) * h_th * h_ph / 9.0);
  return out;
}

// ---------------------------------------------------------------------------
// Student-t density as a scale mixture: y | phi ~ N(f, q/phi), phi ~ Gamma(r/2, rate r/2).
// Integrated over u = log phi with the trapezoid rule.
inline double t_log_density_by_mixture(double y, double f, double q, double r) {
  const int n = 40001;
  const double lo = -40.0, hi = 12.0;
  const double h = (hi - lo) / (n - 1);
  const double log_gamma_const = 0.5 * r * std::log(0.5 * r) - std::lgamma(0.5 * r);
  std::vector<double> lv(n);
  double mx = -INFINITY;
  for (int i = 0; i < n; ++i) {
    const double u = lo + i * h;
    const double phi = std::exp(u);
    const double log_normal = 0.5 * std::log(phi / (2.0 * std::numbers::pi * q)) - 0.5 * phi * (y - f) * (y - f) / q;
    const double log_gamma = log_gamma_const + (0.5 * r - 1.0) * u - 0.5 * r * phi;
    lv[i] = log_normal + log_gamma + u;  // Jacobian dphi = phi du
    mx = std::max(mx, lv[i]);
  }
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += (i == 0 || i == n - 1 ? 0.5 : 1.0) * std::exp(lv[i] - mx);
  return mx + std::log(acc * h);
}

// Integral of exp(logpdf(y)) over the real line via y = f + sqrt(q) tan(u).
template <class LogPdf>
double integrate_real_line(LogPdf&& logpdf, double f, double q, int n = 200001) {
  const double lo = -0.5 * std::numbers::pi, hi = 0.5 * std::numbers::pi;
  const double h = (hi - lo) / (n - 1);
  double acc = 0.0;
  for (int i = 1; i < n - 1; ++i) {
    const double u = lo + i * h;
    const double c = std::cos(u);
    acc += std::exp(logpdf(f + std::sqrt(q) * std::tan(u))) * std::sqrt(q) / (c * c);
  }
  return acc * h;
}

// ---------------------------------------------------------------------------
// Sample moments with standard errors.

struct MomentCheck {
  Vec mean, mean_se;
  Mat cov, cov_se;
};

inline MomentCheck sample_moments(const Mat& draws) {  // N x m
  const double N = static_cast<double>(draws.rows());
  MomentCheck out;
  out.mean = draws.colwise().mean().transpose();
  const Mat c = draws.rowwise() - out.mean.transpose();
  const auto m = draws.cols();
  out.cov = c.transpose() * c / (N - 1.0);
  out.mean_se = (out.cov.diagonal() / N).cwiseSqrt();
  out.cov_se = Mat::Zero(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) {
      const Vec prod = c.col(a).cwiseProduct(c.col(b));
      const double mu = prod.mean();
      const double var = (prod.array() - mu).square().sum() / (N - 1.0);
      out.cov_se(a, b) = std::sqrt(var / N);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sequential sampling of a triangular system. Equation at position p has
// regressors [x; y of parent_series] and Normal-Gamma prior (a, R, r, s):
// phi ~ Gamma(r/2, rate r s/2), theta | phi ~ N(a, R/(s phi)), y = F'theta + N(0, 1/phi).

struct SeqEquation {
  Vec x;
  std::vector<int> parent_series;
  Vec a;
  Mat R;
  double r, s;
};

inline Mat sample_triangular(const std::vector<int>& perm, const std::vector<SeqEquation>& eqs, std::size_t draws,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  const auto m = static_cast<Eigen::Index>(perm.size());
  std::vector<Mat> L;
  std::vector<std::gamma_distribution<double>> gam;
  for (const auto& e : eqs) {
    Eigen::SelfAdjointEigenSolver<Mat> es(e.R);
    L.push_back(es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal());
    gam.emplace_back(0.5 * e.r, 2.0 / (e.r * e.s));
  }
  Mat out(static_cast<Eigen::Index>(draws), m);
  Vec y(m);
  for (std::size_t d = 0; d < draws; ++d) {
    for (std::size_t p = 0; p < perm.size(); ++p) {
      const auto& e = eqs[p];
      const double phi = gam[p](rng);
      Vec w(e.a.size());
      for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = z(rng);
      const Vec theta = e.a + L[p] * w / std::sqrt(e.s * phi);
      Vec F(e.x.size() + static_cast<Eigen::Index>(e.parent_series.size()));
      F.head(e.x.size()) = e.x;
      for (std::size_t k = 0; k < e.parent_series.size(); ++k) F[e.x.size() + static_cast<Eigen::Index>(k)] = y[e.parent_series[k]];
      y[perm[p]] = F.dot(theta) + z(rng) / std::sqrt(phi);
    }
    out.row(static_cast<Eigen::Index>(d)) = y.transpose();
  }
  return out;
}

// Draws from a finite Gaussian mixture.
inline Mat sample_mixture(const std::vector<double>& w, const std::vector<Vec>& f, const std::vector<Mat>& Q,
                          std::size_t draws, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::discrete_distribution<int> pick(w.begin(), w.end());
  std::vector<Mat> L;
  for (const auto& q : Q) L.push_back(Eigen::LLT<Mat>(q).matrixL());
  const auto m = f.front().size();
  Mat out(static_cast<Eigen::Index>(draws), m);
  Vec e(m);
  for (std::size_t d = 0; d < draws; ++d) {
    const int k = pick(rng);
    for (Eigen::Index i = 0; i < m; ++i) e[i] = z(rng);
    out.row(static_cast<Eigen::Index>(d)) = (f[k] + L[k] * e).transpose();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inverse Wishart via Bartlett: Sigma^{-1} ~ W(h, S^{-1}), so E[Sigma] = S/(h - m - 1).
inline Mat draw_inverse_wishart(const Mat& S, double h, std::mt19937_64& rng) {
  const auto m = S.rows();
  std::normal_distribution<double> z(0.0, 1.0);
  const Mat Lv = Eigen::LLT<Mat>(S.inverse()).matrixL();
  Mat A = Mat::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    std::chi_squared_distribution<double> chi(h - static_cast<double>(i));
    A(i, i) = std::sqrt(chi(rng));
    for (Eigen::Index j = 0; j < i; ++j) A(i, j) = z(rng);
  }
  const Mat LA = Lv * A;
  const Mat W = LA * LA.transpose();
  return W.inverse();
}

// log E_Sigma[N(y; 0, Sigma)] with Sigma ~ IW(h, S), by Monte Carlo.
inline double wishart_predictive_log_density_mc(const Vec& y, const Mat& S, double h, std::size_t draws,
                                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double m = static_cast<double>(y.size());
  std::vector<double> lv(draws);
  double mx = -INFINITY;
  for (std::size_t d = 0; d < draws; ++d) {
    const Mat sig = draw_inverse_wishart(S, h, rng);
    Eigen::LLT<Mat> llt(sig);
    const Vec u = llt.matrixL().solve(y);
    const double logdet = 2.0 * Mat(llt.matrixL()).diagonal().array().log().sum();
    lv[d] = -0.5 * m * std::log(2.0 * std::numbers::pi) - 0.5 * logdet - 0.5 * u.squaredNorm();
    mx = std::max(mx, lv[d]);
  }
  double acc = 0.0;
  for (double v : lv) acc += std::exp(v - mx);
  return mx + std::log(acc / static_cast<double>(draws));
}

// ---------------------------------------------------------------------------
// Economic metrics.

// Per-period fee minimising |utility gap| on a uniform grid, annualised in bps.
inline double fee_by_grid_scan(const std::vector<double>& cand, const std::vector<double>& base, double gamma,
                               double ppy, double lo = -0.02, double hi = 0.02, double step = 2e-8) {
  const double k = gamma / (2.0 * (1.0 + gamma));
  const double n = static_cast<double>(cand.size());
  // Sum over t of (R - F) - k (R - F)^2 is a quadratic in F; expanding it
  // keeps the scan cheap while staying independent of the bisection code.
  double s1 = 0, s2 = 0, ub = 0;
  for (double r : cand) {
    s1 += r;
    s2 += r * r;
  }
  for (double r : base) ub += r - k * r * r;
  double best = lo, best_gap = INFINITY;
  const auto steps = static_cast<long>((hi - lo) / step);
  for (long i = 0; i <= steps; ++i) {
    const double F = lo + static_cast<double>(i) * step;
    const double u = (s1 - n * F) - k * (s2 - 2.0 * F * s1 + n * F * F);
    const double gap = std::abs(u - ub);
    if (gap < best_gap) {
      best_gap = gap;
      best = F;
    }
  }
  return best * ppy * 1e4;
}

// Two-pass sample statistics.
inline double sharpe_two_pass(const std::vector<double>& net, const std::vector<double>& rf, double ppy) {
  std::vector<long double> ex;
  for (std::size_t i = 0; i < net.size(); ++i) ex.push_back(static_cast<long double>(net[i]) - 1.0L - rf[i]);
  long double mean = 0;
  for (auto v : ex) mean += v;
  mean /= static_cast<long double>(ex.size());
  long double ss = 0;
  for (auto v : ex) ss += (v - mean) * (v - mean);
  const long double sd = std::sqrt(ss / static_cast<long double>(ex.size() - 1));
  return static_cast<double>(mean / sd * std::sqrt(static_cast<long double>(ppy)));
}

// Normalisation of log weights in extended precision, linear space.
inline std::vector<long double> normalize_linear(const std::vector<double>& logw) {
  std::vector<long double> w;
  long double total = 0;
  for (double v : logw) {
    w.push_back(std::exp(static_cast<long double>(v)));
    total += w.back();
  }
  for (auto& v : w) v /= total;
  return w;
}

}  // namespace oracle
