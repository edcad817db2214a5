#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace dol {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline void symmetrize(Matrix& x) { x = (0.5 * (x + x.transpose())).eval(); }

inline bool all_finite(const Matrix& x) { return x.allFinite(); }

// PSD test with tolerance relative to the trace: every eigenvalue must be
// >= -tol * trace. Uses a pivoted LDLT first, which is exact in inertia, and
// only falls back to an eigendecomposition near the boundary.
inline bool is_psd(const Matrix& x, double tol = 1e-10) {
  if (x.size() == 0) return true;
  const double trace = std::max(x.trace(), 0.0);
  const double bound = -tol * std::max(trace, std::numeric_limits<double>::min());
  Eigen::LDLT<Matrix> ldlt(x);
  if (ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() >= 0.0) return true;
  Eigen::SelfAdjointEigenSolver<Matrix> es(x, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= bound;
}

// Nearest PSD matrix in Frobenius norm: clip negative eigenvalues to zero.
inline Matrix project_psd(const Matrix& x) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (x + x.transpose()));
  Vector ev = es.eigenvalues().cwiseMax(0.0);
  Matrix out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  symmetrize(out);
  return out;
}

inline double symmetry_error(const Matrix& x) {
  if (x.size() == 0) return 0.0;
  const double scale = std::max(x.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  return (x - x.transpose()).cwiseAbs().maxCoeff() / scale;
}

inline double logsumexp(std::span<const double> v) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : v) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

inline double logsumexp(const Vector& v) {
  return logsumexp(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

// Index of the maximum; ties resolve to the lowest index.
inline Eigen::Index argmax_first(const Vector& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace dol
