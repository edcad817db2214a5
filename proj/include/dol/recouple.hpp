#pragma once

// Joint one-step predictive moments of the full system, recovered from the
// per-equation Student-t forecasts by recursing down the triangular ordering.
// The contemporaneous parents are integrated out, so the moments are those
// of the sequential sampling scheme y_1 -> y_2 | y_1 -> ... .

#include "dol/dlm.hpp"
#include "dol/errors.hpp"
#include "dol/linalg.hpp"

#include <algorithm>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace dol {

using Permutation = std::vector<int>;

struct JointForecast {
  Vector f;  // predictive mean, original series indexing
  Matrix Q;  // predictive covariance, original series indexing
  double log_density = std::numeric_limits<double>::quiet_NaN();
  int ordering_id = -1;
};

// One mixture component of one equation's prior. The regressor vector is
// [x; parents], with `parent_series` naming the series behind each parent
// slot (any order, but the set must equal the series placed above the
// equation). DMS passes a single component with weight 1.
struct EquationComponent {
  Vector x;  // predictor values
  PriorState prior;
  std::vector<int> parent_series;
  double weight = 1.0;
};

inline JointForecast joint_moments(std::span<const int> permutation,
                                   std::span<const std::span<const EquationComponent>> per_position) {
  const auto m = static_cast<Eigen::Index>(permutation.size());
  if (per_position.size() != permutation.size()) {
    throw ConfigError("joint_moments: one component list per ordering position required");
  }
  JointForecast out;
  out.f = Vector::Zero(m);
  out.Q = Matrix::Zero(m, m);

  for (Eigen::Index pos = 0; pos < m; ++pos) {
    const int j = permutation[static_cast<std::size_t>(pos)];
    const auto& comps = per_position[static_cast<std::size_t>(pos)];
    if (comps.empty()) throw ConfigError("joint_moments: equation without components");

    double f_j = 0.0;
    std::vector<double> f_comp;
    std::vector<double> q_comp;
    Vector cross = Vector::Zero(pos);
    std::vector<int> above(permutation.begin(), permutation.begin() + pos);

    for (const auto& c : comps) {
      const auto p = static_cast<Eigen::Index>(c.parent_series.size());
      const Eigen::Index k = c.x.size();
      if (p != pos || c.prior.dim() != k + p) {
        throw ConfigError("joint_moments: equation for series " + std::to_string(j) +
                          " has mismatched block dimensions");
      }
      if (!(c.prior.r > 2.0)) {
        throw NumericalError("joint_moments: predictive variance undefined for series " +
                             std::to_string(j) + " (dof <= 2)");
      }
      // Parent moments in this component's slot order.
      Vector f_par(p);
      Matrix Q_par(p, p);
      for (Eigen::Index u = 0; u < p; ++u) {
        const int su = c.parent_series[static_cast<std::size_t>(u)];
        f_par[u] = out.f[su];
        for (Eigen::Index v = 0; v < p; ++v) {
          Q_par(u, v) = out.Q(su, c.parent_series[static_cast<std::size_t>(v)]);
        }
      }
      const auto a_b = c.prior.a.head(k);
      const auto a_g = c.prior.a.tail(p);
      const auto R_b = c.prior.R.topLeftCorner(k, k);
      const auto R_bg = c.prior.R.topRightCorner(k, p);
      const auto R_g = c.prior.R.bottomRightCorner(p, p);

      const double f_k = c.x.dot(a_b) + f_par.dot(a_g);
      const double u = f_par.dot(R_g * f_par) + (R_g * Q_par).trace() +
                       2.0 * c.x.dot(R_bg * f_par) + c.x.dot(R_b * c.x);
      const double dof_ratio = c.prior.r / (c.prior.r - 2.0);
      const double q_k = dof_ratio * (c.prior.s_prev + u) + a_g.dot(Q_par * a_g);

      f_j += c.weight * f_k;
      f_comp.push_back(f_k);
      q_comp.push_back(q_k);

      // Cross-covariance with each parent, mapped onto `above` order.
      const Vector cov_slots = Q_par * a_g;
      for (Eigen::Index u2 = 0; u2 < p; ++u2) {
        const int su = c.parent_series[static_cast<std::size_t>(u2)];
        const auto it = std::find(above.begin(), above.end(), su);
        if (it == above.end()) {
          throw ConfigError("joint_moments: parent of series " + std::to_string(j) +
                            " is not above it in the ordering");
        }
        cross[it - above.begin()] += c.weight * cov_slots[u2];
      }
    }
    out.f[j] = f_j;
    // Mixture variance: sum_k w_k (q_k + (f_k - f)^2).
    double q_j = 0.0;
    for (std::size_t c = 0; c < comps.size(); ++c) {
      const double dev = f_comp[c] - f_j;
      q_j += comps[c].weight * (q_comp[c] + dev * dev);
    }
    out.Q(j, j) = q_j;
    for (Eigen::Index u = 0; u < pos; ++u) {
      const int su = above[static_cast<std::size_t>(u)];
      out.Q(j, su) = cross[u];
      out.Q(su, j) = cross[u];
    }
  }
  return out;
}

inline double joint_log_density(std::span<const double> per_equation) {
  double total = 0.0;
  for (double v : per_equation) total += v;
  return total;
}

}  // namespace dol
