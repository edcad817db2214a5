#pragma once

// Ordering universe, dynamic ordering probabilities with forgetting,
// adaptive forgetting-factor selection and DOA/DOS forecast combination.

#include "dol/equation_bank.hpp"
#include "dol/errors.hpp"
#include "dol/linalg.hpp"
#include "dol/recouple.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace dol {

struct Ordering {
  Permutation permutation;
  int id = 0;
};

struct OrderingUniverse {
  enum class Mode { Full, Grouped, Explicit };

  Mode mode = Mode::Full;
  int series_count = 0;
  std::vector<std::vector<int>> groups;  // Grouped: fixed order inside each group
  std::vector<Permutation> explicit_list;  // Explicit
  std::size_t cap = 5040;
};

inline bool is_permutation_of_n(const Permutation& p, int n) {
  if (static_cast<int>(p.size()) != n) return false;
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (int v : p) {
    if (v < 0 || v >= n || seen[static_cast<std::size_t>(v)]) return false;
    seen[static_cast<std::size_t>(v)] = true;
  }
  return true;
}

inline std::string format_permutation(const Permutation& p) {
  std::string s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) s += '-';
    s += std::to_string(p[i]);
  }
  return s;
}

namespace detail {

inline std::size_t factorial_capped(std::size_t n, std::size_t cap) {
  std::size_t f = 1;
  for (std::size_t i = 2; i <= n; ++i) {
    f *= i;
    if (f > cap) return cap + 1;
  }
  return f;
}

}  // namespace detail

// Orderings sorted lexicographically; id is the rank within the universe.
inline std::vector<Ordering> enumerate_orderings(const OrderingUniverse& u) {
  std::vector<Permutation> perms;
  const int m = u.series_count;
  if (m <= 0) throw ConfigError("ordering universe: series_count must be positive");

  switch (u.mode) {
    case OrderingUniverse::Mode::Full: {
      const std::size_t count = detail::factorial_capped(static_cast<std::size_t>(m), u.cap);
      if (count > u.cap) {
        throw ConfigError("ordering universe: " + std::to_string(m) +
                          "! orderings exceed the configured cap of " + std::to_string(u.cap));
      }
      Permutation p(static_cast<std::size_t>(m));
      std::iota(p.begin(), p.end(), 0);
      do {
        perms.push_back(p);
      } while (std::next_permutation(p.begin(), p.end()));
      break;
    }
    case OrderingUniverse::Mode::Grouped: {
      Permutation flat;
      for (const auto& g : u.groups) flat.insert(flat.end(), g.begin(), g.end());
      if (!is_permutation_of_n(flat, m)) {
        throw ConfigError("ordering universe: groups must partition the series");
      }
      const std::size_t count = detail::factorial_capped(u.groups.size(), u.cap);
      if (count > u.cap) {
        throw ConfigError("ordering universe: group permutations exceed the configured cap of " +
                          std::to_string(u.cap));
      }
      std::vector<int> order(u.groups.size());
      std::iota(order.begin(), order.end(), 0);
      do {
        Permutation p;
        for (int g : order) {
          const auto& grp = u.groups[static_cast<std::size_t>(g)];
          p.insert(p.end(), grp.begin(), grp.end());
        }
        perms.push_back(std::move(p));
      } while (std::next_permutation(order.begin(), order.end()));
      break;
    }
    case OrderingUniverse::Mode::Explicit: {
      if (u.explicit_list.empty()) throw ConfigError("ordering universe: explicit list is empty");
      if (u.explicit_list.size() > u.cap) {
        throw ConfigError("ordering universe: explicit list exceeds the configured cap of " +
                          std::to_string(u.cap));
      }
      for (const auto& p : u.explicit_list) {
        if (!is_permutation_of_n(p, m)) {
          throw ConfigError("ordering universe: '" + format_permutation(p) +
                            "' is not a permutation of " + std::to_string(m) + " series");
        }
      }
      perms = u.explicit_list;
      break;
    }
  }
  std::sort(perms.begin(), perms.end());
  if (std::adjacent_find(perms.begin(), perms.end()) != perms.end()) {
    throw ConfigError("ordering universe: duplicate ordering");
  }
  std::vector<Ordering> out;
  out.reserve(perms.size());
  for (std::size_t i = 0; i < perms.size(); ++i) {
    out.push_back(Ordering{std::move(perms[i]), static_cast<int>(i)});
  }
  return out;
}

struct OrderingProbabilities {
  Vector log_predicted;
  Vector log_posterior;
  double alpha_used = 1.0;
  std::vector<double> alpha_grid;
};

inline Vector predict_probabilities(const Vector& log_posterior_prev, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ConfigError("forgetting factor alpha must lie in (0, 1]");
  }
  return forget_log_probs(log_posterior_prev, alpha);
}

inline Vector update_probabilities(const Vector& log_predicted, const Vector& joint_log_densities) {
  if (log_predicted.size() != joint_log_densities.size()) {
    throw ConfigError("update_probabilities: length mismatch");
  }
  Vector out = log_predicted + joint_log_densities;
  const double norm = logsumexp(out);
  if (!std::isfinite(norm)) {
    throw NumericalError("update_probabilities: every ordering has zero predictive density");
  }
  out.array() -= norm;
  return out;
}

// Bookkeeping for one forgetting factor: its own probability recursion and the
// running log predictive likelihood of the ordering it ranked first each period.
struct AlphaTrack {
  double alpha = 1.0;
  Vector log_posterior;
  std::vector<int> top_orderings;
  double cumulative_log_likelihood = 0.0;
};

// Index of the track whose top-ranked orderings scored best so far; ties and
// the empty history go to the largest alpha.
inline std::size_t select_alpha(std::span<const AlphaTrack> tracks) {
  if (tracks.empty()) throw ConfigError("select_alpha: empty alpha grid");
  std::size_t best = 0;
  for (std::size_t i = 1; i < tracks.size(); ++i) {
    const auto& a = tracks[i];
    const auto& b = tracks[best];
    if (a.cumulative_log_likelihood > b.cumulative_log_likelihood ||
        (a.cumulative_log_likelihood == b.cumulative_log_likelihood && a.alpha > b.alpha)) {
      best = i;
    }
  }
  return best;
}

inline JointForecast doa_combine(const Vector& log_predicted, std::span<const JointForecast> forecasts,
                                 WarningLog* warnings = nullptr) {
  if (forecasts.empty() || static_cast<std::size_t>(log_predicted.size()) != forecasts.size()) {
    throw ConfigError("doa_combine: probability and forecast counts differ");
  }
  const Eigen::Index m = forecasts.front().f.size();
  JointForecast out;
  out.f = Vector::Zero(m);
  out.Q = Matrix::Zero(m, m);
  Vector weighted_ll(log_predicted.size());
  bool have_density = true;
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    const double w = std::exp(log_predicted[static_cast<Eigen::Index>(i)]);
    out.f += w * forecasts[i].f;
    weighted_ll[static_cast<Eigen::Index>(i)] =
        log_predicted[static_cast<Eigen::Index>(i)] + forecasts[i].log_density;
    if (std::isnan(forecasts[i].log_density)) have_density = false;
  }
  // Q = sum_i w_i (Q_i + (f_i - f)(f_i - f)'), the stable form of the mixture covariance.
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    const double w = std::exp(log_predicted[static_cast<Eigen::Index>(i)]);
    const Vector dev = forecasts[i].f - out.f;
    out.Q += w * (forecasts[i].Q + dev * dev.transpose());
  }
  symmetrize(out.Q);
  if (!is_psd(out.Q, 1e-8)) {
    warn(warnings, "doa_combine", "mixture covariance projected to PSD");
    out.Q = project_psd(out.Q);
  }
  if (forecasts.size() == 1) out.ordering_id = forecasts.front().ordering_id;
  out.log_density = have_density ? logsumexp(weighted_ll) : std::numeric_limits<double>::quiet_NaN();
  return out;
}

inline JointForecast dos_select(const Vector& log_predicted, std::span<const JointForecast> forecasts) {
  if (forecasts.empty() || static_cast<std::size_t>(log_predicted.size()) != forecasts.size()) {
    throw ConfigError("dos_select: probability and forecast counts differ");
  }
  return forecasts[static_cast<std::size_t>(argmax_first(log_predicted))];
}

}  // namespace dol
