#pragma once

// Per-equation candidate models (predictor subset x discount pair) with
// dynamic model probabilities and Dynamic Model Selection.

#include "dol/dlm.hpp"
#include "dol/errors.hpp"
#include "dol/linalg.hpp"

#include <algorithm>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dol {

struct ModelSpec {
  std::vector<int> predictor_ids;  // columns of the predictor row
  DiscountPair disc;

  void validate() const {
    std::set<int> seen(predictor_ids.begin(), predictor_ids.end());
    if (seen.size() != predictor_ids.size()) {
      throw ConfigError("ModelSpec: duplicate predictor id");
    }
    disc.validate();
  }
};

struct Candidate {
  ModelSpec spec;
  NormalGammaState state;  // over [predictors; parents]
};

struct EquationBank {
  int equation_id = 0;
  std::vector<int> parent_ids;  // series ids, in regressor order
  std::vector<Candidate> candidates;
  Vector log_model_probs;  // normalised posterior model probabilities
  double alpha_model = 1.0;
};

inline EquationBank make_bank(int equation_id, std::vector<int> parent_ids,
                              std::vector<Candidate> candidates, double alpha_model = 1.0) {
  if (candidates.empty()) {
    throw ConfigError("equation " + std::to_string(equation_id) + ": empty candidate list");
  }
  EquationBank bank;
  bank.equation_id = equation_id;
  bank.parent_ids = std::move(parent_ids);
  bank.candidates = std::move(candidates);
  const auto k = static_cast<Eigen::Index>(bank.candidates.size());
  bank.log_model_probs = Vector::Constant(k, -std::log(static_cast<double>(k)));
  bank.alpha_model = alpha_model;
  for (const auto& c : bank.candidates) {
    c.spec.validate();
    const auto expected = static_cast<Eigen::Index>(c.spec.predictor_ids.size() + bank.parent_ids.size());
    if (c.state.dim() != expected) {
      throw ConfigError("equation " + std::to_string(equation_id) +
                        ": candidate state dimension does not match predictors + parents");
    }
  }
  return bank;
}

// F = [predictors(spec); parent values].
inline Vector regressors(const ModelSpec& spec, std::span<const double> predictors,
                         std::span<const double> parent_values) {
  Vector F(static_cast<Eigen::Index>(spec.predictor_ids.size() + parent_values.size()));
  Eigen::Index k = 0;
  for (int id : spec.predictor_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= predictors.size()) {
      throw ConfigError("predictor id " + std::to_string(id) + " not present in predictor row");
    }
    F[k++] = predictors[static_cast<std::size_t>(id)];
  }
  for (double v : parent_values) F[k++] = v;
  return F;
}

struct EquationStep {
  EquationBank bank;  // updated
  Eigen::Index best_index = 0;
  UnivariateForecast best;  // log_density filled at the realised y
  double best_log_prob = 0.0;  // posterior log model probability of `best`
  Vector predicted_log_probs;
  std::vector<PriorState> priors;  // per candidate, before observing y
  std::vector<UnivariateForecast> forecasts;  // per candidate, with log densities
  double mixture_log_density = 0.0;  // log sum_k pi_k p_k(y), for equation-level averaging
};

// Forgetting recursion on a log-probability vector (also used for orderings).
inline Vector forget_log_probs(const Vector& log_post, double alpha) {
  Vector out = alpha * log_post;
  out.array() -= logsumexp(out);
  return out;
}

inline Vector bayes_log_probs(const Vector& log_pred, const Vector& log_dens) {
  Vector out = log_pred + log_dens;
  const double norm = logsumexp(out);
  if (!std::isfinite(norm)) {
    throw NumericalError("model probability update: every candidate has zero density");
  }
  out.array() -= norm;
  return out;
}

inline EquationStep step_equation(EquationBank bank, std::span<const double> predictors,
                                  std::span<const double> parent_values, double y,
                                  WarningLog* warnings = nullptr) {
  if (bank.candidates.empty()) {
    throw ConfigError("equation " + std::to_string(bank.equation_id) + ": empty candidate list");
  }
  if (parent_values.size() != bank.parent_ids.size()) {
    throw ConfigError("equation " + std::to_string(bank.equation_id) +
                      ": parent value count does not match parent ids");
  }
  const auto k = static_cast<Eigen::Index>(bank.candidates.size());
  const bool observed = std::isfinite(y);
  EquationStep out;
  out.priors.reserve(bank.candidates.size());
  out.forecasts.reserve(bank.candidates.size());
  Vector log_dens(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    auto& cand = bank.candidates[static_cast<std::size_t>(i)];
    PriorState prior = evolve_prior(cand.state, cand.spec.disc);
    const Vector F = regressors(cand.spec, predictors, parent_values);
    UnivariateForecast fc = forecast(prior, F, warnings);
    if (observed) {
      fc.log_density = log_predictive_density(fc, y);
      cand.state = update(prior, F, y, warnings);
    } else {
      cand.state = skip_update(prior);
    }
    log_dens[i] = fc.log_density;
    out.priors.push_back(std::move(prior));
    out.forecasts.push_back(fc);
  }

  out.predicted_log_probs = forget_log_probs(bank.log_model_probs, bank.alpha_model);
  out.best_index = argmax_first(out.predicted_log_probs);
  // A missing observation carries the predicted probabilities forward.
  bank.log_model_probs =
      observed ? bayes_log_probs(out.predicted_log_probs, log_dens) : out.predicted_log_probs;

  out.best = out.forecasts[static_cast<std::size_t>(out.best_index)];
  out.best_log_prob = bank.log_model_probs[out.best_index];
  if (observed) {
    Vector mix = out.predicted_log_probs + log_dens;
    out.mixture_log_density = logsumexp(mix);
  } else {
    out.mixture_log_density = std::numeric_limits<double>::quiet_NaN();
  }
  out.bank = std::move(bank);
  return out;
}

// Sum of per-equation log predictive densities of the selected models.
inline double best_joint_log_density(std::span<const std::pair<UnivariateForecast, double>> bests) {
  double total = 0.0;
  for (const auto& [fc, y] : bests) total += log_predictive_density(fc, y);
  return total;
}

}  // namespace dol
