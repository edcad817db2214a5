#pragma once

// Dynamic ordering learning over a universe of orderings.
//
// Equation banks are keyed by (series, parent set): the model for series j
// with parents S is the same in every ordering that places exactly S above
// j, so it is filtered once and shared. Parents are always laid out in
// ascending series order inside the regressor vector.

#include "dol/equation_bank.hpp"
#include "dol/errors.hpp"
#include "dol/linalg.hpp"
#include "dol/ordering.hpp"
#include "dol/parallel.hpp"
#include "dol/recouple.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dol {

struct EngineConfig {
  std::vector<double> alpha_grid{1.0};
  // Forgetting factor for per-equation model probabilities; unset means
  // "use the ordering-level alpha selected this period".
  std::optional<double> alpha_model;
  // Average candidates within each equation instead of selecting one.
  bool equation_averaging = false;
  unsigned jobs = 0;  // 0 = hardware concurrency
};

using InitialStateFn =
    std::function<NormalGammaState(int series, std::span<const int> parents, const ModelSpec& spec)>;

struct EngineStep {
  std::size_t alpha_index = 0;
  double alpha_used = 1.0;
  JointForecast doa;
  JointForecast dos;
  std::vector<JointForecast> per_ordering;  // log_density at the realised y
  Vector log_predicted;  // under alpha_used, before observing y
  Vector log_posterior;  // under alpha_used, after observing y
  int top_posterior = 0;  // argmax of log_posterior
};

class DolEngine {
 public:
  DolEngine(int series_count, std::vector<Ordering> orderings,
            std::vector<std::vector<ModelSpec>> candidates, const InitialStateFn& init,
            EngineConfig cfg)
      : m_(series_count), orderings_(std::move(orderings)), cfg_(std::move(cfg)) {
    if (m_ <= 0) throw ConfigError("engine: series count must be positive");
    if (orderings_.empty()) throw ConfigError("engine: empty ordering universe");
    if (static_cast<int>(candidates.size()) != m_) {
      throw ConfigError("engine: one candidate list per series required");
    }
    if (cfg_.alpha_grid.empty()) throw ConfigError("engine: alpha grid is empty");
    for (double a : cfg_.alpha_grid) {
      if (!(a > 0.0 && a <= 1.0)) throw ConfigError("engine: alpha grid values must lie in (0, 1]");
    }
    if (cfg_.alpha_model && !(*cfg_.alpha_model > 0.0 && *cfg_.alpha_model <= 1.0)) {
      throw ConfigError("engine: alpha_model must lie in (0, 1]");
    }
    if (cfg_.jobs == 0) cfg_.jobs = default_jobs();

    std::map<std::pair<int, std::vector<int>>, std::size_t> index;
    bank_of_.resize(orderings_.size());
    for (std::size_t o = 0; o < orderings_.size(); ++o) {
      const auto& perm = orderings_[o].permutation;
      if (!is_permutation_of_n(perm, m_)) {
        throw ConfigError("engine: ordering " + format_permutation(perm) + " is not a permutation");
      }
      for (std::size_t pos = 0; pos < perm.size(); ++pos) {
        std::vector<int> parents(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(pos));
        std::sort(parents.begin(), parents.end());
        auto key = std::make_pair(perm[pos], parents);
        auto it = index.find(key);
        if (it == index.end()) {
          it = index.emplace(key, slots_.size()).first;
          slots_.push_back(Slot{perm[pos], std::move(parents), {}});
        }
        bank_of_[o].push_back(it->second);
      }
    }
    // Banks are built in first-use order, which is deterministic.
    for (auto& slot : slots_) {
      std::vector<Candidate> cands;
      for (const auto& spec : candidates[static_cast<std::size_t>(slot.series)]) {
        cands.push_back(Candidate{spec, init(slot.series, slot.parents, spec)});
      }
      slot.bank = make_bank(slot.series, slot.parents, std::move(cands));
    }

    const auto k = static_cast<Eigen::Index>(orderings_.size());
    const Vector uniform = Vector::Constant(k, -std::log(static_cast<double>(k)));
    for (double a : cfg_.alpha_grid) tracks_.push_back(AlphaTrack{a, uniform, {}, 0.0});
  }

  EngineStep step(std::span<const double> y, std::span<const double> predictors) {
    if (static_cast<int>(y.size()) != m_) throw ConfigError("engine: observation length mismatch");
    for (double v : y) {
      if (!std::isfinite(v)) throw DataError("engine: non-finite observation");
    }
    EngineStep out;
    out.alpha_index = select_alpha(tracks_);
    out.alpha_used = tracks_[out.alpha_index].alpha;
    const double alpha_model = cfg_.alpha_model.value_or(out.alpha_used);

    // Filter every shared bank.
    std::vector<EquationStep> steps(slots_.size());
    std::vector<std::vector<EquationComponent>> comps(slots_.size());
    std::vector<WarningLog> logs(slots_.size());
    parallel_for(slots_.size(), cfg_.jobs, [&](std::size_t b) {
      auto& slot = slots_[b];
      std::vector<double> parent_values;
      parent_values.reserve(slot.parents.size());
      for (int p : slot.parents) parent_values.push_back(y[static_cast<std::size_t>(p)]);
      slot.bank.alpha_model = alpha_model;
      steps[b] = step_equation(std::move(slot.bank), predictors, parent_values,
                               y[static_cast<std::size_t>(slot.series)], &logs[b]);
      slot.bank = std::move(steps[b].bank);
      const auto& bank = slot.bank;
      auto component = [&](std::size_t c, double w) {
        const auto& spec = bank.candidates[c].spec;
        return EquationComponent{regressors(spec, predictors, {}), steps[b].priors[c], slot.parents, w};
      };
      if (cfg_.equation_averaging) {
        for (std::size_t c = 0; c < bank.candidates.size(); ++c) {
          comps[b].push_back(component(c, std::exp(steps[b].predicted_log_probs[static_cast<Eigen::Index>(c)])));
        }
      } else {
        comps[b].push_back(component(static_cast<std::size_t>(steps[b].best_index), 1.0));
      }
    });
    for (auto& l : logs) warnings_.insert(warnings_.end(), l.begin(), l.end());

    // Recouple each ordering.
    const auto k = static_cast<Eigen::Index>(orderings_.size());
    out.per_ordering.resize(orderings_.size());
    Vector joint_ll(k);
    parallel_for(orderings_.size(), cfg_.jobs, [&](std::size_t o) {
      const auto& perm = orderings_[o].permutation;
      std::vector<std::span<const EquationComponent>> per_position;
      per_position.reserve(perm.size());
      double ll = 0.0;
      for (std::size_t pos = 0; pos < perm.size(); ++pos) {
        const std::size_t b = bank_of_[o][pos];
        per_position.emplace_back(comps[b]);
        ll += cfg_.equation_averaging ? steps[b].mixture_log_density : steps[b].best.log_density;
      }
      JointForecast jf = joint_moments(perm, per_position);
      jf.log_density = ll;
      jf.ordering_id = orderings_[o].id;
      joint_ll[static_cast<Eigen::Index>(o)] = ll;
      out.per_ordering[o] = std::move(jf);
    });

    // Probability recursions for every alpha; densities are shared.
    for (std::size_t a = 0; a < tracks_.size(); ++a) {
      auto& tr = tracks_[a];
      Vector pred = predict_probabilities(tr.log_posterior, tr.alpha);
      const auto top = argmax_first(pred);
      tr.top_orderings.push_back(static_cast<int>(top));
      tr.cumulative_log_likelihood += joint_ll[top];
      tr.log_posterior = update_probabilities(pred, joint_ll);
      if (a == out.alpha_index) {
        out.log_predicted = std::move(pred);
        out.log_posterior = tr.log_posterior;
      }
    }

    out.doa = doa_combine(out.log_predicted, out.per_ordering, &warnings_);
    out.dos = dos_select(out.log_predicted, out.per_ordering);
    out.top_posterior = static_cast<int>(argmax_first(out.log_posterior));
    ++periods_;
    return out;
  }

  const std::vector<Ordering>& orderings() const { return orderings_; }
  const std::vector<AlphaTrack>& alpha_tracks() const { return tracks_; }
  const WarningLog& warnings() const { return warnings_; }
  std::size_t bank_count() const { return slots_.size(); }
  int series_count() const { return m_; }
  int periods() const { return periods_; }

  // Bank serving `position` of ordering `o`.
  const EquationBank& bank(std::size_t o, std::size_t position) const {
    return slots_[bank_of_[o][position]].bank;
  }

 private:
  struct Slot {
    int series = 0;
    std::vector<int> parents;  // ascending
    EquationBank bank;
  };

  int m_;
  std::vector<Ordering> orderings_;
  EngineConfig cfg_;
  std::vector<Slot> slots_;
  std::vector<std::vector<std::size_t>> bank_of_;
  std::vector<AlphaTrack> tracks_;
  WarningLog warnings_;
  int periods_ = 0;
};

}  // namespace dol
