#pragma once

// Statistical comparison of forecasting models against a benchmark.

#include "dol/errors.hpp"
#include "dol/linalg.hpp"

#include <span>
#include <string>
#include <vector>

namespace dol {

struct EvalSeries {
  std::string label;
  std::vector<Vector> squared_errors;  // per period, per series
  std::vector<double> log_densities;   // per period, joint

  void add(const Vector& forecast_mean, const Vector& realised, double joint_log_density) {
    squared_errors.push_back((realised - forecast_mean).array().square().matrix());
    log_densities.push_back(joint_log_density);
  }

  // Per-series mean squared forecast error.
  Vector msfe() const {
    if (squared_errors.empty()) return {};
    Vector acc = Vector::Zero(squared_errors.front().size());
    for (const auto& e : squared_errors) acc += e;
    return acc / static_cast<double>(squared_errors.size());
  }
};

inline double msfe_ratio(const EvalSeries& candidate, const EvalSeries& baseline) {
  if (candidate.squared_errors.size() != baseline.squared_errors.size() ||
      candidate.squared_errors.empty()) {
    throw ConfigError("msfe_ratio: horizons differ or are empty");
  }
  const Vector c = candidate.msfe();
  const Vector b = baseline.msfe();
  if (c.size() != b.size()) throw ConfigError("msfe_ratio: series sets differ");
  const double denom = b.sum();
  if (!(denom > 0.0)) throw NumericalError("msfe_ratio: baseline MSFE is zero");
  return c.sum() / denom;
}

inline std::vector<double> accumulated_lpl(const EvalSeries& candidate, const EvalSeries& baseline) {
  if (candidate.log_densities.size() != baseline.log_densities.size()) {
    throw ConfigError("accumulated_lpl: horizons differ");
  }
  std::vector<double> out;
  out.reserve(candidate.log_densities.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < candidate.log_densities.size(); ++t) {
    acc += candidate.log_densities[t] - baseline.log_densities[t];
    out.push_back(acc);
  }
  return out;
}

// Positive means the candidate beats the baseline in density forecasting.
inline double lpdr(const EvalSeries& candidate, const EvalSeries& baseline) {
  const auto path = accumulated_lpl(candidate, baseline);
  return path.empty() ? 0.0 : path.back();
}

}  // namespace dol
