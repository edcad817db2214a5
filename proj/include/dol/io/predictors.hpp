#pragma once

// Predictor construction. Every table is aligned to the target rows: row t
// holds the predictor values used to forecast observation t, computed from
// data through t-1. Cells without enough history are NaN.

#include "dol/errors.hpp"
#include "dol/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace dol::io {

struct PredictorTable {
  std::vector<std::string> names;
  std::vector<int> series;    // source series per column
  std::vector<int> lookback;  // momentum look-back or lag order
  Matrix values;              // rows x columns, NaN where unavailable

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }

  // First row from which every column is available.
  Eigen::Index first_complete_row() const {
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
      if (values.row(r).allFinite()) return r;
    }
    return values.rows();
  }

  void append(const PredictorTable& other) {
    if (values.size() != 0 && other.rows() != rows()) throw ConfigError("predictor tables differ in length");
    names.insert(names.end(), other.names.begin(), other.names.end());
    series.insert(series.end(), other.series.begin(), other.series.end());
    lookback.insert(lookback.end(), other.lookback.begin(), other.lookback.end());
    Matrix merged(other.rows(), cols() + other.cols());
    if (cols() > 0) merged.leftCols(cols()) = values;
    merged.rightCols(other.cols()) = other.values;
    values = std::move(merged);
  }
};

constexpr double kUnavailable = std::numeric_limits<double>::quiet_NaN();

// Price levels P_0..P_T for T target returns; return t is P_{t+1}/P_t - 1.
// Row t of the result holds P_t / P_{t-l} - 1 (momentum known at the start of period t).
inline PredictorTable build_momentum(const Matrix& levels, const std::vector<std::string>& series_names,
                                     const std::vector<int>& lookbacks) {
  if (levels.rows() < 2) throw DataError("momentum: need at least two price levels");
  if (static_cast<Eigen::Index>(series_names.size()) != levels.cols()) {
    throw ConfigError("momentum: one name per series required");
  }
  const Eigen::Index T = levels.rows() - 1;
  PredictorTable out;
  out.values.resize(T, levels.cols() * static_cast<Eigen::Index>(lookbacks.size()));
  Eigen::Index col = 0;
  for (Eigen::Index j = 0; j < levels.cols(); ++j) {
    for (int l : lookbacks) {
      if (l < 1) throw ConfigError("momentum: look-back must be >= 1");
      out.names.push_back(series_names[static_cast<std::size_t>(j)] + "_mom" + std::to_string(l));
      out.series.push_back(static_cast<int>(j));
      out.lookback.push_back(l);
      for (Eigen::Index t = 0; t < T; ++t) {
        out.values(t, col) = t - l >= 0 ? levels(t, j) / levels(t - l, j) - 1.0 : kUnavailable;
      }
      ++col;
    }
  }
  return out;
}

// Cumulative index with P_0 = 1 built from discrete returns, for series
// supplied as returns only.
inline Matrix levels_from_returns(const Matrix& returns) {
  Matrix levels(returns.rows() + 1, returns.cols());
  levels.row(0).setOnes();
  for (Eigen::Index t = 0; t < returns.rows(); ++t) {
    levels.row(t + 1) = levels.row(t).array() * (1.0 + returns.row(t).array());
  }
  return levels;
}

// Row t holds y_{t-l} for l = 1..lags, grouped by series.
inline PredictorTable build_lags(const Matrix& y, const std::vector<std::string>& series_names, int lags) {
  if (lags < 1) throw ConfigError("lags: lag count must be >= 1");
  if (static_cast<Eigen::Index>(series_names.size()) != y.cols()) {
    throw ConfigError("lags: one name per series required");
  }
  PredictorTable out;
  out.values.resize(y.rows(), y.cols() * lags);
  Eigen::Index col = 0;
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    for (int l = 1; l <= lags; ++l) {
      out.names.push_back(series_names[static_cast<std::size_t>(j)] + "_lag" + std::to_string(l));
      out.series.push_back(static_cast<int>(j));
      out.lookback.push_back(l);
      for (Eigen::Index t = 0; t < y.rows(); ++t) out.values(t, col) = t - l >= 0 ? y(t - l, j) : kUnavailable;
      ++col;
    }
  }
  return out;
}

inline PredictorTable build_intercept(Eigen::Index rows) {
  PredictorTable out;
  out.names = {"intercept"};
  out.series = {-1};
  out.lookback = {0};
  out.values = Matrix::Ones(rows, 1);
  return out;
}

// Recomputes one random available cell after blanking every raw row the
// cell is not allowed to see. `visible(t)` is the number of leading raw
// rows that may feed target row t. Throws if the cell changes.
inline void audit_no_lookahead(const Matrix& raw, const PredictorTable& built,
                               const std::function<Matrix(const Matrix&)>& rebuild,
                               const std::function<Eigen::Index(Eigen::Index)>& visible, std::uint64_t seed) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> cells;
  for (Eigen::Index t = 0; t < built.rows(); ++t) {
    for (Eigen::Index c = 0; c < built.cols(); ++c) {
      if (std::isfinite(built.values(t, c))) cells.emplace_back(t, c);
    }
  }
  if (cells.empty()) return;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
  const auto [t, c] = cells[pick(rng)];
  Matrix masked = raw;
  const Eigen::Index keep = std::min(visible(t), raw.rows());
  masked.bottomRows(raw.rows() - keep).setConstant(kUnavailable);
  const Matrix again = rebuild(masked);
  if (!(again(t, c) == built.values(t, c))) {
    throw DataError("no-lookahead audit failed: predictor '" + built.names[static_cast<std::size_t>(c)] +
                    "' at row " + std::to_string(t) + " depends on later data");
  }
}

}  // namespace dol::io
