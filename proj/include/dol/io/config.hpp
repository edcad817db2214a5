#pragma once

// Run configuration: built-in presets overlaid by a YAML file.

#include "dol/benchmark.hpp"
#include "dol/dlm.hpp"
#include "dol/errors.hpp"
#include "dol/io/table.hpp"
#include "dol/ordering.hpp"
#include "dol/portfolio.hpp"
#include "dol/simulate.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dol::io {

struct DataSpec {
  std::string path;
  std::map<std::string, ColumnKind> kinds;
  ColumnKind default_kind = ColumnKind::Return;
  std::vector<std::string> series;  // empty: every column except the riskfree one
  std::string riskfree_column;      // empty: constant riskfree_rate
  double riskfree_rate = 0.0;       // per period
};

struct SyntheticSpec {
  DgpConfig dgp;
  double scale = 1.0;  // observations are scale * simulated values
  std::string start_date = "2000-01-31";
};

struct UniverseSpec {
  std::string mode = "full";  // full | grouped | explicit | truth
  std::vector<std::vector<int>> groups;
  std::vector<Permutation> orderings;
  std::size_t cap = 5040;
};

struct PredictorSpec {
  std::string kind = "lags";  // momentum | lags | none
  std::vector<int> lookbacks;  // momentum
  int lags = 1;
  bool intercept = false;
  // own: one candidate per own-series column; subsets: every subset of the
  // columns; all: a single candidate with every column.
  std::string candidates = "own";

  int max_lookback() const {
    if (kind == "momentum") {
      int mx = 0;
      for (int l : lookbacks) mx = std::max(mx, l);
      return mx;
    }
    return kind == "lags" ? lags : 0;
  }
};

struct PriorSpec {
  bool ols = true;
  double c0 = 100.0;
  double n0 = 10.0;
  std::optional<double> s0;
  bool pin_parents = false;  // parent loadings fixed at zero (diagonal system)
};

struct RunConfig {
  std::string experiment = "custom";  // simulate | portfolio | macro | custom
  std::uint64_t seed = 1;
  std::string output = "out";
  unsigned jobs = 0;
  DataSpec data;
  std::optional<SyntheticSpec> synthetic;
  int training = 24;
  UniverseSpec universe;
  PredictorSpec predictors;
  std::vector<double> delta{0.99, 1.0};
  std::vector<double> kappa{0.96, 1.0};
  std::vector<double> alpha_grid{0.99, 1.0};
  std::optional<double> alpha_model;
  bool equation_averaging = false;
  PriorSpec prior;
  double wrw_kappa = 0.96;
  double wrw_dof_offset = 10.0;
  bool portfolio_enabled = false;
  PortfolioConfig portfolio;
  std::size_t eval_ordering_limit = 24;  // per-ordering rows in eval.tsv up to this universe size

  void validate() const;
};

inline std::vector<double> grid(double from, double to, double step) {
  if (!(step > 0.0) || to < from) throw ConfigError("grid: need from <= to and step > 0");
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((to - from) / step + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(std::round((from + static_cast<double>(i) * step) * 1e10) / 1e10);
  if (std::abs(out.back() - to) > 1e-9) out.push_back(to);
  return out;
}

inline RunConfig preset(const std::string& name) {
  RunConfig c;
  if (name == "simulate") {
    c.experiment = "simulate";
    SyntheticSpec s;  // m = 10, T = 600, blocks of 100
    c.synthetic = s;
    c.training = 24;
    c.universe.mode = "truth";
    c.predictors.kind = "lags";
    c.predictors.lags = 1;
    c.predictors.candidates = "own";
    c.delta = {0.95};
    c.kappa = {0.95};
    c.alpha_grid = {0.95, 0.96, 0.97, 0.98, 0.99, 1.0};
  } else if (name == "portfolio") {
    c.experiment = "portfolio";
    SyntheticSpec s;
    s.dgp.m = 6;
    s.dgp.T = 372;
    s.scale = 0.02;
    c.synthetic = s;
    c.data.riskfree_rate = 0.002;
    c.training = 120;
    c.universe.mode = "full";
    c.predictors.kind = "momentum";
    c.predictors.lookbacks = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
    c.predictors.candidates = "own";
    c.delta = {0.99, 1.0};
    c.kappa = {0.96, 1.0};
    c.alpha_grid = grid(0.99, 1.0, 0.001);
    c.portfolio_enabled = true;
  } else if (name == "macro") {
    c.experiment = "macro";
    SyntheticSpec s;
    s.dgp.m = 3;
    s.dgp.T = 300;
    c.synthetic = s;
    c.training = 40;
    c.universe.mode = "full";
    c.predictors.kind = "lags";
    c.predictors.lags = 2;
    c.predictors.intercept = true;
    c.predictors.candidates = "subsets";
    c.delta = {0.95, 0.99, 1.0};
    c.kappa = {0.95, 0.99, 1.0};
    c.alpha_grid = grid(0.90, 1.0, 0.01);
  } else if (name != "custom") {
    throw ConfigError("preset: unknown preset '" + name + "' (simulate | portfolio | macro)");
  }
  return c;
}

namespace detail {

template <class T>
T scalar(const YAML::Node& n, const std::string& field) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(field + ": invalid value");
  }
}

template <class T>
void read(const YAML::Node& parent, const char* key, T& out, const std::string& prefix) {
  if (const auto n = parent[key]) out = scalar<T>(n, prefix + key);
}

template <class T>
void read_opt(const YAML::Node& parent, const char* key, std::optional<T>& out, const std::string& prefix) {
  if (const auto n = parent[key]) out = scalar<T>(n, prefix + key);
}

inline std::vector<double> read_grid(const YAML::Node& n, const std::string& field) {
  if (n.IsSequence()) return scalar<std::vector<double>>(n, field);
  if (n.IsMap()) {
    if (!n["from"] || !n["to"] || !n["step"]) throw ConfigError(field + ": range needs from, to and step");
    return grid(scalar<double>(n["from"], field + ".from"), scalar<double>(n["to"], field + ".to"),
                scalar<double>(n["step"], field + ".step"));
  }
  return {scalar<double>(n, field)};
}

inline ColumnKind read_kind(const YAML::Node& n, const std::string& field) {
  const auto s = scalar<std::string>(n, field);
  if (s == "price") return ColumnKind::Price;
  if (s == "return") return ColumnKind::Return;
  throw ConfigError(field + ": expected 'price' or 'return', got '" + s + "'");
}

inline void check_keys(const YAML::Node& n, const std::vector<std::string>& allowed, const std::string& where) {
  if (!n.IsMap()) throw ConfigError(where + ": expected a mapping");
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError((where.empty() ? "" : where + ".") + key + ": unknown field");
    }
  }
}

}  // namespace detail

// Overlays `doc` on `base`. The preset named by `preset` (if any) is applied
// by the caller before this.
inline RunConfig apply_yaml(RunConfig c, const YAML::Node& doc) {
  using detail::read;
  if (!doc || doc.IsNull()) return c;
  detail::check_keys(doc,
                     {"preset", "experiment", "seed", "output", "jobs", "data", "synthetic", "training",
                      "universe", "predictors", "discounts", "alpha_grid", "alpha_model", "equation_averaging",
                      "prior", "benchmark", "portfolio", "eval_ordering_limit"},
                     "");
  read(doc, "experiment", c.experiment, "");
  read(doc, "seed", c.seed, "");
  read(doc, "output", c.output, "");
  read(doc, "jobs", c.jobs, "");
  read(doc, "training", c.training, "");
  read(doc, "equation_averaging", c.equation_averaging, "");
  read(doc, "eval_ordering_limit", c.eval_ordering_limit, "");
  detail::read_opt(doc, "alpha_model", c.alpha_model, "");
  if (const auto n = doc["alpha_grid"]) c.alpha_grid = detail::read_grid(n, "alpha_grid");

  if (const auto d = doc["data"]) {
    detail::check_keys(d, {"path", "columns", "default_kind", "series", "riskfree_column", "riskfree_rate"}, "data");
    read(d, "path", c.data.path, "data.");
    read(d, "series", c.data.series, "data.");
    read(d, "riskfree_column", c.data.riskfree_column, "data.");
    read(d, "riskfree_rate", c.data.riskfree_rate, "data.");
    if (const auto k = d["default_kind"]) c.data.default_kind = detail::read_kind(k, "data.default_kind");
    if (const auto cols = d["columns"]) {
      if (!cols.IsMap()) throw ConfigError("data.columns: expected a mapping of column -> price|return");
      for (const auto& kv : cols) {
        const auto name = kv.first.as<std::string>();
        c.data.kinds[name] = detail::read_kind(kv.second, "data.columns." + name);
      }
    }
    if (!c.data.path.empty()) c.synthetic.reset();
  }
  if (const auto s = doc["synthetic"]) {
    detail::check_keys(s,
                       {"m", "T", "block_length", "orderings", "rho", "phi", "log_var_level", "delta_bar",
                        "xi_bar", "beta_sd", "gamma_bound", "scale", "start_date"},
                       "synthetic");
    SyntheticSpec sp = c.synthetic.value_or(SyntheticSpec{});
    auto& g = sp.dgp;
    read(s, "m", g.m, "synthetic.");
    read(s, "T", g.T, "synthetic.");
    read(s, "block_length", g.block_length, "synthetic.");
    read(s, "orderings", g.orderings, "synthetic.");
    read(s, "rho", g.rho, "synthetic.");
    read(s, "phi", g.phi, "synthetic.");
    read(s, "log_var_level", g.log_var_level, "synthetic.");
    detail::read_opt(s, "delta_bar", g.delta_bar, "synthetic.");
    detail::read_opt(s, "xi_bar", g.xi_bar, "synthetic.");
    read(s, "beta_sd", g.beta_sd, "synthetic.");
    read(s, "gamma_bound", g.gamma_bound, "synthetic.");
    read(s, "scale", sp.scale, "synthetic.");
    read(s, "start_date", sp.start_date, "synthetic.");
    c.synthetic = sp;
    c.data.path.clear();
  }
  if (const auto u = doc["universe"]) {
    detail::check_keys(u, {"mode", "groups", "orderings", "cap"}, "universe");
    read(u, "mode", c.universe.mode, "universe.");
    read(u, "groups", c.universe.groups, "universe.");
    read(u, "orderings", c.universe.orderings, "universe.");
    read(u, "cap", c.universe.cap, "universe.");
  }
  if (const auto p = doc["predictors"]) {
    detail::check_keys(p, {"kind", "lookbacks", "lags", "intercept", "candidates"}, "predictors");
    read(p, "kind", c.predictors.kind, "predictors.");
    read(p, "lookbacks", c.predictors.lookbacks, "predictors.");
    read(p, "lags", c.predictors.lags, "predictors.");
    read(p, "intercept", c.predictors.intercept, "predictors.");
    read(p, "candidates", c.predictors.candidates, "predictors.");
  }
  if (const auto d = doc["discounts"]) {
    detail::check_keys(d, {"delta", "kappa"}, "discounts");
    if (const auto n = d["delta"]) c.delta = detail::read_grid(n, "discounts.delta");
    if (const auto n = d["kappa"]) c.kappa = detail::read_grid(n, "discounts.kappa");
  }
  if (const auto p = doc["prior"]) {
    detail::check_keys(p, {"ols", "c0", "n0", "s0", "pin_parents"}, "prior");
    read(p, "ols", c.prior.ols, "prior.");
    read(p, "c0", c.prior.c0, "prior.");
    read(p, "n0", c.prior.n0, "prior.");
    detail::read_opt(p, "s0", c.prior.s0, "prior.");
    read(p, "pin_parents", c.prior.pin_parents, "prior.");
  }
  if (const auto b = doc["benchmark"]) {
    detail::check_keys(b, {"kappa", "dof_offset"}, "benchmark");
    read(b, "kappa", c.wrw_kappa, "benchmark.");
    read(b, "dof_offset", c.wrw_dof_offset, "benchmark.");
  }
  if (const auto p = doc["portfolio"]) {
    detail::check_keys(p, {"enabled", "vol_target", "risk_aversion", "tc_bps", "periods_per_year"}, "portfolio");
    c.portfolio_enabled = true;
    read(p, "enabled", c.portfolio_enabled, "portfolio.");
    read(p, "vol_target", c.portfolio.vol_target, "portfolio.");
    read(p, "risk_aversion", c.portfolio.risk_aversion, "portfolio.");
    read(p, "tc_bps", c.portfolio.tc_bps, "portfolio.");
    read(p, "periods_per_year", c.portfolio.periods_per_year, "portfolio.");
  }
  return c;
}

// Reads `path`; a top-level `preset` key selects the base configuration
// unless `base_preset` is given.
inline RunConfig load_config(const std::string& path, const std::optional<std::string>& base_preset = {}) {
  YAML::Node doc;
  try {
    doc = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw ConfigError("config: cannot open '" + path + "'");
  } catch (const YAML::Exception& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }
  std::string name = "custom";
  if (doc && doc.IsMap() && doc["preset"]) name = detail::scalar<std::string>(doc["preset"], "preset");
  if (base_preset) name = *base_preset;
  RunConfig c = apply_yaml(preset(name), doc);
  if (!c.data.path.empty()) {
    const auto base = std::filesystem::path(path).parent_path();
    const std::filesystem::path p(c.data.path);
    if (p.is_relative()) c.data.path = (base / p).lexically_normal().string();
  }
  return c;
}

inline void RunConfig::validate() const {
  static const std::vector<std::string> kinds{"simulate", "portfolio", "macro", "custom"};
  if (std::find(kinds.begin(), kinds.end(), experiment) == kinds.end()) {
    throw ConfigError("experiment: expected simulate | portfolio | macro | custom");
  }
  if (data.path.empty() && !synthetic) throw ConfigError("data.path: required when no synthetic block is given");
  if (!data.path.empty() && !std::filesystem::exists(data.path)) {
    throw ConfigError("data.path: file '" + data.path + "' does not exist");
  }
  if (synthetic) {
    synthetic->dgp.validate();
    if (!(synthetic->scale > 0.0)) throw ConfigError("synthetic.scale: must be positive");
    if (!detail::is_iso_date(synthetic->start_date)) throw ConfigError("synthetic.start_date: expected YYYY-MM-DD");
  }
  if (predictors.kind != "momentum" && predictors.kind != "lags" && predictors.kind != "none") {
    throw ConfigError("predictors.kind: expected momentum | lags | none");
  }
  if (predictors.candidates != "own" && predictors.candidates != "subsets" && predictors.candidates != "all") {
    throw ConfigError("predictors.candidates: expected own | subsets | all");
  }
  if (predictors.kind == "momentum" && predictors.lookbacks.empty()) {
    throw ConfigError("predictors.lookbacks: must be nonempty for momentum");
  }
  for (int l : predictors.lookbacks) {
    if (l < 1) throw ConfigError("predictors.lookbacks: values must be >= 1");
  }
  if (predictors.kind == "lags" && predictors.lags < 1) throw ConfigError("predictors.lags: must be >= 1");
  if (training < predictors.max_lookback() + 1) {
    throw ConfigError("training: must be at least the longest predictor look-back + 1 (" +
                      std::to_string(predictors.max_lookback() + 1) + ")");
  }
  if (delta.empty()) throw ConfigError("discounts.delta: grid is empty");
  if (kappa.empty()) throw ConfigError("discounts.kappa: grid is empty");
  for (double d : delta) DiscountPair{d, 1.0}.validate();
  for (double k : kappa) DiscountPair{1.0, k}.validate();
  if (alpha_grid.empty()) throw ConfigError("alpha_grid: grid is empty");
  for (double a : alpha_grid) {
    if (!(a > 0.0 && a <= 1.0)) throw ConfigError("alpha_grid: values must lie in (0, 1]");
  }
  if (alpha_model && !(*alpha_model > 0.0 && *alpha_model <= 1.0)) {
    throw ConfigError("alpha_model: must lie in (0, 1]");
  }
  const std::vector<std::string> modes{"full", "grouped", "explicit", "truth"};
  if (std::find(modes.begin(), modes.end(), universe.mode) == modes.end()) {
    throw ConfigError("universe.mode: expected full | grouped | explicit | truth");
  }
  if (universe.mode == "truth" && !synthetic) throw ConfigError("universe.mode: 'truth' needs synthetic data");
  if (!(prior.c0 > 0.0) || !(prior.n0 > 0.0) || (prior.s0 && !(*prior.s0 > 0.0))) {
    throw ConfigError("prior: c0, n0 and s0 must be positive");
  }
  if (!(wrw_kappa > 0.0 && wrw_kappa <= 1.0)) throw ConfigError("benchmark.kappa: must lie in (0, 1]");
  if (portfolio_enabled) portfolio.validate();
}

}  // namespace dol::io
