#pragma once

// Experiment execution: data, predictors, engine loop, benchmark, portfolio
// accounting and output tables.

#include "dol/benchmark.hpp"
#include "dol/engine.hpp"
#include "dol/io/config.hpp"
#include "dol/io/predictors.hpp"
#include "dol/io/table.hpp"
#include "dol/metrics.hpp"
#include "dol/portfolio.hpp"
#include "dol/simulate.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dol::io {

struct RunData {
  std::vector<std::string> dates;
  std::vector<std::string> names;
  Matrix y;       // T x m targets
  Matrix levels;  // (T + 1) x m price levels (momentum input)
  Vector riskfree;  // T
  std::optional<SimulationResult> sim;
};

struct PeriodRecord {
  std::string date;
  double alpha_used = 1.0;
  int top_predicted = 0;  // ordering id chosen by DOS
  int top_posterior = 0;
  double top_posterior_prob = 0.0;
  int true_ordering = -1;  // synthetic runs with the truth inside the universe
  double true_posterior_prob = std::numeric_limits<double>::quiet_NaN();
  double doa_log_density = 0.0;
  double dos_log_density = 0.0;
  double wrw_log_density = 0.0;
  Vector posterior;  // ordering probabilities after observing y
  Vector ordering_log_density;  // joint log density per ordering
};

struct ModelEval {
  std::string model;
  double msfe_ratio = 0.0;
  double lpdr = 0.0;
  double log_score = 0.0;
  std::optional<double> sharpe;
  std::optional<double> fee_bps;
};

struct RunResult {
  std::vector<Ordering> orderings;
  std::vector<PeriodRecord> periods;
  std::vector<ModelEval> eval;
  std::size_t bank_count = 0;
  std::size_t candidates_per_equation = 0;
  WarningLog warnings;

  const ModelEval& model(const std::string& name) const {
    for (const auto& e : eval) {
      if (e.model == name) return e;
    }
    throw ConfigError("no evaluation row for model '" + name + "'");
  }
};

namespace detail {

inline std::vector<std::string> monthly_dates(const std::string& start, std::size_t count) {
  int year = std::stoi(start.substr(0, 4));
  int month = std::stoi(start.substr(5, 2));
  const int day = std::min(std::stoi(start.substr(8, 2)), 28);
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    out.emplace_back(buf);
    if (++month > 12) {
      month = 1;
      ++year;
    }
  }
  return out;
}

inline std::ofstream open_output(const std::filesystem::path& dir, const std::string& name) {
  std::ofstream out(dir / name);
  if (!out) throw ConfigError("output: cannot write '" + (dir / name).string() + "'");
  return out;
}

}  // namespace detail

inline RunData load_data(const RunConfig& cfg) {
  RunData d;
  if (cfg.synthetic) {
    DgpConfig dgp = cfg.synthetic->dgp;
    dgp.seed = cfg.seed;
    d.sim = generate(dgp);
    d.y = cfg.synthetic->scale * d.sim->y;
    d.dates = detail::monthly_dates(cfg.synthetic->start_date, static_cast<std::size_t>(d.y.rows()));
    for (int j = 0; j < dgp.m; ++j) d.names.push_back("y" + std::to_string(j));
    d.levels = levels_from_returns(d.y);
    d.riskfree = Vector::Constant(d.y.rows(), cfg.data.riskfree_rate);
    return d;
  }

  const Table raw = read_table(cfg.data.path);
  const Table ret = to_returns(raw, cfg.data.kinds, cfg.data.default_kind);
  std::vector<std::string> names = cfg.data.series;
  if (names.empty()) {
    for (const auto& c : raw.columns) {
      if (c != cfg.data.riskfree_column) names.push_back(c);
    }
  }
  if (names.empty()) throw ConfigError("data.series: no series selected");
  const Eigen::Index T = ret.rows();
  const auto m = static_cast<Eigen::Index>(names.size());
  d.names = names;
  d.dates = ret.dates;
  d.y.resize(T, m);
  Matrix ret_levels(T + 1, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const int c = ret.column_index(names[static_cast<std::size_t>(j)]);
    d.y.col(j) = ret.values.col(c);
    const auto it = cfg.data.kinds.find(names[static_cast<std::size_t>(j)]);
    const ColumnKind kind = it == cfg.data.kinds.end() ? cfg.data.default_kind : it->second;
    if (kind == ColumnKind::Price) {
      ret_levels.col(j) = raw.values.col(c);
    } else {
      ret_levels.col(j) = levels_from_returns(ret.values.col(c));
    }
  }
  d.levels = std::move(ret_levels);
  if (cfg.data.riskfree_column.empty()) {
    d.riskfree = Vector::Constant(T, cfg.data.riskfree_rate);
  } else {
    d.riskfree = ret.values.col(ret.column_index(cfg.data.riskfree_column));
  }
  return d;
}

// Predictor table aligned to the target rows, audited for look-ahead.
inline PredictorTable build_predictors(const RunConfig& cfg, const RunData& d) {
  PredictorTable tab;
  const auto& p = cfg.predictors;
  if (p.kind == "momentum") {
    tab = build_momentum(d.levels, d.names, p.lookbacks);
    audit_no_lookahead(
        d.levels, tab, [&](const Matrix& lv) { return build_momentum(lv, d.names, p.lookbacks).values; },
        [](Eigen::Index t) { return t + 1; }, cfg.seed);
  } else if (p.kind == "lags") {
    tab = build_lags(d.y, d.names, p.lags);
    audit_no_lookahead(
        d.y, tab, [&](const Matrix& y) { return build_lags(y, d.names, p.lags).values; },
        [](Eigen::Index t) { return t; }, cfg.seed);
  } else {
    tab.values.resize(d.y.rows(), 0);
  }
  if (p.intercept) {
    PredictorTable with = build_intercept(d.y.rows());
    with.append(tab);
    tab = std::move(with);
  }
  return tab;
}

inline std::vector<std::vector<ModelSpec>> build_candidates(const RunConfig& cfg, const PredictorTable& tab, int m) {
  std::vector<int> base;
  std::vector<int> pool;
  for (Eigen::Index c = 0; c < tab.cols(); ++c) {
    (tab.series[static_cast<std::size_t>(c)] < 0 ? base : pool).push_back(static_cast<int>(c));
  }
  std::vector<std::vector<ModelSpec>> out(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    std::vector<std::vector<int>> sets;
    const auto& mode = cfg.predictors.candidates;
    if (mode == "own") {
      for (int c : pool) {
        if (tab.series[static_cast<std::size_t>(c)] == j) sets.push_back({c});
      }
      if (sets.empty()) sets.push_back({});
    } else if (mode == "all") {
      sets.push_back(pool);
    } else {
      if (pool.size() > 12) throw ConfigError("predictors.candidates: 'subsets' supports at most 12 columns");
      for (unsigned mask = 0; mask < (1u << pool.size()); ++mask) {
        std::vector<int> s;
        for (std::size_t b = 0; b < pool.size(); ++b) {
          if (mask & (1u << b)) s.push_back(pool[b]);
        }
        if (s.empty() && base.empty()) continue;
        sets.push_back(std::move(s));
      }
    }
    for (const auto& s : sets) {
      std::vector<int> ids = base;
      ids.insert(ids.end(), s.begin(), s.end());
      for (double delta : cfg.delta) {
        for (double kappa : cfg.kappa) out[static_cast<std::size_t>(j)].push_back(ModelSpec{ids, {delta, kappa}});
      }
    }
  }
  return out;
}

inline std::vector<Ordering> build_universe(const RunConfig& cfg, const RunData& d) {
  OrderingUniverse u;
  u.series_count = static_cast<int>(d.y.cols());
  u.cap = cfg.universe.cap;
  if (cfg.universe.mode == "full") {
    u.mode = OrderingUniverse::Mode::Full;
  } else if (cfg.universe.mode == "grouped") {
    u.mode = OrderingUniverse::Mode::Grouped;
    u.groups = cfg.universe.groups;
  } else {
    u.mode = OrderingUniverse::Mode::Explicit;
    u.explicit_list = cfg.universe.mode == "truth" ? d.sim->orderings : cfg.universe.orderings;
  }
  return enumerate_orderings(u);
}

inline RunResult run(const RunConfig& cfg, const std::optional<std::filesystem::path>& out_dir = {}) {
  cfg.validate();
  const RunData d = load_data(cfg);
  const PredictorTable preds = build_predictors(cfg, d);
  const Eigen::Index T = d.y.rows();
  const int m = static_cast<int>(d.y.cols());
  const Eigen::Index first = preds.first_complete_row();
  const Eigen::Index start = std::max<Eigen::Index>(cfg.training, first);
  if (start >= T) throw ConfigError("training: window leaves no evaluation periods");

  RunResult res;
  res.orderings = build_universe(cfg, d);
  const auto cands = build_candidates(cfg, preds, m);
  res.candidates_per_equation = cands.front().size();

  // Initial states from the training rows [first, start).
  InitialStateFn init = [&](int series, std::span<const int> parents, const ModelSpec& spec) {
    const Eigen::Index rows = start - first;
    const auto dim = static_cast<Eigen::Index>(spec.predictor_ids.size() + parents.size());
    Matrix X(rows, dim);
    Vector y(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
      Eigen::Index k = 0;
      for (int id : spec.predictor_ids) X(r, k++) = preds.values(first + r, id);
      for (int p : parents) X(r, k++) = d.y(first + r, p);
      y[r] = d.y(first + r, series);
    }
    InitialPrior ip;
    ip.ols = cfg.prior.ols;
    ip.c0 = cfg.prior.c0;
    ip.n0 = cfg.prior.n0;
    if (cfg.prior.s0) ip.s0 = *cfg.prior.s0;
    if (cfg.prior.pin_parents) ip.pinned_from = static_cast<Eigen::Index>(spec.predictor_ids.size());
    return initial_state(X, y, ip);
  };

  EngineConfig ec;
  ec.alpha_grid = cfg.alpha_grid;
  ec.alpha_model = cfg.alpha_model;
  ec.equation_averaging = cfg.equation_averaging;
  ec.jobs = cfg.jobs;
  DolEngine engine(m, res.orderings, cands, init, ec);
  res.bank_count = engine.bank_count();

  const Matrix train = d.y.middleRows(first, start - first);
  const Vector mean = train.colwise().mean().transpose();
  const Matrix centred = train.rowwise() - mean.transpose();
  if (train.rows() < 2) throw ConfigError("training: need at least two rows for the benchmark covariance");
  const Matrix sample_cov = centred.transpose() * centred / static_cast<double>(train.rows() - 1);
  if (Eigen::LLT<Matrix>(sample_cov).info() != Eigen::Success) {
    throw ConfigError("training: window too short for a positive definite benchmark covariance");
  }
  WishartState wrw = make_wishart(sample_cov, cfg.wrw_kappa, cfg.wrw_dof_offset);

  const std::size_t k = res.orderings.size();
  const bool per_ordering = k <= cfg.eval_ordering_limit;
  EvalSeries doa_eval{"DOA", {}, {}};
  EvalSeries dos_eval{"DOS", {}, {}};
  EvalSeries wrw_eval{"W-RW", {}, {}};
  std::vector<EvalSeries> ord_eval;
  if (per_ordering) {
    for (const auto& o : res.orderings) ord_eval.push_back(EvalSeries{"ordering_" + std::to_string(o.id), {}, {}});
  }

  std::map<std::string, BacktestLedger> ledgers;
  if (cfg.portfolio_enabled) {
    for (const char* name : {"DOA", "DOS", "W-RW"}) ledgers.emplace(name, BacktestLedger(name, m));
  }
  const double vol = cfg.portfolio.periodic_vol_target();

  // Truth lookup for synthetic regimes.
  std::vector<int> truth_id;
  if (d.sim) {
    for (const auto& p : d.sim->orderings) {
      int id = -1;
      for (const auto& o : res.orderings) {
        if (o.permutation == p) id = o.id;
      }
      truth_id.push_back(id);
    }
  }

  for (Eigen::Index t = start; t < T; ++t) {
    const Vector yt = d.y.row(t).transpose();
    const Vector xt = preds.values.row(t).transpose();
    const EngineStep st = engine.step(std::span<const double>(yt.data(), static_cast<std::size_t>(m)),
                                      std::span<const double>(xt.data(), static_cast<std::size_t>(xt.size())));
    const WrwStep ws = wrw_step(wrw, yt);
    wrw = ws.state;

    doa_eval.add(st.doa.f, yt, st.doa.log_density);
    dos_eval.add(st.dos.f, yt, st.dos.log_density);
    wrw_eval.add(ws.forecast.f, yt, ws.forecast.log_density);
    if (per_ordering) {
      for (std::size_t o = 0; o < k; ++o) ord_eval[o].add(st.per_ordering[o].f, yt, st.per_ordering[o].log_density);
    }

    PeriodRecord rec;
    rec.date = d.dates[static_cast<std::size_t>(t)];
    rec.alpha_used = st.alpha_used;
    rec.top_predicted = st.dos.ordering_id;
    rec.top_posterior = res.orderings[static_cast<std::size_t>(st.top_posterior)].id;
    rec.top_posterior_prob = std::exp(st.log_posterior[st.top_posterior]);
    rec.doa_log_density = st.doa.log_density;
    rec.dos_log_density = st.dos.log_density;
    rec.wrw_log_density = ws.forecast.log_density;
    rec.posterior = st.log_posterior.array().exp().matrix();
    rec.ordering_log_density.resize(static_cast<Eigen::Index>(k));
    for (std::size_t o = 0; o < k; ++o) rec.ordering_log_density[static_cast<Eigen::Index>(o)] = st.per_ordering[o].log_density;
    if (d.sim) {
      rec.true_ordering = truth_id[static_cast<std::size_t>(d.sim->regime[static_cast<std::size_t>(t)])];
      if (rec.true_ordering >= 0) rec.true_posterior_prob = rec.posterior[rec.true_ordering];
    }
    res.periods.push_back(std::move(rec));

    if (cfg.portfolio_enabled) {
      const double rf = d.riskfree[t];
      auto trade = [&](const std::string& name, const JointForecast& fc) {
        const Vector w = optimal_weights(fc.f, fc.Q, rf, vol, &res.warnings);
        ledgers.at(name).record(d.dates[static_cast<std::size_t>(t)], w, yt, rf, cfg.portfolio.tc_bps);
      };
      trade("DOA", st.doa);
      trade("DOS", st.dos);
      trade("W-RW", ws.forecast);
    }
  }
  res.warnings.insert(res.warnings.begin(), engine.warnings().begin(), engine.warnings().end());

  auto evaluate = [&](const EvalSeries& e) {
    ModelEval me;
    me.model = e.label;
    me.msfe_ratio = msfe_ratio(e, wrw_eval);
    me.lpdr = lpdr(e, wrw_eval);
    for (double v : e.log_densities) me.log_score += v;
    if (cfg.portfolio_enabled && ledgers.count(e.label)) {
      const auto& led = ledgers.at(e.label);
      const auto net = led.net_returns();
      const auto rf = led.riskfree();
      me.sharpe = sharpe_ratio(net, rf, cfg.portfolio.periods_per_year);
      me.fee_bps = performance_fee(net, ledgers.at("W-RW").net_returns(), cfg.portfolio.risk_aversion,
                                   cfg.portfolio.periods_per_year);
    }
    return me;
  };
  res.eval.push_back(evaluate(doa_eval));
  res.eval.push_back(evaluate(dos_eval));
  res.eval.push_back(evaluate(wrw_eval));
  for (const auto& e : ord_eval) res.eval.push_back(evaluate(e));

  if (!out_dir) return res;

  // Output tables.
  namespace fs = std::filesystem;
  fs::create_directories(*out_dir);
  const auto num = format_number;
  {
    auto out = detail::open_output(*out_dir, "diagnostics.tsv");
    out << "date\talpha_used\ttop_ordering_id\ttop_ordering\ttop_posterior_id\ttop_posterior_prob"
           "\ttrue_ordering_id\ttrue_posterior_prob\tdoa_log_density\tdos_log_density\twrw_log_density\n";
    for (const auto& r : res.periods) {
      out << r.date << '\t' << num(r.alpha_used) << '\t' << r.top_predicted << '\t'
          << format_permutation(res.orderings[static_cast<std::size_t>(r.top_predicted)].permutation) << '\t'
          << r.top_posterior << '\t' << num(r.top_posterior_prob) << '\t' << r.true_ordering << '\t'
          << num(r.true_posterior_prob) << '\t' << num(r.doa_log_density) << '\t' << num(r.dos_log_density) << '\t'
          << num(r.wrw_log_density) << '\n';
    }
  }
  {
    auto out = detail::open_output(*out_dir, "eval.tsv");
    out << "model\tmsfe_ratio\tlpdr\tlog_score\tsharpe\tfee_bps\n";
    for (const auto& e : res.eval) {
      out << e.model << '\t' << num(e.msfe_ratio) << '\t' << num(e.lpdr) << '\t' << num(e.log_score) << '\t'
          << (e.sharpe ? num(*e.sharpe) : "") << '\t' << (e.fee_bps ? num(*e.fee_bps) : "") << '\n';
    }
  }
  for (const auto& [name, led] : ledgers) {
    auto out = detail::open_output(*out_dir, "ledger_" + name + ".tsv");
    out << "date";
    for (const auto& n : d.names) out << "\tw_" << n;
    out << "\tgross\tnet\tturnover\tr_f\n";
    for (const auto& r : led.rows) {
      out << r.date;
      for (Eigen::Index j = 0; j < r.weights.size(); ++j) out << '\t' << num(r.weights[j]);
      out << '\t' << num(r.gross) << '\t' << num(r.net) << '\t' << num(r.turnover) << '\t' << num(r.r_f) << '\n';
    }
  }
  {
    auto out = detail::open_output(*out_dir, "plot_dop.tsv");
    out << "date";
    for (const auto& o : res.orderings) out << "\tp_" << o.id;
    out << '\n';
    for (const auto& r : res.periods) {
      out << r.date;
      for (Eigen::Index o = 0; o < r.posterior.size(); ++o) out << '\t' << num(r.posterior[o]);
      out << '\n';
    }
  }
  {
    auto out = detail::open_output(*out_dir, "plot_alpha.tsv");
    out << "date\talpha_used\n";
    for (const auto& r : res.periods) out << r.date << '\t' << num(r.alpha_used) << '\n';
  }
  {
    auto out = detail::open_output(*out_dir, "plot_lpl.tsv");
    std::vector<const EvalSeries*> series{&doa_eval, &dos_eval};
    for (const auto& e : ord_eval) series.push_back(&e);
    std::vector<std::vector<double>> paths;
    out << "date";
    for (const auto* e : series) {
      out << '\t' << e->label;
      paths.push_back(accumulated_lpl(*e, wrw_eval));
    }
    out << '\n';
    for (std::size_t i = 0; i < res.periods.size(); ++i) {
      out << res.periods[i].date;
      for (const auto& p : paths) out << '\t' << num(p[i]);
      out << '\n';
    }
  }
  if (cfg.portfolio_enabled) {
    auto out = detail::open_output(*out_dir, "plot_economic.tsv");
    out << "model\tsharpe\tfee_bps\n";
    for (const char* name : {"DOA", "DOS", "W-RW"}) {
      const auto& e = res.model(name);
      out << name << '\t' << num(*e.sharpe) << '\t' << num(*e.fee_bps) << '\n';
    }
  }
  {
    auto out = detail::open_output(*out_dir, "orderings.tsv");
    out << "ordering_id\tpermutation\n";
    for (const auto& o : res.orderings) out << o.id << '\t' << format_permutation(o.permutation) << '\n';
  }
  if (d.sim) {
    Table data;
    data.dates = d.dates;
    data.columns = d.names;
    data.values = d.y;
    auto out = detail::open_output(*out_dir, "data.tsv");
    write_table(data, out);
    auto truth = detail::open_output(*out_dir, "truth.tsv");
    truth << "date\tregime\tordering\n";
    for (std::size_t t = 0; t < d.dates.size(); ++t) {
      const int reg = d.sim->regime[t];
      truth << d.dates[t] << '\t' << reg << '\t'
            << format_permutation(d.sim->orderings[static_cast<std::size_t>(reg)]) << '\n';
    }
  }
  {
    auto out = detail::open_output(*out_dir, "warnings.tsv");
    out << "where\twhat\n";
    for (const auto& w : res.warnings) out << w.where << '\t' << w.what << '\n';
  }
  return res;
}

}  // namespace dol::io
