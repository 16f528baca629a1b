#include "spconv/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

namespace spconv {

GrowthDesign build_design(const Dataset& dataset) {
  validate(dataset);
  const Index n = dataset.size();
  GrowthDesign d;
  d.y.resize(n);
  d.x.resize(n, 2);
  d.ids.reserve(static_cast<std::size_t>(n));
  const double inv_t = 1.0 / dataset.period_length;
  for (Index i = 0; i < n; ++i) {
    const auto& r = dataset.records[static_cast<std::size_t>(i)];
    if (!(r.p0 > 0) || !(r.pt > 0)) throw DataError("region '" + r.id + "' has a non-positive product");
    d.y[i] = std::log(r.pt / r.p0) * inv_t;
    d.x(i, 0) = 1.0;
    d.x(i, 1) = std::log(r.p0);
    d.ids.push_back(r.id);
  }
  return d;
}

std::string_view to_string(SelectedModel m) {
  switch (m) {
    case SelectedModel::Ols: return "OLS";
    case SelectedModel::Lag: return "Lag";
    case SelectedModel::Error: return "Error";
  }
  return "OLS";
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::Convergence: return "Convergence";
    case Direction::Divergence: return "Divergence";
    case Direction::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

ModelChoice florax_select(const LmTests<double>& lm, double alpha) {
  ModelChoice c;
  c.lm_lag_significant = lm.lag.p_value <= alpha;
  c.lm_error_significant = lm.error.p_value <= alpha;
  c.robust_lag_significant = lm.lag_robust.p_value <= alpha;
  c.robust_error_significant = lm.error_robust.p_value <= alpha;

  if (!c.lm_lag_significant && !c.lm_error_significant) {
    c.model = SelectedModel::Ols;
    c.rule = "no LM test significant";
  } else if (c.lm_lag_significant != c.lm_error_significant) {
    c.model = c.lm_lag_significant ? SelectedModel::Lag : SelectedModel::Error;
    c.rule = c.lm_lag_significant ? "only LM lag significant" : "only LM error significant";
  } else if (c.robust_lag_significant != c.robust_error_significant) {
    c.model = c.robust_lag_significant ? SelectedModel::Lag : SelectedModel::Error;
    c.rule = c.robust_lag_significant ? "both LM significant; only robust LM lag significant"
                                      : "both LM significant; only robust LM error significant";
  } else {
    const double rl = lm.lag_robust.statistic, re = lm.error_robust.statistic;
    c.robust_tie = rl == re;
    c.model = rl > re ? SelectedModel::Lag : SelectedModel::Error;
    c.rule = std::string("both LM significant; robust tests ") +
             (c.robust_lag_significant ? "both significant" : "both insignificant") +
             (c.robust_tie ? "; tie resolved toward error" : "; larger robust statistic chosen");
  }
  return c;
}

ModelChoice florax_select(const DiagnosticsBundle<double>& diag, double alpha) {
  return florax_select(diag.lm, alpha);
}

ConvergenceVerdict make_verdict(double b_hat, double se, double p_value, double alpha, SelectedModel source) {
  ConvergenceVerdict v;
  v.b_hat = b_hat;
  v.se = se;
  v.p_value = p_value;
  v.source = source;
  v.significant = p_value <= alpha;
  if (v.significant && b_hat < 0) v.direction = Direction::Convergence;
  else if (v.significant && b_hat > 0) v.direction = Direction::Divergence;
  else v.direction = Direction::Inconclusive;
  return v;
}

std::optional<ConvergenceSpeed> convergence_speed(double b_hat, double period_length) {
  if (!(period_length > 0)) throw DataError("period length must be positive");
  if (!(b_hat < 0)) return std::nullopt;
  if (b_hat * period_length <= -1.0)
    throw DataError("b·T ≤ −1: convergence speed undefined (log of a non-positive number)");
  ConvergenceSpeed s;
  s.speed = -std::log1p(b_hat * period_length) / period_length;
  s.half_life = std::numbers::ln2 / s.speed;
  return s;
}

WeightsSummary summarize(const WeightMatrixd& w, double cutoff) {
  WeightsSummary s;
  s.n = w.size();
  s.cutoff = cutoff;
  s.s0 = w.s0();
  s.nonzeros = w.nonzeros();
  s.standardized = w.standardized();
  for (const Index i : w.islands()) s.islands.push_back(w.ids()[static_cast<std::size_t>(i)]);
  s.min_neighbors = s.n ? w.neighbor_count(0) : 0;
  for (Index i = 0; i < s.n; ++i) {
    s.min_neighbors = std::min(s.min_neighbors, w.neighbor_count(i));
    s.max_neighbors = std::max(s.max_neighbors, w.neighbor_count(i));
  }
  s.mean_neighbors = s.n ? static_cast<double>(s.nonzeros) / static_cast<double>(s.n) : 0.0;
  return s;
}

namespace {

template <typename F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const DataError& e) {
    throw DataError(std::string(name) + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(name) + ": " + e.what());
  }
}

}  // namespace

AnalysisReport run_pipeline(const Dataset& dataset, const PipelineConfig& config) {
  const auto w = stage("weights", [&] { return build_distance_band(dataset, config.cutoff); });
  return run_pipeline(dataset, w, config);
}

AnalysisReport run_pipeline(const Dataset& dataset, const WeightMatrixd& weights, const PipelineConfig& config) {
  if (!(config.alpha > 0 && config.alpha < 1)) throw DataError("config: alpha must lie in (0, 1)");
  AnalysisReport rep;
  rep.config = config;
  rep.design = stage("design", [&] { return build_design(dataset); });
  rep.dataset_digest = dataset_digest(dataset);
  rep.period_length = dataset.period_length;
  rep.coordinates = dataset.coordinates;

  const WeightMatrixd w = stage("weights", [&] {
    if (weights.size() != dataset.size())
      throw DataError("weight matrix has " + std::to_string(weights.size()) + " regions, dataset has " +
                      std::to_string(dataset.size()));
    if (weights.ids() != rep.design.ids)
      throw DataError("weight matrix region ids do not match the dataset order");
    return config.row_standardize ? row_standardize(weights) : weights;
  });
  rep.weights = summarize(w, config.cutoff);

  const auto& y = rep.design.y;
  const auto& x = rep.design.x;
  stage("esda", [&] {
    rep.moran = morans_i(w, y, config.permutations, config.seed);
    rep.scatter = moran_scatter(w, y);
    rep.lisa = lisa(w, y, config.permutations, config.seed, config.alpha);
    return 0;
  });
  stage("ols", [&] {
    rep.ols = ols_fit<double>(x, y, rep.design.column_names);
    rep.diagnostics = diagnostics(w, rep.ols, Eigen::MatrixXd(x), Eigen::VectorXd(y));
    return 0;
  });
  rep.choice = florax_select(rep.diagnostics, config.alpha);

  if (rep.choice.model == SelectedModel::Ols) {
    rep.verdict = make_verdict(rep.ols.beta[1], rep.ols.se[1], rep.ols.p_values[1], config.alpha,
                               SelectedModel::Ols);
  } else {
    rep.spatial = stage("ml", [&] {
      const LogDetGrid<double> grid(w);
      return rep.choice.model == SelectedModel::Lag ? fit_sar(w, grid, Eigen::MatrixXd(x), Eigen::VectorXd(y))
                                                    : fit_sem(w, grid, Eigen::MatrixXd(x), Eigen::VectorXd(y));
    });
    rep.verdict = make_verdict(rep.spatial->beta[1], rep.spatial->se_beta[1], rep.spatial->p_beta[1],
                               config.alpha, rep.choice.model);
  }
  if (rep.verdict.b_hat * dataset.period_length > -1.0)
    rep.speed = convergence_speed(rep.verdict.b_hat, dataset.period_length);
  return rep;
}

}  // namespace spconv
