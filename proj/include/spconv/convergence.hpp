#pragma once

// β-convergence workflow: growth design, OLS with diagnostics, forward
// specification search over the LM tests, ML fit of the chosen spatial
// model and the convergence verdict.

#include "spconv/dataset.hpp"
#include "spconv/esda.hpp"
#include "spconv/linreg.hpp"
#include "spconv/sarml.hpp"
#include "spconv/weights.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spconv {

/// y_i = (1/T)·ln(P_it/P_i0), X = [1, ln P_i0], rows in dataset order.
struct GrowthDesign {
  Eigen::VectorXd y;
  Eigen::MatrixXd x;
  std::vector<std::string> ids;
  std::vector<std::string> column_names{"constant", "log_p0"};
};

GrowthDesign build_design(const Dataset& dataset);

enum class SelectedModel { Ols, Lag, Error };

std::string_view to_string(SelectedModel m);

struct ModelChoice {
  SelectedModel model = SelectedModel::Ols;
  bool lm_lag_significant = false;
  bool lm_error_significant = false;
  bool robust_lag_significant = false;
  bool robust_error_significant = false;
  bool robust_tie = false;
  std::string rule;  // which branch of the search decided
};

/// Forward search: neither LM test significant → OLS; exactly one → that
/// model; both → the only significant robust test, or else the larger robust
/// statistic, ties going to Error.
ModelChoice florax_select(const LmTests<double>& lm, double alpha = 0.05);
ModelChoice florax_select(const DiagnosticsBundle<double>& diag, double alpha = 0.05);

enum class Direction { Convergence, Divergence, Inconclusive };

std::string_view to_string(Direction d);

struct ConvergenceVerdict {
  double b_hat = 0.0;
  double se = 0.0;
  double p_value = 1.0;
  bool significant = false;
  Direction direction = Direction::Inconclusive;
  SelectedModel source = SelectedModel::Ols;
};

ConvergenceVerdict make_verdict(double b_hat, double se, double p_value, double alpha, SelectedModel source);

struct ConvergenceSpeed {
  double speed = 0.0;      // −ln(1 + bT)/T
  double half_life = 0.0;  // ln 2 / speed
};

/// Absent for b ≥ 0; throws DataError when b·T ≤ −1.
std::optional<ConvergenceSpeed> convergence_speed(double b_hat, double period_length);

struct PipelineConfig {
  double cutoff = 0.0;
  double alpha = 0.05;
  Index permutations = 999;
  std::uint64_t seed = 0;
  bool row_standardize = true;
};

struct WeightsSummary {
  Index n = 0;
  double cutoff = 0.0;
  double s0 = 0.0;
  Index nonzeros = 0;
  bool standardized = false;
  std::vector<std::string> islands;
  double mean_neighbors = 0.0;
  Index min_neighbors = 0;
  Index max_neighbors = 0;
};

WeightsSummary summarize(const WeightMatrixd& w, double cutoff);

struct AnalysisReport {
  PipelineConfig config;
  std::string dataset_digest;
  double period_length = 0.0;
  CoordinateSystem coordinates = CoordinateSystem::PlanarKm;
  WeightsSummary weights;
  GrowthDesign design;
  MoranResult<double> moran;
  MoranScatter<double> scatter;
  LisaResult<double> lisa;
  OlsFit<double> ols;
  DiagnosticsBundle<double> diagnostics;
  ModelChoice choice;
  std::optional<SpatialFit<double>> spatial;
  ConvergenceVerdict verdict;
  std::optional<ConvergenceSpeed> speed;
};

/// Runs every stage on the band weights built from `dataset`. Errors stay
/// data or numerical and are prefixed with the failing stage.
AnalysisReport run_pipeline(const Dataset& dataset, const PipelineConfig& config);

/// Same, with caller-supplied weights (ids must match the dataset order).
AnalysisReport run_pipeline(const Dataset& dataset, const WeightMatrixd& weights, const PipelineConfig& config);

}  // namespace spconv
