#pragma once

// JSON reports and static figures (SVG scatterplots, GeoJSON LISA map).
// Objects serialize with sorted keys and shortest round-trip numbers.

#include "spconv/convergence.hpp"

#include <json.hpp>

#include <string>

namespace spconv {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

using Json = nlohmann::json;

Json to_json(const MoranResult<double>& m);
Json to_json(const LisaResult<double>& l, const std::vector<std::string>& ids);
Json to_json(const WeightsSummary& w);
Json to_json(const PipelineConfig& c);
Json to_json(const ModelChoice& c);
Json to_json(const ConvergenceVerdict& v);

/// OLS block with one entry per column of the OLS results table: constant,
/// b, JB, BP, KB, MI, LM_lag, LMR_lag, LM_err, LMR_err, adj_R2, N.
Json ols_table(const OlsFit<double>& fit, const DiagnosticsBundle<double>& diag);

/// Columns of the OLS table that `ols_table` must always emit.
const std::vector<std::string>& ols_table_columns();

/// Spatial block: constant, coefficient, spatial_coefficient, BP,
/// pseudo_R2, N (plus model details).
Json spatial_table(const SpatialFit<double>& fit);
const std::vector<std::string>& spatial_table_columns();

/// Full pipeline report, `schema_version` 1.
Json to_json(const AnalysisReport& report);

/// Wraps a command result with schema version and metadata.
Json envelope(const std::string& command, Json config, const std::string& dataset_digest, Json body);

/// Stable text form: 2-space indentation, sorted keys, trailing newline.
std::string dump(const Json& j);
Json parse_report(const std::string& text);

/// Two-panel SVG: growth against log initial product with the OLS line, and
/// the Moran scatterplot with its slope.
std::string svg_scatter(const AnalysisReport& report);

/// FeatureCollection of Point features carrying id, local_i, pseudo_p and
/// lisa_class.
std::string geojson_lisa(const Dataset& dataset, const LisaResult<double>& lisa);

}  // namespace spconv
