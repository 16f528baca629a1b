#include "spconv/report.hpp"

#include "spconv/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace spconv {

namespace {

Json test_json(const TestResult<double>& t) {
  return {{"statistic", t.statistic}, {"p_value", t.p_value}, {"df", t.df}};
}

Json coef_json(double estimate, double se, double stat, double p, const char* stat_name) {
  return {{"estimate", estimate}, {"se", se}, {stat_name, stat}, {"p_value", p}};
}

Json vector_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace

Json to_json(const MoranResult<double>& m) {
  Json j = {{"I", m.i_value},
            {"expected", m.expected},
            {"variance_normality", m.variance_normality},
            {"variance_randomization", m.variance_randomization},
            {"z_normality", m.z_normality},
            {"z_randomization", m.z_randomization},
            {"p_normality", m.p_normality},
            {"p_randomization", m.p_randomization},
            {"permutations", m.permutations}};
  j["pseudo_p"] = m.pseudo_p ? Json(*m.pseudo_p) : Json(nullptr);
  return j;
}

Json to_json(const LisaResult<double>& l, const std::vector<std::string>& ids) {
  const auto counts = l.counts();
  Json regions = Json::array();
  for (std::size_t i = 0; i < l.cluster.size(); ++i)
    regions.push_back({{"id", ids[i]},
                       {"local_i", l.local_i[static_cast<Index>(i)]},
                       {"pseudo_p", l.pseudo_p[static_cast<Index>(i)]},
                       {"lisa_class", std::string(to_string(l.cluster[i]))}});
  return {{"counts",
           {{"HH", counts[0]},
            {"LL", counts[1]},
            {"HL", counts[2]},
            {"LH", counts[3]},
            {"NS", counts[4]},
            {"ISLAND", counts[5]}}},
          {"regions", regions}};
}

Json to_json(const WeightsSummary& w) {
  return {{"n", w.n},
          {"cutoff", w.cutoff},
          {"S0", w.s0},
          {"nonzeros", w.nonzeros},
          {"standardized", w.standardized},
          {"islands", w.islands},
          {"mean_neighbors", w.mean_neighbors},
          {"min_neighbors", w.min_neighbors},
          {"max_neighbors", w.max_neighbors}};
}

Json to_json(const PipelineConfig& c) {
  return {{"cutoff", c.cutoff},
          {"alpha", c.alpha},
          {"permutations", c.permutations},
          {"seed", c.seed},
          {"row_standardize", c.row_standardize}};
}

Json to_json(const ModelChoice& c) {
  return {{"model", std::string(to_string(c.model))},
          {"rule", c.rule},
          {"lm_lag_significant", c.lm_lag_significant},
          {"lm_error_significant", c.lm_error_significant},
          {"robust_lag_significant", c.robust_lag_significant},
          {"robust_error_significant", c.robust_error_significant},
          {"robust_tie", c.robust_tie}};
}

Json to_json(const ConvergenceVerdict& v) {
  return {{"b_hat", v.b_hat},
          {"se", v.se},
          {"p_value", v.p_value},
          {"significant", v.significant},
          {"direction", std::string(to_string(v.direction))},
          {"source_model", std::string(to_string(v.source))}};
}

const std::vector<std::string>& ols_table_columns() {
  static const std::vector<std::string> cols{"constant", "b",       "JB",      "BP",
                                             "KB",       "MI",      "LM_lag",  "LMR_lag",
                                             "LM_err",   "LMR_err", "adj_R2",  "N"};
  return cols;
}

const std::vector<std::string>& spatial_table_columns() {
  static const std::vector<std::string> cols{"constant", "coefficient", "spatial_coefficient",
                                             "BP",       "pseudo_R2",   "N"};
  return cols;
}

Json ols_table(const OlsFit<double>& fit, const DiagnosticsBundle<double>& diag) {
  Json j;
  j["constant"] = coef_json(fit.beta[0], fit.se[0], fit.t_stats[0], fit.p_values[0], "t");
  if (fit.k > 1) j["b"] = coef_json(fit.beta[1], fit.se[1], fit.t_stats[1], fit.p_values[1], "t");
  j["JB"] = test_json(diag.jb);
  j["BP"] = test_json(diag.bp);
  j["KB"] = test_json(diag.kb);
  j["MI"] = {{"I", diag.moran_residual.i_value},
             {"expected", diag.moran_residual.expected},
             {"variance", diag.moran_residual.variance},
             {"z", diag.moran_residual.z},
             {"p_value", diag.moran_residual.p_value}};
  j["LM_lag"] = test_json(diag.lm.lag);
  j["LMR_lag"] = test_json(diag.lm.lag_robust);
  j["LM_err"] = test_json(diag.lm.error);
  j["LMR_err"] = test_json(diag.lm.error_robust);
  j["adj_R2"] = fit.adj_r2;
  j["R2"] = fit.r2;
  j["N"] = fit.n;
  j["sigma2"] = fit.sigma2;
  j["sigma2_unbiased"] = fit.sigma2_unbiased;
  j["log_likelihood"] = fit.log_likelihood;
  j["beta"] = vector_json(fit.beta);
  return j;
}

Json spatial_table(const SpatialFit<double>& fit) {
  Json j;
  j["model"] = std::string(to_string(fit.kind));
  j["constant"] = coef_json(fit.beta[0], fit.se_beta[0], fit.z_beta[0], fit.p_beta[0], "z");
  if (fit.beta.size() > 1)
    j["coefficient"] = coef_json(fit.beta[1], fit.se_beta[1], fit.z_beta[1], fit.p_beta[1], "z");
  j["spatial_coefficient"] = coef_json(fit.spatial_coef, fit.se_spatial, fit.z_spatial, fit.p_spatial, "z");
  j["spatial_coefficient"]["name"] = fit.kind == SpatialKind::Lag ? "rho" : "lambda";
  j["BP"] = test_json(fit.bp_test);
  j["pseudo_R2"] = fit.pseudo_r2;
  j["N"] = fit.n;
  j["sigma2"] = fit.sigma2;
  j["log_likelihood"] = fit.log_likelihood;
  j["log_likelihood_at_zero"] = fit.log_likelihood_at_zero;
  j["domain"] = {fit.domain_lower, fit.domain_upper};
  j["beta"] = vector_json(fit.beta);
  return j;
}

Json to_json(const AnalysisReport& r) {
  Json config = to_json(r.config);
  config["period_length"] = r.period_length;
  config["coordinates"] = std::string(to_string(r.coordinates));

  Json esda;
  esda["moran"] = to_json(r.moran);
  esda["scatter_slope"] = r.scatter.slope;
  esda["lisa"] = to_json(r.lisa, r.design.ids);

  Json body;
  body["weights"] = to_json(r.weights);
  body["esda"] = esda;
  body["ols"] = ols_table(r.ols, r.diagnostics);
  body["choice"] = to_json(r.choice);
  body["spatial"] = r.spatial ? spatial_table(*r.spatial) : Json(nullptr);
  Json verdict = to_json(r.verdict);
  if (r.speed) verdict["speed"] = {{"speed", r.speed->speed}, {"half_life", r.speed->half_life}};
  else verdict["speed"] = nullptr;
  body["verdict"] = verdict;
  return envelope("converge", config, r.dataset_digest, body);
}

Json envelope(const std::string& command, Json config, const std::string& dataset_digest, Json body) {
  Json j = std::move(body);
  j["schema_version"] = kSchemaVersion;
  j["metadata"] = {{"tool", "spconv"},
                   {"tool_version", kToolVersion},
                   {"command", command},
                   {"rng", Rng::kAlgorithm},
                   {"config", std::move(config)},
                   {"dataset_digest", dataset_digest}};
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json parse_report(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("invalid report JSON: ") + e.what(), 0);
  }
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

struct Panel {
  double left, top, width, height;
  double xmin, xmax, ymin, ymax;

  double px(double x) const { return left + (x - xmin) / (xmax - xmin) * width; }
  double py(double y) const { return top + height - (y - ymin) / (ymax - ymin) * height; }
};

Panel make_panel(double left, double top, double w, double h, const Eigen::VectorXd& xs,
                 const Eigen::VectorXd& ys) {
  auto range = [](const Eigen::VectorXd& v, double& lo, double& hi) {
    lo = v.minCoeff();
    hi = v.maxCoeff();
    if (!(hi > lo)) {
      lo -= 1.0;
      hi += 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  };
  Panel p{left, top, w, h, 0, 0, 0, 0};
  range(xs, p.xmin, p.xmax);
  range(ys, p.ymin, p.ymax);
  return p;
}

void draw_panel(std::ostringstream& s, const Panel& p, const Eigen::VectorXd& xs, const Eigen::VectorXd& ys,
                double intercept, double slope, const std::string& title, const std::string& xlabel,
                const std::string& ylabel, bool quadrant_axes) {
  s << "<rect x=\"" << fmt(p.left) << "\" y=\"" << fmt(p.top) << "\" width=\"" << fmt(p.width)
    << "\" height=\"" << fmt(p.height) << "\" fill=\"none\" stroke=\"#333\"/>\n";
  s << "<text x=\"" << fmt(p.left + p.width / 2) << "\" y=\"" << fmt(p.top - 10)
    << "\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  s << "<text x=\"" << fmt(p.left + p.width / 2) << "\" y=\"" << fmt(p.top + p.height + 35)
    << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel << "</text>\n";
  s << "<text x=\"" << fmt(p.left - 40) << "\" y=\"" << fmt(p.top + p.height / 2)
    << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 " << fmt(p.left - 40) << ' '
    << fmt(p.top + p.height / 2) << ")\">" << ylabel << "</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = p.xmin + (p.xmax - p.xmin) * t / 4.0;
    const double yv = p.ymin + (p.ymax - p.ymin) * t / 4.0;
    s << "<text x=\"" << fmt(p.px(xv)) << "\" y=\"" << fmt(p.top + p.height + 15)
      << "\" text-anchor=\"middle\" font-size=\"9\">" << fmt(xv) << "</text>\n";
    s << "<text x=\"" << fmt(p.left - 5) << "\" y=\"" << fmt(p.py(yv) + 3)
      << "\" text-anchor=\"end\" font-size=\"9\">" << fmt(yv) << "</text>\n";
  }
  if (quadrant_axes) {
    if (p.xmin < 0 && p.xmax > 0)
      s << "<line x1=\"" << fmt(p.px(0)) << "\" y1=\"" << fmt(p.top) << "\" x2=\"" << fmt(p.px(0))
        << "\" y2=\"" << fmt(p.top + p.height) << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
    if (p.ymin < 0 && p.ymax > 0)
      s << "<line x1=\"" << fmt(p.left) << "\" y1=\"" << fmt(p.py(0)) << "\" x2=\"" << fmt(p.left + p.width)
        << "\" y2=\"" << fmt(p.py(0)) << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  }
  s << "<g fill=\"#1f77b4\" fill-opacity=\"0.6\">\n";
  for (Index i = 0; i < xs.size(); ++i)
    s << "<circle cx=\"" << fmt(p.px(xs[i])) << "\" cy=\"" << fmt(p.py(ys[i])) << "\" r=\"2.5\"/>\n";
  s << "</g>\n";
  // Fitted line clipped to the panel's y range.
  double x0 = p.xmin, x1 = p.xmax;
  if (slope != 0.0) {
    double a = (p.ymin - intercept) / slope, b = (p.ymax - intercept) / slope;
    if (a > b) std::swap(a, b);
    x0 = std::max(x0, a);
    x1 = std::min(x1, b);
  }
  if (x1 > x0)
    s << "<line x1=\"" << fmt(p.px(x0)) << "\" y1=\"" << fmt(p.py(intercept + slope * x0)) << "\" x2=\""
      << fmt(p.px(x1)) << "\" y2=\"" << fmt(p.py(intercept + slope * x1))
      << "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
}

}  // namespace

std::string svg_scatter(const AnalysisReport& r) {
  const double w = 900, h = 420;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 "
    << w << ' ' << h << "\" font-family=\"sans-serif\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const Eigen::VectorXd log_p0 = r.design.x.col(1);
  const Panel left = make_panel(70, 40, 340, 320, log_p0, r.design.y);
  draw_panel(s, left, log_p0, r.design.y, r.ols.beta[0], r.ols.beta[1],
             "Growth vs initial product (b = " + fmt(r.ols.beta[1]) + ")", "log initial product",
             "growth rate", false);
  const Panel right = make_panel(530, 40, 340, 320, r.scatter.z, r.scatter.lag);
  draw_panel(s, right, r.scatter.z, r.scatter.lag, r.scatter.intercept, r.scatter.slope,
             "Moran scatterplot (I = " + fmt(r.moran.i_value) + ")", "growth rate (standardized)",
             "spatially lagged growth rate", true);
  s << "</svg>\n";
  return s.str();
}

std::string geojson_lisa(const Dataset& dataset, const LisaResult<double>& lisa) {
  if (static_cast<Index>(dataset.records.size()) != lisa.local_i.size())
    throw DataError("geojson_lisa: dataset and LISA result differ in size");
  Json features = Json::array();
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const auto& rec = dataset.records[i];
    const auto k = static_cast<Index>(i);
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Point"}, {"coordinates", {rec.x, rec.y}}}},
                        {"properties",
                         {{"id", rec.id},
                          {"local_i", lisa.local_i[k]},
                          {"pseudo_p", lisa.pseudo_p[k]},
                          {"lisa_class", std::string(to_string(lisa.cluster[i]))}}}});
  }
  Json fc = {{"type", "FeatureCollection"}, {"features", features}};
  return fc.dump(1) + "\n";
}

}  // namespace spconv
