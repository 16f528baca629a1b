#include "spconv/cli.hpp"

#include "spconv/convergence.hpp"
#include "spconv/dgp.hpp"
#include "spconv/report.hpp"
#include "spconv/weights_io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace spconv {

namespace {

// Effective settings: defaults, overridden by a JSON config file, overridden
// by flags given on the command line.
struct Settings {
  std::string input;
  std::string coords = "planar_km";
  double period_length = 1.0;
  double cutoff = 0.0;
  std::string weights;
  bool no_standardize = false;
  Index permutations = 999;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  std::string out;
  std::string config;

  // weights build
  std::string format = "gwt";

  // converge
  std::string svg_scatter;
  std::string geojson_lisa;

  // simulate
  Index rows = 20;
  Index cols = 20;
  double spacing = 1.0;
  std::string kind = "independent";
  double coef = 0.0;
  std::vector<double> beta{0.0, -0.02};
  double sigma = 0.01;
  double log_p0_mean = 8.0;
  double log_p0_sd = 1.0;
};

Json settings_json(const Settings& s, bool with_weights) {
  Json j = {{"coords", s.coords}, {"t", s.period_length}};
  if (with_weights) {
    j["cutoff"] = s.cutoff;
    j["weights"] = s.weights;
    j["standardize"] = !s.no_standardize;
  }
  return j;
}

template <typename T>
void overlay(const Json& config, const char* key, CLI::App* sub, const char* flag, T& target) {
  if (sub->count(flag) > 0 || !config.contains(key)) return;
  try {
    target = config.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw DataError(std::string("config key '") + key + "': " + e.what());
  }
}

void apply_config(Settings& s, CLI::App* sub) {
  if (s.config.empty()) return;
  std::ifstream in(s.config);
  if (!in) throw DataError("cannot open config file '" + s.config + "'");
  Json config;
  try {
    in >> config;
  } catch (const Json::exception& e) {
    throw DataError(std::string("invalid config file: ") + e.what());
  }
  overlay(config, "input", sub, "--input", s.input);
  overlay(config, "coords", sub, "--coords", s.coords);
  overlay(config, "t", sub, "--t", s.period_length);
  overlay(config, "cutoff", sub, "--cutoff", s.cutoff);
  overlay(config, "weights", sub, "--weights", s.weights);
  overlay(config, "permutations", sub, "--permutations", s.permutations);
  overlay(config, "seed", sub, "--seed", s.seed);
  overlay(config, "alpha", sub, "--alpha", s.alpha);
  if (sub->count("--no-standardize") == 0 && config.contains("standardize"))
    s.no_standardize = !config.at("standardize").get<bool>();
}

Dataset load_dataset(const Settings& s) {
  if (s.input.empty()) throw DataError("--input is required");
  const auto cs = parse_coordinate_system(s.coords);
  const bool geojson = s.input.ends_with(".geojson") || s.input.ends_with(".json");
  if (geojson) {
    std::ifstream in(s.input);
    if (!in) throw DataError("cannot open input '" + s.input + "'");
    return read_geojson_points(in, s.period_length, cs);
  }
  return read_csv_file(s.input, s.period_length, cs);
}

// Weights from --weights or the distance band at --cutoff, then optionally
// row-standardized.
WeightMatrixd load_weights(const Settings& s, const Dataset& ds, std::ostream& err) {
  WeightMatrixd w;
  if (!s.weights.empty()) {
    w = read_weights_file(s.weights, weight_format_from_path(s.weights), ds.ids());
  } else {
    if (!(s.cutoff > 0)) throw DataError("either --cutoff or --weights is required");
    w = build_distance_band(ds, s.cutoff);
  }
  if (w.has_islands()) {
    err << "warning: " << w.islands().size() << " island(s) without neighbors:";
    for (const Index i : w.islands()) err << ' ' << w.ids()[static_cast<std::size_t>(i)];
    err << '\n';
  }
  return s.no_standardize ? w : row_standardize(w);
}

void emit(const Settings& s, const std::string& text, std::ostream& out) {
  if (s.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(s.out);
  if (!f) throw DataError("cannot write '" + s.out + "'");
  f << text;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write '" + path + "'");
  f << text;
}

Json command_config(const Settings& s, bool with_weights) {
  Json c = settings_json(s, with_weights);
  c["permutations"] = s.permutations;
  c["seed"] = s.seed;
  c["alpha"] = s.alpha;
  return c;
}

int cmd_weights_build(const Settings& s, std::ostream& out, std::ostream& err) {
  const Dataset ds = load_dataset(s);
  const auto w = load_weights(s, ds, err);
  std::ostringstream text;
  write_weights(text, w, parse_weight_format(s.format));
  emit(s, text.str(), out);
  return kExitOk;
}

int cmd_moran(const Settings& s, std::ostream& out, std::ostream& err) {
  const Dataset ds = load_dataset(s);
  const auto w = load_weights(s, ds, err);
  const auto design = build_design(ds);
  Json body;
  body["weights"] = to_json(summarize(w, s.cutoff));
  body["moran"] = to_json(morans_i(w, design.y, s.permutations, s.seed));
  body["scatter_slope"] = moran_scatter(w, design.y).slope;
  body["variable"] = "growth";
  emit(s, dump(envelope("moran", command_config(s, true), dataset_digest(ds), body)), out);
  return kExitOk;
}

int cmd_lisa(const Settings& s, std::ostream& out, std::ostream& err) {
  const Dataset ds = load_dataset(s);
  const auto w = load_weights(s, ds, err);
  const auto design = build_design(ds);
  const auto result = lisa(w, design.y, s.permutations, s.seed, s.alpha);
  Json body;
  body["lisa"] = to_json(result, design.ids);
  body["variable"] = "growth";
  emit(s, dump(envelope("lisa", command_config(s, true), dataset_digest(ds), body)), out);
  if (!s.geojson_lisa.empty()) write_file(s.geojson_lisa, geojson_lisa(ds, result));
  return kExitOk;
}

int cmd_ols(const Settings& s, std::ostream& out, std::ostream& err) {
  const Dataset ds = load_dataset(s);
  const auto w = load_weights(s, ds, err);
  const auto design = build_design(ds);
  const auto fit = ols_fit<double>(design.x, design.y, design.column_names);
  const auto diag = diagnostics(w, fit, design.x, design.y);
  Json body;
  body["ols"] = ols_table(fit, diag);
  body["choice"] = to_json(florax_select(diag, s.alpha));
  emit(s, dump(envelope("ols", command_config(s, true), dataset_digest(ds), body)), out);
  return kExitOk;
}

int cmd_spatial(const Settings& s, SpatialKind kind, std::ostream& out, std::ostream& err) {
  const Dataset ds = load_dataset(s);
  const auto w = load_weights(s, ds, err);
  const auto design = build_design(ds);
  const LogDetGrid<double> grid(w);
  const auto fit = kind == SpatialKind::Lag ? fit_sar(w, grid, design.x, design.y)
                                            : fit_sem(w, grid, design.x, design.y);
  Json body;
  body["spatial"] = spatial_table(fit);
  emit(s, dump(envelope(std::string(to_string(kind)), command_config(s, true), dataset_digest(ds), body)), out);
  return kExitOk;
}

int cmd_converge(const Settings& s, std::ostream& out, std::ostream& err) {
  const Dataset ds = load_dataset(s);
  const auto w = load_weights(s, ds, err);
  PipelineConfig config;
  config.cutoff = s.cutoff;
  config.alpha = s.alpha;
  config.permutations = s.permutations;
  config.seed = s.seed;
  config.row_standardize = false;  // load_weights already applied it
  const auto report = run_pipeline(ds, w, config);
  Json j = to_json(report);
  j["metadata"]["config"] = command_config(s, true);
  emit(s, dump(j), out);
  if (!s.svg_scatter.empty()) write_file(s.svg_scatter, svg_scatter(report));
  if (!s.geojson_lisa.empty()) write_file(s.geojson_lisa, geojson_lisa(ds, report.lisa));
  return kExitOk;
}

int cmd_simulate(const Settings& s, std::ostream& out, std::ostream& err) {
  Dataset ds = make_lattice(s.rows, s.cols, s.spacing);
  ds.period_length = s.period_length;
  Settings ws = s;
  ws.cutoff = s.cutoff > 0 ? s.cutoff : s.spacing;
  const auto w = load_weights(ws, ds, err);

  DgpSpec<double> spec;
  spec.kind = parse_dgp_kind(s.kind);
  if (s.beta.size() != 2) throw DataError("--beta takes two values: constant and b");
  spec.beta = Eigen::Vector2d(s.beta[0], s.beta[1]);
  spec.spatial_coef = s.coef;
  spec.sigma = s.sigma;
  spec.seed = s.seed;
  ds = simulate_growth(std::move(ds), w, spec, s.log_p0_mean, s.log_p0_sd);
  std::ostringstream text;
  write_csv(text, ds);
  emit(s, text.str(), out);
  return kExitOk;
}

void add_dataset_options(CLI::App* sub, Settings& s) {
  sub->add_option("--input", s.input, "Input CSV (id,x,y,p0,pt) or GeoJSON points");
  sub->add_option("--coords", s.coords, "Coordinate system: planar_km or lonlat_degrees");
  sub->add_option("--t", s.period_length, "Period length T in years");
  sub->add_option("--config", s.config, "JSON config file (flags take precedence)");
  sub->add_option("--out", s.out, "Output file (default stdout)");
}

void add_weight_options(CLI::App* sub, Settings& s) {
  sub->add_option("--cutoff", s.cutoff, "Distance-band cutoff (inclusive)");
  sub->add_option("--weights", s.weights, "GAL or GWT weights file instead of --cutoff");
  sub->add_flag("--no-standardize", s.no_standardize, "Keep raw (binary) weights");
}

void add_inference_options(CLI::App* sub, Settings& s) {
  sub->add_option("--permutations", s.permutations, "Permutations for pseudo p-values");
  sub->add_option("--seed", s.seed, "Random seed");
  sub->add_option("--alpha", s.alpha, "Significance level");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatial convergence analysis: weights, ESDA, OLS diagnostics, spatial ML"};
  app.require_subcommand(1);
  Settings s;

  auto* weights = app.add_subcommand("weights", "Spatial weight files");
  weights->require_subcommand(1);
  auto* build = weights->add_subcommand("build", "Build distance-band weights and write GAL/GWT");
  add_dataset_options(build, s);
  add_weight_options(build, s);
  build->add_option("--format", s.format, "gal or gwt");
  // weights build writes raw weights unless asked otherwise.
  bool standardize_build = false;
  build->add_flag("--standardize", standardize_build, "Row-standardize before writing");

  auto* moran = app.add_subcommand("moran", "Global Moran's I of the growth rate");
  auto* lisa_cmd = app.add_subcommand("lisa", "LISA clusters of the growth rate");
  auto* ols = app.add_subcommand("ols", "OLS convergence regression with diagnostics");
  auto* lag = app.add_subcommand("lag", "ML spatial lag model");
  auto* error = app.add_subcommand("error", "ML spatial error model");
  auto* converge = app.add_subcommand("converge", "Full pipeline");
  for (auto* sub : {moran, lisa_cmd, ols, lag, error, converge}) {
    add_dataset_options(sub, s);
    add_weight_options(sub, s);
    add_inference_options(sub, s);
  }
  lisa_cmd->add_option("--geojson", s.geojson_lisa, "Write the LISA map as GeoJSON");
  converge->add_option("--svg-scatter", s.svg_scatter, "Write growth and Moran scatterplots as SVG");
  converge->add_option("--geojson-lisa", s.geojson_lisa, "Write the LISA map as GeoJSON");

  auto* sim = app.add_subcommand("simulate", "Synthetic lattice dataset as CSV");
  sim->add_option("--rows", s.rows, "Lattice rows");
  sim->add_option("--cols", s.cols, "Lattice columns");
  sim->add_option("--spacing", s.spacing, "Lattice spacing (km)");
  sim->add_option("--kind", s.kind, "independent, lag or error");
  sim->add_option("--coef", s.coef, "Spatial coefficient (rho or lambda)");
  sim->add_option("--beta", s.beta, "Constant and b")->expected(2)->delimiter(',');
  sim->add_option("--sigma", s.sigma, "Innovation standard deviation");
  sim->add_option("--seed", s.seed, "Random seed");
  sim->add_option("--t", s.period_length, "Period length T in years");
  sim->add_option("--cutoff", s.cutoff, "Band cutoff for W (default: spacing)");
  sim->add_option("--log-p0-mean", s.log_p0_mean, "Mean of log initial product");
  sim->add_option("--log-p0-sd", s.log_p0_sd, "Standard deviation of log initial product");
  sim->add_option("--out", s.out, "Output CSV (default stdout)");

  std::vector<std::string> argv_store{"spconv"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    CLI::App* active = nullptr;
    for (auto* sub : {moran, lisa_cmd, ols, lag, error, converge, sim})
      if (sub->parsed()) active = sub;
    if (build->parsed()) active = build;
    if (active != sim) apply_config(s, active);

    if (active == build) {
      s.no_standardize = !standardize_build;
      return cmd_weights_build(s, out, err);
    }
    if (active == moran) return cmd_moran(s, out, err);
    if (active == lisa_cmd) return cmd_lisa(s, out, err);
    if (active == ols) return cmd_ols(s, out, err);
    if (active == lag) return cmd_spatial(s, SpatialKind::Lag, out, err);
    if (active == error) return cmd_spatial(s, SpatialKind::Error, out, err);
    if (active == converge) return cmd_converge(s, out, err);
    if (active == sim) return cmd_simulate(s, out, err);
    err << "usage error: no command\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace spconv
