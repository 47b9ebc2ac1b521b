#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "grinent/beam_optics.hpp"
#include "grinent/cli.hpp"
#include "grinent/csv_io.hpp"
#include "grinent/errors.hpp"
#include "grinent/fitkit.hpp"
#include "grinent/json_io.hpp"

#ifndef GRINENT_VERSION
#define GRINENT_VERSION "0.0.0"
#endif

namespace grinent::cli {

namespace fs = std::filesystem;
namespace bo = beam_optics;

namespace {

struct Options {
  std::string config_path;
  std::string preset_name;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string input;
  std::string model;
};

struct Loaded {
  RunConfig config;
  json document;  // merged preset + config file + --seed, as hashed
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Loaded load(const Options& o) {
  json doc = json::object();
  if (!o.preset_name.empty()) doc = preset(o.preset_name);
  if (!o.config_path.empty()) {
    json file;
    try {
      file = json::parse(read_file(o.config_path));
    } catch (const json::parse_error& e) {
      throw ParseError(o.config_path + ": " + e.what());
    }
    if (!file.is_object()) throw SchemaError("config: top level must be an object");
    doc.merge_patch(file);
  }
  if (o.seed) doc["seed"] = *o.seed;
  return {parse_config(doc), doc};
}

class Outputs {
 public:
  explicit Outputs(std::string dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::string& content) {
    std::ofstream f(fs::path(dir_) / name, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write '" + (fs::path(dir_) / name).string() + "'");
    f << content;
    if (!f) throw Error("write failed for '" + name + "'");
    files_.push_back({{"name", name}, {"hash", content_hash(content)}});
  }

  void manifest(const std::string& command, const Loaded& loaded, std::optional<std::uint64_t> seed,
                json inputs = json::array()) {
    json m = {
        {"tool", "grinent"},
        {"version", GRINENT_VERSION},
        {"command", command},
        {"config_hash", content_hash(loaded.document.dump())},
        {"seed", seed ? json(*seed) : json(nullptr)},
        {"inputs", std::move(inputs)},
        {"outputs", files_},
    };
    std::ofstream f(fs::path(dir_) / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write manifest.json");
    f << m.dump(2) << '\n';
  }

 private:
  std::string dir_;
  json files_ = json::array();
};

std::string pretty(const json& j) { return j.dump(2) + "\n"; }

std::uint64_t require_seed(const RunConfig& c) {
  if (!c.seed) throw SchemaError("seed: missing required field (set it in the config or pass --seed)");
  return *c.seed;
}

json input_entry(const std::string& path, const std::string& content) {
  return {{"name", fs::path(path).filename().string()}, {"hash", content_hash(content)}};
}

int cmd_grin(const Options& o, std::ostream& out) {
  const Loaded loaded = load(o);
  if (!loaded.config.grin) throw SchemaError("grin: missing required block");
  const GrinConfig& g = *loaded.config.grin;

  bo::GrinLens lens = g.focal_length ? bo::quarter_pitch_lens(g.gradient_constant, *g.focal_length)
                                     : bo::GrinLens{*g.n0, g.gradient_constant,
                                                    bo::kPi / (2.0 * g.gradient_constant), 0.0};
  if (g.length) lens.length = *g.length;
  const double f = bo::focal_length(lens);
  const bo::GaussianBeam fiber(g.wavelength, g.fiber_mode_radius, 0.0);
  const bo::GaussianBeam collimated = bo::propagate(fiber, bo::grin_abcd(lens));
  const double w_formula = bo::coupled_waist(g.wavelength, g.fiber_mode_radius, f);
  const double z_formula = bo::confocal_parameter(w_formula, g.wavelength);
  const double fwhm = bo::lateral_fwhm(w_formula);

  const auto offsets = g.lateral_sweep.values();
  const auto lateral = bo::lateral_sweep(collimated.waist_radius, collimated.waist_radius, offsets);
  const auto gaps = g.cascade_sweep.values();
  const auto cascade = bo::cascade_sweep(collimated, gaps, g.cascade_peak_efficiency);
  const auto cascade_rel = bo::cascade_sweep(collimated, gaps, g.cascade_peak_efficiency,
                                             bo::CascadeNormalization::kRelativeToSingleDevice);
  auto minmax = [](const std::vector<bo::SweepPoint>& pts) {
    auto [lo, hi] = std::minmax_element(pts.begin(), pts.end(),
                                        [](auto& a, auto& b) { return a.efficiency < b.efficiency; });
    return json{{"min", lo->efficiency}, {"max", hi->efficiency}};
  };

  json report = {
      {"inputs",
       {{"wavelength_m", g.wavelength},
        {"fiber_mode_radius_m", g.fiber_mode_radius},
        {"gradient_constant_per_m", lens.g},
        {"n0", lens.n0},
        {"length_m", lens.length},
        {"pitch", lens.pitch()},
        {"peak_efficiency", g.peak_efficiency},
        {"cascade_peak_efficiency", g.cascade_peak_efficiency}}},
      {"focal_length_m", f},
      {"coupled_waist_m", w_formula},
      {"propagated_waist_m", collimated.waist_radius},
      {"propagated_waist_position_m", collimated.waist_position},
      {"confocal_parameter_m", z_formula},
      {"translational_fwhm_m", fwhm},
      {"cascade",
       {{"relative_to_input", minmax(cascade)}, {"relative_to_single_device", minmax(cascade_rel)}}},
  };

  Outputs files(o.out_dir);
  std::ostringstream lat, cas;
  bo::write_sweep_csv(lat, "offset_m", lateral);
  bo::write_sweep_csv(cas, "gap_m", cascade);
  files.write("grin_report.json", pretty(report));
  files.write("lateral_sweep.csv", lat.str());
  files.write("cascade_sweep.csv", cas.str());
  files.manifest("grin", loaded, loaded.config.seed);
  out << pretty(report);
  return kExitOk;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  const Loaded loaded = load(o);
  const RunConfig& c = loaded.config;
  std::string mode;
  if (c.mode) {
    mode = *c.mode;
  } else if (c.fringe && !c.tomography) {
    mode = "fringe";
  } else if (c.tomography && !c.fringe) {
    mode = "tomography";
  } else {
    throw SchemaError("mode: missing required field (config has both or neither of fringe/tomography)");
  }
  if (!c.source) throw SchemaError("source: missing required block");
  const std::uint64_t seed = require_seed(c);
  Outputs files(o.out_dir);

  if (mode == "fringe") {
    if (!c.fringe) throw SchemaError("fringe: missing required block");
    const auto& fc = *c.fringe;
    const auto scan = expsim::MirrorScan::uniform(fc.positions.start, fc.positions.stop, fc.positions.count,
                                                  fc.phase_offset);
    const auto analyzer = tomo::standard_settings().find(fc.analyzer)->analyzer;
    const auto points = expsim::fringe_scan(scan, *c.source, analyzer, fc.duration, seed);
    std::ostringstream csv;
    expsim::write_fringe_csv(csv, points);
    files.write("fringe.csv", csv.str());
    out << "wrote " << points.size() << " fringe points to " << (fs::path(o.out_dir) / "fringe.csv").string()
        << '\n';
  } else {
    if (!c.tomography) throw SchemaError("tomography: missing required block");
    const auto& tc = *c.tomography;
    expsim::SourceModel model = *c.source;
    if (tc.calibrated_fidelity) {
      model = expsim::calibrate_bell(model, tc.state, *tc.calibrated_fidelity, *tc.calibrated_tangle);
    }
    const auto rho = expsim::bell_model_state(model, tc.state);
    tomo::TomoSimOptions opts;
    opts.duration = tc.duration;
    if (model.singles_rate_1 > 0) opts.singles_ratio = model.pair_rate / model.singles_rate_1;
    const auto records = tomo::simulate_tomography_counts(rho, tomo::standard_settings(), tc.counts_per_setting,
                                                          seed, opts);
    std::ostringstream csv;
    tomo::write_counts_csv(csv, records);
    json model_state = json_io::report_to_json(tomo::report(rho));
    model_state["source"] = {{"dephasing_visibility", model.dephasing_visibility},
                             {"white_noise_fraction", model.white_noise_fraction},
                             {"residual_unitary_1", json_io::unitary_to_json(model.residual_unitary_1)},
                             {"residual_unitary_2", json_io::unitary_to_json(model.residual_unitary_2)}};
    files.write("tomo_counts.csv", csv.str());
    files.write("model_state.json", pretty(model_state));
    out << "wrote " << records.size() << " tomography records to "
        << (fs::path(o.out_dir) / "tomo_counts.csv").string() << '\n';
  }
  files.manifest("simulate", loaded, seed);
  return kExitOk;
}

int cmd_reconstruct(const Options& o, std::ostream& out) {
  const Loaded loaded = load(o);
  const RunConfig& c = loaded.config;
  const std::string content = read_file(o.input);
  std::istringstream in(content);
  const auto set = tomo::standard_settings();
  const auto records = tomo::read_counts_csv(in, set);

  const auto& rc = c.reconstruction;
  const tomo::MLEResult fit = tomo::mle_reconstruct(records, rc.mle);
  const tomo::StateReport rep = tomo::report(fit.rho);
  json state = json_io::report_to_json(rep);
  state["density_matrix"] = json_io::density_to_json(fit.rho);
  state["convergence"] = {{"iterations", fit.iterations},
                          {"gradient_norm", fit.gradient_norm},
                          {"log_likelihood", fit.log_likelihood},
                          {"gradient_tolerance", rc.mle.gradient_tolerance}};
  try {
    const auto li = tomo::linear_inversion(records, rc.mle.preprocessing);
    state["linear_inversion"] = {{"nonphysical", li.nonphysical}, {"min_eigenvalue", li.min_eigenvalue}};
  } catch (const InvalidParameterError&) {
    state["linear_inversion"] = nullptr;
  }
  const std::uint64_t seed = c.seed.value_or(0);
  if (rc.bootstrap_resamples > 0) {
    const auto target = polkit::bell_state(rep.best_target);
    const auto boot = tomo::monte_carlo_errors(records, rc.bootstrap_resamples, seed, target, rc.mle, rc.threads);
    state["error_bars"] = {{"target", std::string(polkit::bell_name(rep.best_target))},
                           {"resamples", rc.bootstrap_resamples},
                           {"fidelity_std", boot.fidelity_std},
                           {"tangle_std", boot.tangle_std},
                           {"fidelity_mean", boot.fidelity_mean},
                           {"tangle_mean", boot.tangle_mean}};
  } else {
    state["error_bars"] = nullptr;
  }

  Outputs files(o.out_dir);
  files.write("state.json", pretty(state));
  files.manifest("reconstruct", loaded, seed, json::array({input_entry(o.input, content)}));
  out << pretty(state);
  return kExitOk;
}

int cmd_fit(const Options& o, std::ostream& out) {
  const Loaded loaded = load(o);
  const std::string content = read_file(o.input);
  std::istringstream in(content);
  json result;
  if (o.model == "fringe") {
    const auto points = expsim::read_fringe_csv(in);
    std::vector<double> x, y, w;
    for (const auto& p : points) {
      const double d = p.record.duration;
      x.push_back(p.position);
      y.push_back(p.record.coincidences / d);
      w.push_back(d * d / std::max<double>(p.record.coincidences, 1.0));
    }
    result = json_io::fit_to_json(fitkit::fit_sinusoid(x, y, w));
  } else {
    std::string first;
    std::getline(in, first);
    if (!first.empty() && first.back() == '\r') first.pop_back();
    const std::string x_name = first.rfind("gap_m", 0) == 0 ? "gap_m" : "offset_m";
    std::istringstream again(content);
    const auto rows = csv::read_table(again, {x_name, "efficiency"});
    std::vector<double> x, y;
    for (const auto& r : rows) {
      x.push_back(csv::parse_real(r.fields[0], r.line, x_name));
      y.push_back(csv::parse_real(r.fields[1], r.line, "efficiency"));
    }
    result = json_io::fit_to_json(fitkit::fit_gaussian(x, y));
  }
  Outputs files(o.out_dir);
  files.write("fit.json", pretty(result));
  files.manifest("fit", loaded, loaded.config.seed, json::array({input_entry(o.input, content)}));
  out << pretty(result);
  return kExitOk;
}

int cmd_report(const Options& o, std::ostream& out) {
  const Loaded loaded = load(o);
  const std::string content = read_file(o.input);
  json doc;
  try {
    doc = json::parse(content);
  } catch (const json::parse_error& e) {
    throw ParseError(o.input + ": " + e.what());
  }
  const json& dm = doc.contains("density_matrix") ? doc["density_matrix"] : doc;
  const json result = json_io::report_to_json(tomo::report(json_io::density_from_json(dm)));
  Outputs files(o.out_dir);
  files.write("report.json", pretty(result));
  files.manifest("report", loaded, loaded.config.seed, json::array({input_entry(o.input, content)}));
  out << pretty(result);
  return kExitOk;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config_path, "JSON run configuration");
  std::string presets;
  for (const auto& n : preset_names()) presets += (presets.empty() ? "" : ", ") + n;
  sub->add_option("--preset", o.preset_name, "start from a built-in preset (" + presets + ")");
  sub->add_option("--seed", o.seed, "RNG seed (overrides the config)");
  sub->add_option("--out", o.out_dir, "output directory")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"GRIN-lens coupling, entangled-pair simulation and two-qubit tomography", "grinent"};
  app.require_subcommand(1);
  Options o;

  auto* grin = app.add_subcommand("grin", "GRIN lens / fiber beam report and coupling sweeps");
  auto* simulate = app.add_subcommand("simulate", "simulate a fringe scan or a tomography count set");
  auto* reconstruct = app.add_subcommand("reconstruct", "maximum-likelihood state reconstruction from counts");
  auto* fit = app.add_subcommand("fit", "fit a fringe scan or a translational-efficiency profile");
  auto* report = app.add_subcommand("report", "fidelity/tangle/purity report for a density matrix");
  for (auto* s : {grin, simulate, reconstruct, fit, report}) add_common(s, o);
  reconstruct->add_option("counts", o.input, "tomography counts CSV")->required();
  fit->add_option("data", o.input, "fringe CSV or efficiency sweep CSV")->required();
  fit->add_option("--model", o.model, "fringe | profile")->required()->check(CLI::IsMember({"fringe", "profile"}));
  report->add_option("state", o.input, "density matrix JSON (or reconstruct output)")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*grin) return cmd_grin(o, out);
    if (*simulate) return cmd_simulate(o, out);
    if (*reconstruct) return cmd_reconstruct(o, out);
    if (*fit) return cmd_fit(o, out);
    if (*report) return cmd_report(o, out);
  } catch (const SchemaError& e) {
    err << "schema error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitParse;
  } catch (const tomo::ConvergenceError& e) {
    err << "convergence error: " << e.what() << '\n';
    return kExitConvergence;
  } catch (const IncompleteSetError& e) {
    err << "incomplete-set error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const InvalidStateError& e) {
    err << "invalid state: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const FitError& e) {
    err << "fit error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const InvalidParameterError& e) {
    err << "invalid parameter: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const SingularPropagationError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace grinent::cli
