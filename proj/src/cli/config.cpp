#include <cmath>
#include <set>

#include "grinent/cli.hpp"
#include "grinent/errors.hpp"
#include "grinent/json_io.hpp"

namespace grinent::cli {

namespace {

// Field access on one JSON object with path-qualified schema errors.
class Block {
 public:
  Block(const json& j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw SchemaError(path_ + ": expected an object");
    for (const auto& [key, _] : j_.items()) {
      if (!allowed.count(key)) throw SchemaError(qualify(key) + ": unknown field");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key) const {
    if (!has(key)) throw SchemaError(qualify(key) + ": missing required field");
    const json& v = j_.at(key);
    if (!v.is_number()) throw SchemaError(qualify(key) + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw SchemaError(qualify(key) + ": must be finite");
    return d;
  }
  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }
  std::optional<double> maybe_number(const std::string& key) const {
    return has(key) ? std::optional<double>(number(key)) : std::nullopt;
  }

  long long integer(const std::string& key) const {
    if (!has(key)) throw SchemaError(qualify(key) + ": missing required field");
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw SchemaError(qualify(key) + ": expected an integer");
    return v.get<long long>();
  }
  long long integer(const std::string& key, long long fallback) const { return has(key) ? integer(key) : fallback; }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) throw SchemaError(qualify(key) + ": expected true or false");
    return j_.at(key).get<bool>();
  }

  std::string string(const std::string& key) const {
    if (!has(key)) throw SchemaError(qualify(key) + ": missing required field");
    if (!j_.at(key).is_string()) throw SchemaError(qualify(key) + ": expected a string");
    return j_.at(key).get<std::string>();
  }

  const json& raw(const std::string& key) const { return j_.at(key); }
  std::string qualify(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw SchemaError(what);
}

SweepSpec parse_sweep(const json& j, const std::string& path) {
  Block b(j, path, {"start_m", "stop_m", "count"});
  SweepSpec s{b.number("start_m"), b.number("stop_m"), static_cast<int>(b.integer("count"))};
  require(s.count >= 2, path + ".count: must be >= 2");
  return s;
}

GrinConfig parse_grin(const json& j) {
  Block b(j, "grin",
          {"wavelength_m", "fiber_mode_radius_m", "gradient_constant_per_m", "n0", "focal_length_m", "length_m",
           "peak_efficiency", "cascade_peak_efficiency", "lateral_sweep", "cascade_sweep"});
  GrinConfig g;
  g.wavelength = b.number("wavelength_m");
  g.fiber_mode_radius = b.number("fiber_mode_radius_m");
  g.gradient_constant = b.number("gradient_constant_per_m");
  g.n0 = b.maybe_number("n0");
  g.focal_length = b.maybe_number("focal_length_m");
  g.length = b.maybe_number("length_m");
  require(g.n0.has_value() != g.focal_length.has_value(), "grin: exactly one of n0 or focal_length_m is required");
  g.peak_efficiency = b.number("peak_efficiency", g.peak_efficiency);
  g.cascade_peak_efficiency = b.number("cascade_peak_efficiency", g.cascade_peak_efficiency);
  require(g.wavelength > 0, "grin.wavelength_m: must be > 0");
  require(g.fiber_mode_radius > 0, "grin.fiber_mode_radius_m: must be > 0");
  require(g.gradient_constant > 0, "grin.gradient_constant_per_m: must be > 0");
  require(g.peak_efficiency >= 0 && g.peak_efficiency <= 1, "grin.peak_efficiency: must lie in [0, 1]");
  require(g.cascade_peak_efficiency >= 0 && g.cascade_peak_efficiency <= 1,
          "grin.cascade_peak_efficiency: must lie in [0, 1]");
  if (b.has("lateral_sweep")) g.lateral_sweep = parse_sweep(b.raw("lateral_sweep"), "grin.lateral_sweep");
  if (b.has("cascade_sweep")) g.cascade_sweep = parse_sweep(b.raw("cascade_sweep"), "grin.cascade_sweep");
  require(g.cascade_sweep.start >= 0 && g.cascade_sweep.stop >= 0, "grin.cascade_sweep: gaps must be >= 0");
  return g;
}

expsim::SourceModel parse_source(const json& j) {
  Block b(j, "source",
          {"dephasing_visibility", "white_noise_fraction", "center_wavelength_m", "bandwidth_m", "pair_rate_per_s",
           "singles_rate_1_per_s", "singles_rate_2_per_s", "coincidence_window_s", "residual_unitary_1",
           "residual_unitary_2"});
  expsim::SourceModel m;
  m.center_wavelength = b.number("center_wavelength_m");
  m.bandwidth = b.number("bandwidth_m");
  m.pair_rate = b.number("pair_rate_per_s");
  m.dephasing_visibility = b.number("dephasing_visibility", 1.0);
  m.white_noise_fraction = b.number("white_noise_fraction", 0.0);
  m.singles_rate_1 = b.number("singles_rate_1_per_s", m.pair_rate / 0.08);
  m.singles_rate_2 = b.number("singles_rate_2_per_s", m.pair_rate / 0.08);
  m.coincidence_window = b.number("coincidence_window_s", 3e-9);
  try {
    if (b.has("residual_unitary_1")) m.residual_unitary_1 = json_io::unitary_from_json(b.raw("residual_unitary_1"));
    if (b.has("residual_unitary_2")) m.residual_unitary_2 = json_io::unitary_from_json(b.raw("residual_unitary_2"));
    m.validate();
  } catch (const ParseError& e) {
    throw SchemaError(std::string("source: ") + e.what());
  } catch (const InvalidParameterError& e) {
    throw SchemaError(std::string("source: ") + e.what());
  }
  return m;
}

FringeConfig parse_fringe(const json& j) {
  Block b(j, "fringe", {"start_m", "stop_m", "count", "phase_offset_rad", "duration_s", "analyzer"});
  FringeConfig f;
  f.positions = {b.number("start_m"), b.number("stop_m"), static_cast<int>(b.integer("count"))};
  require(f.positions.count >= 2, "fringe.count: must be >= 2");
  f.phase_offset = b.number("phase_offset_rad", 0.0);
  f.duration = b.number("duration_s");
  require(f.duration > 0, "fringe.duration_s: must be > 0");
  if (b.has("analyzer")) f.analyzer = b.string("analyzer");
  require(tomo::standard_settings().find(f.analyzer) != nullptr,
          "fringe.analyzer: must be a two-letter label from {H, V, D, R}");
  return f;
}

TomographyConfig parse_tomography(const json& j) {
  Block b(j, "tomography", {"state", "counts_per_setting", "duration_s", "calibration"});
  TomographyConfig t;
  try {
    t.state = polkit::parse_bell(b.string("state"));
  } catch (const InvalidParameterError& e) {
    throw SchemaError(std::string("tomography.state: ") + e.what());
  }
  t.counts_per_setting = b.number("counts_per_setting");
  require(t.counts_per_setting >= 0, "tomography.counts_per_setting: must be >= 0");
  t.duration = b.number("duration_s", 1.0);
  require(t.duration > 0, "tomography.duration_s: must be > 0");
  if (b.has("calibration")) {
    Block c(b.raw("calibration"), "tomography.calibration", {"fidelity", "tangle"});
    t.calibrated_fidelity = c.number("fidelity");
    t.calibrated_tangle = c.number("tangle");
  }
  return t;
}

ReconstructionConfig parse_reconstruction(const json& j) {
  Block b(j, "reconstruction",
          {"max_iterations", "gradient_tolerance", "parameter_floor", "subtract_accidentals", "coincidence_window_s",
           "bootstrap_resamples", "threads"});
  ReconstructionConfig r;
  r.mle.max_iterations = static_cast<int>(b.integer("max_iterations", r.mle.max_iterations));
  r.mle.gradient_tolerance = b.number("gradient_tolerance", r.mle.gradient_tolerance);
  r.mle.parameter_floor = b.number("parameter_floor", r.mle.parameter_floor);
  r.mle.preprocessing.subtract_accidentals = b.boolean("subtract_accidentals", false);
  r.mle.preprocessing.coincidence_window = b.number("coincidence_window_s", 3e-9);
  r.bootstrap_resamples = static_cast<int>(b.integer("bootstrap_resamples", r.bootstrap_resamples));
  r.threads = static_cast<unsigned>(b.integer("threads", 1));
  require(r.mle.max_iterations >= 1, "reconstruction.max_iterations: must be >= 1");
  require(r.mle.gradient_tolerance > 0, "reconstruction.gradient_tolerance: must be > 0");
  require(r.mle.parameter_floor > 0 && r.mle.parameter_floor < 0.25, "reconstruction.parameter_floor: must lie in (0, 0.25)");
  require(r.bootstrap_resamples == 0 || r.bootstrap_resamples >= 50,
          "reconstruction.bootstrap_resamples: must be 0 or >= 50");
  require(r.threads >= 1 && r.threads <= 256, "reconstruction.threads: must lie in [1, 256]");
  return r;
}

}  // namespace

std::vector<double> SweepSpec::values() const {
  std::vector<double> v;
  v.reserve(count);
  for (int i = 0; i < count; ++i) v.push_back(count == 1 ? start : start + (stop - start) * i / (count - 1));
  return v;
}

RunConfig parse_config(const json& j) {
  Block b(j, "", {"seed", "mode", "grin", "source", "fringe", "tomography", "reconstruction"});
  RunConfig c;
  if (b.has("seed")) {
    const json& s = b.raw("seed");
    require(s.is_number_unsigned() || (s.is_number_integer() && s.get<long long>() >= 0),
            "seed: expected a non-negative integer");
    c.seed = s.get<std::uint64_t>();
  }
  if (b.has("mode")) {
    c.mode = b.string("mode");
    require(*c.mode == "fringe" || *c.mode == "tomography", "mode: expected \"fringe\" or \"tomography\"");
  }
  if (b.has("grin")) c.grin = parse_grin(b.raw("grin"));
  if (b.has("source")) c.source = parse_source(b.raw("source"));
  if (b.has("fringe")) c.fringe = parse_fringe(b.raw("fringe"));
  if (b.has("tomography")) c.tomography = parse_tomography(b.raw("tomography"));
  if (b.has("reconstruction")) c.reconstruction = parse_reconstruction(b.raw("reconstruction"));
  return c;
}

std::string content_hash(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[i] = digits[h & 0xf];
  return out;
}

}  // namespace grinent::cli
