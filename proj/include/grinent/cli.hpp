#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "grinent/expsim.hpp"
#include "grinent/tomo.hpp"

namespace grinent::cli {

using nlohmann::json;

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,      // I/O and anything unclassified
  kExitSchema = 2,       // run configuration rejected
  kExitParse = 3,        // malformed CSV / JSON input
  kExitConvergence = 4,  // MLE did not converge
  kExitNumerical = 5,    // incomplete set, non-physical state, failed fit, bad parameter
  kExitUsage = 64,       // bad command line
};

struct SweepSpec {
  double start = 0.0;
  double stop = 0.0;
  int count = 0;
  std::vector<double> values() const;
};

struct GrinConfig {
  double wavelength = 0.0;
  double fiber_mode_radius = 0.0;
  double gradient_constant = 0.0;
  std::optional<double> n0;
  std::optional<double> focal_length;
  std::optional<double> length;  // defaults to quarter pitch
  double peak_efficiency = 0.70;
  double cascade_peak_efficiency = 0.90;
  SweepSpec lateral_sweep{-400e-6, 400e-6, 41};
  SweepSpec cascade_sweep{1e-3, 40e-3, 40};
};

struct FringeConfig {
  SweepSpec positions;
  double phase_offset = 0.0;
  double duration = 0.0;
  std::string analyzer = "DD";
};

struct TomographyConfig {
  polkit::BellKind state = polkit::BellKind::kPhiPlus;
  double counts_per_setting = 0.0;
  double duration = 1.0;
  std::optional<double> calibrated_fidelity;
  std::optional<double> calibrated_tangle;
};

struct ReconstructionConfig {
  tomo::MLEConfig mle;
  int bootstrap_resamples = 100;  // 0 disables error bars
  unsigned threads = 1;
};

struct RunConfig {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;  // "fringe" | "tomography" for simulate
  std::optional<GrinConfig> grin;
  std::optional<expsim::SourceModel> source;
  std::optional<FringeConfig> fringe;
  std::optional<TomographyConfig> tomography;
  ReconstructionConfig reconstruction;
};

// Validates against the schema: required fields present, types right, no
// unknown keys at any level. Throws SchemaError naming the offending path.
RunConfig parse_config(const json& j);

// Built-in presets: grin-default, fringe-6nm, fringe-70nm, tomo-phi+, tomo-phi-,
// tomo-psi+, tomo-psi-.
const std::vector<std::string>& preset_names();
json preset(std::string_view name);

// FNV-1a 64 of the compact JSON dump (keys sorted), as 16 hex digits.
std::string content_hash(std::string_view bytes);

// Entry point shared by the executable and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace grinent::cli
