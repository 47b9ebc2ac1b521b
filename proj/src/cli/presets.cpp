#include <string>

#include "grinent/cli.hpp"
#include "grinent/errors.hpp"

namespace grinent::cli {

namespace {

json source_block(double visibility, double bandwidth, double pair_rate) {
  return {
      {"dephasing_visibility", visibility},
      {"white_noise_fraction", 0.0},
      {"center_wavelength_m", 728e-9},
      {"bandwidth_m", bandwidth},
      {"pair_rate_per_s", pair_rate},
      {"singles_rate_1_per_s", pair_rate / 0.08},
      {"singles_rate_2_per_s", pair_rate / 0.08},
      {"coincidence_window_s", 3e-9},
  };
}

// Two fringe periods (lambda / 2 each) centred on the zero-delay position.
json fringe_block(double duration) {
  return {{"start_m", -364e-9}, {"stop_m", 364e-9}, {"count", 40}, {"phase_offset_rad", 0.0},
          {"duration_s", duration}, {"analyzer", "DD"}};
}

json tomo_preset(const char* state, double fidelity, double tangle) {
  return {
      {"seed", 1234},
      {"mode", "tomography"},
      {"source", source_block(0.9785, 6e-9, 180.0)},
      {"tomography",
       {{"state", state},
        {"counts_per_setting", 1e4},
        {"duration_s", 1.0},
        {"calibration", {{"fidelity", fidelity}, {"tangle", tangle}}}}},
      {"reconstruction", {{"bootstrap_resamples", 100}}},
  };
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"grin-default", "fringe-6nm", "fringe-70nm", "tomo-phi+",
                                              "tomo-phi-",    "tomo-psi+",  "tomo-psi-"};
  return names;
}

json preset(std::string_view name) {
  if (name == "grin-default") {
    return {{"grin",
             {{"wavelength_m", 728e-9},
              {"fiber_mode_radius_m", 2.5e-6},
              {"gradient_constant_per_m", 312.0},
              {"focal_length_m", 2e-3},
              {"peak_efficiency", 0.70},
              {"cascade_peak_efficiency", 0.90},
              {"lateral_sweep", {{"start_m", -400e-6}, {"stop_m", 400e-6}, {"count", 41}}},
              {"cascade_sweep", {{"start_m", 1e-3}, {"stop_m", 40e-3}, {"count", 40}}}}}};
  }
  if (name == "fringe-6nm") {
    return {{"seed", 6}, {"mode", "fringe"}, {"source", source_block(0.9785, 6e-9, 180.0)},
            {"fringe", fringe_block(120.0)}};
  }
  if (name == "fringe-70nm") {
    // 30 nm: effective detected bandwidth for the 70 nm filter set.
    return {{"seed", 70}, {"mode", "fringe"}, {"source", source_block(0.9094, 30e-9, 1000.0)},
            {"fringe", fringe_block(20.0)}};
  }
  if (name == "tomo-phi+") return tomo_preset("phi+", 0.938, 0.873);
  if (name == "tomo-phi-") return tomo_preset("phi-", 0.949, 0.940);
  if (name == "tomo-psi+") return tomo_preset("psi+", 0.923, 0.846);
  if (name == "tomo-psi-") return tomo_preset("psi-", 0.965, 0.911);
  std::string known;
  for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
  throw SchemaError("unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

}  // namespace grinent::cli
