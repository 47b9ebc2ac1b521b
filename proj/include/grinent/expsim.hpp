#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "grinent/polkit.hpp"

// End-to-end simulation of the entangled-pair experiment: mirror-controlled
// phase, bandwidth-limited fringe envelope, Poissonian counting with accidentals.
namespace grinent::expsim {

using polkit::AnalyzerSetting;
using polkit::BellKind;
using polkit::DensityMatrix;
using polkit::Unitary2;

struct SourceModel {
  double dephasing_visibility = 1.0;  // V, multiplies the HH-VV coherence
  double white_noise_fraction = 0.0;  // epsilon, weight of I/4
  double center_wavelength = 728e-9;
  double bandwidth = 6e-9;            // FWHM of the filters
  double pair_rate = 180.0;           // true coincidences/s at fringe maximum
  double singles_rate_1 = 2250.0;
  double singles_rate_2 = 2250.0;
  double coincidence_window = 3e-9;
  Unitary2 residual_unitary_1 = Unitary2::Identity();
  Unitary2 residual_unitary_2 = Unitary2::Identity();

  // Throws InvalidParameterError when an invariant is violated.
  void validate() const;

  // Singles set so that pair_rate / singles == ratio on both arms.
  static SourceModel with_singles_ratio(double pair_rate, double ratio = 0.08);
};

struct MirrorScan {
  std::vector<double> positions;  // mirror displacement, m
  double phase_offset = 0.0;

  static MirrorScan uniform(double start, double stop, int count, double phase_offset = 0.0);
};

struct CountRecord {
  std::string setting_label;
  AnalyzerSetting analyzer;
  double duration = 1.0;
  long long coincidences = 0;
  long long singles_1 = 0;
  long long singles_2 = 0;
};

struct ExpectedCounts {
  double coincidences = 0.0;  // true + accidental
  double accidentals = 0.0;
  double singles_1 = 0.0;
  double singles_2 = 0.0;
};

// (|HH> + e^{i theta} |VV>)/sqrt2 with coherence scaled by V * coherence_scale and white noise
// admixed; residual unitaries NOT applied.
DensityMatrix source_state(const SourceModel& model, double theta, double coherence_scale = 1.0);
// source_state conjugated by the residual local unitaries.
DensityMatrix effective_state(const SourceModel& model, double theta);
// Bell-state preparation: theta = 0 / pi for Phi+/-, plus a half-wave plate at
// 45 deg on arm 1 for Psi+/-, then the residual unitaries.
DensityMatrix bell_model_state(const SourceModel& model, BellKind kind);

double phase_of_position(double z, const SourceModel& model, double offset);
double coherence_length(const SourceModel& model);
double visibility_envelope(double z, const SourceModel& model);
// State seen at mirror position z: phase from the phase law, coherence damped by the envelope.
DensityMatrix state_at_position(const SourceModel& model, double z, double offset);

double coincidence_probability(const DensityMatrix& rho, const AnalyzerSetting& analyzer);
ExpectedCounts expected_counts(double probability, const SourceModel& model, double duration);

// Independent Poisson draws of coincidences, singles_1, singles_2 (in that order).
CountRecord sample_counts(const ExpectedCounts& means, std::uint64_t seed, std::string label = {},
                          const AnalyzerSetting& analyzer = {}, double duration = 1.0);

// SplitMix64 mix of (seed, index): per-item seeds independent of evaluation order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Both arms transmitting (H + V)/sqrt(2).
AnalyzerSetting diagonal_analyzer();

struct ScanPoint {
  double position;
  CountRecord record;
};

struct ExpectedScanPoint {
  double position;
  ExpectedCounts means;
};

std::vector<ExpectedScanPoint> expected_fringe(const MirrorScan& scan, const SourceModel& model,
                                               const AnalyzerSetting& analyzer, double duration_per_point);

std::vector<ScanPoint> fringe_scan(const MirrorScan& scan, const SourceModel& model,
                                   const AnalyzerSetting& analyzer, double duration_per_point,
                                   std::uint64_t seed, unsigned threads = 1);

// CSV: position_m,coincidences,singles_1,singles_2,duration_s
void write_fringe_csv(std::ostream& out, std::span<const ScanPoint> points);
std::vector<ScanPoint> read_fringe_csv(std::istream& in);

// Picks white noise and a residual rotation on arm 1 so that the analytic
// state for `kind` has the requested fidelity and tangle, keeping the base
// model's dephasing visibility. Throws InvalidParameterError when the pair is
// not reachable (tangle above V^2 or fidelity above (1 + sqrt(tangle)) / 2).
SourceModel calibrate_bell(const SourceModel& base, BellKind kind, double target_fidelity,
                           double target_tangle);

}  // namespace grinent::expsim
