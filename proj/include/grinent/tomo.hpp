#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grinent/errors.hpp"
#include "grinent/expsim.hpp"
#include "grinent/polkit.hpp"

// Two-qubit polarization tomography: measurement set, linear inversion,
// maximum-likelihood reconstruction and Poisson-bootstrap error bars.
namespace grinent::tomo {

using expsim::CountRecord;
using polkit::AnalyzerSetting;
using polkit::BellKind;
using polkit::DensityMatrix;
using polkit::Matrix4;

struct LabeledSetting {
  std::string label;  // two characters from {H, V, D, R}, arm 1 first
  AnalyzerSetting analyzer;
};

class TomographySet {
 public:
  explicit TomographySet(std::vector<LabeledSetting> settings);

  std::span<const LabeledSetting> settings() const { return settings_; }
  std::size_t size() const { return settings_.size(); }
  const LabeledSetting* find(std::string_view label) const;

 private:
  std::vector<LabeledSetting> settings_;
};

// The 16 settings {H, V, D, R} x {H, V, D, R}.
TomographySet standard_settings();

struct SetDiagnostics {
  int gram_rank;
  double gram_condition;    // cond of G_ij = tr(P_i P_j)
  double design_condition;  // cond of the 16 x 16 real measurement matrix = sqrt(gram_condition)
};

SetDiagnostics diagnose(const TomographySet& set);

struct TomoSimOptions {
  double duration = 1.0;
  double singles_ratio = 0.08;     // singles means = counts_per_setting / 2 / ratio
  double coincidence_window = 0.0; // > 0 adds S1 S2 window duration accidentals
};

// Poisson counts with mean counts_per_setting * tr(P rho) for each setting.
std::vector<CountRecord> simulate_tomography_counts(const DensityMatrix& rho, const TomographySet& set,
                                                    double counts_per_setting, std::uint64_t seed,
                                                    const TomoSimOptions& options = {});

struct CountPreprocessing {
  bool subtract_accidentals = false;
  double coincidence_window = 0.0;
};

// Coincidences after optional accidental subtraction (clamped at zero).
double effective_coincidences(const CountRecord& record, const CountPreprocessing& pre);

struct LinearInversion {
  Matrix4 estimate;  // Hermitian, unit trace, possibly not PSD
  bool nonphysical;
  double min_eigenvalue;
};

LinearInversion linear_inversion(std::span<const CountRecord> records, const CountPreprocessing& pre = {});

struct MLEConfig {
  int max_iterations = 5000;
  double gradient_tolerance = 1e-10;
  double parameter_floor = 1e-6;  // eigenvalue clamp for the starting point
  CountPreprocessing preprocessing;
};

enum class StartPoint { kLinearInversion, kMaximallyMixed };

struct MLEResult {
  DensityMatrix rho = DensityMatrix::maximally_mixed();
  int iterations = 0;
  double gradient_norm = 0.0;
  double log_likelihood = 0.0;
  StartPoint start = StartPoint::kLinearInversion;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, MLEResult best) : Error(what), best_(std::move(best)) {}
  const MLEResult& best() const { return best_; }

 private:
  MLEResult best_;
};

// rho = T^dagger T / tr(T^dagger T), T lower triangular with real diagonal,
// maximizing the Poisson likelihood (source intensity profiled out).
MLEResult mle_reconstruct(std::span<const CountRecord> records, const MLEConfig& config = {},
                          StartPoint start = StartPoint::kLinearInversion);

// Poisson log-likelihood at the best-fit intensity, without the log(n!) terms.
double log_likelihood(std::span<const CountRecord> records, const DensityMatrix& rho,
                      const CountPreprocessing& pre = {});

// Parameter vector <-> T, exposed for gradient checks.
using TParams = Eigen::Matrix<double, 16, 1>;
Matrix4 t_from_params(const TParams& t);
TParams params_from_state(const Matrix4& rho, double floor);
// Objective -logL / N and its gradient in the T parameters.
double mle_objective(std::span<const CountRecord> records, const TParams& t, TParams* gradient,
                     const CountPreprocessing& pre = {});

struct BootstrapResult {
  double fidelity_mean = 0.0;
  double fidelity_std = 0.0;
  double tangle_mean = 0.0;
  double tangle_std = 0.0;
  std::vector<double> fidelities;
  std::vector<double> tangles;
};

// Parametric Poisson bootstrap: each resample redraws every count around its
// observed value and reruns the MLE. Resample i uses derive_seed(seed, i).
BootstrapResult monte_carlo_errors(std::span<const CountRecord> records, int n_resamples, std::uint64_t seed,
                                   const polkit::TwoQubitState& target, const MLEConfig& config = {},
                                   unsigned threads = 1);

struct StateReport {
  Matrix4 rho;
  Eigen::Vector4d eigenvalues;
  std::array<double, 4> fidelities;  // phi+, phi-, psi+, psi-
  BellKind best_target;
  double concurrence;
  double tangle;
  double purity;
  double max_imaginary;
};

StateReport report(const DensityMatrix& rho);

// CSV: setting_label,coincidences,singles_1,singles_2,duration_s
void write_counts_csv(std::ostream& out, std::span<const CountRecord> records);
std::vector<CountRecord> read_counts_csv(std::istream& in, const TomographySet& set);

}  // namespace grinent::tomo
