#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <string_view>

// Two-photon polarization algebra in the basis {HH, HV, VH, VV}.
namespace grinent::polkit {

using cplx = std::complex<double>;
using Ket = Eigen::Vector4cd;
using Matrix4 = Eigen::Matrix4cd;
using Unitary2 = Eigen::Matrix2cd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr std::array<std::string_view, 4> kBasisLabels{"HH", "HV", "VH", "VV"};

class DensityMatrix;

// Normalized pure state. Construction fails unless sum |a_i|^2 == 1 within 1e-10.
class TwoQubitState {
 public:
  explicit TwoQubitState(const Ket& amplitudes);

  const Ket& amplitudes() const { return amps_; }
  cplx operator[](int i) const { return amps_(i); }
  DensityMatrix density() const;

  // |<this|other>|, insensitive to global phase.
  double overlap(const TwoQubitState& other) const;

 private:
  Ket amps_;
};

// Physical two-qubit state: Hermitian, unit trace, PSD within the floors below.
class DensityMatrix {
 public:
  static constexpr double kHermitianTol = 1e-10;
  static constexpr double kTraceTol = 1e-10;
  static constexpr double kEigenFloor = -1e-9;

  explicit DensityMatrix(const Matrix4& entries);

  // Skips validation; for callers that construct physical matrices by design.
  static DensityMatrix trusted(const Matrix4& entries);
  static DensityMatrix maximally_mixed();

  const Matrix4& matrix() const { return m_; }
  cplx operator()(int r, int c) const { return m_(r, c); }
  Eigen::Vector4d eigenvalues() const;  // ascending

 private:
  struct Unchecked {};
  DensityMatrix(const Matrix4& entries, Unchecked) : m_(entries) {}
  Matrix4 m_;
};

enum class BellKind { kPhiPlus, kPhiMinus, kPsiPlus, kPsiMinus };
inline constexpr std::array<BellKind, 4> kAllBell{BellKind::kPhiPlus, BellKind::kPhiMinus,
                                                  BellKind::kPsiPlus, BellKind::kPsiMinus};

std::string_view bell_name(BellKind kind);  // "phi+", "phi-", "psi+", "psi-"
BellKind parse_bell(std::string_view name);

// (|HH> + e^{i theta} |VV>) / sqrt(2)
TwoQubitState phi_theta(double theta);
TwoQubitState bell_state(BellKind kind);

struct Waveplate {
  double retardance;  // rad, pi for half-wave
  double fast_axis;   // rad from horizontal

  static Waveplate half_wave(double angle) { return {kPi, angle}; }
  static Waveplate quarter_wave(double angle) { return {kPi / 2.0, angle}; }
};

// Jones matrix R(a) diag(1, e^{i d}) R(-a).
Unitary2 waveplate_operator(const Waveplate& wp);

// One analyzer arm: the photon crosses the half-wave plate, then the
// quarter-wave plate, then a PBS transmitting H.
struct ArmSetting {
  double qwp_angle = 0.0;
  double hwp_angle = 0.0;
};

struct AnalyzerSetting {
  ArmSetting arm1;
  ArmSetting arm2;
};

Unitary2 arm_operator(const ArmSetting& arm);
// Polarization state transmitted by the arm: U^dagger |H>.
Eigen::Vector2cd arm_state(const ArmSetting& arm);

TwoQubitState apply_local(const Unitary2& u1, const Unitary2& u2, const TwoQubitState& state);
DensityMatrix apply_local(const Unitary2& u1, const Unitary2& u2, const DensityMatrix& rho);

Matrix4 projector(const AnalyzerSetting& setting);

double fidelity(const DensityMatrix& rho, const TwoQubitState& target);
double concurrence(const DensityMatrix& rho);
double tangle(const DensityMatrix& rho);
double purity(const DensityMatrix& rho);

// (1/2) * sum |eigenvalues(a - b)|
double trace_distance(const Matrix4& a, const Matrix4& b);

// Closest physical state in the sense of clipping negative eigenvalues and
// renormalizing the trace.
DensityMatrix clip_to_physical(const Matrix4& hermitian);

bool is_unitary(const Unitary2& u, double tol = 1e-10);

}  // namespace grinent::polkit
