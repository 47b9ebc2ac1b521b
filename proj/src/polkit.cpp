#include "grinent/polkit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "grinent/errors.hpp"

namespace grinent::polkit {

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

Eigen::Matrix2d rotation(double a) {
  Eigen::Matrix2d r;
  r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return r;
}

Matrix4 kron(const Unitary2& a, const Unitary2& b) {
  Matrix4 out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return out;
}

// sigma_y (x) sigma_y in the HH, HV, VH, VV basis.
Eigen::Matrix4d spin_flip() {
  Eigen::Matrix4d s = Eigen::Matrix4d::Zero();
  s(0, 3) = -1.0;
  s(1, 2) = 1.0;
  s(2, 1) = 1.0;
  s(3, 0) = -1.0;
  return s;
}

}  // namespace

TwoQubitState::TwoQubitState(const Ket& amplitudes) : amps_(amplitudes) {
  if (std::abs(amps_.squaredNorm() - 1.0) > 1e-10) {
    throw InvalidStateError("state amplitudes are not normalized (norm^2 = " +
                            std::to_string(amps_.squaredNorm()) + ")");
  }
}

DensityMatrix TwoQubitState::density() const { return DensityMatrix::trusted(amps_ * amps_.adjoint()); }

double TwoQubitState::overlap(const TwoQubitState& other) const { return std::abs(amps_.dot(other.amps_)); }

DensityMatrix::DensityMatrix(const Matrix4& entries) : m_(entries) {
  if (!m_.allFinite()) throw InvalidStateError("density matrix has non-finite entries");
  const double herm = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
  if (herm > kHermitianTol) {
    throw InvalidStateError("density matrix is not Hermitian (deviation " + std::to_string(herm) + ")");
  }
  const cplx tr = m_.trace();
  if (std::abs(tr - 1.0) > kTraceTol) {
    throw InvalidStateError("density matrix trace is " + std::to_string(tr.real()) + ", expected 1");
  }
  const double lo = eigenvalues().minCoeff();
  if (lo < kEigenFloor) {
    throw InvalidStateError("density matrix has negative eigenvalue " + std::to_string(lo));
  }
}

DensityMatrix DensityMatrix::trusted(const Matrix4& entries) { return DensityMatrix(entries, Unchecked{}); }

DensityMatrix DensityMatrix::maximally_mixed() { return trusted(Matrix4::Identity() / 4.0); }

Eigen::Vector4d DensityMatrix::eigenvalues() const {
  const Matrix4 h = 0.5 * (m_ + m_.adjoint());
  return Eigen::SelfAdjointEigenSolver<Matrix4>(h, Eigen::EigenvaluesOnly).eigenvalues();
}

std::string_view bell_name(BellKind kind) {
  switch (kind) {
    case BellKind::kPhiPlus: return "phi+";
    case BellKind::kPhiMinus: return "phi-";
    case BellKind::kPsiPlus: return "psi+";
    case BellKind::kPsiMinus: return "psi-";
  }
  return "?";
}

BellKind parse_bell(std::string_view name) {
  for (BellKind k : kAllBell)
    if (bell_name(k) == name) return k;
  throw InvalidParameterError("unknown Bell state '" + std::string(name) + "' (expected phi+, phi-, psi+, psi-)");
}

TwoQubitState phi_theta(double theta) {
  Ket a = Ket::Zero();
  a(0) = kInvSqrt2;
  a(3) = std::polar(kInvSqrt2, theta);
  return TwoQubitState(a);
}

TwoQubitState bell_state(BellKind kind) {
  Ket a = Ket::Zero();
  switch (kind) {
    case BellKind::kPhiPlus: a << kInvSqrt2, 0, 0, kInvSqrt2; break;
    case BellKind::kPhiMinus: a << kInvSqrt2, 0, 0, -kInvSqrt2; break;
    case BellKind::kPsiPlus: a << 0, kInvSqrt2, kInvSqrt2, 0; break;
    case BellKind::kPsiMinus: a << 0, kInvSqrt2, -kInvSqrt2, 0; break;
  }
  return TwoQubitState(a);
}

Unitary2 waveplate_operator(const Waveplate& wp) {
  const Eigen::Matrix2d r = rotation(wp.fast_axis);
  Unitary2 retarder = Unitary2::Zero();
  retarder(0, 0) = 1.0;
  retarder(1, 1) = std::polar(1.0, wp.retardance);
  return r.cast<cplx>() * retarder * r.transpose().cast<cplx>();
}

Unitary2 arm_operator(const ArmSetting& arm) {
  return waveplate_operator(Waveplate::quarter_wave(arm.qwp_angle)) *
         waveplate_operator(Waveplate::half_wave(arm.hwp_angle));
}

Eigen::Vector2cd arm_state(const ArmSetting& arm) {
  return arm_operator(arm).adjoint() * Eigen::Vector2cd(1.0, 0.0);
}

TwoQubitState apply_local(const Unitary2& u1, const Unitary2& u2, const TwoQubitState& state) {
  if (!is_unitary(u1) || !is_unitary(u2)) throw InvalidParameterError("apply_local needs unitary operators");
  Ket out = kron(u1, u2) * state.amplitudes();
  out /= out.norm();
  return TwoQubitState(out);
}

DensityMatrix apply_local(const Unitary2& u1, const Unitary2& u2, const DensityMatrix& rho) {
  if (!is_unitary(u1) || !is_unitary(u2)) throw InvalidParameterError("apply_local needs unitary operators");
  const Matrix4 u = kron(u1, u2);
  return DensityMatrix::trusted(u * rho.matrix() * u.adjoint());
}

Matrix4 projector(const AnalyzerSetting& setting) {
  const Eigen::Vector2cd a = arm_state(setting.arm1);
  const Eigen::Vector2cd b = arm_state(setting.arm2);
  Ket v;
  v << a(0) * b(0), a(0) * b(1), a(1) * b(0), a(1) * b(1);
  return v * v.adjoint();
}

double fidelity(const DensityMatrix& rho, const TwoQubitState& target) {
  const Ket& psi = target.amplitudes();
  return psi.dot(rho.matrix() * psi).real();
}

double concurrence(const DensityMatrix& rho) {
  // Wootters: lambda_i are the square roots of the eigenvalues of rho * rho~.
  // With rho = W W^dagger they equal the singular values of W^T S W, which
  // avoids taking square roots of round-off sized eigenvalues.
  Eigen::SelfAdjointEigenSolver<Matrix4> es(0.5 * (rho.matrix() + rho.matrix().adjoint()));
  const Eigen::Vector4d mu = es.eigenvalues();
  if (mu.minCoeff() < DensityMatrix::kEigenFloor) {
    throw InvalidStateError("concurrence of a non-physical matrix (eigenvalue " +
                            std::to_string(mu.minCoeff()) + ")");
  }
  Matrix4 w = es.eigenvectors();
  for (int i = 0; i < 4; ++i) w.col(i) *= std::sqrt(std::max(mu(i), 0.0));
  const Matrix4 tau = w.transpose() * spin_flip().cast<cplx>() * w;
  const Eigen::Vector4d s = Eigen::JacobiSVD<Matrix4>(tau).singularValues();
  return std::max(0.0, s(0) - s(1) - s(2) - s(3));
}

double tangle(const DensityMatrix& rho) {
  const double c = concurrence(rho);
  return c * c;
}

double purity(const DensityMatrix& rho) { return (rho.matrix() * rho.matrix()).trace().real(); }

double trace_distance(const Matrix4& a, const Matrix4& b) {
  const Matrix4 d = a - b;
  const Eigen::Vector4d ev =
      Eigen::SelfAdjointEigenSolver<Matrix4>(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly).eigenvalues();
  return 0.5 * ev.cwiseAbs().sum();
}

DensityMatrix clip_to_physical(const Matrix4& hermitian) {
  Eigen::SelfAdjointEigenSolver<Matrix4> es(0.5 * (hermitian + hermitian.adjoint()));
  Eigen::Vector4d mu = es.eigenvalues().cwiseMax(0.0);
  const double total = mu.sum();
  if (!(total > 0.0)) return DensityMatrix::maximally_mixed();
  mu /= total;
  const Matrix4& v = es.eigenvectors();
  return DensityMatrix::trusted(v * mu.cast<cplx>().asDiagonal() * v.adjoint());
}

bool is_unitary(const Unitary2& u, double tol) {
  return (u.adjoint() * u - Unitary2::Identity()).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace grinent::polkit
