#include "grinent/beam_optics.hpp"

#include <cmath>
#include <ostream>

#include "grinent/csv_io.hpp"
#include "grinent/errors.hpp"

namespace grinent::beam_optics {

GaussianBeam::GaussianBeam(double wavelength_, double waist_radius_, double waist_position_)
    : wavelength(wavelength_), waist_radius(waist_radius_), waist_position(waist_position_) {
  if (!(wavelength > 0.0) || !(waist_radius > 0.0) || !std::isfinite(waist_position)) {
    throw InvalidParameterError("GaussianBeam needs wavelength > 0 and waist_radius > 0");
  }
}

double GaussianBeam::rayleigh_range() const { return kPi * waist_radius * waist_radius / wavelength; }

std::complex<double> GaussianBeam::q() const { return {-waist_position, rayleigh_range()}; }

double GaussianBeam::radius_at_reference() const {
  const double zr = rayleigh_range();
  return waist_radius * std::sqrt(1.0 + (waist_position / zr) * (waist_position / zr));
}

GaussianBeam GaussianBeam::from_q(std::complex<double> q, double wavelength) {
  if (!(q.imag() > 0.0) || !std::isfinite(q.real())) {
    throw SingularPropagationError("beam parameter has no positive Rayleigh range");
  }
  return GaussianBeam(wavelength, std::sqrt(q.imag() * wavelength / kPi), -q.real());
}

RayMatrix operator*(const RayMatrix& l, const RayMatrix& r) {
  return {l.a * r.a + l.b * r.c, l.a * r.b + l.b * r.d, l.c * r.a + l.d * r.c, l.c * r.b + l.d * r.d};
}

namespace {

void check_lens(const GrinLens& lens) {
  if (!(lens.n0 > 0.0) || !(lens.g > 0.0)) {
    throw InvalidParameterError("GRIN lens needs n0 > 0 and g > 0");
  }
  if (!(lens.length >= 0.0)) throw InvalidParameterError("GRIN lens length must be >= 0");
}

}  // namespace

double GrinLens::pitch() const { return g * length / (2.0 * kPi); }

bool GrinLens::is_quarter_pitch(double tol) const { return std::abs(g * length - kPi / 2.0) <= tol; }

double focal_length(const GrinLens& lens) {
  check_lens(lens);
  return 1.0 / (lens.n0 * lens.g);
}

RayMatrix grin_abcd(const GrinLens& lens) {
  check_lens(lens);
  const double gl = lens.g * lens.length;
  const double ng = lens.n0 * lens.g;
  RayMatrix m{std::cos(gl), std::sin(gl) / ng, -ng * std::sin(gl), std::cos(gl)};
  // cos(pi/2) is 6e-17, not zero; snap the exact quarter/half-pitch cases.
  if (std::abs(m.a) < 1e-15) m.a = m.d = 0.0;
  if (std::abs(m.b) * ng < 1e-15) m.b = m.c = 0.0;
  return m;
}

RayMatrix free_space(double distance) { return {1.0, distance, 0.0, 1.0}; }

RayMatrix thin_lens(double focal) {
  if (focal == 0.0) throw InvalidParameterError("thin lens focal length must be non-zero");
  return {1.0, 0.0, -1.0 / focal, 1.0};
}

GrinLens quarter_pitch_lens(double g, double focal) {
  if (!(g > 0.0) || !(focal > 0.0)) throw InvalidParameterError("g and focal length must be > 0");
  return GrinLens{1.0 / (g * focal), g, kPi / (2.0 * g), 0.0};
}

GaussianBeam propagate(const GaussianBeam& beam, const RayMatrix& m) {
  const std::complex<double> q = beam.q();
  const std::complex<double> den = m.c * q + m.d;
  if (std::abs(den) < 1e-300) throw SingularPropagationError("C*q + D vanishes");
  return GaussianBeam::from_q((m.a * q + m.b) / den, beam.wavelength);
}

double coupled_waist(double wavelength, double fiber_waist, double focal) {
  if (!(wavelength > 0.0) || !(fiber_waist > 0.0) || !(focal > 0.0)) {
    throw InvalidParameterError("coupled_waist inputs must be > 0");
  }
  return wavelength * focal / (kPi * fiber_waist);
}

double confocal_parameter(double waist, double wavelength) {
  if (!(waist > 0.0) || !(wavelength > 0.0)) {
    throw InvalidParameterError("confocal_parameter inputs must be > 0");
  }
  return kPi * waist * waist / wavelength;
}

double coupling_efficiency_lateral(double wa, double wb, double d) {
  if (!(wa > 0.0) || !(wb > 0.0)) throw InvalidParameterError("mode waists must be > 0");
  const double s = wa * wa + wb * wb;
  const double pre = 2.0 * wa * wb / s;
  return pre * pre * std::exp(-2.0 * d * d / s);
}

double mode_overlap(const GaussianBeam& a, const GaussianBeam& b, double lateral_offset) {
  if (std::abs(a.wavelength - b.wavelength) > 1e-12 * a.wavelength) {
    throw InvalidParameterError("mode_overlap needs equal wavelengths");
  }
  // Field ~ exp(-alpha r^2) with alpha = i k / (2 q); Re(alpha) = 1/w^2.
  const double k = 2.0 * kPi / a.wavelength;
  const std::complex<double> i(0.0, 1.0);
  const std::complex<double> alpha_a = i * k / (2.0 * a.q());
  const std::complex<double> alpha_b = i * k / (2.0 * b.q());
  const double wa2 = 1.0 / alpha_a.real();
  const double wb2 = 1.0 / alpha_b.real();
  const std::complex<double> sum = std::conj(alpha_a) + alpha_b;
  const double pre = 4.0 / (wa2 * wb2 * std::norm(sum));
  const double shift = 2.0 * (std::conj(alpha_a) * alpha_b / sum).real();
  return pre * std::exp(-shift * lateral_offset * lateral_offset);
}

double lateral_fwhm(double waist) { return 2.0 * std::sqrt(std::log(2.0)) * waist; }

double cascade_efficiency(const GaussianBeam& tx, double gap, double peak_efficiency,
                          CascadeNormalization norm) {
  if (!(gap >= 0.0)) throw InvalidParameterError("gap must be >= 0");
  if (!(peak_efficiency >= 0.0 && peak_efficiency <= 1.0)) {
    throw InvalidParameterError("peak efficiency must lie in [0, 1]");
  }
  const GaussianBeam arrived = propagate(tx, free_space(gap));
  const GaussianBeam acceptance(tx.wavelength, tx.waist_radius, -tx.waist_position);
  const double overlap = mode_overlap(arrived, acceptance);
  return norm == CascadeNormalization::kRelativeToInput ? peak_efficiency * overlap : overlap;
}

std::vector<SweepPoint> lateral_sweep(double wa, double wb, std::span<const double> offsets) {
  std::vector<SweepPoint> out;
  out.reserve(offsets.size());
  for (double d : offsets) out.push_back({d, coupling_efficiency_lateral(wa, wb, d)});
  return out;
}

std::vector<SweepPoint> cascade_sweep(const GaussianBeam& tx, std::span<const double> gaps,
                                      double peak_efficiency, CascadeNormalization norm) {
  std::vector<SweepPoint> out;
  out.reserve(gaps.size());
  for (double g : gaps) out.push_back({g, cascade_efficiency(tx, g, peak_efficiency, norm)});
  return out;
}

void write_sweep_csv(std::ostream& out, const char* x_name, std::span<const SweepPoint> points) {
  out << x_name << ",efficiency\n";
  for (const auto& p : points) out << csv::format_real(p.x) << ',' << csv::format_real(p.efficiency) << '\n';
}

}  // namespace grinent::beam_optics
