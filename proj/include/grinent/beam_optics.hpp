#pragma once

#include <complex>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

// Paraxial Gaussian-beam optics for GRIN-lens / single-mode-fiber coupling.
// All lengths are in meters.
namespace grinent::beam_optics {

inline constexpr double kPi = 3.14159265358979323846;

// TEM00 mode. waist_position is the axial coordinate of the waist relative to
// the current reference plane (positive = waist lies downstream).
struct GaussianBeam {
  double wavelength;
  double waist_radius;  // 1/e^2 field radius
  double waist_position = 0.0;

  GaussianBeam(double wavelength, double waist_radius, double waist_position = 0.0);

  double rayleigh_range() const;
  // Complex beam parameter q = (z - z_waist) + i*z_R evaluated at the reference plane.
  std::complex<double> q() const;
  // 1/e^2 radius at the reference plane.
  double radius_at_reference() const;

  static GaussianBeam from_q(std::complex<double> q, double wavelength);
};

struct RayMatrix {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

  double determinant() const { return a * d - b * c; }
  static RayMatrix identity() { return {}; }
};

// Matrix product: applying `rhs` first, then `lhs`.
RayMatrix operator*(const RayMatrix& lhs, const RayMatrix& rhs);

struct GrinLens {
  double n0;
  double g;       // gradient constant, 1/m
  double length;
  double diameter = 0.0;

  double pitch() const;
  bool is_quarter_pitch(double tol = 1e-9) const;
};

struct FiberMode {
  double mode_field_radius;
};

double focal_length(const GrinLens& lens);
RayMatrix grin_abcd(const GrinLens& lens);
RayMatrix free_space(double distance);
RayMatrix thin_lens(double focal);

// Quarter-pitch rod with on-axis index chosen so that 1/(n0 g) == focal.
GrinLens quarter_pitch_lens(double g, double focal);

GaussianBeam propagate(const GaussianBeam& beam, const RayMatrix& m);

// Far-field estimate W0' = lambda f / (pi W0) of the collimated waist.
double coupled_waist(double wavelength, double fiber_waist, double focal);
double confocal_parameter(double waist, double wavelength);

// Power overlap of two coaxial, flat-phase Gaussian modes with a transverse offset.
double coupling_efficiency_lateral(double mode_a_waist, double mode_b_waist, double lateral_offset);

// Power overlap of two arbitrary Gaussian beams described at a common plane
// (curvatures included), with an optional transverse offset.
double mode_overlap(const GaussianBeam& a, const GaussianBeam& b, double lateral_offset = 0.0);

// FWHM of the lateral-offset efficiency curve for two equal waists w: 2 sqrt(ln 2) w.
double lateral_fwhm(double waist);

enum class CascadeNormalization {
  kRelativeToInput,       // peak_efficiency * overlap
  kRelativeToSingleDevice // overlap only
};

// GL-SMF -> free space(gap) -> GL-SMF. `tx` is the collimated beam at the
// transmitter face; the receiver accepts the mirror-image mode.
double cascade_efficiency(const GaussianBeam& tx, double gap, double peak_efficiency,
                          CascadeNormalization norm = CascadeNormalization::kRelativeToInput);

struct SweepPoint {
  double x;
  double efficiency;
};

std::vector<SweepPoint> lateral_sweep(double mode_a_waist, double mode_b_waist,
                                      std::span<const double> offsets);
std::vector<SweepPoint> cascade_sweep(const GaussianBeam& tx, std::span<const double> gaps,
                                      double peak_efficiency,
                                      CascadeNormalization norm = CascadeNormalization::kRelativeToInput);

// Two-column CSV with header "<x_name>,efficiency".
void write_sweep_csv(std::ostream& out, const char* x_name, std::span<const SweepPoint> points);

}  // namespace grinent::beam_optics
