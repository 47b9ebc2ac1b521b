#pragma once

#include <span>

// Weighted least-squares fits for fringe (sinusoid) and translational-profile
// (Gaussian) data. Both use Levenberg-Marquardt, stopping once an accepted
// step changes the objective by less than 1e-12 relative.
namespace grinent::fitkit {

// y = offset * (1 + visibility * cos(2 pi x / period + phase))
struct SinusoidFit {
  double offset = 0.0;
  double amplitude = 0.0;  // offset * visibility, >= 0
  double period = 0.0;
  double phase = 0.0;      // wrapped to (-pi, pi]
  double visibility = 0.0;
  struct {
    double offset, amplitude, period, phase, visibility;
  } uncertainty{};
  double raw_visibility = 0.0;  // (max - min) / (max + min) of the data
  double residual_norm = 0.0;   // sqrt of the weighted sum of squared residuals
  int points_used = 0;
  int iterations = 0;
};

// y = amplitude * exp(-(x - center)^2 / (2 sigma^2)) + baseline
struct GaussianFit {
  double amplitude = 0.0;
  double center = 0.0;
  double fwhm = 0.0;  // 2 sqrt(2 ln 2) sigma
  double sigma = 0.0;
  double baseline = 0.0;
  struct {
    double amplitude, center, fwhm, baseline;
  } uncertainty{};
  double residual_norm = 0.0;
  int points_used = 0;
  int iterations = 0;
};

// Needs >= 5 points spanning >= 0.75 of the fitted period. `weights` (if
// non-empty) are inverse variances. Uncertainties come from the inverse
// curvature matrix scaled by the reduced chi-square.
SinusoidFit fit_sinusoid(std::span<const double> xs, std::span<const double> ys,
                         std::span<const double> weights = {});

// Needs >= 5 points with the maximum strictly inside the sampled x range.
GaussianFit fit_gaussian(std::span<const double> xs, std::span<const double> ys,
                         std::span<const double> weights = {});

}  // namespace grinent::fitkit
