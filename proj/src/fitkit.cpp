#include "grinent/fitkit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "grinent/errors.hpp"

namespace grinent::fitkit {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Data {
  Eigen::VectorXd x, y, sqrt_w;
};

Data prepare(std::span<const double> xs, std::span<const double> ys, std::span<const double> weights,
             const char* who) {
  if (xs.size() != ys.size()) throw FitError(std::string(who) + ": x and y sizes differ");
  if (!weights.empty() && weights.size() != xs.size()) throw FitError(std::string(who) + ": weight count mismatch");
  if (xs.size() < 5) {
    throw FitError(std::string(who) + ": need at least 5 points, got " + std::to_string(xs.size()));
  }
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return xs[a] < xs[b]; });
  Data d{Eigen::VectorXd(xs.size()), Eigen::VectorXd(xs.size()), Eigen::VectorXd(xs.size())};
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t j = order[i];
    const double w = weights.empty() ? 1.0 : weights[j];
    if (!std::isfinite(xs[j]) || !std::isfinite(ys[j]) || !(w >= 0.0) || !std::isfinite(w)) {
      throw FitError(std::string(who) + ": non-finite input or negative weight at point " + std::to_string(j));
    }
    d.x(i) = xs[j];
    d.y(i) = ys[j];
    d.sqrt_w(i) = std::sqrt(w);
  }
  return d;
}

struct LMOutcome {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;  // scaled by reduced chi-square
  double chi2;
  int iterations;
};

// Model(params, x) -> value, Jac(params, x) -> gradient row.
template <class Model, class Jac>
LMOutcome levenberg_marquardt(const Data& d, Eigen::VectorXd p, Model model, Jac jac, const char* who) {
  const Eigen::Index n = d.x.size(), m = p.size();
  auto residuals = [&](const Eigen::VectorXd& q) {
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) r(i) = d.sqrt_w(i) * (d.y(i) - model(q, d.x(i)));
    return r;
  };
  auto jacobian = [&](const Eigen::VectorXd& q) {
    Eigen::MatrixXd j(n, m);
    for (Eigen::Index i = 0; i < n; ++i) j.row(i) = -d.sqrt_w(i) * jac(q, d.x(i)).transpose();
    return j;
  };

  Eigen::VectorXd r = residuals(p);
  double chi2 = r.squaredNorm();
  double lambda = 1e-3;
  int it = 0;
  bool converged = false;
  for (; it < 1000 && !converged; ++it) {
    const Eigen::MatrixXd j = jacobian(p);
    const Eigen::MatrixXd a = j.transpose() * j;
    const Eigen::VectorXd g = j.transpose() * r;
    if (chi2 == 0.0 || g.norm() == 0.0) break;
    bool improved = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd damped = a;
      for (Eigen::Index k = 0; k < m; ++k) damped(k, k) += lambda * std::max(a(k, k), 1e-300);
      const Eigen::VectorXd step = damped.ldlt().solve(-g);
      const Eigen::VectorXd trial = p + step;
      const Eigen::VectorXd r_trial = residuals(trial);
      const double chi2_trial = r_trial.squaredNorm();
      if (std::isfinite(chi2_trial) && chi2_trial < chi2) {
        const double rel = (chi2 - chi2_trial) / chi2;
        p = trial;
        r = r_trial;
        chi2 = chi2_trial;
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = true;
        converged = rel < 1e-12;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }

  const Eigen::MatrixXd j = jacobian(p);
  const Eigen::MatrixXd a = j.transpose() * j;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) throw FitError(std::string(who) + ": singular normal equations at the solution");
  const double dof = static_cast<double>(n - m);
  const double s2 = dof > 0 ? chi2 / dof : 0.0;
  return {p, lu.inverse() * s2, chi2, it};
}

double wrap_phase(double phi) {
  phi = std::remainder(phi, 2.0 * kPi);
  return phi <= -kPi ? phi + 2.0 * kPi : phi;
}

// Linear least squares of y ~ c + a cos(kx) + b sin(kx) at fixed k.
double linear_sinusoid(const Data& d, double k, Eigen::Vector3d* coef) {
  const Eigen::Index n = d.x.size();
  Eigen::MatrixXd basis(n, 3);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    basis(i, 0) = d.sqrt_w(i);
    basis(i, 1) = d.sqrt_w(i) * std::cos(k * d.x(i));
    basis(i, 2) = d.sqrt_w(i) * std::sin(k * d.x(i));
    rhs(i) = d.sqrt_w(i) * d.y(i);
  }
  const Eigen::Vector3d c = basis.colPivHouseholderQr().solve(rhs);
  if (coef) *coef = c;
  return (basis * c - rhs).squaredNorm();
}

}  // namespace

SinusoidFit fit_sinusoid(std::span<const double> xs, std::span<const double> ys, std::span<const double> weights) {
  Data d = prepare(xs, ys, weights, "fit_sinusoid");
  const Eigen::Index n = d.x.size();
  const double span = d.x(n - 1) - d.x(0);
  if (!(span > 0.0)) throw FitError("fit_sinusoid: x values do not span a range");
  const double x_mid = 0.5 * (d.x(0) + d.x(n - 1));
  d.x.array() -= x_mid;

  // Coarse spectrum: best single-frequency linear fit over a frequency grid
  // from 0.5 to (n - 1) / 2 cycles per span.
  const double f_lo = 0.5 / span, f_hi = std::max(0.5 * (n - 1), 1.0) / span;
  const int grid = 4000;
  double best_f = f_lo, best_chi2 = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= grid; ++i) {
    const double f = f_lo + (f_hi - f_lo) * i / grid;
    const double c2 = linear_sinusoid(d, 2.0 * kPi * f, nullptr);
    if (c2 < best_chi2) {
      best_chi2 = c2;
      best_f = f;
    }
  }
  Eigen::Vector3d lin;
  linear_sinusoid(d, 2.0 * kPi * best_f, &lin);
  Eigen::VectorXd p(4);
  p << lin(0), lin(1), lin(2), 2.0 * kPi * best_f;

  auto model = [](const Eigen::VectorXd& q, double x) {
    return q(0) + q(1) * std::cos(q(3) * x) + q(2) * std::sin(q(3) * x);
  };
  auto jac = [](const Eigen::VectorXd& q, double x) {
    const double c = std::cos(q(3) * x), s = std::sin(q(3) * x);
    Eigen::Vector4d g;
    g << 1.0, c, s, x * (-q(1) * s + q(2) * c);
    return Eigen::VectorXd(g);
  };
  LMOutcome lm = levenberg_marquardt(d, p, model, jac, "fit_sinusoid");
  Eigen::VectorXd q = lm.params;
  if (q(3) < 0.0) {
    q(3) = -q(3);
    q(2) = -q(2);
    lm.covariance.row(2) *= -1.0;
    lm.covariance.col(2) *= -1.0;
    lm.covariance.row(3) *= -1.0;
    lm.covariance.col(3) *= -1.0;
  }
  const double c = q(0), a = q(1), b = q(2), k = q(3);
  const double amp = std::hypot(a, b);
  if (!(k > 0.0) || !(amp > 0.0)) throw FitError("fit_sinusoid: degenerate fit (no oscillation found)");

  SinusoidFit out;
  out.offset = c;
  out.amplitude = amp;
  out.period = 2.0 * kPi / k;
  // a cos(k u) + b sin(k u) = amp cos(k u + phi'), u = x - x_mid.
  const double phi_centered = std::atan2(-b, a);
  out.phase = wrap_phase(phi_centered - k * x_mid);
  out.visibility = amp / c;
  if (span < 0.75 * out.period) {
    throw FitError("fit_sinusoid: data span " + std::to_string(span) + " covers less than 0.75 of the period " +
                   std::to_string(out.period));
  }

  // Derived-quantity uncertainties by linear propagation.
  Eigen::MatrixXd jt(5, 4);
  jt.setZero();
  jt(0, 0) = 1.0;                                                // offset
  jt.row(1) << 0.0, a / amp, b / amp, 0.0;                       // amplitude
  jt(2, 3) = -2.0 * kPi / (k * k);                               // period
  jt.row(3) << 0.0, b / (amp * amp), -a / (amp * amp), -x_mid;   // phase
  jt.row(4) << -amp / (c * c), a / (amp * c), b / (amp * c), 0.0;  // visibility
  const Eigen::MatrixXd cov = jt * lm.covariance * jt.transpose();
  auto sd = [&](int i) { return std::sqrt(std::max(cov(i, i), 0.0)); };
  out.uncertainty = {sd(0), sd(1), sd(2), sd(3), sd(4)};

  const double ymax = d.y.maxCoeff(), ymin = d.y.minCoeff();
  out.raw_visibility = (ymax + ymin) != 0.0 ? (ymax - ymin) / (ymax + ymin) : 0.0;
  out.residual_norm = std::sqrt(lm.chi2);
  out.points_used = static_cast<int>(n);
  out.iterations = lm.iterations;
  return out;
}

GaussianFit fit_gaussian(std::span<const double> xs, std::span<const double> ys, std::span<const double> weights) {
  Data d = prepare(xs, ys, weights, "fit_gaussian");
  const Eigen::Index n = d.x.size();
  Eigen::Index imax = 0;
  d.y.maxCoeff(&imax);
  if (imax == 0 || imax == n - 1) throw FitError("fit_gaussian: peak is not bracketed by the data");

  const double base = d.y.minCoeff();
  const double amp = d.y(imax) - base;
  Eigen::Index lo = imax, hi = imax;
  while (lo > 0 && d.y(lo - 1) - base >= 0.5 * amp) --lo;
  while (hi < n - 1 && d.y(hi + 1) - base >= 0.5 * amp) ++hi;
  double width = d.x(hi) - d.x(lo);
  if (!(width > 0.0)) width = d.x(std::min(imax + 1, n - 1)) - d.x(std::max<Eigen::Index>(imax - 1, 0));
  const double fwhm_factor = 2.0 * std::sqrt(2.0 * std::log(2.0));

  Eigen::VectorXd p(4);
  p << amp, d.x(imax), width / fwhm_factor, base;
  auto model = [](const Eigen::VectorXd& q, double x) {
    const double u = (x - q(1)) / q(2);
    return q(0) * std::exp(-0.5 * u * u) + q(3);
  };
  auto jac = [](const Eigen::VectorXd& q, double x) {
    const double u = (x - q(1)) / q(2);
    const double e = std::exp(-0.5 * u * u);
    Eigen::Vector4d g;
    g << e, q(0) * e * u / q(2), q(0) * e * u * u / q(2), 1.0;
    return Eigen::VectorXd(g);
  };
  const LMOutcome lm = levenberg_marquardt(d, p, model, jac, "fit_gaussian");
  const Eigen::VectorXd& q = lm.params;

  GaussianFit out;
  out.amplitude = q(0);
  out.center = q(1);
  out.sigma = std::abs(q(2));
  out.fwhm = fwhm_factor * out.sigma;
  out.baseline = q(3);
  auto sd = [&](int i) { return std::sqrt(std::max(lm.covariance(i, i), 0.0)); };
  out.uncertainty = {sd(0), sd(1), fwhm_factor * sd(2), sd(3)};
  out.residual_norm = std::sqrt(lm.chi2);
  out.points_used = static_cast<int>(n);
  out.iterations = lm.iterations;
  if (!(out.fwhm > 0.0)) throw FitError("fit_gaussian: collapsed width");
  return out;
}

}  // namespace grinent::fitkit
