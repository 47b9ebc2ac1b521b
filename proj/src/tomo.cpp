#include "grinent/tomo.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "grinent/csv_io.hpp"
#include "grinent/parallel.hpp"

namespace grinent::tomo {

using polkit::cplx;
using polkit::kPi;

namespace {

// Pauli products sigma_a (x) sigma_b, a, b in {I, X, Y, Z}; index 4a + b.
const std::array<Matrix4, 16>& pauli_basis() {
  static const std::array<Matrix4, 16> basis = [] {
    std::array<Eigen::Matrix2cd, 4> s;
    const cplx i(0.0, 1.0);
    s[0] << 1, 0, 0, 1;
    s[1] << 0, 1, 1, 0;
    s[2] << 0, -i, i, 0;
    s[3] << 1, 0, 0, -1;
    std::array<Matrix4, 16> out;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        Matrix4 m;
        for (int r = 0; r < 2; ++r)
          for (int c = 0; c < 2; ++c) m.block<2, 2>(2 * r, 2 * c) = s[a](r, c) * s[b];
        out[4 * a + b] = m;
      }
    return out;
  }();
  return basis;
}

// Row i holds tr(P_i sigma_k) / 2: coordinates of the projector in the
// orthonormal basis sigma_k / 2.
Eigen::MatrixXd design_matrix(std::span<const Matrix4> projectors) {
  Eigen::MatrixXd a(projectors.size(), 16);
  const auto& basis = pauli_basis();
  for (std::size_t i = 0; i < projectors.size(); ++i)
    for (int k = 0; k < 16; ++k) a(i, k) = 0.5 * (projectors[i] * basis[k]).trace().real();
  return a;
}

constexpr double kRankTol = 1e-10;

int numerical_rank(const Eigen::VectorXd& singular_values) {
  if (singular_values.size() == 0) return 0;
  const double cutoff = kRankTol * singular_values(0);
  return static_cast<int>((singular_values.array() > cutoff).count());
}

std::vector<Matrix4> projectors_of(std::span<const CountRecord> records) {
  std::vector<Matrix4> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(polkit::projector(r.analyzer));
  return out;
}

void check_records(std::span<const CountRecord> records) {
  for (const auto& r : records) {
    if (!(r.duration > 0.0)) throw InvalidParameterError("record '" + r.setting_label + "' has duration <= 0");
    if (r.coincidences < 0 || r.singles_1 < 0 || r.singles_2 < 0) {
      throw InvalidParameterError("record '" + r.setting_label + "' has negative counts");
    }
  }
}

void check_complete(std::span<const Matrix4> projectors) {
  if (projectors.size() < 16) {
    throw IncompleteSetError("tomography needs at least 16 settings, got " + std::to_string(projectors.size()));
  }
  const Eigen::MatrixXd a = design_matrix(projectors);
  const int rank = numerical_rank(Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues());
  if (rank < 16) {
    throw IncompleteSetError("measurement set is not informationally complete (rank " + std::to_string(rank) +
                             " of 16)");
  }
}

// Data prepared once per reconstruction.
struct Problem {
  std::vector<Matrix4> projectors;
  std::vector<double> counts;
  std::vector<double> durations;
  Matrix4 weighted_sum;  // sum_j d_j P_j
  double total = 0.0;
};

Problem make_problem(std::span<const CountRecord> records, const CountPreprocessing& pre) {
  check_records(records);
  Problem p;
  p.projectors = projectors_of(records);
  p.weighted_sum = Matrix4::Zero();
  for (std::size_t i = 0; i < records.size(); ++i) {
    p.counts.push_back(effective_coincidences(records[i], pre));
    p.durations.push_back(records[i].duration);
    p.weighted_sum += records[i].duration * p.projectors[i];
    p.total += p.counts.back();
  }
  return p;
}

constexpr std::array<std::pair<int, int>, 6> kOffDiagonal{{{1, 0}, {2, 0}, {2, 1}, {3, 0}, {3, 1}, {3, 2}}};

double objective(const Problem& prob, const TParams& t, TParams* gradient) {
  if (prob.total <= 0.0) {
    if (gradient) gradient->setZero();
    return 0.0;
  }
  const Matrix4 tm = t_from_params(t);
  const Matrix4 m = tm.adjoint() * tm;
  const double norm = (prob.weighted_sum * m).trace().real();
  if (!(norm > 0.0)) return std::numeric_limits<double>::infinity();

  double loglike = -prob.total * std::log(norm);
  Matrix4 g = -(prob.total / norm) * prob.weighted_sum;
  for (std::size_t i = 0; i < prob.projectors.size(); ++i) {
    if (prob.counts[i] <= 0.0) continue;
    const double pi = (prob.projectors[i] * m).trace().real();
    if (!(pi > 0.0)) return std::numeric_limits<double>::infinity();
    loglike += prob.counts[i] * std::log(prob.durations[i] * pi);
    g += (prob.counts[i] / pi) * prob.projectors[i];
  }
  if (gradient) {
    // d(-logL/N)/dT_ij from dL = 2 Re tr(G T^dagger dT).
    const Matrix4 gt = g * tm.adjoint();
    const double scale = -2.0 / prob.total;
    for (int i = 0; i < 4; ++i) (*gradient)(i) = scale * gt(i, i).real();
    int k = 4;
    for (auto [r, c] : kOffDiagonal) {
      (*gradient)(k++) = scale * gt(c, r).real();
      (*gradient)(k++) = -scale * gt(c, r).imag();
    }
  }
  return -loglike / prob.total;
}

DensityMatrix state_from_params(const TParams& t) {
  const Matrix4 tm = t_from_params(t);
  Matrix4 m = tm.adjoint() * tm;
  m /= m.trace().real();
  m = 0.5 * (m + m.adjoint());
  return DensityMatrix::trusted(m);
}

double t_norm(const TParams& t) { return t_from_params(t).norm(); }

}  // namespace

TomographySet::TomographySet(std::vector<LabeledSetting> settings) : settings_(std::move(settings)) {}

const LabeledSetting* TomographySet::find(std::string_view label) const {
  for (const auto& s : settings_)
    if (s.label == label) return &s;
  return nullptr;
}

TomographySet standard_settings() {
  // Arm settings (qwp, hwp) transmitting H, V, D = (H+V)/sqrt2, R = (H+iV)/sqrt2.
  struct Basis {
    char label;
    polkit::ArmSetting arm;
  };
  const std::array<Basis, 4> bases{{{'H', {0.0, 0.0}},
                                    {'V', {0.0, kPi / 4.0}},
                                    {'D', {0.0, kPi / 8.0}},
                                    {'R', {-kPi / 4.0, 0.0}}}};
  std::vector<LabeledSetting> out;
  for (const auto& a : bases)
    for (const auto& b : bases) out.push_back({std::string{a.label, b.label}, {a.arm, b.arm}});
  return TomographySet(std::move(out));
}

SetDiagnostics diagnose(const TomographySet& set) {
  std::vector<Matrix4> projectors;
  for (const auto& s : set.settings()) projectors.push_back(polkit::projector(s.analyzer));
  const Eigen::MatrixXd a = design_matrix(projectors);
  const Eigen::MatrixXd gram = a * a.transpose();
  const Eigen::VectorXd sg = Eigen::JacobiSVD<Eigen::MatrixXd>(gram).singularValues();
  const Eigen::VectorXd sa = Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues();
  SetDiagnostics d;
  d.gram_rank = numerical_rank(sg);
  d.gram_condition = sg(0) / sg(sg.size() - 1);
  d.design_condition = sa(0) / sa(sa.size() - 1);
  return d;
}

std::vector<CountRecord> simulate_tomography_counts(const DensityMatrix& rho, const TomographySet& set,
                                                    double counts_per_setting, std::uint64_t seed,
                                                    const TomoSimOptions& options) {
  if (!(counts_per_setting >= 0.0)) throw InvalidParameterError("counts per setting must be >= 0");
  if (!(options.duration > 0.0)) throw InvalidParameterError("duration must be > 0");
  if (!(options.singles_ratio > 0.0)) throw InvalidParameterError("singles ratio must be > 0");
  const double singles = counts_per_setting / (2.0 * options.singles_ratio);
  const double singles_rate = singles / options.duration;
  const double accidentals = singles_rate * singles_rate * options.coincidence_window * options.duration;
  std::vector<CountRecord> out;
  out.reserve(set.size());
  std::uint64_t index = 0;
  for (const auto& s : set.settings()) {
    expsim::ExpectedCounts means;
    means.accidentals = accidentals;
    means.coincidences = counts_per_setting * expsim::coincidence_probability(rho, s.analyzer) + accidentals;
    means.singles_1 = means.singles_2 = singles;
    out.push_back(expsim::sample_counts(means, expsim::derive_seed(seed, index++), s.label, s.analyzer,
                                        options.duration));
  }
  return out;
}

double effective_coincidences(const CountRecord& record, const CountPreprocessing& pre) {
  double n = static_cast<double>(record.coincidences);
  if (pre.subtract_accidentals) {
    const double acc = static_cast<double>(record.singles_1) * static_cast<double>(record.singles_2) *
                       pre.coincidence_window / record.duration;
    n = std::max(0.0, n - acc);
  }
  return n;
}

LinearInversion linear_inversion(std::span<const CountRecord> records, const CountPreprocessing& pre) {
  check_records(records);
  const auto projectors = projectors_of(records);
  check_complete(projectors);
  const Eigen::MatrixXd a = design_matrix(projectors);
  Eigen::VectorXd rates(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    rates(i) = effective_coincidences(records[i], pre) / records[i].duration;
  }
  // x are coordinates in the sigma_k / 2 basis; tr(X) = 2 x_0.
  const Eigen::VectorXd x = a.colPivHouseholderQr().solve(rates);
  const auto& basis = pauli_basis();
  Matrix4 est = Matrix4::Zero();
  for (int k = 0; k < 16; ++k) est += 0.5 * x(k) * basis[k];
  const double tr = est.trace().real();
  if (!(tr > 0.0)) throw InvalidParameterError("linear inversion: no coincidences recorded");
  est /= tr;
  est = 0.5 * (est + est.adjoint());
  LinearInversion out;
  out.estimate = est;
  out.min_eigenvalue = Eigen::SelfAdjointEigenSolver<Matrix4>(est, Eigen::EigenvaluesOnly).eigenvalues()(0);
  out.nonphysical = out.min_eigenvalue < DensityMatrix::kEigenFloor;
  return out;
}

Matrix4 t_from_params(const TParams& t) {
  Matrix4 tm = Matrix4::Zero();
  for (int i = 0; i < 4; ++i) tm(i, i) = t(i);
  int k = 4;
  for (auto [r, c] : kOffDiagonal) {
    tm(r, c) = cplx(t(k), t(k + 1));
    k += 2;
  }
  return tm;
}

TParams params_from_state(const Matrix4& rho, double floor) {
  // Clamp the spectrum so the Cholesky factor exists, then write
  // rho = T^dagger T with T = P L^dagger P, where P rho P = L L^dagger.
  Eigen::SelfAdjointEigenSolver<Matrix4> es(0.5 * (rho + rho.adjoint()));
  Eigen::Vector4d mu = es.eigenvalues().cwiseMax(floor);
  mu /= mu.sum();
  const Matrix4 clamped = es.eigenvectors() * mu.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
  Matrix4 p = Matrix4::Zero();
  for (int i = 0; i < 4; ++i) p(i, 3 - i) = 1.0;
  Eigen::LLT<Matrix4> llt(p * clamped * p);
  if (llt.info() != Eigen::Success) throw InvalidStateError("starting point is not positive definite");
  const Matrix4 l = llt.matrixL();
  const Matrix4 tm = p * l.adjoint() * p;
  TParams t;
  for (int i = 0; i < 4; ++i) t(i) = tm(i, i).real();
  int k = 4;
  for (auto [r, c] : kOffDiagonal) {
    t(k++) = tm(r, c).real();
    t(k++) = tm(r, c).imag();
  }
  return t;
}

double mle_objective(std::span<const CountRecord> records, const TParams& t, TParams* gradient,
                     const CountPreprocessing& pre) {
  return objective(make_problem(records, pre), t, gradient);
}

double log_likelihood(std::span<const CountRecord> records, const DensityMatrix& rho,
                      const CountPreprocessing& pre) {
  const Problem prob = make_problem(records, pre);
  if (prob.total <= 0.0) return 0.0;
  const double norm = (prob.weighted_sum * rho.matrix()).trace().real();
  const double intensity = prob.total / norm;
  double ll = -prob.total;
  for (std::size_t i = 0; i < prob.projectors.size(); ++i) {
    if (prob.counts[i] <= 0.0) continue;
    const double mean = intensity * prob.durations[i] * (prob.projectors[i] * rho.matrix()).trace().real();
    if (!(mean > 0.0)) return -std::numeric_limits<double>::infinity();
    ll += prob.counts[i] * std::log(mean);
  }
  return ll;
}

MLEResult mle_reconstruct(std::span<const CountRecord> records, const MLEConfig& config, StartPoint start) {
  if (!(config.gradient_tolerance > 0.0)) throw InvalidParameterError("gradient_tolerance must be > 0");
  if (config.max_iterations < 1) throw InvalidParameterError("max_iterations must be >= 1");
  const Problem prob = make_problem(records, config.preprocessing);
  check_complete(prob.projectors);

  Matrix4 start_rho = Matrix4::Identity() / 4.0;
  if (start == StartPoint::kLinearInversion && prob.total > 0.0) {
    start_rho = polkit::clip_to_physical(linear_inversion(records, config.preprocessing).estimate).matrix();
  }
  TParams x = params_from_state(start_rho, std::max(config.parameter_floor, 1e-14));

  MLEResult result;
  result.start = start;
  TParams g;
  double f = objective(prob, x, &g);
  if (!std::isfinite(f)) {
    // The clipped start may assign zero probability to an observed setting.
    x = params_from_state(Matrix4::Identity() / 4.0, 1e-14);
    f = objective(prob, x, &g);
  }

  // Quasi-Newton (BFGS) descent on -logL/N. The objective is invariant under
  // T -> cT, so the gradient norm is reported at unit ||T||.
  using Mat16 = Eigen::Matrix<double, 16, 16>;
  Mat16 hinv = Mat16::Identity();
  bool fresh = true;
  int it = 0;
  auto scaled_gradient = [&] { return g.norm() * t_norm(x); };
  for (; it < config.max_iterations; ++it) {
    if (scaled_gradient() < config.gradient_tolerance) break;
    TParams p = -hinv * g;
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      hinv.setIdentity();
      fresh = true;
      p = -g;
      slope = -g.squaredNorm();
    }
    double alpha = 1.0;
    TParams x_new, g_new;
    double f_new = 0.0;
    const double noise = 1e-14 * (1.0 + std::abs(f));
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + alpha * p;
      f_new = objective(prob, x_new, &g_new);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * alpha * slope + noise) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (fresh) break;  // steepest descent cannot make progress either
      hinv.setIdentity();
      fresh = true;
      continue;
    }
    const TParams s = x_new - x;
    const TParams y = g_new - g;
    x = x_new;
    f = f_new;
    g = g_new;
    const double sy = s.dot(y);
    if (sy > 1e-14 * s.norm() * y.norm()) {
      if (fresh) hinv *= sy / y.squaredNorm();
      const double rho_k = 1.0 / sy;
      const Mat16 v = Mat16::Identity() - rho_k * y * s.transpose();
      hinv = v.transpose() * hinv * v + rho_k * s * s.transpose();
      fresh = false;
    }
    const double n = t_norm(x);
    if (n < 0.25 || n > 4.0) {
      x /= n;
      g *= n;
      hinv.setIdentity();
      fresh = true;
    }
  }

  result.rho = state_from_params(x);
  result.iterations = it;
  result.gradient_norm = scaled_gradient();
  result.log_likelihood = log_likelihood(records, result.rho, config.preprocessing);
  if (!(result.gradient_norm < config.gradient_tolerance)) {
    throw ConvergenceError("MLE did not converge: gradient norm " + std::to_string(result.gradient_norm) +
                               " after " + std::to_string(it) + " iterations",
                           result);
  }
  return result;
}

BootstrapResult monte_carlo_errors(std::span<const CountRecord> records, int n_resamples, std::uint64_t seed,
                                   const polkit::TwoQubitState& target, const MLEConfig& config,
                                   unsigned threads) {
  if (n_resamples < 50) throw InvalidParameterError("monte_carlo_errors needs at least 50 resamples");
  BootstrapResult out;
  out.fidelities.assign(n_resamples, 0.0);
  out.tangles.assign(n_resamples, 0.0);
  parallel_for(static_cast<std::size_t>(n_resamples), threads, [&](std::size_t i) {
    std::mt19937_64 rng(expsim::derive_seed(seed, i));
    auto draw = [&](long long mean) -> long long {
      return mean > 0 ? std::poisson_distribution<long long>(static_cast<double>(mean))(rng) : 0;
    };
    std::vector<CountRecord> resampled(records.begin(), records.end());
    for (auto& r : resampled) {
      r.coincidences = draw(r.coincidences);
      r.singles_1 = draw(r.singles_1);
      r.singles_2 = draw(r.singles_2);
    }
    const MLEResult fit = mle_reconstruct(resampled, config);
    out.fidelities[i] = polkit::fidelity(fit.rho, target);
    out.tangles[i] = polkit::tangle(fit.rho);
  });
  auto mean_std = [](const std::vector<double>& v, double& mean, double& sd) {
    // Shifted sums: identical samples give exactly zero spread.
    const double ref = v.front();
    double s = 0.0, ss = 0.0;
    for (double x : v) {
      s += x - ref;
      ss += (x - ref) * (x - ref);
    }
    const double n = static_cast<double>(v.size());
    mean = ref + s / n;
    sd = std::sqrt(std::max(0.0, (ss - s * s / n) / (n - 1.0)));
  };
  mean_std(out.fidelities, out.fidelity_mean, out.fidelity_std);
  mean_std(out.tangles, out.tangle_mean, out.tangle_std);
  return out;
}

StateReport report(const DensityMatrix& rho) {
  StateReport r;
  r.rho = rho.matrix();
  r.eigenvalues = rho.eigenvalues();
  for (std::size_t k = 0; k < 4; ++k) r.fidelities[k] = polkit::fidelity(rho, polkit::bell_state(polkit::kAllBell[k]));
  const auto best = std::max_element(r.fidelities.begin(), r.fidelities.end()) - r.fidelities.begin();
  r.best_target = polkit::kAllBell[best];
  r.concurrence = polkit::concurrence(rho);
  r.tangle = polkit::tangle(rho);
  r.purity = polkit::purity(rho);
  r.max_imaginary = rho.matrix().imag().cwiseAbs().maxCoeff();
  return r;
}

void write_counts_csv(std::ostream& out, std::span<const CountRecord> records) {
  out << "setting_label,coincidences,singles_1,singles_2,duration_s\n";
  for (const auto& r : records) {
    out << r.setting_label << ',' << r.coincidences << ',' << r.singles_1 << ',' << r.singles_2 << ','
        << csv::format_real(r.duration) << '\n';
  }
}

std::vector<CountRecord> read_counts_csv(std::istream& in, const TomographySet& set) {
  const auto rows =
      csv::read_table(in, {"setting_label", "coincidences", "singles_1", "singles_2", "duration_s"});
  std::vector<CountRecord> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    const LabeledSetting* s = set.find(row.fields[0]);
    if (!s) throw ParseError("unknown setting label '" + row.fields[0] + "'", row.line);
    CountRecord r;
    r.setting_label = s->label;
    r.analyzer = s->analyzer;
    r.coincidences = csv::parse_count(row.fields[1], row.line, "coincidences");
    r.singles_1 = csv::parse_count(row.fields[2], row.line, "singles_1");
    r.singles_2 = csv::parse_count(row.fields[3], row.line, "singles_2");
    r.duration = csv::parse_real(row.fields[4], row.line, "duration_s");
    if (!(r.duration > 0.0)) throw ParseError("duration_s must be > 0", row.line);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace grinent::tomo
