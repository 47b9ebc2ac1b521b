#include "grinent/expsim.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>

#include "grinent/csv_io.hpp"
#include "grinent/errors.hpp"
#include "grinent/parallel.hpp"

namespace grinent::expsim {

using polkit::cplx;
using polkit::kPi;
using polkit::Matrix4;

void SourceModel::validate() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(dephasing_visibility)) throw InvalidParameterError("dephasing_visibility must lie in [0, 1]");
  if (!in_unit(white_noise_fraction)) throw InvalidParameterError("white_noise_fraction must lie in [0, 1]");
  if (!(center_wavelength > 0.0)) throw InvalidParameterError("center_wavelength must be > 0");
  if (!(bandwidth > 0.0)) throw InvalidParameterError("bandwidth must be > 0");
  if (!(pair_rate >= 0.0) || !(singles_rate_1 >= 0.0) || !(singles_rate_2 >= 0.0)) {
    throw InvalidParameterError("rates must be >= 0");
  }
  if (!(coincidence_window > 0.0)) throw InvalidParameterError("coincidence_window must be > 0");
  if (!polkit::is_unitary(residual_unitary_1) || !polkit::is_unitary(residual_unitary_2)) {
    throw InvalidParameterError("residual unitaries must be unitary");
  }
}

SourceModel SourceModel::with_singles_ratio(double pair_rate, double ratio) {
  if (!(ratio > 0.0)) throw InvalidParameterError("coincidence/singles ratio must be > 0");
  SourceModel m;
  m.pair_rate = pair_rate;
  m.singles_rate_1 = m.singles_rate_2 = pair_rate / ratio;
  return m;
}

MirrorScan MirrorScan::uniform(double start, double stop, int count, double phase_offset) {
  if (count < 2) throw InvalidParameterError("a mirror scan needs at least 2 positions");
  MirrorScan s;
  s.phase_offset = phase_offset;
  s.positions.reserve(count);
  for (int i = 0; i < count; ++i) s.positions.push_back(start + (stop - start) * i / (count - 1));
  return s;
}

DensityMatrix source_state(const SourceModel& model, double theta, double coherence_scale) {
  model.validate();
  const double v = model.dephasing_visibility * coherence_scale;
  const double eps = model.white_noise_fraction;
  Matrix4 rho = Matrix4::Zero();
  rho(0, 0) = rho(3, 3) = 0.5;
  rho(0, 3) = 0.5 * v * std::polar(1.0, -theta);
  rho(3, 0) = std::conj(rho(0, 3));
  rho = (1.0 - eps) * rho + (eps / 4.0) * Matrix4::Identity();
  return DensityMatrix::trusted(rho);
}

DensityMatrix effective_state(const SourceModel& model, double theta) {
  return polkit::apply_local(model.residual_unitary_1, model.residual_unitary_2, source_state(model, theta));
}

DensityMatrix bell_model_state(const SourceModel& model, BellKind kind) {
  const bool minus = kind == BellKind::kPhiMinus || kind == BellKind::kPsiMinus;
  DensityMatrix rho = source_state(model, minus ? kPi : 0.0);
  if (kind == BellKind::kPsiPlus || kind == BellKind::kPsiMinus) {
    const Unitary2 hwp = polkit::waveplate_operator(polkit::Waveplate::half_wave(kPi / 4.0));
    rho = polkit::apply_local(hwp, Unitary2::Identity(), rho);
  }
  return polkit::apply_local(model.residual_unitary_1, model.residual_unitary_2, rho);
}

double phase_of_position(double z, const SourceModel& model, double offset) {
  return 4.0 * kPi * z / model.center_wavelength + offset;
}

double coherence_length(const SourceModel& model) {
  if (!(model.bandwidth > 0.0)) throw InvalidParameterError("bandwidth must be > 0");
  return model.center_wavelength * model.center_wavelength / model.bandwidth;
}

double visibility_envelope(double z, const SourceModel& model) {
  // Gaussian spectrum of FWHM bandwidth, path difference 2z.
  const double u = z / coherence_length(model);
  return std::exp(-u * u * kPi * kPi / std::log(2.0));
}

DensityMatrix state_at_position(const SourceModel& model, double z, double offset) {
  const DensityMatrix rho =
      source_state(model, phase_of_position(z, model, offset), visibility_envelope(z, model));
  return polkit::apply_local(model.residual_unitary_1, model.residual_unitary_2, rho);
}

double coincidence_probability(const DensityMatrix& rho, const AnalyzerSetting& analyzer) {
  const double p = (polkit::projector(analyzer) * rho.matrix()).trace().real();
  return std::clamp(p, 0.0, 1.0);
}

ExpectedCounts expected_counts(double probability, const SourceModel& model, double duration) {
  if (!(duration > 0.0)) throw InvalidParameterError("duration must be > 0");
  if (!(probability >= 0.0 && probability <= 1.0)) throw InvalidParameterError("probability must lie in [0, 1]");
  ExpectedCounts e;
  e.singles_1 = model.singles_rate_1 * duration;
  e.singles_2 = model.singles_rate_2 * duration;
  e.accidentals = model.singles_rate_1 * model.singles_rate_2 * model.coincidence_window * duration;
  e.coincidences = 2.0 * model.pair_rate * probability * duration + e.accidentals;
  return e;
}

namespace {

long long poisson_draw(std::mt19937_64& rng, double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw InvalidParameterError("Poisson mean must be finite and >= 0");
  if (mean == 0.0) return 0;
  return std::poisson_distribution<long long>(mean)(rng);
}

}  // namespace

CountRecord sample_counts(const ExpectedCounts& means, std::uint64_t seed, std::string label,
                          const AnalyzerSetting& analyzer, double duration) {
  std::mt19937_64 rng(seed);
  CountRecord r;
  r.setting_label = std::move(label);
  r.analyzer = analyzer;
  r.duration = duration;
  r.coincidences = poisson_draw(rng, means.coincidences);
  r.singles_1 = poisson_draw(rng, means.singles_1);
  r.singles_2 = poisson_draw(rng, means.singles_2);
  return r;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

AnalyzerSetting diagonal_analyzer() {
  const polkit::ArmSetting diag{0.0, kPi / 8.0};
  return {diag, diag};
}

std::vector<ExpectedScanPoint> expected_fringe(const MirrorScan& scan, const SourceModel& model,
                                               const AnalyzerSetting& analyzer, double duration_per_point) {
  std::vector<ExpectedScanPoint> out;
  out.reserve(scan.positions.size());
  for (double z : scan.positions) {
    if (!std::isfinite(z)) throw InvalidParameterError("scan positions must be finite");
    const double p = coincidence_probability(state_at_position(model, z, scan.phase_offset), analyzer);
    out.push_back({z, expected_counts(p, model, duration_per_point)});
  }
  return out;
}

std::vector<ScanPoint> fringe_scan(const MirrorScan& scan, const SourceModel& model,
                                   const AnalyzerSetting& analyzer, double duration_per_point,
                                   std::uint64_t seed, unsigned threads) {
  if (scan.positions.size() < 2) throw InvalidParameterError("a mirror scan needs at least 2 positions");
  const auto means = expected_fringe(scan, model, analyzer, duration_per_point);
  std::vector<ScanPoint> out(means.size());
  parallel_for(means.size(), threads, [&](std::size_t i) {
    out[i] = {means[i].position,
              sample_counts(means[i].means, derive_seed(seed, i), "fringe", analyzer, duration_per_point)};
  });
  return out;
}

void write_fringe_csv(std::ostream& out, std::span<const ScanPoint> points) {
  out << "position_m,coincidences,singles_1,singles_2,duration_s\n";
  for (const auto& p : points) {
    out << csv::format_real(p.position) << ',' << p.record.coincidences << ',' << p.record.singles_1 << ','
        << p.record.singles_2 << ',' << csv::format_real(p.record.duration) << '\n';
  }
}

std::vector<ScanPoint> read_fringe_csv(std::istream& in) {
  const auto rows = csv::read_table(in, {"position_m", "coincidences", "singles_1", "singles_2", "duration_s"});
  std::vector<ScanPoint> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    ScanPoint p;
    p.position = csv::parse_real(row.fields[0], row.line, "position_m");
    p.record.setting_label = "fringe";
    p.record.analyzer = diagonal_analyzer();
    p.record.coincidences = csv::parse_count(row.fields[1], row.line, "coincidences");
    p.record.singles_1 = csv::parse_count(row.fields[2], row.line, "singles_1");
    p.record.singles_2 = csv::parse_count(row.fields[3], row.line, "singles_2");
    p.record.duration = csv::parse_real(row.fields[4], row.line, "duration_s");
    if (!(p.record.duration > 0.0)) throw ParseError("duration_s must be > 0", row.line);
    out.push_back(p);
  }
  return out;
}

namespace {

Unitary2 linear_rotation(double angle) {
  Unitary2 r;
  r << std::cos(angle / 2.0), -std::sin(angle / 2.0), std::sin(angle / 2.0), std::cos(angle / 2.0);
  return r;
}

}  // namespace

SourceModel calibrate_bell(const SourceModel& base, BellKind kind, double target_fidelity,
                           double target_tangle) {
  base.validate();
  const double v = base.dephasing_visibility;
  if (!(target_tangle >= 0.0 && target_tangle <= v * v)) {
    throw InvalidParameterError("target tangle must lie in [0, V^2]");
  }
  // For the dephased + white-noise X state, C = (1 - eps) V - eps / 2.
  const double c = std::sqrt(target_tangle);
  SourceModel model = base;
  model.white_noise_fraction = (v - c) / (v + 0.5);
  model.residual_unitary_1 = Unitary2::Identity();
  model.residual_unitary_2 = Unitary2::Identity();

  const auto target = polkit::bell_state(kind);
  auto fidelity_at = [&](double angle) {
    SourceModel m = model;
    m.residual_unitary_1 = linear_rotation(angle);
    return polkit::fidelity(bell_model_state(m, kind), target);
  };
  double lo = 0.0, hi = kPi;
  if (target_fidelity > fidelity_at(lo) + 1e-12 || target_fidelity < fidelity_at(hi)) {
    throw InvalidParameterError("target fidelity not reachable with a residual rotation at this tangle");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (fidelity_at(mid) > target_fidelity ? lo : hi) = mid;
  }
  model.residual_unitary_1 = linear_rotation(0.5 * (lo + hi));
  return model;
}

}  // namespace grinent::expsim
