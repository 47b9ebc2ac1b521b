// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "grinent/beam_optics.hpp"
#include "grinent/cli.hpp"
#include "grinent/expsim.hpp"
#include "grinent/fitkit.hpp"
#include "grinent/polkit.hpp"
#include "grinent/tomo.hpp"

using namespace grinent;
namespace fs = std::filesystem;
using polkit::BellKind;
using polkit::Matrix4;
using polkit::kPi;

namespace {

// Tolerances.
constexpr double kFocalTol = 0.01;        // relative
constexpr double kWaistTol = 0.01;        // relative
constexpr double kConfocalTol = 0.02;     // relative
constexpr double kFwhmMeasuredTol = 0.03;    // relative to the measured 301 um
constexpr double kFwhmFitTol = 1e-6;      // m
constexpr double kExactVisTol = 1e-9;
constexpr double kExactResidualTol = 1e-9;
constexpr double kVisTol = 0.01;
constexpr double kBellFidelityMin = 0.999;
constexpr double kBellTangleMin = 0.996;
constexpr double kEigenFloor = -1e-9;
constexpr double kTraceTol = 1e-10;
constexpr double kCalFidelityTol = 0.02;
constexpr double kCalTangleTol = 0.04;
constexpr double kInverseTol = 1e-8;
constexpr double kLikelihoodSlack = 1e-10;  // relative, roundoff when LI is already the maximizer
constexpr double kWernerTol = 1e-10;
constexpr double kTangleInvTol = 1e-8;
constexpr double kRatioTol = 0.005;         // absolute, i.e. 8% +/- 0.5%
constexpr double kLinearityTol = 1e-12;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Detail {
 public:
  template <class... A>
  void add(const char* fmt, A... a) {
    char buf[256];
    std::snprintf(buf, sizeof buf, fmt, a...);
    if (!text_.empty()) text_ += "; ";
    text_ += buf;
  }
  std::string str() const { return text_; }

 private:
  std::string text_;
};

Matrix4 random_density(std::mt19937_64& rng, int rank) {
  std::normal_distribution<double> n;
  Eigen::MatrixXcd a(4, rank);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < rank; ++c) a(r, c) = polkit::cplx(n(rng), n(rng));
  Matrix4 rho = a * a.adjoint();
  return rho / rho.trace();
}

polkit::Unitary2 random_unitary(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  polkit::Unitary2 m;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) m(r, c) = polkit::cplx(n(rng), n(rng));
  Eigen::HouseholderQR<polkit::Unitary2> qr(m);
  return qr.householderQ();
}

bool physical(const polkit::DensityMatrix& rho) {
  return rho.eigenvalues().minCoeff() >= kEigenFloor && std::abs(rho.matrix().trace() - 1.0) < kTraceTol &&
         (rho.matrix() - rho.matrix().adjoint()).cwiseAbs().maxCoeff() < 1e-10;
}

struct Calibration {
  BellKind kind;
  const char* preset;
  double fidelity, tangle;
};
const Calibration kCalibrations[] = {{BellKind::kPhiPlus, "tomo-phi+", 0.938, 0.873},
                                     {BellKind::kPhiMinus, "tomo-phi-", 0.949, 0.940},
                                     {BellKind::kPsiPlus, "tomo-psi+", 0.923, 0.846},
                                     {BellKind::kPsiMinus, "tomo-psi-", 0.965, 0.911}};

polkit::DensityMatrix calibrated_state(const Calibration& c) {
  const auto cfg = cli::parse_config(cli::preset(c.preset));
  const auto model = expsim::calibrate_bell(*cfg.source, c.kind, cfg.tomography->calibrated_fidelity.value(),
                                            cfg.tomography->calibrated_tangle.value());
  return expsim::bell_model_state(model, c.kind);
}

// MLE likelihood must not fall below that of the clipped linear estimate.
bool likelihood_dominates(const std::vector<expsim::CountRecord>& recs, const tomo::MLEResult& fit, double* gap) {
  const auto li = polkit::clip_to_physical(tomo::linear_inversion(recs).estimate);
  const double li_ll = tomo::log_likelihood(recs, li);
  *gap = std::min(*gap, fit.log_likelihood - li_ll);
  return fit.log_likelihood >= li_ll - kLikelihoodSlack * std::abs(li_ll);
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  namespace bo = beam_optics;
  const double lambda = 728e-9, w0 = 2.5e-6, g = 312.0, n0 = 1.603;
  const bo::GrinLens lens{n0, g, kPi / (2.0 * g)};
  const double f = bo::focal_length(lens);
  const auto out = bo::propagate(bo::GaussianBeam(lambda, w0), bo::grin_abcd(lens));
  const double w_formula = bo::coupled_waist(lambda, w0, f);
  const double z = bo::confocal_parameter(out.waist_radius, lambda);
  Outcome o;
  o.pass = lens.is_quarter_pitch() && std::abs(f - 2e-3) / 2e-3 <= kFocalTol &&
           std::abs(out.waist_radius - 185e-6) / 185e-6 <= kWaistTol &&
           std::abs(w_formula - 185e-6) / 185e-6 <= kWaistTol && std::abs(z - 148e-3) / 148e-3 <= kConfocalTol;
  Detail d;
  d.add("f = %.4f mm, W0' = %.2f um (propagated) / %.2f um (formula), z0' = %.1f mm", f * 1e3,
        out.waist_radius * 1e6, w_formula * 1e6, z * 1e3);
  o.detail = d.str();
  return o;
}

Outcome criterion2() {
  namespace bo = beam_optics;
  const auto cfg = cli::parse_config(cli::preset("grin-default"));
  const double lambda = cfg.grin->wavelength;
  const auto lens = bo::quarter_pitch_lens(cfg.grin->gradient_constant, *cfg.grin->focal_length);
  const auto beam = bo::propagate(bo::GaussianBeam(lambda, cfg.grin->fiber_mode_radius), bo::grin_abcd(lens));
  const double w = 185e-6;
  const double model = 2.0 * std::sqrt(std::log(2.0)) * w;
  const auto offsets = cfg.grin->lateral_sweep.values();
  const auto sweep = bo::lateral_sweep(beam.waist_radius, beam.waist_radius, offsets);
  std::vector<double> x, y;
  for (const auto& p : sweep) {
    x.push_back(p.x);
    y.push_back(p.efficiency);
  }
  const auto fit = fitkit::fit_gaussian(x, y);
  const double device_fwhm = bo::lateral_fwhm(beam.waist_radius);
  Outcome o;
  o.pass = sweep.size() == 41 && std::abs(model - 301e-6) / 301e-6 <= kFwhmMeasuredTol &&
           std::abs(bo::lateral_fwhm(w) - model) < 1e-15 && std::abs(fit.fwhm - device_fwhm) <= kFwhmFitTol;
  Detail d;
  d.add("model FWHM %.2f um vs measured 301 um (%.2f%%)", model * 1e6, 100.0 * (model - 301e-6) / 301e-6);
  d.add("41-point fit %.4f um vs model %.4f um", fit.fwhm * 1e6, device_fwhm * 1e6);
  o.detail = d.str();
  return o;
}

Outcome criterion3() {
  const expsim::SourceModel model;
  const auto scan = expsim::MirrorScan::uniform(-364e-9, 364e-9, 40, 0.3);
  const auto dd = expsim::diagonal_analyzer();
  const double duration = 1.0;
  expsim::SourceModel clean = model;
  clean.singles_rate_1 = clean.singles_rate_2 = 0.0;
  std::vector<double> x, y;
  double max_law_residual = 0.0;
  for (double z : scan.positions) {
    const double theta = expsim::phase_of_position(z, model, scan.phase_offset);
    const auto rho = polkit::phi_theta(theta).density();
    const auto e = expsim::expected_counts(expsim::coincidence_probability(rho, dd), clean, duration);
    x.push_back(z);
    y.push_back(e.coincidences);
    // p = (1 + cos theta) / 4, so mean = (pair_rate * duration / 2) (1 + cos theta)
    max_law_residual = std::max(
        max_law_residual, std::abs(e.coincidences / (0.5 * clean.pair_rate * duration) - (1.0 + std::cos(theta))));
  }
  const auto fit = fitkit::fit_sinusoid(x, y);
  const double rel_residual = fit.residual_norm / fit.offset;
  Outcome o;
  o.pass = std::abs(fit.visibility - 1.0) <= kExactVisTol && max_law_residual < kExactResidualTol &&
           rel_residual < kExactResidualTol && std::abs(fit.period - 364e-9) / 364e-9 < 1e-9;
  Detail d;
  d.add("|V - 1| = %.2e, max |2 mean / (rate T) - (1 + cos theta)| = %.2e, fit residual/offset = %.2e",
        std::abs(fit.visibility - 1.0), max_law_residual, rel_residual);
  o.detail = d.str();
  return o;
}

Outcome criterion4() {
  Outcome o;
  Detail d;
  for (const char* name : {"fringe-6nm", "fringe-70nm"}) {
    const auto cfg = cli::parse_config(cli::preset(name));
    const auto& fc = *cfg.fringe;
    const auto scan = expsim::MirrorScan::uniform(fc.positions.start, fc.positions.stop, fc.positions.count,
                                                  fc.phase_offset);
    const auto analyzer = tomo::standard_settings().find(fc.analyzer)->analyzer;
    const double target = cfg.source->dephasing_visibility;
    const auto means = expsim::expected_fringe(scan, *cfg.source, analyzer, fc.duration);
    double mean_counts = 0.0;
    for (const auto& m : means) mean_counts += m.means.coincidences / means.size();
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto pts = expsim::fringe_scan(scan, *cfg.source, analyzer, fc.duration, seed);
      std::vector<double> x, y, w;
      for (const auto& p : pts) {
        x.push_back(p.position);
        y.push_back(p.record.coincidences / p.record.duration);
        w.push_back(p.record.duration * p.record.duration / std::max<double>(p.record.coincidences, 1.0));
      }
      const auto fit = fitkit::fit_sinusoid(x, y, w);
      worst = std::max(worst, std::abs(fit.visibility - target));
    }
    o.pass = o.pass && scan.positions.size() == 40 && mean_counts >= 1e4 && worst <= kVisTol;
    d.add("%s: V = %.4f, mean counts/point %.0f, worst |dV| over 20 seeds %.4f", name, target, mean_counts, worst);
  }
  o.detail = d.str();
  return o;
}

Outcome criterion5() {
  Outcome o;
  Detail d;
  const auto set = tomo::standard_settings();
  double min_f = 1.0, min_t = 1.0;
  bool phys = true;
  for (auto k : polkit::kAllBell) {
    const auto truth = polkit::bell_state(k);
    const auto recs = tomo::simulate_tomography_counts(truth.density(), set, 1e6, 500 + static_cast<int>(k));
    const auto fit = tomo::mle_reconstruct(recs);
    min_f = std::min(min_f, polkit::fidelity(fit.rho, truth));
    min_t = std::min(min_t, polkit::tangle(fit.rho));
    phys = phys && physical(fit.rho);
  }
  o.pass = min_f >= kBellFidelityMin && min_t >= kBellTangleMin && phys;
  d.add("min fidelity %.6f, min tangle %.6f, physical %s", min_f, min_t, phys ? "yes" : "no");
  o.detail = d.str();
  return o;
}

Outcome criterion6() {
  Outcome o;
  Detail d;
  const auto set = tomo::standard_settings();
  for (const auto& c : kCalibrations) {
    const auto rho = calibrated_state(c);
    const auto truth = polkit::bell_state(c.kind);
    const double f_model = polkit::fidelity(rho, truth), t_model = polkit::tangle(rho);
    const auto cfg = cli::parse_config(cli::preset(c.preset));
    double f_sum = 0.0, t_sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto recs = tomo::simulate_tomography_counts(rho, set, cfg.tomography->counts_per_setting, seed);
      const auto fit = tomo::mle_reconstruct(recs);
      f_sum += polkit::fidelity(fit.rho, truth);
      t_sum += polkit::tangle(fit.rho);
    }
    const double f_avg = f_sum / 20, t_avg = t_sum / 20;
    const bool ok = std::abs(f_model - c.fidelity) < 1e-9 && std::abs(t_model - c.tangle) < 1e-9 &&
                    std::abs(f_avg - f_model) <= kCalFidelityTol && std::abs(t_avg - t_model) <= kCalTangleTol &&
                    cfg.tomography->counts_per_setting == 1e4;
    o.pass = o.pass && ok;
    d.add("%s: model (%.3f, %.3f), reconstructed mean (%.4f, %.4f)", std::string(polkit::bell_name(c.kind)).c_str(),
          f_model, t_model, f_avg, t_avg);
  }
  o.detail = d.str();
  return o;
}

Outcome criterion7() {
  Outcome o;
  Detail d;
  const auto set = tomo::standard_settings();

  // (a) exact inverse
  std::mt19937_64 rng(2024);
  double worst_inverse = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Matrix4 rho = random_density(rng, 1 + i % 4);
    std::vector<expsim::CountRecord> recs;
    for (const auto& s : set.settings()) {
      expsim::CountRecord r;
      r.setting_label = s.label;
      r.analyzer = s.analyzer;
      r.coincidences = std::llround(1e12 * (polkit::projector(s.analyzer) * rho).trace().real());
      recs.push_back(r);
    }
    worst_inverse = std::max(worst_inverse, (tomo::linear_inversion(recs).estimate - rho).cwiseAbs().maxCoeff());
  }
  const bool inverse_ok = worst_inverse <= kInverseTol;
  d.add("linear inversion worst |error| %.2e", worst_inverse);

  // (b) likelihood dominance and (c) consistency sweep, both on the calibrated phi+ state
  const auto rho = calibrated_state(kCalibrations[0]);
  bool dominates = true;
  double min_gap = INFINITY;
  int datasets = 0;
  const double levels[] = {1e2, 1e3, 1e4, 1e5};
  double mean_td[4] = {0, 0, 0, 0};
  for (int l = 0; l < 4; ++l) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto recs = tomo::simulate_tomography_counts(rho, set, levels[l], expsim::derive_seed(seed, l));
      const auto fit = tomo::mle_reconstruct(recs);
      mean_td[l] += polkit::trace_distance(fit.rho.matrix(), rho.matrix()) / 20.0;
      dominates = likelihood_dominates(recs, fit, &min_gap) && dominates;
      ++datasets;
    }
  }
  // Random states at mixed count levels as additional datasets.
  for (int i = 0; i < 30; ++i) {
    const polkit::DensityMatrix truth(random_density(rng, 1 + i % 4));
    const auto recs = tomo::simulate_tomography_counts(truth, set, levels[i % 4], 9000 + i);
    dominates = likelihood_dominates(recs, tomo::mle_reconstruct(recs), &min_gap) && dominates;
    ++datasets;
  }
  const bool monotone = mean_td[0] > mean_td[1] && mean_td[1] > mean_td[2] && mean_td[2] > mean_td[3];
  d.add("logL(MLE) - logL(clipped LI) >= %.3g over %d datasets", min_gap, datasets);
  d.add("mean trace distance %.4f > %.4f > %.4f > %.5f", mean_td[0], mean_td[1], mean_td[2], mean_td[3]);
  o.pass = inverse_ok && dominates && monotone;
  o.detail = d.str();
  return o;
}

Outcome criterion8() {
  Outcome o;
  Detail d;
  double worst = 0.0;
  for (auto k : polkit::kAllBell) {
    const auto ket = polkit::bell_state(k).amplitudes();
    for (double p : {0.0, 1.0 / 3.0, 0.5, 0.8, 1.0}) {
      const Matrix4 w = p * (ket * ket.adjoint()) + (1.0 - p) * Matrix4::Identity() / 4.0;
      const double closed = std::max(0.0, (3.0 * p - 1.0) / 2.0);
      worst = std::max(worst, std::abs(polkit::concurrence(polkit::DensityMatrix(w)) - closed));
    }
  }
  std::mt19937_64 rng(88);
  const auto base = calibrated_state(kCalibrations[0]);
  const double t0 = polkit::tangle(base);
  double worst_inv = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto moved = polkit::apply_local(random_unitary(rng), random_unitary(rng), base);
    worst_inv = std::max(worst_inv, std::abs(polkit::tangle(moved) - t0));
  }
  o.pass = worst <= kWernerTol && worst_inv <= kTangleInvTol;
  d.add("Werner worst |C - closed form| %.2e; tangle change under 100 local unitaries %.2e", worst, worst_inv);
  o.detail = d.str();
  return o;
}

Outcome criterion9() {
  Outcome o;
  Detail d;
  const auto model = expsim::SourceModel::with_singles_ratio(180.0, 0.08);
  const double duration = 100.0;
  const auto means = expsim::expected_counts(0.5, model, duration);
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto r = expsim::sample_counts(means, seed, "DD", expsim::diagonal_analyzer(), duration);
    const double ratio = static_cast<double>(r.coincidences) / (0.5 * (r.singles_1 + r.singles_2));
    worst = std::max(worst, std::abs(ratio - 0.08));
  }
  auto wide = model;
  wide.coincidence_window = 2.0 * model.coincidence_window;
  const double acc1 = expsim::expected_counts(0.5, model, duration).accidentals;
  const double acc2 = expsim::expected_counts(0.5, wide, duration).accidentals;
  const double factor = acc2 / acc1;
  o.pass = model.coincidence_window == 3e-9 && worst <= kRatioTol && std::abs(factor - 2.0) <= kLinearityTol;
  d.add("singles %.0f /s, worst |coinc/singles - 0.08| over 20 records %.4f; accidentals %.4f -> %.4f (x%.12f)",
        model.singles_rate_1, worst, acc1, acc2, factor);
  o.detail = d.str();
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool same_tree(const fs::path& a, const fs::path& b, int* files) {
  std::vector<fs::path> names;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) names.push_back(fs::relative(e.path(), a));
  int count_b = 0;
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) ++count_b;
  if (static_cast<int>(names.size()) != count_b || names.empty()) return false;
  for (const auto& n : names) {
    if (slurp(a / n) != slurp(b / n)) return false;
  }
  *files += static_cast<int>(names.size());
  return true;
}

Outcome criterion10() {
  Outcome o;
  Detail d;
  std::random_device rd;
  const fs::path root = fs::temp_directory_path() / ("grinent_accept_" + std::to_string(rd()));
  fs::create_directories(root);
  std::ostringstream sink;
  auto run = [&](const fs::path& dir, std::vector<std::string> args) {
    args.push_back("--out");
    args.push_back(dir.string());
    return cli::run(args, sink, sink);
  };
  int files = 0;
  bool ok = true;
  for (const char* rep : {"a", "b"}) {
    const fs::path r = root / rep;
    ok = ok && run(r / "grin", {"grin", "--preset", "grin-default"}) == 0;
    ok = ok && run(r / "fringe", {"simulate", "--preset", "fringe-6nm"}) == 0;
    ok = ok && run(r / "tomo", {"simulate", "--preset", "tomo-phi+"}) == 0;
    ok = ok && run(r / "rec", {"reconstruct", (r / "tomo/tomo_counts.csv").string(), "--preset", "tomo-phi+"}) == 0;
    ok = ok && run(r / "fit", {"fit", (r / "fringe/fringe.csv").string(), "--model", "fringe"}) == 0;
    ok = ok && run(r / "rep", {"report", (r / "rec/state.json").string()}) == 0;
  }
  ok = ok && same_tree(root / "a", root / "b", &files);
  // Separate processes as well.
  const std::string exe = GRINENT_EXE;
  for (const char* rep : {"p1", "p2"}) {
    const std::string cmd =
        exe + " simulate --preset fringe-70nm --out " + (root / rep).string() + " > /dev/null 2>&1";
    ok = ok && std::system(cmd.c_str()) == 0;
  }
  ok = ok && same_tree(root / "p1", root / "p2", &files);
  d.add("%d output files byte-identical across repeated runs (in-process and separate processes)", files);
  std::error_code ec;
  fs::remove_all(root, ec);
  o.pass = ok;
  o.detail = d.str();
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"beam formulas", criterion1},
      {"translational profile", criterion2},
      {"noiseless fringe law", criterion3},
      {"calibrated visibilities", criterion4},
      {"Bell-state tomography round trip", criterion5},
      {"calibrated-noise tomography", criterion6},
      {"estimator properties", criterion7},
      {"entanglement-measure oracle", criterion8},
      {"counting model", criterion9},
      {"CLI determinism", criterion10},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2zu [PRIMARY] %s: %s (%.2f s) | %s\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL",
                secs, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
