#include "grinent/json_io.hpp"

#include <string>

#include "grinent/errors.hpp"

namespace grinent::json_io {

using polkit::cplx;

namespace {

json complex_pair(cplx z) { return json::array({z.real(), z.imag()}); }

cplx complex_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ParseError(std::string(what) + ": expected a [re, im] pair");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

template <class M>
json matrix_pairs(const M& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_pair(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <class M>
M matrix_from_pairs(const json& j, const char* what) {
  M m;
  if (!j.is_array() || j.size() != static_cast<std::size_t>(m.rows())) {
    throw ParseError(std::string(what) + ": expected " + std::to_string(m.rows()) + " rows");
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (!j[r].is_array() || j[r].size() != static_cast<std::size_t>(m.cols())) {
      throw ParseError(std::string(what) + ": row " + std::to_string(r) + " has the wrong length");
    }
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = complex_from(j[r][c], what);
  }
  return m;
}

template <class M>
json real_part(const M& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

json density_to_json(const polkit::DensityMatrix& rho) {
  json basis = json::array();
  for (auto l : polkit::kBasisLabels) basis.push_back(std::string(l));
  return {{"basis", basis}, {"entries", matrix_pairs(rho.matrix())}};
}

polkit::DensityMatrix density_from_json(const json& j) {
  if (!j.is_object() || !j.contains("entries")) throw ParseError("density matrix: missing 'entries'");
  if (j.contains("basis")) {
    const json& b = j["basis"];
    bool ok = b.is_array() && b.size() == 4;
    for (std::size_t i = 0; ok && i < 4; ++i) ok = b[i].is_string() && b[i].get<std::string>() == polkit::kBasisLabels[i];
    if (!ok) throw ParseError("density matrix: basis must be [\"HH\",\"HV\",\"VH\",\"VV\"]");
  }
  return polkit::DensityMatrix(matrix_from_pairs<polkit::Matrix4>(j["entries"], "density matrix"));
}

json unitary_to_json(const polkit::Unitary2& u) { return matrix_pairs(u); }

polkit::Unitary2 unitary_from_json(const json& j) { return matrix_from_pairs<polkit::Unitary2>(j, "unitary"); }

json report_to_json(const tomo::StateReport& r) {
  json fid = json::object();
  for (std::size_t k = 0; k < 4; ++k) fid[std::string(polkit::bell_name(polkit::kAllBell[k]))] = r.fidelities[k];
  return {
      {"density_matrix", {{"basis", {"HH", "HV", "VH", "VV"}}, {"entries", matrix_pairs(r.rho)}}},
      {"real", real_part(r.rho.real())},
      {"imag", real_part(r.rho.imag())},
      {"eigenvalues", {r.eigenvalues(0), r.eigenvalues(1), r.eigenvalues(2), r.eigenvalues(3)}},
      {"fidelities", fid},
      {"best_target", std::string(polkit::bell_name(r.best_target))},
      {"concurrence", r.concurrence},
      {"tangle", r.tangle},
      {"purity", r.purity},
      {"max_abs_imag", r.max_imaginary},
  };
}

json fit_to_json(const fitkit::SinusoidFit& f) {
  return {
      {"model", "fringe"},
      {"parameters",
       {{"offset", f.offset}, {"amplitude", f.amplitude}, {"period_m", f.period}, {"phase_rad", f.phase},
        {"visibility", f.visibility}}},
      {"uncertainties",
       {{"offset", f.uncertainty.offset}, {"amplitude", f.uncertainty.amplitude},
        {"period_m", f.uncertainty.period}, {"phase_rad", f.uncertainty.phase},
        {"visibility", f.uncertainty.visibility}}},
      {"raw_visibility", f.raw_visibility},
      {"residual_norm", f.residual_norm},
      {"points_used", f.points_used},
      {"iterations", f.iterations},
  };
}

json fit_to_json(const fitkit::GaussianFit& f) {
  return {
      {"model", "profile"},
      {"parameters",
       {{"amplitude", f.amplitude}, {"center", f.center}, {"fwhm", f.fwhm}, {"sigma", f.sigma},
        {"baseline", f.baseline}}},
      {"uncertainties",
       {{"amplitude", f.uncertainty.amplitude}, {"center", f.uncertainty.center}, {"fwhm", f.uncertainty.fwhm},
        {"baseline", f.uncertainty.baseline}}},
      {"residual_norm", f.residual_norm},
      {"points_used", f.points_used},
      {"iterations", f.iterations},
  };
}

}  // namespace grinent::json_io
