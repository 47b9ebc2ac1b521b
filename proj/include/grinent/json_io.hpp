#pragma once

#include <json.hpp>

#include "grinent/fitkit.hpp"
#include "grinent/polkit.hpp"
#include "grinent/tomo.hpp"

namespace grinent::json_io {

using nlohmann::json;

// {"basis": ["HH","HV","VH","VV"], "entries": [[[re, im], ...], ...]}
json density_to_json(const polkit::DensityMatrix& rho);
// Throws ParseError on shape/basis problems and InvalidStateError when the
// matrix is not physical.
polkit::DensityMatrix density_from_json(const json& j);

// 2x2 complex matrix as [[[re, im], [re, im]], [[re, im], [re, im]]].
json unitary_to_json(const polkit::Unitary2& u);
polkit::Unitary2 unitary_from_json(const json& j);

json report_to_json(const tomo::StateReport& r);
json fit_to_json(const fitkit::SinusoidFit& fit);
json fit_to_json(const fitkit::GaussianFit& fit);

}  // namespace grinent::json_io
