#pragma once

#include <string>

#include "gapcurve/geometry.hpp"
#include "gapcurve/inverse.hpp"
#include "gapcurve/potential.hpp"
#include "gapcurve/spectral.hpp"

namespace gapcurve {

// Potential JSON: {"n":int,"T":float,"theta":float,"samples":[[re,im],...]}
std::string potential_to_json(const Potential& q);
Potential potential_from_json(const std::string& text);

// Spectrum JSON: {"T":..,"theta":..,"K_central":..,
//   "entries":[{"k":int,"lambda":[re,im],"mult":int,"z":[re,im]},...]}
std::string spectrum_to_json(const SpectralData& sd);

// Solver config JSON:
// {"N":int,"n_trunc":int,"tol":float,"max_iter":int,
//  "exact_jacobian_every":int,"damping_max":int}
SolverConfig solver_config_from_json(const std::string& text);

// Curve CSV: header "t,x,y,z" (R3) or "t,q0,q1,q2,q3" (S3, scalar-first
// unit quaternion), one row per sample, '#' starts a comment line.
std::string curve_to_csv(const CurveSamples& c);
CurveSamples curve_from_csv(const std::string& text);

std::string read_file(const std::string& path);
/// Write via a temp file and rename, so failures leave no partial output.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace gapcurve
