#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "curveflow/flow.hpp"
#include "curveflow/support_field.hpp"

namespace curveflow {

/// Shortest round-trip decimal form; identical bytes for identical doubles.
std::string format_double(double v);

/// Writes via a temp file in the same directory plus rename, so files are
/// never observed half-written.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content);

/// One row per snapshot, columns exactly:
/// t,u_min,u_max,osc,dist_to_unit,Q_min,Q_max,grad_ratio,lambda_min,
/// lambda_max,barrier_lo,barrier_hi,dt (barrier cells empty when undefined).
std::string diagnostics_csv(const std::vector<DiagnosticsRecord>& recs);

/// node_index,theta,phi,u (phi = 0 on circle grids).
std::string field_csv(const SupportField& u);

/// Wavefront OBJ of the embedded surface: vertices in grid order, quads split
/// into triangles, longitude seam closed. n=2 only.
std::string obj_mesh(const SupportField& u);

/// Two-column x,y polyline of the embedded curve, closed by repeating the
/// first point. n=1 only.
std::string polyline_csv(const SupportField& u);

}  // namespace curveflow
