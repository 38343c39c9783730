#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "nhsol/frames.hpp"
#include "nhsol/geometry.hpp"
#include "nhsol/soliton.hpp"

namespace nhsol {

nlohmann::json to_json(const GeometryReport& r);
nlohmann::json to_json(const ConstantCurvatureReport& r);
nlohmann::json to_json(const BundlePoint& p);

// Shortest round-trip decimal form of a double.
std::string format_double(double v);

// `l,v_1,...,v_p` followed by one row per grid node.
std::string snapshot_csv(const Grid1D& grid, const Field& v);

// tau,H0,H1,H2_printed,H2_periodic,mass_projection[,constraint_residual,closure_mismatch]
struct DiagnosticsRow {
  HamiltonianRecord h;
  bool frame = false;
  double constraint_residual = 0;
  double closure_mismatch = 0;
};
std::string diagnostics_csv(const std::vector<DiagnosticsRow>& rows, bool frame_columns);

}  // namespace nhsol
