#pragma once

#include <ostream>
#include <string>

#include "attsync/hybrid_engine.hpp"

namespace attsync {

/// Columns: t, j, dist_sq_edge_1..M, omega_norm_1..N, xi_1..M,
/// zeta_1..N (velocity-free only), V.
void write_timeseries_csv(std::ostream& out, const ClosedLoop& loop, const RunRecord& rec);

/// One row per jump event: t, j, edges, agents, v_before, v_after, drop.
/// Edge and agent ids are 1-based and separated by ';'.
void write_jumps_csv(std::ostream& out, const RunRecord& rec);

/// Summary document as pretty-printed JSON.
std::string summary_json(const ClosedLoop& loop, const RunRecord& rec, const std::string& scenario_name);

/// Writes timeseries.csv, jumps.csv and summary.json into `dir`, creating it
/// if needed. Throws std::runtime_error on I/O failure.
void write_run(const std::string& dir, const ClosedLoop& loop, const RunRecord& rec,
               const std::string& scenario_name);

}  // namespace attsync
