#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "attsync/scenario.hpp"

namespace attsync {

struct TrialResult {
    int index = 0;
    bool converged = false;
    bool failed = false;  ///< exception or jump guard
    std::string error;
    std::optional<double> t_converge;
    int jump_events = 0;
    int component_resets = 0;
    long jump_ceiling = 0;
    bool certificate_ok = true;
    Metrics final_metrics;
    double equilibrium_distance = 0.0;  ///< max over edges of the distance to the nearest equilibrium
    bool near_undesired = false;        ///< every edge within 1e-3 of an equilibrium, one of them undesired

    bool operator==(const TrialResult&) const = default;
};

struct MonteCarloReport {
    int trials = 0;
    std::vector<TrialResult> results;  ///< ordered by trial index
    int converged = 0;
    double converged_fraction = 0.0;
    int failures = 0;
    int certificate_failures = 0;
    int max_jump_events = 0;
    double mean_component_resets = 0.0;
    std::optional<double> worst_t_converge;
};

/// Trial `index`: Haar-random attitudes (and auxiliary attitudes for the
/// velocity-free law) drawn from seed_seq{master_seed, index}, zero rates,
/// the scenario's inertias, xi = zeta = 0. Never throws.
TrialResult run_trial(const Scenario& sc, int index, std::uint64_t master_seed);

/// Reference implementation: trials in order on the calling thread.
MonteCarloReport montecarlo_serial(const Scenario& sc, int trials, std::uint64_t master_seed);

/// OpenMP fan-out over trials; results are identical to montecarlo_serial().
MonteCarloReport montecarlo_parallel(const Scenario& sc, int trials, std::uint64_t master_seed);

std::string report_json(const MonteCarloReport& rep, bool include_trials);

}  // namespace attsync
