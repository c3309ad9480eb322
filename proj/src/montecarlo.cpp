#include "attsync/montecarlo.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace attsync {

namespace {

MonteCarloReport aggregate(std::vector<TrialResult> results)
{
    MonteCarloReport rep;
    rep.trials = static_cast<int>(results.size());
    long resets = 0;
    for (const auto& r : results) {
        if (r.converged) {
            ++rep.converged;
            if (r.t_converge) {
                rep.worst_t_converge = std::max(rep.worst_t_converge.value_or(0.0), *r.t_converge);
            }
        }
        if (r.failed) {
            ++rep.failures;
        }
        if (!r.certificate_ok) {
            ++rep.certificate_failures;
        }
        rep.max_jump_events = std::max(rep.max_jump_events, r.jump_events);
        resets += r.component_resets;
    }
    if (rep.trials > 0) {
        rep.converged_fraction = static_cast<double>(rep.converged) / rep.trials;
        rep.mean_component_resets = static_cast<double>(resets) / rep.trials;
    }
    rep.results = std::move(results);
    return rep;
}

void check_trials(int trials)
{
    if (trials < 0) {
        throw std::invalid_argument("montecarlo: trial count must be nonnegative");
    }
}

}  // namespace

TrialResult run_trial(const Scenario& sc, int index, std::uint64_t master_seed)
{
    TrialResult out;
    out.index = index;
    try {
        std::seed_seq seq{master_seed, static_cast<std::uint64_t>(index)};
        std::mt19937_64 rng(seq);
        std::vector<AgentState> agents;
        for (const auto& a : sc.initial.agents) {
            agents.push_back({random_rotation(rng), Vec3::Zero(), a.inertia});
        }
        std::vector<AuxState> aux;
        if (sc.loop.kind == ControllerKind::velocity_free) {
            for (std::size_t i = 0; i < agents.size(); ++i) {
                aux.push_back({random_rotation(rng), 0.0});
            }
        }
        SystemState s = make_state(sc.loop, std::move(agents), {}, std::move(aux));
        RunOptions opt = sc.options;
        opt.record_samples = false;
        opt.stop_at_convergence = true;
        const RunRecord rec = run(sc.loop, std::move(s), opt);

        const RunSummary& sum = rec.summary;
        out.converged = sum.converged;
        out.t_converge = sum.t_converge;
        out.jump_events = sum.jump_events;
        out.component_resets = sum.component_resets;
        out.jump_ceiling = sum.jump_ceiling;
        out.certificate_ok = sum.certificate_ok;
        out.final_metrics = sum.final_metrics;
        bool undesired = false;
        for (const auto& e : rec.final_state.edges) {
            out.equilibrium_distance =
                std::max(out.equilibrium_distance, nearest_equilibrium_distance(e.rbar, sc.loop.edge_potential));
            undesired = undesired || dist_id_sq(e.rbar) > 0.5;
        }
        out.near_undesired = undesired && out.equilibrium_distance <= 1e-3;
    } catch (const std::exception& e) {
        out.failed = true;
        out.certificate_ok = false;
        out.error = e.what();
    }
    return out;
}

MonteCarloReport montecarlo_serial(const Scenario& sc, int trials, std::uint64_t master_seed)
{
    check_trials(trials);
    std::vector<TrialResult> results;
    results.reserve(static_cast<std::size_t>(trials));
    for (int i = 0; i < trials; ++i) {
        results.push_back(run_trial(sc, i, master_seed));
    }
    return aggregate(std::move(results));
}

MonteCarloReport montecarlo_parallel(const Scenario& sc, int trials, std::uint64_t master_seed)
{
    check_trials(trials);
    std::vector<TrialResult> results(static_cast<std::size_t>(trials));
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < trials; ++i) {
        results[static_cast<std::size_t>(i)] = run_trial(sc, i, master_seed);
    }
    return aggregate(std::move(results));
}

std::string report_json(const MonteCarloReport& rep, bool include_trials)
{
    using nlohmann::json;
    json j;
    j["trials"] = rep.trials;
    j["converged"] = rep.converged;
    j["converged_fraction"] = rep.converged_fraction;
    j["failures"] = rep.failures;
    j["certificate_failures"] = rep.certificate_failures;
    j["max_jump_events"] = rep.max_jump_events;
    j["mean_component_resets"] = rep.mean_component_resets;
    j["worst_t_converge"] = rep.worst_t_converge ? json(*rep.worst_t_converge) : json(nullptr);
    if (include_trials) {
        json arr = json::array();
        for (const auto& r : rep.results) {
            json t = {{"index", r.index},
                      {"converged", r.converged},
                      {"t_converge", r.t_converge ? json(*r.t_converge) : json(nullptr)},
                      {"jump_events", r.jump_events},
                      {"jumps", r.component_resets},
                      {"jump_ceiling", r.jump_ceiling},
                      {"certificate_ok", r.certificate_ok},
                      {"max_edge_dist_sq", r.final_metrics.max_edge_dist_sq},
                      {"max_omega", r.final_metrics.max_omega},
                      {"equilibrium_distance", r.equilibrium_distance},
                      {"near_undesired", r.near_undesired}};
            if (r.failed) {
                t["error"] = r.error;
            }
            arr.push_back(t);
        }
        j["results"] = arr;
    }
    return j.dump(2) + "\n";
}

}  // namespace attsync
