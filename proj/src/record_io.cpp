#include "attsync/record_io.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include <json.hpp>

namespace attsync {

namespace {

template <class Range>
std::string id_list(const Range& ids)
{
    std::string out;
    for (int id : ids) {
        if (!out.empty()) {
            out += ';';
        }
        out += std::to_string(id + 1);
    }
    return out;
}

std::ofstream open(const std::filesystem::path& p)
{
    std::ofstream out(p);
    if (!out) {
        throw std::runtime_error("cannot write " + p.string());
    }
    return out;
}

}  // namespace

void write_timeseries_csv(std::ostream& out, const ClosedLoop& loop, const RunRecord& rec)
{
    const int n = loop.tree.n_agents();
    const int m = loop.tree.n_edges();
    const bool vf = loop.kind == ControllerKind::velocity_free;

    out << "t,j";
    for (int k = 1; k <= m; ++k) {
        out << ",dist_sq_edge_" << k;
    }
    for (int i = 1; i <= n; ++i) {
        out << ",omega_norm_" << i;
    }
    for (int k = 1; k <= m; ++k) {
        out << ",xi_" << k;
    }
    if (vf) {
        for (int i = 1; i <= n; ++i) {
            out << ",zeta_" << i;
        }
    }
    out << ",V\n";

    out << std::setprecision(12);
    for (const Sample& s : rec.samples) {
        out << s.time.t << ',' << s.time.j;
        for (double x : s.edge_dist_sq) {
            out << ',' << x;
        }
        for (double x : s.omega_norm) {
            out << ',' << x;
        }
        for (double x : s.xi) {
            out << ',' << x;
        }
        if (vf) {
            for (double x : s.zeta) {
                out << ',' << x;
            }
        }
        out << ',' << s.v << '\n';
    }
}

void write_jumps_csv(std::ostream& out, const RunRecord& rec)
{
    out << "t,j,edges,agents,v_before,v_after,drop\n";
    out << std::setprecision(12);
    for (const JumpRecord& jr : rec.jumps) {
        out << jr.t << ',' << jr.j << ',' << id_list(jr.edges) << ',' << id_list(jr.agents) << ',' << jr.v_before
            << ',' << jr.v_after << ',' << (jr.v_before - jr.v_after) << '\n';
    }
}

std::string summary_json(const ClosedLoop& loop, const RunRecord& rec, const std::string& scenario_name)
{
    using nlohmann::json;
    const RunSummary& s = rec.summary;
    json j;
    j["scenario"] = scenario_name;
    j["controller"] = std::string(to_string(loop.kind));
    j["converged"] = s.converged;
    j["t_converge"] = s.t_converge ? json(*s.t_converge) : json(nullptr);
    j["jumps"] = s.component_resets;
    j["jump_events"] = s.jump_events;
    j["jump_ceiling"] = s.jump_ceiling;
    j["v0"] = s.v0;
    j["v_final"] = s.v_final;
    j["t_final"] = s.t_final;
    j["final"] = {{"max_edge_dist_sq", s.final_metrics.max_edge_dist_sq},
                  {"max_omega", s.final_metrics.max_omega},
                  {"max_pairwise_omega", s.final_metrics.max_pairwise_omega},
                  {"max_aux_dist_sq", s.final_metrics.max_aux_dist_sq}};
    j["certificate"] = {{"ok", s.certificate_ok},
                        {"max_flow_increase", s.max_flow_increase},
                        {"min_jump_margin", s.min_jump_margin ? json(*s.min_jump_margin) : json(nullptr)},
                        {"jump_drop_bound", jump_drop_bound(loop)},
                        {"max_edge_drift", s.max_edge_drift}};
    j["diagnostic"] = s.diagnostic;
    return j.dump(2) + "\n";
}

void write_run(const std::string& dir, const ClosedLoop& loop, const RunRecord& rec,
               const std::string& scenario_name)
{
    const std::filesystem::path root(dir);
    std::filesystem::create_directories(root);
    {
        auto out = open(root / "timeseries.csv");
        write_timeseries_csv(out, loop, rec);
    }
    {
        auto out = open(root / "jumps.csv");
        write_jumps_csv(out, rec);
    }
    auto out = open(root / "summary.json");
    out << summary_json(loop, rec, scenario_name);
}

}  // namespace attsync
