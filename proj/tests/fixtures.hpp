#pragma once

#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "attsync/hybrid_engine.hpp"
#include "attsync/potential.hpp"
#include "attsync/scenario.hpp"
#include "attsync/topology.hpp"

namespace attsync::testing {

inline constexpr double kPi = std::numbers::pi;

inline std::string scenario_path(const std::string& name)
{
    return std::string(ATTSYNC_SCENARIO_DIR) + "/" + name + ".json";
}

/// A = diag(5, 8.57, 12), u = [0, 0.6455, 0.7638] normalized,
/// gamma = 1.9251, delta = 0.3848, switching set {0.9 pi}.
inline PotentialParams published_params()
{
    const Vec3 u = Vec3(0.0, 0.6455, 0.7638).normalized();
    return PotentialParams::make(Vec3(5.0, 8.57, 12.0).asDiagonal(), u, 1.9251, 0.3848, {0.9 * kPi});
}

/// 7-agent tree: path 1-2-3-4-5 with branch 3-6-7 (0-based here).
inline OrientedTree seven_agent_tree()
{
    const std::vector<Edge> edges{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {2, 5}, {5, 6}};
    return build_tree(7, edges);
}

/// Attitudes alternating -pi/2, +pi/2 about e3, starting with agent 1.
inline std::vector<AgentState> alternating_agents(int n = 7)
{
    std::vector<AgentState> out;
    for (int i = 0; i < n; ++i) {
        out.push_back({axis_angle(i % 2 == 0 ? -kPi / 2 : kPi / 2, Vec3::UnitZ()), Vec3::Zero(), default_inertia()});
    }
    return out;
}

inline Gains published_hybrid_gains()
{
    Gains g;
    g.k_r = 1.0;
    g.k_w = 0.1;
    g.k_w_bar = 0.1;
    g.k_xi = 20.0;
    return g;
}

inline Gains published_vfree_gains()
{
    Gains g;
    g.k_r = 1.0;
    g.k_xi = 20.0;
    g.k_q = 20.0;
    g.k_qtilde = 2.0;
    g.k_zeta = 20.0;
    return g;
}

inline ClosedLoop make_loop(ControllerKind kind, const Gains& g, const PotentialParams& p = published_params())
{
    return ClosedLoop{seven_agent_tree(), kind, g, p, p, false, false};
}

/// Random oriented tree on n agents: agent i > 0 links to a random earlier
/// agent, with a random orientation.
template <class Rng>
OrientedTree random_tree(int n, Rng& rng)
{
    std::vector<Edge> edges;
    for (int i = 1; i < n; ++i) {
        std::uniform_int_distribution<int> pick(0, i - 1);
        const int j = pick(rng);
        if (std::uniform_int_distribution<int>(0, 1)(rng) == 0) {
            edges.push_back({i, j});
        } else {
            edges.push_back({j, i});
        }
    }
    return build_tree(n, edges);
}

}  // namespace attsync::testing
