#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "attsync/controllers.hpp"
#include "attsync/hybrid_engine.hpp"

namespace attsync {

/// Malformed or invalid scenario file. `where` is a JSON path such as
/// "potential.delta" or "line 12, column 4".
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& where, const std::string& what)
        : std::runtime_error(where + ": " + what), where_(where) {}
    const std::string& where() const { return where_; }

private:
    std::string where_;
};

struct AgentInit {
    Vec3 axis = Vec3::UnitZ();
    double angle = 0.0;
    Vec3 omega = Vec3::Zero();
    std::optional<Mat3> inertia;

    bool operator==(const AgentInit&) const = default;
};

struct AuxInit {
    Vec3 axis = Vec3::UnitZ();
    double angle = 0.0;
    double zeta = 0.0;

    bool operator==(const AuxInit&) const = default;
};

/// In-memory form of a scenario file. Optional fields stay unset when absent
/// so that serialize(parse(x)) reproduces x.
struct ScenarioConfig {
    std::string name;
    ControllerKind controller = ControllerKind::hybrid;

    int agents = 0;
    std::vector<std::array<int, 2>> edges;  ///< 1-based [head, tail]

    Vec3 a_eigenvalues = Vec3::Ones();
    std::optional<Mat3> a_eigenvectors;  ///< columns; identity when unset
    std::optional<Vec3> u;               ///< synthesized when unset
    std::vector<double> xi_set;
    std::optional<double> gamma;
    std::optional<double> gamma_fraction;
    std::optional<double> delta;
    std::optional<double> delta_fraction;
    std::optional<std::vector<double>> pi_set;  ///< defaults to xi_set
    std::optional<double> delta_q;              ///< defaults to delta

    Gains gains;
    bool time_varying_consensus = false;
    bool experimental_aux_damping = false;

    std::vector<AgentInit> initial_agents;
    std::optional<std::vector<double>> initial_xi;
    std::optional<std::vector<AuxInit>> initial_aux;

    double h = 1e-3;
    double t_end = 30.0;
    int sample_stride = 10;
    std::uint64_t seed = 1;
    double epsilon = 1e-2;
    double sustain = 1.0;
    bool stop_at_convergence = true;
    double perturbation = 0.0;  ///< rad about a seeded random axis per agent; 0 = off

    bool operator==(const ScenarioConfig&) const = default;
};

/// Parses JSON text. Throws ConfigError on syntax errors (with line and
/// column), unknown keys, wrong types or missing required fields.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);
std::string serialize_config(const ScenarioConfig& cfg);

/// Edge and auxiliary potentials from the potential section. A given u is
/// normalized when it is within 1e-3 of unit length.
struct PotentialPair {
    PotentialParams edge;
    PotentialParams aux;
};
PotentialPair build_potentials(const ScenarioConfig& cfg);

OrientedTree build_graph(const ScenarioConfig& cfg);

struct Scenario {
    ClosedLoop loop;
    SystemState initial;
    RunOptions options;
};

/// Validates everything and assembles a runnable scenario. Every failure is
/// reported as ConfigError.
Scenario build_scenario(const ScenarioConfig& cfg);

/// Applies the configured perturbation: R_i <- R_i exp(p n_i) with n_i drawn
/// from the scenario seed.
void perturb_attitudes(SystemState& s, double magnitude, std::uint64_t seed);

}  // namespace attsync
