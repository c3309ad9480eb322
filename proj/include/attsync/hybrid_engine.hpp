#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "attsync/controllers.hpp"
#include "attsync/plant.hpp"
#include "attsync/potential.hpp"
#include "attsync/topology.hpp"

namespace attsync {

/// Everything that defines the closed loop apart from the state.
/// `aux_potential` carries the auxiliary switching set and threshold; it is
/// only read by the velocity-free law.
struct ClosedLoop {
    OrientedTree tree;
    ControllerKind kind;
    Gains gains;
    PotentialParams edge_potential;
    PotentialParams aux_potential;
    bool time_varying_consensus = false;
    bool experimental_aux_damping = false;
};

/// Throws std::invalid_argument if the gains do not fit the controller kind.
void validate(const ClosedLoop& loop);

struct HybridTime {
    double t = 0.0;
    int j = 0;
};

struct SystemState {
    HybridTime time;
    std::vector<AgentState> agents;
    std::vector<EdgeState> edges;
    std::vector<AuxState> aux;  ///< empty unless velocity-free
};

/// Builds a state at (0, 0) with Rbar_k computed from the attitudes.
/// `xi` defaults to zeros; `aux` defaults to Q_i = R_i, zeta_i = 0 for the
/// velocity-free law and is ignored otherwise.
SystemState make_state(const ClosedLoop& loop, std::vector<AgentState> agents, std::vector<double> xi = {},
                       std::vector<AuxState> aux = {});

/// Raised by run() when a Lyapunov certificate or the jump guard fails.
class CertificateViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// True if some edge (or, velocity-free, some agent) has gap >= delta.
bool in_jump_set(const ClosedLoop& loop, const SystemState& s);

/// One classical RK4 step of length h on the ambient matrices, followed by
/// projection onto SO(3) and reconciliation of every Rbar_k with R_j^T R_i.
/// Throws std::runtime_error on non-finite rates or when the integrated edge
/// attitude drifts more than 1e-6 from the agents'. Returns the drift.
double step(const ClosedLoop& loop, SystemState& s, double h);

struct JumpRecord {
    double t = 0.0;
    int j = 0;  ///< jump counter after the event
    std::vector<int> edges;   ///< 0-based edges reset
    std::vector<int> agents;  ///< 0-based auxiliary states reset
    double v_before = 0.0;
    double v_after = 0.0;
};

/// Resets every violating xi_k and zeta_i in one event and increments j.
/// Throws std::logic_error if nothing is in the jump set.
JumpRecord jump_event(const ClosedLoop& loop, SystemState& s);

/// V_z, V or V-hat depending on the controller.
double lyapunov(const ClosedLoop& loop, const SystemState& s);

/// Closed-form time derivative of lyapunov() along the flow.
double lyapunov_flow_rate(const ClosedLoop& loop, const SystemState& s);

/// Certified minimum decrease of lyapunov() per reset component
/// (0 for the continuous law).
double jump_drop_bound(const ClosedLoop& loop);

/// ceil(V0 / jump_drop_bound); 0 for the continuous law.
long jump_ceiling(const ClosedLoop& loop, double v0);

/// Synchronization metrics of a state.
struct Metrics {
    double max_edge_dist_sq = 0.0;
    double max_omega = 0.0;
    double max_pairwise_omega = 0.0;
    double max_aux_dist_sq = 0.0;  ///< max dist_id_sq(Q_i^T R_i), velocity-free

    bool operator==(const Metrics&) const = default;
};

Metrics metrics(const ClosedLoop& loop, const SystemState& s);

struct RunOptions {
    double h = 1e-3;
    double t_end = 30.0;
    int sample_stride = 10;
    double epsilon = 1e-2;
    double sustain = 1.0;
    bool stop_at_convergence = true;
    bool record_samples = true;
};

struct Sample {
    HybridTime time;
    std::vector<double> edge_dist_sq;
    std::vector<double> omega_norm;
    std::vector<double> xi;
    std::vector<double> zeta;
    double v = 0.0;
};

struct RunSummary {
    bool converged = false;
    std::optional<double> t_converge;
    int jump_events = 0;
    int component_resets = 0;
    long jump_ceiling = 0;
    double v0 = 0.0;
    double v_final = 0.0;
    double t_final = 0.0;
    Metrics final_metrics;
    double max_flow_increase = 0.0;  ///< largest per-step increase of V
    std::optional<double> min_jump_margin;  ///< min over events of drop - bound
    double max_edge_drift = 0.0;     ///< largest reconciliation gap per step
    bool certificate_ok = true;
    std::string diagnostic;
};

struct RunRecord {
    std::vector<Sample> samples;
    std::vector<JumpRecord> jumps;
    RunSummary summary;
    SystemState final_state;
};

Sample sample(const ClosedLoop& loop, const SystemState& s);

/// Jump-priority execution: jump whenever the jump set is reached, flow
/// otherwise, until t_end or (optionally) sustained convergence. Certificate
/// failures are recorded in the summary; exceeding 10x the jump ceiling
/// throws CertificateViolation.
RunRecord run(const ClosedLoop& loop, SystemState initial, const RunOptions& opt);

}  // namespace attsync
