#include "attsync/hybrid_engine.hpp"

#include <algorithm>
#include <cmath>
#include <span>

namespace attsync {

namespace {

/// Flat view of the continuous state (and of its rates) used by RK4.
struct Flat {
    std::vector<Mat3> r;
    std::vector<Vec3> w;
    std::vector<Mat3> rbar;
    std::vector<double> xi;
    std::vector<Mat3> q;
    std::vector<double> zeta;
};

Flat flatten(const SystemState& s)
{
    Flat f;
    for (const auto& a : s.agents) {
        f.r.push_back(a.r.matrix());
        f.w.push_back(a.w);
    }
    for (const auto& e : s.edges) {
        f.rbar.push_back(e.rbar.matrix());
        f.xi.push_back(e.xi);
    }
    for (const auto& x : s.aux) {
        f.q.push_back(x.q.matrix());
        f.zeta.push_back(x.zeta);
    }
    return f;
}

template <class T>
void axpy(std::vector<T>& out, const std::vector<T>& x, double c, const std::vector<T>& d)
{
    out.resize(x.size());
    for (std::size_t n = 0; n < x.size(); ++n) {
        out[n] = x[n] + c * d[n];
    }
}

void axpy(Flat& out, const Flat& x, double c, const Flat& d)
{
    axpy(out.r, x.r, c, d.r);
    axpy(out.w, x.w, c, d.w);
    axpy(out.rbar, x.rbar, c, d.rbar);
    axpy(out.xi, x.xi, c, d.xi);
    axpy(out.q, x.q, c, d.q);
    axpy(out.zeta, x.zeta, c, d.zeta);
}

struct InertiaCache {
    std::vector<Mat3> j;
    std::vector<Mat3> j_inv;
};

InertiaCache inertia_cache(const SystemState& s)
{
    InertiaCache c;
    for (const auto& a : s.agents) {
        c.j.push_back(a.inertia);
        c.j_inv.push_back(a.inertia.inverse());
    }
    return c;
}

Vec3 torque(const ClosedLoop& loop, int i, const Flat& x)
{
    switch (loop.kind) {
    case ControllerKind::continuous:
        return continuous_torque(i, loop.tree, x.rbar, x.w, loop.gains, loop.edge_potential);
    case ControllerKind::hybrid:
        return hybrid_torque(i, loop.tree, x.rbar, x.xi, x.w, loop.gains, loop.edge_potential);
    case ControllerKind::velocity_free:
        return vf_torque(i, loop.tree, x.r, x.rbar, x.xi, x.q, x.zeta, loop.gains, loop.edge_potential,
                         loop.aux_potential) +
               experimental_relative_aux_damping(i, loop.tree, x.r, x.q, x.zeta, loop.gains, loop.aux_potential,
                                                 loop.experimental_aux_damping);
    }
    return Vec3::Zero();
}

Flat rates(const ClosedLoop& loop, const Flat& x, const InertiaCache& inertia)
{
    const int n = loop.tree.n_agents();
    const int m = loop.tree.n_edges();
    Flat d;
    d.r.resize(x.r.size());
    d.w.resize(x.w.size());
    for (int i = 0; i < n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        d.r[u] = attitude_rate(x.r[u], x.w[u]);
        d.w[u] = omega_rate_inv(inertia.j[u], inertia.j_inv[u], x.w[u], torque(loop, i, x));
    }
    d.rbar.resize(x.rbar.size());
    d.xi.assign(x.xi.size(), 0.0);
    for (int k = 0; k < m; ++k) {
        const auto u = static_cast<std::size_t>(k);
        const Edge& e = loop.tree.edge(k);
        const Vec3 wbar = x.w[static_cast<std::size_t>(e.head)] -
                          x.rbar[u].transpose() * x.w[static_cast<std::size_t>(e.tail)];
        d.rbar[u] = x.rbar[u] * hat(wbar);
        if (loop.kind != ControllerKind::continuous) {
            d.xi[u] = xi_flow(x.rbar[u], x.xi[u], loop.gains, loop.edge_potential);
        }
    }
    d.q.resize(x.q.size());
    d.zeta.resize(x.zeta.size());
    for (std::size_t i = 0; i < x.q.size(); ++i) {
        const AuxRate ar = aux_flow(x.r[i], x.q[i], x.zeta[i], loop.gains, loop.aux_potential);
        d.q[i] = ar.q_dot;
        d.zeta[i] = ar.zeta_dot;
    }
    return d;
}

bool all_finite(const Flat& f)
{
    auto mats = [](const std::vector<Mat3>& v) {
        return std::all_of(v.begin(), v.end(), [](const Mat3& m) { return m.allFinite(); });
    };
    auto scalars = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    return mats(f.r) && mats(f.rbar) && mats(f.q) && scalars(f.xi) && scalars(f.zeta) &&
           std::all_of(f.w.begin(), f.w.end(), [](const Vec3& v) { return v.allFinite(); });
}

double aux_gap(const ClosedLoop& loop, const SystemState& s, std::size_t i)
{
    const Mat3 qt = s.aux[i].q.matrix().transpose() * s.agents[i].r.matrix();
    return gap(qt, s.aux[i].zeta, loop.aux_potential);
}

double kinetic(const SystemState& s)
{
    return kinetic_energy_sum(s.agents);
}

bool converged_now(const ClosedLoop& loop, const Metrics& mt, double eps)
{
    const double eps_sq = eps * eps;
    if (mt.max_edge_dist_sq > eps_sq) {
        return false;
    }
    if (loop.time_varying_consensus ? mt.max_pairwise_omega > eps : mt.max_omega > eps) {
        return false;
    }
    return loop.kind != ControllerKind::velocity_free || mt.max_aux_dist_sq <= eps_sq;
}

bool stuck_at_undesired(const ClosedLoop& loop, const SystemState& s, const Metrics& mt)
{
    if (mt.max_omega > 1e-3) {
        return false;
    }
    bool any_undesired = false;
    for (const auto& e : s.edges) {
        if (nearest_equilibrium_distance(e.rbar, loop.edge_potential) > 1e-3) {
            return false;
        }
        if (dist_id_sq(e.rbar) > 0.5) {
            any_undesired = true;
        }
    }
    return any_undesired;
}

}  // namespace

void validate(const ClosedLoop& loop)
{
    validate_gains(loop.gains, loop.kind, loop.time_varying_consensus);
    if (loop.experimental_aux_damping && loop.kind != ControllerKind::velocity_free) {
        throw std::invalid_argument("experimental auxiliary damping applies to the velocity-free law only");
    }
}

SystemState make_state(const ClosedLoop& loop, std::vector<AgentState> agents, std::vector<double> xi,
                       std::vector<AuxState> aux)
{
    const auto n = static_cast<std::size_t>(loop.tree.n_agents());
    const auto m = static_cast<std::size_t>(loop.tree.n_edges());
    if (agents.size() != n) {
        throw std::invalid_argument("make_state: expected one agent state per agent");
    }
    for (const auto& a : agents) {
        validate_inertia(a.inertia);
        if (!a.w.allFinite()) {
            throw std::invalid_argument("make_state: non-finite angular velocity");
        }
    }
    if (xi.empty()) {
        xi.assign(m, 0.0);
    }
    if (xi.size() != m) {
        throw std::invalid_argument("make_state: expected one xi per edge");
    }
    SystemState s;
    s.agents = std::move(agents);
    for (std::size_t k = 0; k < m; ++k) {
        const Edge& e = loop.tree.edge(static_cast<int>(k));
        s.edges.push_back({edge_relative(s.agents[static_cast<std::size_t>(e.head)],
                                         s.agents[static_cast<std::size_t>(e.tail)]),
                           xi[k]});
    }
    if (loop.kind == ControllerKind::velocity_free) {
        if (aux.empty()) {
            for (const auto& a : s.agents) {
                aux.push_back({a.r, 0.0});
            }
        }
        if (aux.size() != n) {
            throw std::invalid_argument("make_state: expected one auxiliary state per agent");
        }
        s.aux = std::move(aux);
    }
    return s;
}

bool in_jump_set(const ClosedLoop& loop, const SystemState& s)
{
    if (loop.kind == ControllerKind::continuous) {
        return false;
    }
    for (const auto& e : s.edges) {
        if (gap(e.rbar, e.xi, loop.edge_potential) >= loop.edge_potential.delta()) {
            return true;
        }
    }
    for (std::size_t i = 0; i < s.aux.size(); ++i) {
        if (aux_gap(loop, s, i) >= loop.aux_potential.delta()) {
            return true;
        }
    }
    return false;
}

double step(const ClosedLoop& loop, SystemState& s, double h)
{
    const InertiaCache inertia = inertia_cache(s);
    const Flat x0 = flatten(s);
    const Flat k1 = rates(loop, x0, inertia);
    Flat x;
    axpy(x, x0, 0.5 * h, k1);
    const Flat k2 = rates(loop, x, inertia);
    axpy(x, x0, 0.5 * h, k2);
    const Flat k3 = rates(loop, x, inertia);
    axpy(x, x0, h, k3);
    const Flat k4 = rates(loop, x, inertia);

    Flat sum;
    axpy(sum, k1, 2.0, k2);
    axpy(sum, sum, 2.0, k3);
    axpy(sum, sum, 1.0, k4);
    axpy(x, x0, h / 6.0, sum);
    if (!all_finite(x)) {
        throw std::runtime_error("step: non-finite state after integration");
    }

    for (std::size_t i = 0; i < s.agents.size(); ++i) {
        s.agents[i].r = project_to_rotation(x.r[i]);
        s.agents[i].w = x.w[i];
    }
    double drift = 0.0;
    for (std::size_t k = 0; k < s.edges.size(); ++k) {
        const Edge& e = loop.tree.edge(static_cast<int>(k));
        const Rotation exact = edge_relative(s.agents[static_cast<std::size_t>(e.head)],
                                             s.agents[static_cast<std::size_t>(e.tail)]);
        drift = std::max(drift, (project_to_rotation(x.rbar[k]).matrix() - exact.matrix()).norm());
        s.edges[k].rbar = exact;
        s.edges[k].xi = x.xi[k];
    }
    if (drift > 1e-6) {
        throw std::runtime_error("step: edge attitudes drifted from agent attitudes");
    }
    for (std::size_t i = 0; i < s.aux.size(); ++i) {
        s.aux[i].q = project_to_rotation(x.q[i]);
        s.aux[i].zeta = x.zeta[i];
    }
    s.time.t += h;
    return drift;
}

JumpRecord jump_event(const ClosedLoop& loop, SystemState& s)
{
    JumpRecord rec;
    rec.t = s.time.t;
    rec.v_before = lyapunov(loop, s);
    if (loop.kind != ControllerKind::continuous) {
        for (std::size_t k = 0; k < s.edges.size(); ++k) {
            auto& e = s.edges[k];
            if (gap(e.rbar, e.xi, loop.edge_potential) >= loop.edge_potential.delta()) {
                e.xi = xi_jump(e.rbar, e.xi, loop.edge_potential);
                rec.edges.push_back(static_cast<int>(k));
            }
        }
        for (std::size_t i = 0; i < s.aux.size(); ++i) {
            if (aux_gap(loop, s, i) >= loop.aux_potential.delta()) {
                s.aux[i].zeta = aux_jump(s.agents[i].r, s.aux[i].q, s.aux[i].zeta, loop.aux_potential);
                rec.agents.push_back(static_cast<int>(i));
            }
        }
    }
    if (rec.edges.empty() && rec.agents.empty()) {
        throw std::logic_error("jump_event: no component is in the jump set");
    }
    s.time.j += 1;
    rec.j = s.time.j;
    rec.v_after = lyapunov(loop, s);
    return rec;
}

double lyapunov(const ClosedLoop& loop, const SystemState& s)
{
    const PotentialParams& p = loop.edge_potential;
    double v = 0.0;
    for (const auto& e : s.edges) {
        v += loop.kind == ControllerKind::continuous ? (p.a() * (Mat3::Identity() - e.rbar.matrix())).trace()
                                                     : u_value(e.rbar, e.xi, p);
    }
    v *= loop.gains.k_r;
    for (std::size_t i = 0; i < s.aux.size(); ++i) {
        const Mat3 qt = s.aux[i].q.matrix().transpose() * s.agents[i].r.matrix();
        v += loop.gains.k_qtilde * u_value(qt, s.aux[i].zeta, loop.aux_potential);
    }
    return v + kinetic(s);
}

double lyapunov_flow_rate(const ClosedLoop& loop, const SystemState& s)
{
    const Gains& g = loop.gains;
    double rate = 0.0;
    if (loop.kind != ControllerKind::continuous) {
        double xi_sq = 0.0;
        for (const auto& e : s.edges) {
            const double d = grad_xi(e.rbar, e.xi, loop.edge_potential);
            xi_sq += d * d;
        }
        rate -= g.k_r * g.k_xi * xi_sq;
    }
    if (loop.kind == ControllerKind::velocity_free) {
        double out_sq = 0.0;
        double zeta_sq = 0.0;
        for (std::size_t i = 0; i < s.aux.size(); ++i) {
            const Mat3& r = s.agents[i].r;
            const Mat3& q = s.aux[i].q;
            const double zeta = s.aux[i].zeta;
            const Mat3 ra = axis_angle_matrix(zeta, loop.aux_potential.u());
            out_sq += (ra * psi(loop.aux_potential.a() * q.transpose() * r * ra)).squaredNorm();
            const double d = grad_xi(q.transpose() * r, zeta, loop.aux_potential);
            zeta_sq += d * d;
        }
        rate -= 2.0 * g.k_qtilde * g.k_q * out_sq + g.k_qtilde * g.k_zeta * zeta_sq;
        if (loop.experimental_aux_damping) {
            // indefinite: add the exact power of the extra torque
            std::vector<Mat3> r;
            std::vector<Mat3> q;
            std::vector<double> zeta;
            for (std::size_t i = 0; i < s.aux.size(); ++i) {
                r.push_back(s.agents[i].r.matrix());
                q.push_back(s.aux[i].q.matrix());
                zeta.push_back(s.aux[i].zeta);
            }
            for (int i = 0; i < loop.tree.n_agents(); ++i) {
                rate += 2.0 * s.agents[static_cast<std::size_t>(i)].w.dot(experimental_relative_aux_damping(
                                  i, loop.tree, r, q, zeta, g, loop.aux_potential, true));
            }
        }
        return rate;
    }
    double w_sq = 0.0;
    for (const auto& a : s.agents) {
        w_sq += a.w.squaredNorm();
    }
    double rel_sq = 0.0;
    for (const Edge& e : loop.tree.edges()) {
        rel_sq += (s.agents[static_cast<std::size_t>(e.head)].w - s.agents[static_cast<std::size_t>(e.tail)].w)
                      .squaredNorm();
    }
    return rate - 2.0 * g.k_w * w_sq - 2.0 * g.k_w_bar * rel_sq;
}

double jump_drop_bound(const ClosedLoop& loop)
{
    switch (loop.kind) {
    case ControllerKind::continuous:
        return 0.0;
    case ControllerKind::hybrid:
        return loop.gains.k_r * loop.edge_potential.delta();
    case ControllerKind::velocity_free:
        return std::min(loop.gains.k_r, loop.gains.k_qtilde) *
               std::min(loop.edge_potential.delta(), loop.aux_potential.delta());
    }
    return 0.0;
}

long jump_ceiling(const ClosedLoop& loop, double v0)
{
    const double bound = jump_drop_bound(loop);
    if (bound <= 0.0) {
        return 0;
    }
    return static_cast<long>(std::ceil(v0 / bound));
}

Metrics metrics(const ClosedLoop& loop, const SystemState& s)
{
    Metrics mt;
    for (const auto& e : s.edges) {
        mt.max_edge_dist_sq = std::max(mt.max_edge_dist_sq, dist_id_sq(e.rbar));
    }
    for (const auto& a : s.agents) {
        mt.max_omega = std::max(mt.max_omega, a.w.norm());
    }
    for (std::size_t i = 0; i < s.agents.size(); ++i) {
        for (std::size_t j = i + 1; j < s.agents.size(); ++j) {
            mt.max_pairwise_omega = std::max(mt.max_pairwise_omega, (s.agents[i].w - s.agents[j].w).norm());
        }
    }
    if (loop.kind == ControllerKind::velocity_free) {
        for (std::size_t i = 0; i < s.aux.size(); ++i) {
            mt.max_aux_dist_sq = std::max(mt.max_aux_dist_sq,
                                          dist_id_sq(s.aux[i].q.matrix().transpose() * s.agents[i].r.matrix()));
        }
    }
    return mt;
}

Sample sample(const ClosedLoop& loop, const SystemState& s)
{
    Sample out;
    out.time = s.time;
    for (const auto& e : s.edges) {
        out.edge_dist_sq.push_back(dist_id_sq(e.rbar));
        out.xi.push_back(e.xi);
    }
    for (const auto& a : s.agents) {
        out.omega_norm.push_back(a.w.norm());
    }
    for (const auto& x : s.aux) {
        out.zeta.push_back(x.zeta);
    }
    out.v = lyapunov(loop, s);
    return out;
}

RunRecord run(const ClosedLoop& loop, SystemState initial, const RunOptions& opt)
{
    if (!(opt.h > 0.0) || !(opt.t_end >= 0.0) || opt.sample_stride < 1 || !(opt.epsilon > 0.0) ||
        !(opt.sustain >= 0.0)) {
        throw std::invalid_argument("run: invalid options");
    }
    validate(loop);

    RunRecord rec;
    RunSummary& sum = rec.summary;
    SystemState& s = initial;
    sum.v0 = lyapunov(loop, s);
    sum.jump_ceiling = jump_ceiling(loop, sum.v0);
    const double bound = jump_drop_bound(loop);
    const long guard = 10 * std::max(sum.jump_ceiling, 1L);

    if (opt.record_samples) {
        rec.samples.push_back(sample(loop, s));
    }

    const auto n_steps = static_cast<long>(std::llround(opt.t_end / opt.h));
    const double t0 = s.time.t;
    long steps = 0;
    std::optional<double> window_start;
    double v = sum.v0;

    while (true) {
        if (in_jump_set(loop, s)) {
            JumpRecord jr = jump_event(loop, s);
            const double margin = (jr.v_before - jr.v_after) - bound;
            sum.min_jump_margin = sum.min_jump_margin ? std::min(*sum.min_jump_margin, margin) : margin;
            if (margin < -1e-9) {
                sum.certificate_ok = false;
            }
            sum.jump_events = s.time.j;
            sum.component_resets += static_cast<int>(jr.edges.size() + jr.agents.size());
            if (sum.component_resets > sum.jump_ceiling) {
                sum.certificate_ok = false;
            }
            if (sum.jump_events > guard) {
                throw CertificateViolation("jump guard exceeded: " + std::to_string(sum.jump_events) + " events");
            }
            v = jr.v_after;
            rec.jumps.push_back(std::move(jr));
            if (opt.record_samples) {
                rec.samples.push_back(sample(loop, s));
            }
            continue;
        }

        const Metrics mt = metrics(loop, s);
        if (converged_now(loop, mt, opt.epsilon)) {
            if (!window_start) {
                window_start = s.time.t;
            }
            if (s.time.t - *window_start >= opt.sustain - 1e-9) {
                sum.converged = true;
                sum.t_converge = *window_start;
                if (opt.stop_at_convergence) {
                    break;
                }
            }
        } else {
            window_start.reset();
            sum.converged = false;
            sum.t_converge.reset();
        }
        if (steps >= n_steps) {
            break;
        }

        sum.max_edge_drift = std::max(sum.max_edge_drift, step(loop, s, opt.h));
        ++steps;
        s.time.t = t0 + static_cast<double>(steps) * opt.h;
        const double v_next = lyapunov(loop, s);
        sum.max_flow_increase = std::max(sum.max_flow_increase, v_next - v);
        if (v_next - v > 1e-8) {
            sum.certificate_ok = false;
        }
        v = v_next;
        if (opt.record_samples && steps % opt.sample_stride == 0) {
            rec.samples.push_back(sample(loop, s));
        }
    }

    if (opt.record_samples && (rec.samples.empty() || rec.samples.back().time.t != s.time.t ||
                               rec.samples.back().time.j != s.time.j)) {
        rec.samples.push_back(sample(loop, s));
    }
    sum.t_final = s.time.t;
    sum.v_final = lyapunov(loop, s);
    sum.final_metrics = metrics(loop, s);
    if (sum.converged) {
        sum.diagnostic = "converged";
    } else if (loop.kind == ControllerKind::continuous && stuck_at_undesired(loop, s, sum.final_metrics)) {
        sum.diagnostic = "stuck at undesired equilibrium";
    } else {
        sum.diagnostic = "not converged by t_end";
    }
    rec.final_state = std::move(s);
    return rec;
}

}  // namespace attsync
