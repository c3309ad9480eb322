#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/LU>

#include "attsync/gradcheck.hpp"
#include "attsync/montecarlo.hpp"
#include "fixtures.hpp"

using namespace attsync;
using attsync::testing::kPi;
using attsync::testing::scenario_path;

namespace {

struct Check {
    std::string what;
    bool ok;
};

class Criterion {
public:
    explicit Criterion(int id) : id_(id) {}

    void expect(bool ok, const std::string& what) { checks_.push_back({what, ok}); }

    bool report() const
    {
        const bool ok = std::all_of(checks_.begin(), checks_.end(), [](const Check& c) { return c.ok; });
        std::printf("criterion %d: %s\n", id_, ok ? "PASS" : "FAIL");
        for (const auto& c : checks_) {
            std::printf("    [%s] %s\n", c.ok ? "ok" : "FAIL", c.what.c_str());
        }
        std::fflush(stdout);
        return ok;
    }

private:
    int id_;
    std::vector<Check> checks_;
};

std::string fmt(const char* f, double a, double b = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

Scenario load(const char* name)
{
    return build_scenario(load_config(scenario_path(name)));
}

std::vector<Mat3> edge_mats(const SystemState& s)
{
    std::vector<Mat3> out;
    for (const auto& e : s.edges) {
        out.push_back(e.rbar.matrix());
    }
    return out;
}

void certificate_checks(Criterion& c, const char* label, const ClosedLoop& loop, const RunRecord& rec)
{
    const RunSummary& s = rec.summary;
    c.expect(s.certificate_ok, std::string(label) + ": run certificate ok");
    c.expect(s.max_flow_increase <= 1e-8,
             std::string(label) + fmt(": max per-step flow increase of V = %.3g", s.max_flow_increase));
    const double margin = s.min_jump_margin.value_or(0.0);
    c.expect(margin >= -1e-9, std::string(label) + ": min jump drop minus bound = " + fmt("%.4g", margin));
    for (const auto& jr : rec.jumps) {
        if (jr.v_before - jr.v_after < jump_drop_bound(loop) - 1e-9) {
            c.expect(false, std::string(label) + ": jump at t = " + fmt("%.4g", jr.t) + " dropped too little");
        }
    }
    c.expect(s.jump_events <= s.jump_ceiling, std::string(label) + ": " + std::to_string(s.jump_events) +
                                                  " jump events <= ceiling " + std::to_string(s.jump_ceiling));
}

bool criterion1(Criterion& c)
{
    const Scenario sc = load("paper_fig3_hybrid");
    RunOptions opt = sc.options;
    opt.stop_at_convergence = false;
    const auto t0 = std::chrono::steady_clock::now();
    const RunRecord rec = run(sc.loop, sc.initial, opt);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    c.expect(!rec.jumps.empty() && rec.jumps[0].t == 0.0 && rec.jumps[0].edges.size() == 6,
             "first jump event at t = 0 resets all 6 edges");
    bool all_at = true;
    for (const auto& js : rec.samples) {
        if (js.time.j == 1 && js.time.t == 0.0) {
            for (double x : js.xi) {
                all_at = all_at && std::abs(x - 0.9 * kPi) < 1e-15;
            }
        }
    }
    c.expect(all_at, "xi jumps from 0 to 0.9 pi on every edge");
    const Metrics& m = rec.summary.final_metrics;
    c.expect(m.max_edge_dist_sq <= 1e-4, fmt("max dist_id_sq(Rbar_k) at t = 30 s: %.3g", m.max_edge_dist_sq));
    c.expect(m.max_omega <= 1e-2, fmt("max |w_i| at t = 30 s: %.3g", m.max_omega));
    c.expect(secs < 10.0, fmt("runtime %.2f s (< 10 s)", secs));
    return c.report();
}

bool criterion2(Criterion& c)
{
    const Scenario sc = load("paper_fig3_continuous");
    const std::vector<Mat3> rbar = edge_mats(sc.initial);
    std::vector<Vec3> w;
    for (const auto& a : sc.initial.agents) {
        w.push_back(a.w);
    }
    double max_tau = 0.0;
    for (int i = 0; i < sc.loop.tree.n_agents(); ++i) {
        max_tau = std::max(max_tau, continuous_torque(i, sc.loop.tree, rbar, w, sc.loop.gains,
                                                      sc.loop.edge_potential)
                                        .norm());
    }
    c.expect(max_tau <= 1e-12, fmt("max |tau_i| at t = 0: %.3g", max_tau));

    RunOptions opt = sc.options;
    opt.t_end = 1.0;
    opt.stop_at_convergence = false;
    const RunRecord rec = run(sc.loop, sc.initial, opt);
    double drift = 0.0;
    for (std::size_t i = 0; i < sc.initial.agents.size(); ++i) {
        drift = std::max(drift, (rec.final_state.agents[i].r.matrix() - sc.initial.agents[i].r.matrix()).norm());
        drift = std::max(drift, rec.final_state.agents[i].w.norm());
    }
    c.expect(drift <= 1e-6, fmt("state drift over 1 s: %.3g", drift));

    const Scenario esc = load("paper_fig3_continuous_escape");
    const RunRecord er = run(esc.loop, esc.initial, esc.options);
    c.expect(er.summary.converged, fmt("1e-6 perturbation escapes and converges (t = %.1f s of 200 s)",
                                       er.summary.t_converge.value_or(-1.0)));
    return c.report();
}

bool criterion3(Criterion& c)
{
    using Sig = Vec3 (*)(int, const OrientedTree&, std::span<const Mat3>, std::span<const Mat3>,
                         std::span<const double>, std::span<const Mat3>, std::span<const double>, const Gains&,
                         const PotentialParams&, const PotentialParams&);
    constexpr bool no_omega = std::is_same_v<decltype(&vf_torque), Sig>;
    c.expect(no_omega, "vf_torque signature carries no angular velocity");

    const Scenario sc = load("paper_fig3_vfree");
    RunOptions opt = sc.options;
    opt.stop_at_convergence = false;
    const RunRecord rec = run(sc.loop, sc.initial, opt);
    const Metrics& m = rec.summary.final_metrics;
    c.expect(m.max_edge_dist_sq <= 1e-4, fmt("max dist_id_sq(Rbar_k) at t = 60 s: %.3g", m.max_edge_dist_sq));
    c.expect(m.max_omega <= 1e-2, fmt("max |w_i| at t = 60 s: %.3g", m.max_omega));
    c.expect(m.max_aux_dist_sq <= 1e-4, fmt("max dist_id_sq(Qt_i) at t = 60 s: %.3g", m.max_aux_dist_sq));
    return c.report();
}

bool criterion4(Criterion& c)
{
    const Scenario sc = load("paper_fig3_hybrid");
    const double v0 = lyapunov(sc.loop, sc.initial);
    const double v0_oracle = 6.0 * 2.0 * (5.0 + 8.57);
    c.expect(std::abs(v0 - v0_oracle) < 1e-9, fmt("V(0) = %.6f (oracle %.2f)", v0, v0_oracle));
    const long ceiling = jump_ceiling(sc.loop, v0);
    const long ceiling_oracle = static_cast<long>(std::ceil(v0_oracle / (1.0 * 0.3848)));
    c.expect(ceiling == ceiling_oracle && ceiling == 424, "jump ceiling " + std::to_string(ceiling));

    for (const char* name : {"paper_fig3_hybrid", "paper_fig3_vfree", "paper_fig3_continuous",
                             "paper_fig3_continuous_escape", "remark4_kw_zero", "synthesized_hybrid",
                             "repeated_eigenvalue_hybrid"}) {
        const Scenario s = load(name);
        certificate_checks(c, name, s.loop, run(s.loop, s.initial, s.options));
    }
    const double vf_bound = jump_drop_bound(load("paper_fig3_vfree").loop);
    c.expect(std::abs(vf_bound - std::min(1.0, 2.0) * std::min(0.3848, 0.3848)) < 1e-15,
             fmt("velocity-free jump drop bound %.4f", vf_bound));
    return c.report();
}

bool criterion5(Criterion& c)
{
    const Vec3 l(5.0, 8.57, 12.0);
    const SynthesisBounds b = synthesis_bounds(l, {0.9 * kPi});
    const Vec3 published_u(0.0, 0.6455, 0.7638);
    for (int k = 0; k < 3; ++k) {
        const double d = std::abs(b.alpha[k] - published_u[k]);
        c.expect(d <= 1e-3, "synthesized u_" + std::to_string(k + 1) + " = " + fmt("%.6f vs %.4f", b.alpha[k],
                                                                                    published_u[k]) +
                                " (|diff| " + fmt("%.2g", d) + ")");
    }
    c.expect(1.9251 < b.gamma_bound, fmt("gamma = 1.9251 < bound %.5f", b.gamma_bound));
    c.expect(0.3848 < b.delta_bound(1.9251), fmt("delta = 0.3848 < bound %.5f", b.delta_bound(1.9251)));

    const Condition1Report rep = check_condition1(attsync::testing::published_params());
    c.expect(rep.eigen_points.size() == 3, "three pi-eigenvector rotations evaluated");
    for (const auto& pt : rep.eigen_points) {
        c.expect(pt.margin > 0.0, "pi-rotation about q_" + std::to_string(pt.beta + 1) + ": margin " +
                                      fmt("%.4f", pt.margin));
    }
    c.expect(rep.passed, "switching condition numerically certified");
    return c.report();
}

bool criterion6(Criterion& c)
{
    const PotentialParams p = attsync::testing::published_params();
    const double l1 = 5.0;
    const double l2 = 8.57;
    const double l3 = 12.0;
    const std::vector<std::pair<Mat3, Vec3>> cases{
        {Mat3::Identity(), Vec3(l2 + l3, l1 + l3, l1 + l2)},
        {axis_angle(kPi, Vec3::UnitX()).matrix(), Vec3(-l2 - l3, l1 - l3, l1 - l2)},
        {axis_angle(kPi, Vec3::UnitY()).matrix(), Vec3(l2 - l3, -l1 - l3, l2 - l1)},
        {axis_angle(kPi, Vec3::UnitZ()).matrix(), Vec3(l3 - l2, l3 - l1, -l1 - l2)},
    };
    const char* names[] = {"I", "pi about e1", "pi about e2", "pi about e3"};
    for (std::size_t k = 0; k < cases.size(); ++k) {
        const Vec3 eigs = hessian_block_eigs(cases[k].first, p);
        const double err = (eigs - cases[k].second).cwiseAbs().maxCoeff();
        c.expect(err <= 1e-9, std::string(names[k]) + fmt(": max eigenvalue error %.2g", err));
        if (k > 0) {
            c.expect(eigs.minCoeff() < 0.0, std::string(names[k]) + " has a negative eigenvalue");
        } else {
            c.expect(eigs.minCoeff() > 0.0, "identity block is positive definite");
        }
    }
    return c.report();
}

bool criterion7(Criterion& c)
{
    for (const char* name : {"paper_fig3_hybrid", "paper_fig3_vfree"}) {
        const Scenario sc = load(name);
        GradcheckOptions opt;
        opt.points = 200;
        const GradcheckReport rep = gradcheck_parallel(sc.loop, opt);
        for (const auto& item : rep.items) {
            c.expect(item.passed && item.points == 200,
                     std::string(name) + ": " + item.name + fmt(" max error %.3g", item.max_error));
        }
    }
    return c.report();
}

bool criterion8(Criterion& c)
{
    const Scenario hyb = load("paper_fig3_hybrid");
    const MonteCarloReport hr = montecarlo_parallel(hyb, 100, 1);
    c.expect(hr.converged == 100, "hybrid converged " + std::to_string(hr.converged) + "/100");
    c.expect(hr.certificate_failures == 0 && hr.failures == 0, "hybrid: no certificate or integration failures");

    ScenarioConfig cfg = load_config(scenario_path("paper_fig3_continuous"));
    cfg.t_end = 60.0;
    const Scenario cont = build_scenario(cfg);
    const MonteCarloReport cr = montecarlo_parallel(cont, 100, 1);
    c.expect(cr.converged >= 99, "continuous converged " + std::to_string(cr.converged) + "/100 (t_end 60 s)");
    for (const auto& r : cr.results) {
        if (!r.converged) {
            c.expect(r.near_undesired, "continuous trial " + std::to_string(r.index) +
                                           fmt(" ends %.3g from an undesired equilibrium", r.equilibrium_distance));
        }
    }
    return c.report();
}

bool criterion9(Criterion& c)
{
    std::mt19937_64 rng(9);
    std::normal_distribution<double> nd;
    double hat_err = 0.0;
    double psi_err = 0.0;
    for (int n = 0; n < 1000; ++n) {
        const Vec3 v(nd(rng), nd(rng), nd(rng));
        hat_err = std::max(hat_err, (vex(hat(v)) - v).norm());
        const Mat3 r = random_rotation(rng).matrix();
        const Vec3 x(nd(rng), nd(rng), nd(rng));
        const Mat3 a = attsync::testing::published_params().a();
        psi_err = std::max(psi_err, (psi(r.transpose()) + psi(r)).norm());
        psi_err = std::max(psi_err, std::abs((a * r * hat(x)).trace() - (-2.0 * x.dot(psi(a * r)))));
    }
    c.expect(hat_err <= 1e-15, fmt("vex(hat(v)) = v, max error %.2g", hat_err));
    c.expect(psi_err <= 1e-12, fmt("psi identities, max error %.2g", psi_err));

    bool h_ok = true;
    bool rank_ok = true;
    bool hbar_ok = true;
    for (int n = 2; n <= 10; ++n) {
        for (int rep = 0; rep < 20; ++rep) {
            const OrientedTree tree = attsync::testing::random_tree(n, rng);
            const Eigen::MatrixXd h = incidence(tree);
            h_ok = h_ok && (h.transpose() * Eigen::VectorXd::Ones(n)).norm() == 0.0;
            rank_ok = rank_ok && Eigen::FullPivLU<Eigen::MatrixXd>(h).rank() == n - 1 && tree.n_edges() == n - 1;
            std::vector<Mat3> rots;
            for (int k = 0; k < tree.n_edges(); ++k) {
                rots.push_back(random_rotation(rng).matrix());
            }
            hbar_ok = hbar_ok && Eigen::FullPivLU<Eigen::MatrixXd>(hbar_matrix(tree, rots)).rank() == 3 * (n - 1);
        }
    }
    c.expect(h_ok, "H^T 1 = 0 on 180 random trees");
    c.expect(rank_ok, "rank H = N - 1 and M = N - 1");
    c.expect(hbar_ok, "Hbar has full column rank 3(N - 1)");

    double drift = 0.0;
    for (const char* name : {"paper_fig3_hybrid", "paper_fig3_vfree", "remark4_kw_zero"}) {
        const Scenario sc = load(name);
        const RunRecord rec = run(sc.loop, sc.initial, sc.options);
        drift = std::max(drift, rec.summary.max_edge_drift);
        for (int k = 0; k < sc.loop.tree.n_edges(); ++k) {
            const Edge& e = sc.loop.tree.edge(k);
            const Mat3 expect = edge_relative(rec.final_state.agents[static_cast<std::size_t>(e.head)],
                                              rec.final_state.agents[static_cast<std::size_t>(e.tail)])
                                    .matrix();
            drift = std::max(drift, (rec.final_state.edges[static_cast<std::size_t>(k)].rbar.matrix() - expect).norm());
        }
    }
    c.expect(drift <= 1e-9, fmt("integrated edge attitudes track Hbar^T w to %.2g", drift));
    return c.report();
}

bool criterion10(Criterion& c)
{
    const Scenario sc = load("remark4_kw_zero");
    RunOptions opt = sc.options;
    opt.stop_at_convergence = false;
    const RunRecord rec = run(sc.loop, sc.initial, opt);
    const Metrics& m = rec.summary.final_metrics;
    c.expect(m.max_pairwise_omega <= 1e-3, fmt("max |w_i - w_j| at t = 60 s: %.3g", m.max_pairwise_omega));
    c.expect(m.max_edge_dist_sq <= 1e-4, fmt("max dist_id_sq(Rbar_k) at t = 60 s: %.3g", m.max_edge_dist_sq));
    c.expect(true, fmt("common angular velocity |w_i| = %.4f (need not vanish)", m.max_omega));
    return c.report();
}

}  // namespace

int main()
{
    const std::vector<std::function<bool(Criterion&)>> criteria{criterion1, criterion2, criterion3, criterion4,
                                                                criterion5, criterion6, criterion7, criterion8,
                                                                criterion9, criterion10};
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Criterion c(static_cast<int>(k + 1));
        bool ok = false;
        try {
            ok = criteria[k](c);
        } catch (const std::exception& e) {
            c.expect(false, std::string("exception: ") + e.what());
            ok = c.report();
        }
        failed += ok ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
