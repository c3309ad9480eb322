#include "attsync/gradcheck.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace attsync {

namespace {

enum Item { kGradXi, kGradR, kAuxDescent, kStackedTorque, kItems };

constexpr std::array<const char*, kItems> kNames{"grad_xi", "grad_r_body", "aux_flow_descent",
                                                 "stacked_torque"};

using PointErrors = std::array<double, kItems>;

double rel(double err, double scale)
{
    return err / std::max(1.0, std::abs(scale));
}

PointErrors check_point(const ClosedLoop& loop, const GradcheckOptions& opt, int point)
{
    std::seed_seq seq{opt.seed, static_cast<std::uint64_t>(point)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sign = opt.negate_gradient ? -1.0 : 1.0;
    const double h = opt.step;
    const PotentialParams& p = loop.edge_potential;
    const PotentialParams& ap = loop.aux_potential;
    PointErrors e{};

    const Mat3 r = random_rotation(rng);
    const double xi = angle(rng);

    const double gx = sign * grad_xi(r, xi, p);
    const double fx = (u_value(r, xi + h, p) - u_value(r, xi - h, p)) / (2.0 * h);
    e[kGradXi] = rel(std::abs(gx - fx), gx);

    const Vec3 g = sign * 2.0 * grad_r_body(r, xi, p);
    Vec3 fd;
    for (int c = 0; c < 3; ++c) {
        const Vec3 eta = Vec3::Unit(c) * h;
        fd[c] = (u_value(r * exp_so3(eta).matrix(), xi, p) - u_value(r * exp_so3(-eta).matrix(), xi, p)) /
                (2.0 * h);
    }
    e[kGradR] = rel((g - fd).norm(), g.norm());

    // aux flow with w = 0: d/dt U(Q^T R, zeta) = -2 k_Q ||d||^2 - k_zeta (dU/dzeta)^2
    const Mat3 q = random_rotation(rng);
    const double zeta = angle(rng);
    Gains k = loop.gains;
    k.k_q = k.k_q > 0.0 ? k.k_q : 1.0;
    k.k_zeta = k.k_zeta > 0.0 ? k.k_zeta : 1.0;
    const AuxRate ar = aux_flow(r, q, zeta, k, ap);
    const Vec3 v = vex(q.transpose() * ar.q_dot, 1e-9);
    auto along = [&](double t) {
        const Mat3 qt = (q * exp_so3(t * v).matrix()).transpose() * r;
        return u_value(qt, zeta + t * ar.zeta_dot, ap);
    };
    const double numeric = (along(h) - along(-h)) / (2.0 * h);
    const Mat3 qt = q.transpose() * r;
    const Mat3 ra = axis_angle_matrix(zeta, ap.u());
    const double dz = grad_xi(qt, zeta, ap);
    const double analytic =
        sign * (-2.0 * k.k_q * (ra * psi(ap.a() * qt * ra)).squaredNorm() - k.k_zeta * dz * dz);
    e[kAuxDescent] = rel(std::abs(analytic - numeric), analytic);
    if (numeric > 1e-9 * std::max(1.0, std::abs(analytic))) {
        e[kAuxDescent] = std::max(e[kAuxDescent], std::abs(numeric));
    }

    // stacked torque identity on the loop's tree
    const int n = loop.tree.n_agents();
    std::vector<Mat3> rs;
    std::vector<Vec3> w;
    for (int i = 0; i < n; ++i) {
        rs.push_back(random_rotation(rng));
        w.emplace_back(normal(rng), normal(rng), normal(rng));
    }
    std::vector<Mat3> rbar;
    std::vector<double> xis;
    for (const Edge& ed : loop.tree.edges()) {
        rbar.push_back(rs[static_cast<std::size_t>(ed.tail)].transpose() * rs[static_cast<std::size_t>(ed.head)]);
        xis.push_back(angle(rng));
    }
    Gains sg = loop.gains;
    sg.k_w = sg.k_w > 0.0 ? sg.k_w : 0.1;
    sg.k_w_bar = sg.k_w_bar > 0.0 ? sg.k_w_bar : 0.1;
    const Eigen::VectorXd stacked = stacked_hybrid_torque(loop.tree, rbar, xis, w, sg, p);
    Eigen::VectorXd per_agent(3 * n);
    for (int i = 0; i < n; ++i) {
        per_agent.segment<3>(3 * i) = sign * hybrid_torque(i, loop.tree, rbar, xis, w, sg, p);
    }
    e[kStackedTorque] = rel((per_agent - stacked).norm(), stacked.norm());
    return e;
}

GradcheckReport assemble(const std::vector<PointErrors>& errors, const GradcheckOptions& opt)
{
    GradcheckReport rep;
    rep.passed = true;
    for (int it = 0; it < kItems; ++it) {
        GradcheckItem item;
        item.name = kNames[static_cast<std::size_t>(it)];
        item.points = static_cast<int>(errors.size());
        for (const auto& e : errors) {
            item.max_error = std::max(item.max_error, e[static_cast<std::size_t>(it)]);
        }
        item.passed = std::isfinite(item.max_error) && item.max_error <= opt.threshold;
        rep.passed = rep.passed && item.passed;
        rep.items.push_back(item);
    }
    return rep;
}

void check_options(const GradcheckOptions& opt)
{
    if (opt.points < 0 || !(opt.step > 0.0) || !(opt.threshold > 0.0)) {
        throw std::invalid_argument("gradcheck: invalid options");
    }
}

}  // namespace

std::string GradcheckReport::describe() const
{
    std::ostringstream out;
    out.precision(3);
    for (const auto& item : items) {
        out << (item.passed ? "PASS " : "FAIL ") << item.name << "  points=" << item.points
            << "  max_error=" << std::scientific << item.max_error << std::defaultfloat << '\n';
    }
    out << (passed ? "gradcheck: pass" : "gradcheck: FAIL") << '\n';
    return out.str();
}

GradcheckReport gradcheck_serial(const ClosedLoop& loop, const GradcheckOptions& opt)
{
    check_options(opt);
    std::vector<PointErrors> errors;
    for (int n = 0; n < opt.points; ++n) {
        errors.push_back(check_point(loop, opt, n));
    }
    return assemble(errors, opt);
}

GradcheckReport gradcheck_parallel(const ClosedLoop& loop, const GradcheckOptions& opt)
{
    check_options(opt);
    std::vector<PointErrors> errors(static_cast<std::size_t>(opt.points));
#pragma omp parallel for schedule(static)
    for (int n = 0; n < opt.points; ++n) {
        errors[static_cast<std::size_t>(n)] = check_point(loop, opt, n);
    }
    return assemble(errors, opt);
}

}  // namespace attsync
