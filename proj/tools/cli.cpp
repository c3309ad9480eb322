#include "cli.hpp"

#include <fstream>
#include <iomanip>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "attsync/gradcheck.hpp"
#include "attsync/montecarlo.hpp"
#include "attsync/record_io.hpp"
#include "attsync/scenario.hpp"

namespace attsync::cli {

namespace {

struct Common {
    std::string config;
    std::optional<double> h;
    std::optional<double> t_end;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, Common& c)
{
    sub->add_option("--config", c.config, "scenario file (JSON)")->required();
    sub->add_option("--h", c.h, "integration step [s]");
    sub->add_option("--t-end", c.t_end, "flow horizon [s]");
    sub->add_option("--seed", c.seed, "random seed");
}

ScenarioConfig load(const Common& c)
{
    ScenarioConfig cfg = load_config(c.config);
    if (c.h) {
        cfg.h = *c.h;
    }
    if (c.t_end) {
        cfg.t_end = *c.t_end;
    }
    if (c.seed) {
        cfg.seed = *c.seed;
    }
    return cfg;
}

void print_bounds(std::ostream& out, const std::string& label, const PotentialParams& p)
{
    const Condition1Report rep = check_condition1(p);
    const SynthesisBounds& b = rep.bounds;
    out << std::setprecision(6);
    out << label << '\n';
    out << "  u = [" << p.u().transpose() << "]\n";
    out << "  gamma = " << p.gamma() << " (bound " << b.gamma_bound << ")\n";
    out << "  delta = " << p.delta() << " (bound " << b.delta_bound(p.gamma()) << ")\n";
    out << rep.describe();
}

int simulate(const Common& c, const std::string& out_dir, std::ostream& out, std::ostream& err)
{
    const ScenarioConfig cfg = load(c);
    Scenario sc = build_scenario(cfg);
    RunRecord rec;
    try {
        rec = run(sc.loop, std::move(sc.initial), sc.options);
    } catch (const CertificateViolation& e) {
        err << "certificate violation: " << e.what() << '\n';
        return kCertificate;
    } catch (const std::runtime_error& e) {
        err << "integration failure: " << e.what() << '\n';
        return kCertificate;
    }
    write_run(out_dir, sc.loop, rec, cfg.name);
    out << summary_json(sc.loop, rec, cfg.name);
    if (!rec.summary.certificate_ok) {
        err << "Lyapunov certificate violated\n";
        return kCertificate;
    }
    return rec.summary.converged ? kOk : kNotConverged;
}

int check_params(const Common& c, std::ostream& out)
{
    const ScenarioConfig cfg = load(c);
    const PotentialPair pots = build_potentials(cfg);
    print_bounds(out, "edge potential", pots.edge);
    bool ok = check_condition1(pots.edge).passed;
    if (cfg.controller == ControllerKind::velocity_free) {
        print_bounds(out, "auxiliary potential", pots.aux);
        ok = ok && check_condition1(pots.aux).passed;
    }
    out << (ok ? "verdict: feasible\n" : "verdict: INFEASIBLE\n");
    return ok ? kOk : kNotConverged;
}

int montecarlo(const Common& c, int trials, bool serial, const std::string& report_path, std::ostream& out)
{
    const ScenarioConfig cfg = load(c);
    const Scenario sc = build_scenario(cfg);
    const MonteCarloReport rep =
        serial ? montecarlo_serial(sc, trials, cfg.seed) : montecarlo_parallel(sc, trials, cfg.seed);
    if (!report_path.empty()) {
        std::ofstream f(report_path);
        if (!f) {
            throw std::runtime_error("cannot write " + report_path);
        }
        f << report_json(rep, true);
    }
    out << report_json(rep, false);
    return rep.failures > 0 || rep.certificate_failures > 0 ? kCertificate : kOk;
}

int gradcheck(const Common& c, int points, std::ostream& out)
{
    const ScenarioConfig cfg = load(c);
    const Scenario sc = build_scenario(cfg);
    GradcheckOptions opt;
    opt.points = points;
    opt.seed = cfg.seed;
    const GradcheckReport rep = gradcheck_parallel(sc.loop, opt);
    out << rep.describe();
    return rep.passed ? kOk : kNotConverged;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Distributed attitude synchronization simulator"};
    app.set_help_flag("--help", "print this help");
    app.require_subcommand(1);

    Common sim_c;
    std::string out_dir = "out";
    auto* sim = app.add_subcommand("simulate", "run one scenario and write CSV + summary");
    add_common(sim, sim_c);
    sim->add_option("--out", out_dir, "output directory");

    Common chk_c;
    auto* chk = app.add_subcommand("check-params", "parameter synthesis bounds and switching-condition check");
    add_common(chk, chk_c);

    Common mc_c;
    int trials = 100;
    bool serial = false;
    std::string report_path;
    auto* mc = app.add_subcommand("montecarlo", "random-attitude trials");
    add_common(mc, mc_c);
    mc->add_option("--trials", trials, "number of trials")->check(CLI::NonNegativeNumber);
    mc->add_flag("--serial", serial, "run trials on one thread");
    mc->add_option("--out", report_path, "per-trial JSON report");

    Common gc_c;
    int points = 200;
    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient checks");
    add_common(gc, gc_c);
    gc->add_option("--trials", points, "number of random points")->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*sim) {
            return simulate(sim_c, out_dir, out, err);
        }
        if (*chk) {
            return check_params(chk_c, out);
        }
        if (*mc) {
            return montecarlo(mc_c, trials, serial, report_path, out);
        }
        return gradcheck(gc_c, points, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kCertificate;
    }
}

}  // namespace attsync::cli
