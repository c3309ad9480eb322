#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "attsync/record_io.hpp"
#include "attsync/scenario.hpp"
#include "fixtures.hpp"

using namespace attsync;
using attsync::testing::kPi;
using attsync::testing::scenario_path;

namespace {

const char* kBundled[] = {"paper_fig3_hybrid",        "paper_fig3_continuous", "paper_fig3_continuous_escape",
                          "paper_fig3_vfree",         "remark4_kw_zero",       "synthesized_hybrid",
                          "repeated_eigenvalue_hybrid"};

const char* kMinimal = R"({
  "controller": "hybrid",
  "graph": {"agents": 2, "edges": [[1, 2]]},
  "potential": {"a_eigenvalues": [5, 8.57, 12], "xi_set": [2.8], "gamma_fraction": 0.9, "delta_fraction": 0.9},
  "gains": {"k_w": 0.1, "k_xi": 20},
  "initial": {"agents": [{"axis": [0, 0, 1], "angle": 1.0}, {"axis": [1, 0, 0], "angle": -0.5}]}
})";

std::string read_file(const std::string& path)
{
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string where_of(const std::string& text)
{
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.where();
    }
    return "accepted";
}

std::string build_error(const ScenarioConfig& cfg)
{
    try {
        build_scenario(cfg);
    } catch (const ConfigError& e) {
        return e.where();
    }
    return "accepted";
}

nlohmann::json minimal_json()
{
    return nlohmann::json::parse(kMinimal);
}

}  // namespace

TEST(ParseConfig, MinimalDefaults)
{
    const ScenarioConfig cfg = parse_config(kMinimal);
    EXPECT_EQ(cfg.controller, ControllerKind::hybrid);
    EXPECT_EQ(cfg.agents, 2);
    ASSERT_EQ(cfg.edges.size(), 1u);
    EXPECT_EQ(cfg.edges[0], (std::array<int, 2>{1, 2}));
    EXPECT_FALSE(cfg.u.has_value());
    EXPECT_EQ(cfg.gains.k_r, 1.0);
    EXPECT_EQ(cfg.h, 1e-3);
    EXPECT_EQ(cfg.epsilon, 1e-2);
    EXPECT_EQ(cfg.perturbation, 0.0);
    EXPECT_FALSE(cfg.initial_agents[0].inertia.has_value());
}

TEST(ParseConfig, SyntaxErrorReportsLineAndColumn)
{
    const std::string where = where_of("{\n  \"controller\": \"hybrid\",\n  \"graph\": {\"agents\": 2,,}\n}");
    EXPECT_EQ(where.rfind("line 3, column", 0), 0u) << where;
}

TEST(ParseConfig, RejectsUnknownAndMistypedFields)
{
    auto j = minimal_json();
    j["gains"]["k_omega"] = 0.1;
    EXPECT_EQ(where_of(j.dump()), "gains.k_omega");

    j = minimal_json();
    j["graph"]["agents"] = "seven";
    EXPECT_EQ(where_of(j.dump()), "graph.agents");

    j = minimal_json();
    j.erase("initial");
    EXPECT_EQ(where_of(j.dump()), "initial");

    j = minimal_json();
    j["controller"] = "pid";
    EXPECT_EQ(where_of(j.dump()), "controller");

    j = minimal_json();
    j["graph"]["edges"][0] = {1, 2, 3};
    EXPECT_EQ(where_of(j.dump()), "graph.edges[0]");

    j = minimal_json();
    j["initial"]["agents"][1]["spin"] = 1.0;
    EXPECT_EQ(where_of(j.dump()), "initial.agents[1].spin");
}

TEST(ParseConfig, RoundTripsBundledScenarios)
{
    for (const char* name : kBundled) {
        const ScenarioConfig a = load_config(scenario_path(name));
        const ScenarioConfig b = parse_config(serialize_config(a));
        EXPECT_EQ(a, b) << name;
        EXPECT_EQ(serialize_config(a), serialize_config(b)) << name;
    }
}

TEST(ParseConfig, RoundTripsEveryOptionalField)
{
    auto j = minimal_json();
    j["name"] = "full";
    j["potential"]["a_eigenvectors"] = {{0, 1, 0}, {1, 0, 0}, {0, 0, -1}};
    j["potential"]["u"] = {0, 0.6, 0.8};
    j["potential"]["pi_set"] = {2.0, -2.0};
    j["potential"]["delta_q"] = 0.01;
    j["flags"] = {{"time_varying_consensus", true}, {"experimental_aux_damping", true}};
    j["initial"]["agents"][0]["omega"] = {0.1, 0.2, 0.3};
    j["initial"]["agents"][0]["inertia"] = {{1, 0, 0}, {0, 2, 0}, {0, 0, 3}};
    j["initial"]["xi"] = {0.25};
    j["initial"]["aux"] = {{{"axis", {0, 1, 0}}, {"angle", 0.3}, {"zeta", 0.1}},
                           {{"axis", {0, 0, 1}}, {"angle", -0.3}, {"zeta", 0.0}}};
    j["integration"] = {{"h", 5e-4}, {"t_end", 12.5}, {"sample_stride", 3}, {"seed", 99},
                        {"epsilon", 0.02}, {"sustain", 0.5}, {"stop_at_convergence", false},
                        {"perturbation", 1e-6}};
    const ScenarioConfig a = parse_config(j.dump());
    EXPECT_EQ(a.seed, 99u);
    EXPECT_TRUE(a.a_eigenvectors.has_value());
    EXPECT_EQ(parse_config(serialize_config(a)), a);
}

TEST(LoadConfig, MissingFileIsConfigError)
{
    EXPECT_THROW(load_config("/nonexistent/scenario.json"), ConfigError);
}

TEST(BuildScenario, BundledScenariosValidate)
{
    for (const char* name : kBundled) {
        const ScenarioConfig cfg = load_config(scenario_path(name));
        EXPECT_NO_THROW(build_scenario(cfg)) << name;
        EXPECT_EQ(cfg.name, name);
    }
}

TEST(BuildScenario, PublishedHybridMatchesFixtures)
{
    const Scenario sc = build_scenario(load_config(scenario_path("paper_fig3_hybrid")));
    const PotentialParams ref = attsync::testing::published_params();
    EXPECT_LT((sc.loop.edge_potential.a() - ref.a()).norm(), 1e-15);
    EXPECT_LT((sc.loop.edge_potential.u() - ref.u()).norm(), 1e-15);
    EXPECT_EQ(sc.loop.edge_potential.gamma(), 1.9251);
    EXPECT_EQ(sc.loop.edge_potential.delta(), 0.3848);
    EXPECT_EQ(sc.loop.gains, attsync::testing::published_hybrid_gains());
    EXPECT_EQ(sc.loop.tree.edges(), attsync::testing::seven_agent_tree().edges());
    ASSERT_EQ(sc.initial.agents.size(), 7u);
    const auto ref_agents = attsync::testing::alternating_agents();
    for (std::size_t i = 0; i < 7; ++i) {
        EXPECT_LT((sc.initial.agents[i].r.matrix() - ref_agents[i].r.matrix()).norm(), 1e-15);
        EXPECT_EQ(sc.initial.agents[i].inertia, default_inertia());
    }
    EXPECT_EQ(sc.options.t_end, 30.0);
}

TEST(BuildScenario, VelocityFreeAuxiliaryStates)
{
    const Scenario sc = build_scenario(load_config(scenario_path("paper_fig3_vfree")));
    ASSERT_EQ(sc.initial.aux.size(), 7u);
    for (std::size_t i = 0; i < 7; ++i) {
        const Mat3 qt = sc.initial.aux[i].q.matrix().transpose() * sc.initial.agents[i].r.matrix();
        EXPECT_NEAR(dist_id_sq(qt), 1.0, 1e-12);
    }
    EXPECT_EQ(sc.loop.aux_potential.delta(), 0.3848);
}

TEST(BuildScenario, ZeroDeltaIsRejected)
{
    ScenarioConfig cfg = load_config(scenario_path("paper_fig3_hybrid"));
    cfg.delta = 0.0;
    EXPECT_EQ(build_error(cfg), "potential");
}

TEST(BuildScenario, ValidationErrors)
{
    const ScenarioConfig base = load_config(scenario_path("paper_fig3_hybrid"));

    ScenarioConfig cfg = base;
    cfg.gamma_fraction = 0.5;
    EXPECT_EQ(build_error(cfg), "potential.gamma");

    cfg = base;
    cfg.u = Vec3(0, 0.7, 0.8);
    EXPECT_EQ(build_error(cfg), "potential.u");

    cfg = base;
    cfg.edges.push_back({7, 1});
    EXPECT_EQ(build_error(cfg), "graph");

    cfg = base;
    cfg.gains.k_xi = 0.0;
    EXPECT_EQ(build_error(cfg), "gains");

    cfg = base;
    cfg.initial_agents.pop_back();
    EXPECT_EQ(build_error(cfg), "initial.agents");

    cfg = base;
    cfg.initial_xi = std::vector<double>{0.0};
    EXPECT_EQ(build_error(cfg), "initial.xi");

    cfg = base;
    cfg.initial_aux = std::vector<AuxInit>(7);
    EXPECT_EQ(build_error(cfg), "initial.aux");

    cfg = base;
    cfg.h = -1.0;
    EXPECT_EQ(build_error(cfg), "integration.h");

    cfg = base;
    cfg.initial_agents[0].inertia = Mat3(Vec3(1, -1, 1).asDiagonal());
    EXPECT_EQ(build_error(cfg), "initial.agents[0].inertia");

    cfg = base;
    cfg.controller = ControllerKind::continuous;
    cfg.a_eigenvalues = Vec3(1, 1, 2);
    EXPECT_EQ(build_error(cfg), "potential.a_eigenvalues");
    cfg.controller = ControllerKind::hybrid;
    EXPECT_EQ(build_error(cfg), "accepted");
}

TEST(BuildPotentials, NormalizesNearlyUnitU)
{
    const ScenarioConfig cfg = load_config(scenario_path("paper_fig3_hybrid"));
    ASSERT_TRUE(cfg.u.has_value());
    EXPECT_GT(std::abs(cfg.u->norm() - 1.0), 1e-9);
    const PotentialPair pots = build_potentials(cfg);
    EXPECT_NEAR(pots.edge.u().norm(), 1.0, 1e-15);
    EXPECT_LT((pots.edge.u() - cfg.u->normalized()).norm(), 1e-15);
}

TEST(BuildPotentials, FractionsUseSynthesisBounds)
{
    const ScenarioConfig cfg = load_config(scenario_path("synthesized_hybrid"));
    const PotentialPair pots = build_potentials(cfg);
    const SynthesisBounds b = synthesis_bounds(Vec3(5, 8.57, 12), {0.9 * kPi});
    EXPECT_NEAR(pots.edge.gamma(), 0.95 * b.gamma_bound, 1e-14);
    EXPECT_NEAR(pots.edge.delta(), 0.95 * b.delta_bound(pots.edge.gamma()), 1e-14);
    EXPECT_LT((pots.edge.u() - b.alpha).norm(), 1e-12);
    EXPECT_TRUE(check_condition1(pots.edge).passed);
}

TEST(BuildPotentials, AuxiliaryDefaultsToEdgeSettings)
{
    ScenarioConfig cfg = load_config(scenario_path("paper_fig3_hybrid"));
    PotentialPair pots = build_potentials(cfg);
    EXPECT_EQ(pots.aux.delta(), pots.edge.delta());
    EXPECT_EQ(pots.aux.switch_set(), pots.edge.switch_set());
    cfg.delta_q = 0.2;
    cfg.pi_set = std::vector<double>{2.0};
    pots = build_potentials(cfg);
    EXPECT_EQ(pots.aux.delta(), 0.2);
    EXPECT_EQ(pots.aux.switch_set(), std::vector<double>{2.0});
    EXPECT_EQ(pots.edge.delta(), 0.3848);
}

TEST(Perturbation, SeededAndSized)
{
    const Scenario sc = build_scenario(load_config(scenario_path("paper_fig3_continuous_escape")));
    const Scenario plain = build_scenario(load_config(scenario_path("paper_fig3_continuous")));
    for (std::size_t i = 0; i < 7; ++i) {
        const Mat3 d = plain.initial.agents[i].r.matrix().transpose() * sc.initial.agents[i].r.matrix();
        const double angle = std::acos(std::clamp((d.trace() - 1.0) / 2.0, -1.0, 1.0));
        EXPECT_NEAR(angle, 1e-6, 1e-9);
    }
    SystemState a = plain.initial;
    SystemState b = plain.initial;
    perturb_attitudes(a, 1e-3, 5);
    perturb_attitudes(b, 1e-3, 5);
    EXPECT_EQ(a.agents[2].r.matrix(), b.agents[2].r.matrix());
    for (std::size_t k = 0; k < sc.initial.edges.size(); ++k) {
        const Edge& e = sc.loop.tree.edge(static_cast<int>(k));
        const Mat3 expected = edge_relative(sc.initial.agents[static_cast<std::size_t>(e.head)],
                                            sc.initial.agents[static_cast<std::size_t>(e.tail)])
                                  .matrix();
        EXPECT_LT((sc.initial.edges[k].rbar.matrix() - expected).norm(), 1e-15);
    }
}

TEST(RecordIo, TimeseriesColumns)
{
    Scenario sc = build_scenario(load_config(scenario_path("paper_fig3_vfree")));
    sc.options.t_end = 0.05;
    const RunRecord rec = run(sc.loop, sc.initial, sc.options);
    std::ostringstream out;
    write_timeseries_csv(out, sc.loop, rec);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header.rfind("t,j,dist_sq_edge_1,", 0), 0u);
    EXPECT_NE(header.find("omega_norm_7,xi_1"), std::string::npos);
    EXPECT_NE(header.find("xi_6,zeta_1"), std::string::npos);
    EXPECT_TRUE(header.ends_with("zeta_7,V"));
    const auto columns = std::count(header.begin(), header.end(), ',') + 1;
    EXPECT_EQ(columns, 2 + 6 + 7 + 6 + 7 + 1);
    int rows = 0;
    for (std::string line; std::getline(in, line);) {
        EXPECT_EQ(std::count(line.begin(), line.end(), ',') + 1, columns);
        ++rows;
    }
    EXPECT_EQ(rows, static_cast<int>(rec.samples.size()));
}

TEST(RecordIo, HybridHasNoZetaColumns)
{
    Scenario sc = build_scenario(load_config(scenario_path("paper_fig3_hybrid")));
    sc.options.t_end = 0.01;
    const RunRecord rec = run(sc.loop, sc.initial, sc.options);
    std::ostringstream out;
    write_timeseries_csv(out, sc.loop, rec);
    EXPECT_EQ(out.str().find("zeta"), std::string::npos);
    std::ostringstream jumps;
    write_jumps_csv(jumps, rec);
    std::istringstream in(jumps.str());
    std::string header;
    std::string row;
    std::getline(in, header);
    std::getline(in, row);
    EXPECT_EQ(header, "t,j,edges,agents,v_before,v_after,drop");
    EXPECT_EQ(row.rfind("0,1,1;2;3;4;5;6,,", 0), 0u) << row;
}

TEST(RecordIo, SummaryDocument)
{
    Scenario sc = build_scenario(load_config(scenario_path("paper_fig3_hybrid")));
    const RunRecord rec = run(sc.loop, sc.initial, sc.options);
    const auto j = nlohmann::json::parse(summary_json(sc.loop, rec, "paper_fig3_hybrid"));
    EXPECT_EQ(j["scenario"], "paper_fig3_hybrid");
    EXPECT_EQ(j["controller"], "hybrid");
    EXPECT_EQ(j["converged"], true);
    EXPECT_EQ(j["jumps"], 6);
    EXPECT_EQ(j["jump_events"], 1);
    EXPECT_EQ(j["jump_ceiling"], 424);
    EXPECT_TRUE(j["t_converge"].is_number());
    EXPECT_TRUE(j["final"].contains("max_edge_dist_sq"));
    EXPECT_EQ(j["certificate"]["ok"], true);

    const auto dir = std::filesystem::temp_directory_path() / "attsync_record_io_test";
    std::filesystem::remove_all(dir);
    write_run(dir.string(), sc.loop, rec, "paper_fig3_hybrid");
    for (const char* f : {"timeseries.csv", "jumps.csv", "summary.json"}) {
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    }
    EXPECT_EQ(nlohmann::json::parse(read_file((dir / "summary.json").string())), j);
    std::filesystem::remove_all(dir);
}
