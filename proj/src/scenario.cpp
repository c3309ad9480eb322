#include "attsync/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace attsync {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what)
{
    throw ConfigError(where, what);
}

std::string join(const std::string& path, const std::string& key)
{
    return path.empty() ? key : path + "." + key;
}

std::string index(const std::string& path, std::size_t i)
{
    return path + "[" + std::to_string(i) + "]";
}

/// Object reader that remembers which keys were consumed.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) {
            fail(path_.empty() ? "<root>" : path_, "expected an object");
        }
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& at(const std::string& key)
    {
        if (!j_.contains(key)) {
            fail(join(path_, key), "missing required field");
        }
        used_.insert(key);
        return j_.at(key);
    }

    std::string path(const std::string& key) const { return join(path_, key); }

    double number(const std::string& key)
    {
        const json& v = at(key);
        if (!v.is_number()) {
            fail(path(key), "expected a number");
        }
        return v.get<double>();
    }

    double number_or(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

    std::optional<double> optional_number(const std::string& key)
    {
        return has(key) ? std::optional<double>(number(key)) : std::nullopt;
    }

    bool boolean_or(const std::string& key, bool fallback)
    {
        if (!has(key)) {
            return fallback;
        }
        const json& v = at(key);
        if (!v.is_boolean()) {
            fail(path(key), "expected true or false");
        }
        return v.get<bool>();
    }

    long long integer(const std::string& key)
    {
        const json& v = at(key);
        if (!v.is_number_integer()) {
            fail(path(key), "expected an integer");
        }
        return v.get<long long>();
    }

    std::string string(const std::string& key)
    {
        const json& v = at(key);
        if (!v.is_string()) {
            fail(path(key), "expected a string");
        }
        return v.get<std::string>();
    }

    Section object(const std::string& key) { return Section(at(key), path(key)); }

    void finish() const
    {
        for (const auto& item : j_.items()) {
            if (used_.count(item.key()) == 0) {
                fail(join(path_, item.key()), "unknown field");
            }
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

std::vector<double> numbers(const json& v, const std::string& path)
{
    if (!v.is_array()) {
        fail(path, "expected an array of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) {
            fail(index(path, i), "expected a number");
        }
        out.push_back(v[i].get<double>());
    }
    return out;
}

Vec3 vec3(const json& v, const std::string& path)
{
    const std::vector<double> x = numbers(v, path);
    if (x.size() != 3) {
        fail(path, "expected 3 numbers");
    }
    return {x[0], x[1], x[2]};
}

/// Three row vectors; `columns` stores them as matrix columns.
Mat3 mat3(const json& v, const std::string& path, bool columns)
{
    if (!v.is_array() || v.size() != 3) {
        fail(path, "expected 3 rows of 3 numbers");
    }
    Mat3 m;
    for (std::size_t i = 0; i < 3; ++i) {
        const Vec3 row = vec3(v[i], index(path, i));
        if (columns) {
            m.col(static_cast<Eigen::Index>(i)) = row;
        } else {
            m.row(static_cast<Eigen::Index>(i)) = row;
        }
    }
    return m;
}

json to_json(const Vec3& v)
{
    return json::array({v[0], v[1], v[2]});
}

json to_json(const Mat3& m, bool columns)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < 3; ++i) {
        out.push_back(to_json(columns ? Vec3(m.col(i)) : Vec3(m.row(i).transpose())));
    }
    return out;
}

std::string locate(const std::string& text, std::size_t byte)
{
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t n = 0; n < byte && n < text.size(); ++n) {
        if (text[n] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

void parse_graph(Section sec, ScenarioConfig& cfg)
{
    const long long n = sec.integer("agents");
    if (n < 1 || n > 100000) {
        fail(sec.path("agents"), "agent count must be positive");
    }
    cfg.agents = static_cast<int>(n);
    const json& edges = sec.at("edges");
    if (!edges.is_array()) {
        fail(sec.path("edges"), "expected an array of [head, tail] pairs");
    }
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const std::string p = index(sec.path("edges"), k);
        const json& e = edges[k];
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
            fail(p, "expected [head, tail] with 1-based integer ids");
        }
        cfg.edges.push_back({e[0].get<int>(), e[1].get<int>()});
    }
    sec.finish();
}

void parse_potential(Section sec, ScenarioConfig& cfg)
{
    cfg.a_eigenvalues = vec3(sec.at("a_eigenvalues"), sec.path("a_eigenvalues"));
    if (sec.has("a_eigenvectors")) {
        cfg.a_eigenvectors = mat3(sec.at("a_eigenvectors"), sec.path("a_eigenvectors"), true);
    }
    if (sec.has("u")) {
        cfg.u = vec3(sec.at("u"), sec.path("u"));
    }
    cfg.xi_set = numbers(sec.at("xi_set"), sec.path("xi_set"));
    cfg.gamma = sec.optional_number("gamma");
    cfg.gamma_fraction = sec.optional_number("gamma_fraction");
    cfg.delta = sec.optional_number("delta");
    cfg.delta_fraction = sec.optional_number("delta_fraction");
    if (sec.has("pi_set")) {
        cfg.pi_set = numbers(sec.at("pi_set"), sec.path("pi_set"));
    }
    cfg.delta_q = sec.optional_number("delta_q");
    sec.finish();
}

void parse_gains(Section sec, ScenarioConfig& cfg)
{
    Gains& g = cfg.gains;
    g.k_r = sec.number_or("k_r", g.k_r);
    g.k_w = sec.number_or("k_w", g.k_w);
    g.k_w_bar = sec.number_or("k_w_bar", g.k_w_bar);
    g.k_xi = sec.number_or("k_xi", g.k_xi);
    g.k_q = sec.number_or("k_q", g.k_q);
    g.k_qtilde = sec.number_or("k_qtilde", g.k_qtilde);
    g.k_zeta = sec.number_or("k_zeta", g.k_zeta);
    sec.finish();
}

void parse_initial(Section sec, ScenarioConfig& cfg)
{
    const json& agents = sec.at("agents");
    if (!agents.is_array()) {
        fail(sec.path("agents"), "expected an array");
    }
    for (std::size_t i = 0; i < agents.size(); ++i) {
        Section a(agents[i], index(sec.path("agents"), i));
        AgentInit init;
        init.axis = vec3(a.at("axis"), a.path("axis"));
        init.angle = a.number("angle");
        if (a.has("omega")) {
            init.omega = vec3(a.at("omega"), a.path("omega"));
        }
        if (a.has("inertia")) {
            init.inertia = mat3(a.at("inertia"), a.path("inertia"), false);
        }
        a.finish();
        cfg.initial_agents.push_back(init);
    }
    if (sec.has("xi")) {
        cfg.initial_xi = numbers(sec.at("xi"), sec.path("xi"));
    }
    if (sec.has("aux")) {
        const json& aux = sec.at("aux");
        if (!aux.is_array()) {
            fail(sec.path("aux"), "expected an array");
        }
        std::vector<AuxInit> out;
        for (std::size_t i = 0; i < aux.size(); ++i) {
            Section a(aux[i], index(sec.path("aux"), i));
            AuxInit init;
            init.axis = vec3(a.at("axis"), a.path("axis"));
            init.angle = a.number("angle");
            init.zeta = a.number_or("zeta", 0.0);
            a.finish();
            out.push_back(init);
        }
        cfg.initial_aux = std::move(out);
    }
    sec.finish();
}

void parse_integration(Section sec, ScenarioConfig& cfg)
{
    cfg.h = sec.number_or("h", cfg.h);
    cfg.t_end = sec.number_or("t_end", cfg.t_end);
    if (sec.has("sample_stride")) {
        cfg.sample_stride = static_cast<int>(sec.integer("sample_stride"));
    }
    if (sec.has("seed")) {
        const long long seed = sec.integer("seed");
        if (seed < 0) {
            fail(sec.path("seed"), "seed must be nonnegative");
        }
        cfg.seed = static_cast<std::uint64_t>(seed);
    }
    cfg.epsilon = sec.number_or("epsilon", cfg.epsilon);
    cfg.sustain = sec.number_or("sustain", cfg.sustain);
    cfg.stop_at_convergence = sec.boolean_or("stop_at_convergence", cfg.stop_at_convergence);
    cfg.perturbation = sec.number_or("perturbation", cfg.perturbation);
    sec.finish();
}

Rotation rotation_from(const Vec3& axis, double angle, const std::string& path)
{
    const double n = axis.norm();
    if (!(n > 0.0) || !std::isfinite(n) || !std::isfinite(angle)) {
        fail(path, "axis must be a finite nonzero vector and angle finite");
    }
    return axis_angle(angle, axis / n);
}

}  // namespace

ScenarioConfig parse_config(const std::string& text)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(locate(text, e.byte == 0 ? 0 : e.byte - 1), "malformed JSON");
    }

    ScenarioConfig cfg;
    Section sec(root, "");
    if (sec.has("name")) {
        cfg.name = sec.string("name");
    }
    try {
        cfg.controller = parse_controller_kind(sec.string("controller"));
    } catch (const std::invalid_argument& e) {
        fail("controller", e.what());
    }
    parse_graph(sec.object("graph"), cfg);
    parse_potential(sec.object("potential"), cfg);
    if (sec.has("gains")) {
        parse_gains(sec.object("gains"), cfg);
    }
    if (sec.has("flags")) {
        Section flags = sec.object("flags");
        cfg.time_varying_consensus = flags.boolean_or("time_varying_consensus", false);
        cfg.experimental_aux_damping = flags.boolean_or("experimental_aux_damping", false);
        flags.finish();
    }
    parse_initial(sec.object("initial"), cfg);
    if (sec.has("integration")) {
        parse_integration(sec.object("integration"), cfg);
    }
    sec.finish();
    return cfg;
}

ScenarioConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        fail(path, "cannot open file");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const ScenarioConfig& cfg)
{
    json root;
    if (!cfg.name.empty()) {
        root["name"] = cfg.name;
    }
    root["controller"] = std::string(to_string(cfg.controller));

    json edges = json::array();
    for (const auto& e : cfg.edges) {
        edges.push_back({e[0], e[1]});
    }
    root["graph"] = {{"agents", cfg.agents}, {"edges", edges}};

    json pot;
    pot["a_eigenvalues"] = to_json(cfg.a_eigenvalues);
    if (cfg.a_eigenvectors) {
        pot["a_eigenvectors"] = to_json(*cfg.a_eigenvectors, true);
    }
    if (cfg.u) {
        pot["u"] = to_json(*cfg.u);
    }
    pot["xi_set"] = cfg.xi_set;
    auto put = [](json& j, const char* key, const std::optional<double>& v) {
        if (v) {
            j[key] = *v;
        }
    };
    put(pot, "gamma", cfg.gamma);
    put(pot, "gamma_fraction", cfg.gamma_fraction);
    put(pot, "delta", cfg.delta);
    put(pot, "delta_fraction", cfg.delta_fraction);
    if (cfg.pi_set) {
        pot["pi_set"] = *cfg.pi_set;
    }
    put(pot, "delta_q", cfg.delta_q);
    root["potential"] = pot;

    const Gains& g = cfg.gains;
    root["gains"] = {{"k_r", g.k_r},       {"k_w", g.k_w},   {"k_w_bar", g.k_w_bar}, {"k_xi", g.k_xi},
                     {"k_q", g.k_q},       {"k_qtilde", g.k_qtilde}, {"k_zeta", g.k_zeta}};
    root["flags"] = {{"time_varying_consensus", cfg.time_varying_consensus},
                     {"experimental_aux_damping", cfg.experimental_aux_damping}};

    json agents = json::array();
    for (const auto& a : cfg.initial_agents) {
        json j = {{"axis", to_json(a.axis)}, {"angle", a.angle}, {"omega", to_json(a.omega)}};
        if (a.inertia) {
            j["inertia"] = to_json(*a.inertia, false);
        }
        agents.push_back(j);
    }
    json initial = {{"agents", agents}};
    if (cfg.initial_xi) {
        initial["xi"] = *cfg.initial_xi;
    }
    if (cfg.initial_aux) {
        json aux = json::array();
        for (const auto& a : *cfg.initial_aux) {
            aux.push_back({{"axis", to_json(a.axis)}, {"angle", a.angle}, {"zeta", a.zeta}});
        }
        initial["aux"] = aux;
    }
    root["initial"] = initial;

    root["integration"] = {{"h", cfg.h},
                           {"t_end", cfg.t_end},
                           {"sample_stride", cfg.sample_stride},
                           {"seed", cfg.seed},
                           {"epsilon", cfg.epsilon},
                           {"sustain", cfg.sustain},
                           {"stop_at_convergence", cfg.stop_at_convergence},
                           {"perturbation", cfg.perturbation}};
    return root.dump(2) + "\n";
}

PotentialPair build_potentials(const ScenarioConfig& cfg)
{
    const Mat3 q = cfg.a_eigenvectors.value_or(Mat3::Identity());
    if ((q.transpose() * q - Mat3::Identity()).norm() > 1e-9) {
        fail("potential.a_eigenvectors", "eigenvectors must be orthonormal");
    }
    SynthesisBounds bounds{};
    try {
        bounds = synthesis_bounds(cfg.a_eigenvalues, cfg.xi_set);
    } catch (const std::invalid_argument& e) {
        fail("potential.a_eigenvalues", e.what());
    }
    Mat3 a = q * cfg.a_eigenvalues.asDiagonal() * q.transpose();
    a = 0.5 * (a + a.transpose());

    Vec3 u = q * bounds.alpha;
    if (cfg.u) {
        u = *cfg.u;
        if (!u.allFinite() || std::abs(u.norm() - 1.0) > 1e-3) {
            fail("potential.u", "u must have unit length (within 1e-3)");
        }
    }
    u.normalize();

    if (cfg.gamma.has_value() == cfg.gamma_fraction.has_value()) {
        fail("potential.gamma", "give exactly one of gamma or gamma_fraction");
    }
    if (cfg.delta.has_value() == cfg.delta_fraction.has_value()) {
        fail("potential.delta", "give exactly one of delta or delta_fraction");
    }
    const double gamma = cfg.gamma ? *cfg.gamma : *cfg.gamma_fraction * bounds.gamma_bound;
    const double delta = cfg.delta ? *cfg.delta : *cfg.delta_fraction * bounds.delta_bound(gamma);

    try {
        PotentialParams edge = PotentialParams::make(a, u, gamma, delta, cfg.xi_set);
        PotentialParams aux =
            PotentialParams::make(a, u, gamma, cfg.delta_q.value_or(delta), cfg.pi_set.value_or(cfg.xi_set));
        return {std::move(edge), std::move(aux)};
    } catch (const std::invalid_argument& e) {
        fail("potential", e.what());
    }
}

OrientedTree build_graph(const ScenarioConfig& cfg)
{
    std::vector<Edge> edges;
    for (const auto& e : cfg.edges) {
        edges.push_back({e[0] - 1, e[1] - 1});
    }
    try {
        return build_tree(cfg.agents, edges);
    } catch (const TopologyError& e) {
        fail("graph", e.what());
    }
}

void perturb_attitudes(SystemState& s, double magnitude, std::uint64_t seed)
{
    std::seed_seq seq{seed, std::uint64_t{0x70657274}};
    std::mt19937_64 rng(seq);
    for (auto& a : s.agents) {
        const Vec3 n = random_unit_vector(rng);
        a.r = project_to_rotation(a.r.matrix() * exp_so3(magnitude * n).matrix());
    }
}

Scenario build_scenario(const ScenarioConfig& cfg)
{
    OrientedTree tree = build_graph(cfg);
    PotentialPair pots = build_potentials(cfg);
    if (cfg.controller == ControllerKind::continuous) {
        const Vec3& l = pots.edge.eigenvalues();
        if (std::abs(l[0] - l[1]) <= 1e-12 * l[1]) {
            fail("potential.a_eigenvalues", "the continuous law needs three distinct eigenvalues");
        }
    }

    ClosedLoop loop{std::move(tree),          cfg.controller,
                    cfg.gains,                std::move(pots.edge),
                    std::move(pots.aux),      cfg.time_varying_consensus,
                    cfg.experimental_aux_damping};
    try {
        validate(loop);
    } catch (const std::invalid_argument& e) {
        fail("gains", e.what());
    }

    const auto n = static_cast<std::size_t>(cfg.agents);
    if (cfg.initial_agents.size() != n) {
        fail("initial.agents", "expected " + std::to_string(n) + " entries");
    }
    std::vector<AgentState> agents;
    for (std::size_t i = 0; i < n; ++i) {
        const AgentInit& a = cfg.initial_agents[i];
        const std::string p = index("initial.agents", i);
        AgentState s;
        s.r = rotation_from(a.axis, a.angle, p);
        s.w = a.omega;
        s.inertia = a.inertia.value_or(default_inertia());
        try {
            validate_inertia(s.inertia);
        } catch (const std::invalid_argument& e) {
            fail(p + ".inertia", e.what());
        }
        if (!s.w.allFinite()) {
            fail(p + ".omega", "must be finite");
        }
        agents.push_back(s);
    }

    std::vector<double> xi = cfg.initial_xi.value_or(std::vector<double>{});
    if (!xi.empty() && xi.size() != static_cast<std::size_t>(loop.tree.n_edges())) {
        fail("initial.xi", "expected one value per edge");
    }

    std::vector<AuxState> aux;
    if (cfg.initial_aux) {
        if (cfg.controller != ControllerKind::velocity_free) {
            fail("initial.aux", "auxiliary states apply to the velocity-free law only");
        }
        if (cfg.initial_aux->size() != n) {
            fail("initial.aux", "expected " + std::to_string(n) + " entries");
        }
        for (std::size_t i = 0; i < n; ++i) {
            const AuxInit& a = (*cfg.initial_aux)[i];
            aux.push_back({rotation_from(a.axis, a.angle, index("initial.aux", i)), a.zeta});
        }
    }

    if (!(cfg.h > 0.0) || !std::isfinite(cfg.h)) {
        fail("integration.h", "must be positive");
    }
    if (!(cfg.t_end >= 0.0) || !std::isfinite(cfg.t_end)) {
        fail("integration.t_end", "must be nonnegative");
    }
    if (cfg.sample_stride < 1) {
        fail("integration.sample_stride", "must be at least 1");
    }
    if (!(cfg.epsilon > 0.0)) {
        fail("integration.epsilon", "must be positive");
    }
    if (!(cfg.sustain >= 0.0)) {
        fail("integration.sustain", "must be nonnegative");
    }
    if (!(cfg.perturbation >= 0.0) || !std::isfinite(cfg.perturbation)) {
        fail("integration.perturbation", "must be nonnegative");
    }

    SystemState initial = make_state(loop, std::move(agents), std::move(xi), std::move(aux));
    if (cfg.perturbation > 0.0) {
        perturb_attitudes(initial, cfg.perturbation, cfg.seed);
        for (std::size_t k = 0; k < initial.edges.size(); ++k) {
            const Edge& e = loop.tree.edge(static_cast<int>(k));
            initial.edges[k].rbar = edge_relative(initial.agents[static_cast<std::size_t>(e.head)],
                                                  initial.agents[static_cast<std::size_t>(e.tail)]);
        }
    }

    RunOptions opt;
    opt.h = cfg.h;
    opt.t_end = cfg.t_end;
    opt.sample_stride = cfg.sample_stride;
    opt.epsilon = cfg.epsilon;
    opt.sustain = cfg.sustain;
    opt.stop_at_convergence = cfg.stop_at_convergence;
    return {std::move(loop), std::move(initial), opt};
}

}  // namespace attsync
