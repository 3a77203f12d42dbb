#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

namespace phaselattice::cli {

const std::map<std::string, double>& tolerance_registry()
{
    static const std::map<std::string, double> reg{
        {"orthonormality", 1e-12}, {"completeness_residual", 1e-12}, {"idempotency", 1e-10},
        {"exclusivity", 1e-10},    {"commutator", 1e-12},            {"spectral", 1e-10},
        {"mean_x", 1e-10},         {"var_x_k1", 1e-6},               {"completeness", 0.01},
        {"closeness_rel", 0.2},    {"probability", 0.02},            {"moments_rel", 1e-3},
        {"shear", 1e-6},           {"offdiagonal", 1e-12},           {"sum_rule", 1e-8},
    };
    return reg;
}

const json& ExperimentConfig::section(const std::string& name) const
{
    static const json empty = json::object();
    const auto it = sections.find(name);
    return it == sections.end() ? empty : *it;
}

namespace {

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed)
{
    if (!obj.is_object())
        throw ConfigError(where + " must be an object");
    for (const auto& [k, v] : obj.items())
        if (!allowed.count(k))
            throw ConfigError("unknown key '" + k + "' in " + where);
}

double number(const json& obj, const std::string& key, const std::string& where, std::optional<double> fallback)
{
    const auto it = obj.find(key);
    if (it == obj.end()) {
        if (!fallback)
            throw ConfigError("missing '" + key + "' in " + where);
        return *fallback;
    }
    if (!it->is_number())
        throw ConfigError("'" + key + "' in " + where + " must be a number");
    const double v = it->get<double>();
    if (!std::isfinite(v))
        throw ConfigError("'" + key + "' in " + where + " must be finite");
    return v;
}

int integer(const json& obj, const std::string& key, const std::string& where, std::optional<int> fallback)
{
    const auto it = obj.find(key);
    if (it == obj.end()) {
        if (!fallback)
            throw ConfigError("missing '" + key + "' in " + where);
        return *fallback;
    }
    if (!it->is_number_integer())
        throw ConfigError("'" + key + "' in " + where + " must be an integer");
    return it->get<int>();
}

LatticeParams parse_lattice(const json& j, json& out)
{
    check_keys(j, "lattice",
               {"a", "hbar", "N", "n_min", "n_max", "m_blocks", "first_block", "momentum_shift", "momentum_cutoff"});
    LatticeParams p;
    p.a = number(j, "a", "lattice", 1.0);
    p.hbar = number(j, "hbar", "lattice", 1.0);
    p.N = integer(j, "N", "lattice", std::nullopt);
    p.n_min = integer(j, "n_min", "lattice", 0);
    p.n_max = integer(j, "n_max", "lattice", p.n_min);
    p.m_blocks = integer(j, "m_blocks", "lattice", 1);
    p.first_block = integer(j, "first_block", "lattice", 0);
    p.momentum_shift = number(j, "momentum_shift", "lattice", 0.0);
    p.momentum_cutoff = number(j, "momentum_cutoff", "lattice", 0.0);
    try {
        p.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("lattice: ") + e.what());
    }
    out = json{{"a", p.a},
               {"hbar", p.hbar},
               {"N", p.N},
               {"n_min", p.n_min},
               {"n_max", p.n_max},
               {"m_blocks", p.m_blocks},
               {"first_block", p.first_block},
               {"momentum_shift", p.momentum_shift},
               {"momentum_cutoff", p.momentum_cutoff}};
    return p;
}

GridSpec parse_grid(const json& j, json& out)
{
    check_keys(j, "grid", {"box_length", "points", "origin"});
    GridSpec g;
    g.box_length = number(j, "box_length", "grid", std::nullopt);
    g.points = integer(j, "points", "grid", std::nullopt);
    g.origin = number(j, "origin", "grid", 0.0);
    try {
        g.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("grid: ") + e.what());
    }
    out = json{{"box_length", g.box_length}, {"points", g.points}, {"origin", g.origin}};
    return g;
}

GaussianState parse_state(const json& j, double hbar, json& out)
{
    check_keys(j, "state", {"q0", "p0", "sigma_x", "sigma_p", "cov_xp"});
    GaussianState g;
    g.q0 = number(j, "q0", "state", 0.0);
    g.p0 = number(j, "p0", "state", 0.0);
    const double sx = number(j, "sigma_x", "state", std::nullopt);
    const double sp = number(j, "sigma_p", "state", std::nullopt);
    g.vx = sx * sx;
    g.vp = sp * sp;
    g.c = number(j, "cov_xp", "state", 0.0);
    try {
        g.validate(hbar);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("state: ") + e.what());
    }
    out = json{{"q0", g.q0}, {"p0", g.p0}, {"sigma_x", sx}, {"sigma_p", sp}, {"cov_xp", g.c}};
    return g;
}

}  // namespace

ExperimentConfig parse_config(const json& doc, const std::string& experiment)
{
    static const std::set<std::string> top{"experiment", "lattice",   "grid",          "state",     "tolerances",
                                           "output",     "seed",      "evolution",     "spreading", "closeness",
                                           "moments",    "histories", "probabilities", "sweep"};
    check_keys(doc, "config", top);
    ExperimentConfig c;
    c.experiment = experiment;
    if (doc.contains("experiment")) {
        if (!doc["experiment"].is_string())
            throw ConfigError("'experiment' must be a string");
        const std::string named = doc["experiment"].get<std::string>();
        if (!experiment.empty() && named != experiment)
            throw ConfigError("config names experiment '" + named + "' but '" + experiment + "' was requested");
        c.experiment = named;
    }
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), c.experiment) == names.end())
        throw ConfigError("unknown experiment '" + c.experiment + "'");

    json resolved;
    resolved["experiment"] = c.experiment;
    if (doc.contains("lattice")) {
        json l;
        c.lattice = parse_lattice(doc["lattice"], l);
        resolved["lattice"] = l;
    } else if (c.experiment != "histories" && c.experiment != "sweep" && c.experiment != "evolve") {
        throw ConfigError("missing 'lattice'");
    }
    if (doc.contains("grid")) {
        json g;
        c.grid = parse_grid(doc["grid"], g);
        resolved["grid"] = g;
    }
    if (doc.contains("state")) {
        const json& s = doc["state"];
        if (s.is_object() && s.contains("file")) {
            check_keys(s, "state", {"file"});
            if (!s["file"].is_string())
                throw ConfigError("state file must be a string");
            c.state_file = s["file"].get<std::string>();
            if (!std::filesystem::exists(c.state_file))
                throw ConfigError("state file does not exist: " + c.state_file);
            resolved["state"] = json{{"file", c.state_file}};
        } else {
            json st;
            c.state = parse_state(s, c.lattice.hbar, st);
            resolved["state"] = st;
        }
    }

    c.tolerances = tolerance_registry();
    if (doc.contains("tolerances")) {
        const json& t = doc["tolerances"];
        if (!t.is_object())
            throw ConfigError("tolerances must be an object");
        for (const auto& [k, v] : t.items()) {
            if (!c.tolerances.count(k))
                throw ConfigError("unknown tolerance key '" + k + "'");
            if (!v.is_number() || !(v.get<double>() > 0.0))
                throw ConfigError("tolerance '" + k + "' must be a positive number");
            c.tolerances[k] = v.get<double>();
        }
    }
    json tol = json::object();
    for (const auto& [k, v] : c.tolerances)
        tol[k] = v;
    resolved["tolerances"] = tol;

    if (doc.contains("output")) {
        if (!doc["output"].is_string() || doc["output"].get<std::string>().empty())
            throw ConfigError("output must be a non-empty string");
        c.output = doc["output"].get<std::string>();
    }
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned())
            throw ConfigError("seed must be a nonnegative integer");
        c.seed = doc["seed"].get<std::uint64_t>();
    }
    for (const char* s : {"evolution", "spreading", "closeness", "moments", "histories", "probabilities", "sweep"})
        if (doc.contains(s)) {
            if (!doc[s].is_object())
                throw ConfigError(std::string(s) + " must be an object");
            c.sections[s] = doc[s];
            resolved[s] = doc[s];
        }
    c.resolved = resolved;
    return c;
}

ExperimentConfig load_config(const std::string& path, const std::string& experiment)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    return parse_config(doc, experiment);
}

}  // namespace phaselattice::cli
