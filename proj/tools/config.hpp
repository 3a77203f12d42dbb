#pragma once

#include "phaselattice/evolution.hpp"
#include "phaselattice/gaussian.hpp"
#include "phaselattice/lattice.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace phaselattice::cli {

using json = nlohmann::ordered_json;

/// Schema violation; maps to exit status 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& experiment_names()
{
    static const std::vector<std::string> names{"states",        "moments",   "projector", "pair",  "evolve",
                                                "closeness",     "probabilities", "histories", "sweep"};
    return names;
}

/// Documented tolerance keys and their defaults.
const std::map<std::string, double>& tolerance_registry();

struct ExperimentConfig {
    std::string experiment;
    LatticeParams lattice;
    std::optional<GridSpec> grid;
    std::optional<GaussianState> state;
    /// Wigner CSV used in place of an analytic state.
    std::string state_file;
    std::map<std::string, double> tolerances;
    std::string output;
    std::uint64_t seed = 0;
    /// Experiment-specific sections, validated by the experiment itself.
    json sections = json::object();
    /// Config with defaults filled in; embedded in every summary.
    json resolved;

    double tol(const std::string& key) const { return tolerances.at(key); }
    const json& section(const std::string& name) const;
};

/// Parses and validates a config document. The experiment argument overrides the document's field
/// and must agree with it when both are present. Throws ConfigError.
ExperimentConfig parse_config(const json& doc, const std::string& experiment);
ExperimentConfig load_config(const std::string& path, const std::string& experiment);

}  // namespace phaselattice::cli
